#include "weq/dense.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "weq/error.hpp"
#include "weq/kernels.hpp"

namespace weq {

DenseMatrix DenseMatrix::gaussian(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    DenseMatrix m(rows, cols);
    SplitMix64 rng(seed);
    for (double& v : m.data_) v = rng.next_gaussian();
    return m;
}

DenseMatrix DenseMatrix::transposed() const {
    DenseMatrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i) {
        const double* r = row(i);
        for (std::size_t j = 0; j < cols_; ++j) t.at(j, i) = r[j];
    }
    return t;
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols() != b.rows()) throw validation_error("matmul: inner dimensions differ");
    DenseMatrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double* ar = a.row(i);
        double* cr = c.row(i);
        for (std::size_t l = 0; l < a.cols(); ++l) {
            if (ar[l] != 0.0) kernels::axpy(ar[l], b.row(l), cr, b.cols());
        }
    }
    return c;
}

DenseMatrix gram_of_columns(const DenseMatrix& a) {
    const std::size_t b = a.cols();
    DenseMatrix g(b, b);
    for (std::size_t r = 0; r < a.rows(); ++r) {
        const double* ar = a.row(r);
        for (std::size_t i = 0; i < b; ++i) {
            if (ar[i] != 0.0) kernels::axpy(ar[i], ar + i, g.row(i) + i, b - i);
        }
    }
    for (std::size_t i = 0; i < b; ++i)
        for (std::size_t j = 0; j < i; ++j) g.at(i, j) = g.at(j, i);
    return g;
}

namespace {

// In-place lower Cholesky; returns false when a pivot falls below the
// numerical-rank floor (a tiny positive pivot would silently wreck the QR).
bool cholesky_lower(DenseMatrix& a) {
    const std::size_t n = a.rows();
    double max_diag = 0.0;
    for (std::size_t j = 0; j < n; ++j) max_diag = std::max(max_diag, a.at(j, j));
    const double floor = max_diag * 1e-12;
    for (std::size_t j = 0; j < n; ++j) {
        double d = a.at(j, j) - kernels::sumsq(a.row(j), j);
        if (!(d > floor) || !std::isfinite(d)) return false;
        d = std::sqrt(d);
        a.at(j, j) = d;
        for (std::size_t i = j + 1; i < n; ++i) {
            const double s = a.at(i, j) - kernels::dot(a.row(i), a.row(j), j);
            a.at(i, j) = s / d;
        }
        for (std::size_t jj = j + 1; jj < n; ++jj) a.at(j, jj) = 0.0;
    }
    return true;
}

// Q := Q * L^{-T}, row by row: forward-solve L x = qᵀ.
void apply_inv_lt(DenseMatrix& q, const DenseMatrix& l) {
    const std::size_t b = q.cols();
    for (std::size_t r = 0; r < q.rows(); ++r) {
        double* x = q.row(r);
        for (std::size_t i = 0; i < b; ++i) {
            x[i] = (x[i] - kernels::dot(l.row(i), x, i)) / l.at(i, i);
        }
    }
}

bool cholesky_qr_once(DenseMatrix& q) {
    DenseMatrix g = gram_of_columns(q);
    if (!cholesky_lower(g)) return false;
    apply_inv_lt(q, g);
    return true;
}

// Modified Gram-Schmidt on a column-major copy, with re-orthogonalization.
// Columns that collapse relative to their pre-orthogonalization size are
// numerically dependent and get reseeded with deterministic gaussian fill.
void mgs_fallback(DenseMatrix& q, SplitMix64& rng) {
    const std::size_t k = q.rows();
    const std::size_t b = q.cols();
    DenseMatrix qt = q.transposed();  // b rows of length k, contiguous columns of q
    for (std::size_t j = 0; j < b; ++j) {
        double* vj = qt.row(j);
        for (int attempt = 0; attempt < 64; ++attempt) {
            const double norm0 = std::sqrt(kernels::sumsq(vj, k));
            for (int pass = 0; pass < 2; ++pass) {
                for (std::size_t i = 0; i < j; ++i) {
                    const double c = kernels::dot(qt.row(i), vj, k);
                    kernels::axpy(-c, qt.row(i), vj, k);
                }
            }
            const double nrm = std::sqrt(kernels::sumsq(vj, k));
            if (nrm > 1e-10 * norm0 && nrm > 1e-300) {
                kernels::scal(1.0 / nrm, vj, k);
                break;
            }
            for (std::size_t t = 0; t < k; ++t) vj[t] = rng.next_gaussian();
        }
    }
    q = qt.transposed();
}

}  // namespace

void orthonormalize_columns(DenseMatrix& q, SplitMix64& rng) {
    if (q.cols() > q.rows()) throw validation_error("orthonormalize: more columns than rows");
    if (cholesky_qr_once(q)) {
        if (cholesky_qr_once(q)) return;
    }
    mgs_fallback(q, rng);
}

namespace {

// Householder reduction of a symmetric matrix to tridiagonal form with the
// orthogonal transform accumulated in v; port of the public-domain EISPACK
// tred2 translation.
void tridiagonalize(DenseMatrix& v, std::vector<double>& d, std::vector<double>& e) {
    const std::size_t n = v.rows();
    d.assign(n, 0.0);
    e.assign(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) d[j] = v.at(n - 1, j);

    for (std::size_t i = n - 1; i > 0; --i) {
        double scale = 0.0;
        double h = 0.0;
        for (std::size_t k = 0; k < i; ++k) scale += std::abs(d[k]);
        if (scale == 0.0) {
            e[i] = d[i - 1];
            for (std::size_t j = 0; j < i; ++j) {
                d[j] = v.at(i - 1, j);
                v.at(i, j) = 0.0;
                v.at(j, i) = 0.0;
            }
        } else {
            for (std::size_t k = 0; k < i; ++k) {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            double f = d[i - 1];
            double g = std::sqrt(h);
            if (f > 0.0) g = -g;
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for (std::size_t j = 0; j < i; ++j) e[j] = 0.0;

            for (std::size_t j = 0; j < i; ++j) {
                f = d[j];
                v.at(j, i) = f;
                g = e[j] + v.at(j, j) * f;
                for (std::size_t k = j + 1; k < i; ++k) {
                    g += v.at(k, j) * d[k];
                    e[k] += v.at(k, j) * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for (std::size_t j = 0; j < i; ++j) {
                e[j] /= h;
                f += e[j] * d[j];
            }
            const double hh = f / (h + h);
            for (std::size_t j = 0; j < i; ++j) e[j] -= hh * d[j];
            for (std::size_t j = 0; j < i; ++j) {
                f = d[j];
                g = e[j];
                for (std::size_t k = j; k < i; ++k) v.at(k, j) -= f * e[k] + g * d[k];
                d[j] = v.at(i - 1, j);
                v.at(i, j) = 0.0;
            }
        }
        d[i] = h;
    }

    for (std::size_t i = 0; i + 1 < n; ++i) {
        v.at(n - 1, i) = v.at(i, i);
        v.at(i, i) = 1.0;
        const double h = d[i + 1];
        if (h != 0.0) {
            for (std::size_t k = 0; k <= i; ++k) d[k] = v.at(k, i + 1) / h;
            for (std::size_t j = 0; j <= i; ++j) {
                double g = 0.0;
                for (std::size_t k = 0; k <= i; ++k) g += v.at(k, i + 1) * v.at(k, j);
                for (std::size_t k = 0; k <= i; ++k) v.at(k, j) -= g * d[k];
            }
        }
        for (std::size_t k = 0; k <= i; ++k) v.at(k, i + 1) = 0.0;
    }
    for (std::size_t j = 0; j < n; ++j) {
        d[j] = v.at(n - 1, j);
        v.at(n - 1, j) = 0.0;
    }
    v.at(n - 1, n - 1) = 1.0;
    e[0] = 0.0;
}

// Implicit QL with shifts on the tridiagonal (d, e); rotations accumulate
// into the columns of v. Port of the public-domain EISPACK tql2 translation.
void tridiagonal_ql(std::vector<double>& d, std::vector<double>& e, DenseMatrix& v) {
    const std::size_t n = d.size();
    for (std::size_t i = 1; i < n; ++i) e[i - 1] = e[i];
    e[n - 1] = 0.0;

    double f = 0.0;
    double tst1 = 0.0;
    const double eps = 2.220446049250313e-16;
    for (std::size_t l = 0; l < n; ++l) {
        tst1 = std::max(tst1, std::abs(d[l]) + std::abs(e[l]));
        std::size_t m = l;
        while (m < n) {
            if (std::abs(e[m]) <= eps * tst1) break;
            ++m;
        }
        if (m > l) {
            std::size_t iter = 0;
            do {
                if (++iter > 64) throw compute_error("symmetric eigensolver did not converge");
                double g = d[l];
                double p = (d[l + 1] - g) / (2.0 * e[l]);
                double r = std::hypot(p, 1.0);
                if (p < 0.0) r = -r;
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                const double dl1 = d[l + 1];
                double h = g - d[l];
                for (std::size_t i = l + 2; i < n; ++i) d[i] -= h;
                f += h;

                p = d[m];
                double c = 1.0;
                double c2 = c;
                double c3 = c;
                const double el1 = e[l + 1];
                double s = 0.0;
                double s2 = 0.0;
                for (std::size_t i = m; i-- > l;) {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = std::hypot(p, e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for (std::size_t k = 0; k < n; ++k) {
                        h = v.at(k, i + 1);
                        v.at(k, i + 1) = s * v.at(k, i) + c * h;
                        v.at(k, i) = c * v.at(k, i) - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
            } while (std::abs(e[l]) > eps * tst1);
        }
        d[l] += f;
        e[l] = 0.0;
    }
}

}  // namespace

SymEig symmetric_eigen(DenseMatrix a) {
    if (a.rows() != a.cols()) throw validation_error("symmetric_eigen: matrix not square");
    const std::size_t n = a.rows();
    SymEig out;
    if (n == 0) return out;
    if (n == 1) {
        out.values = {a.at(0, 0)};
        out.vectors = DenseMatrix(1, 1);
        out.vectors.at(0, 0) = 1.0;
        return out;
    }
    std::vector<double> d, e;
    tridiagonalize(a, d, e);
    tridiagonal_ql(d, e, a);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return d[x] > d[y]; });

    out.values.resize(n);
    out.vectors = DenseMatrix(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        out.values[j] = d[order[j]];
        for (std::size_t i = 0; i < n; ++i) out.vectors.at(i, j) = a.at(i, order[j]);
    }
    return out;
}

}  // namespace weq
