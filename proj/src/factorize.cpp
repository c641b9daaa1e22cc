#include "weq/factorize.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>

#include "weq/error.hpp"
#include "weq/kernels.hpp"

namespace weq {

namespace {

// T = XᵀY, accumulated row by row so panels stay row-major.
DenseMatrix mul_at_b(const DenseMatrix& x, const DenseMatrix& y) {
    if (x.rows() != y.rows()) throw validation_error("mul_at_b: row counts differ");
    DenseMatrix t(x.cols(), y.cols());
    for (std::size_t r = 0; r < x.rows(); ++r) {
        const double* xr = x.row(r);
        const double* yr = y.row(r);
        for (std::size_t i = 0; i < x.cols(); ++i) {
            if (xr[i] != 0.0) kernels::axpy(xr[i], yr, t.row(i), y.cols());
        }
    }
    return t;
}

std::uint64_t start_block_seed(std::size_t rows, std::size_t cols, std::size_t d) {
    // Fixed derivation: the iteration start block depends only on the problem
    // shape, so rerunning a stage from files reproduces the same basis.
    std::uint64_t s = 0x5ebb1a5e0ff1c1a1ull;
    s = SplitMix64::derive(s, rows);
    s = SplitMix64::derive(s, cols);
    s = SplitMix64::derive(s, d);
    return s;
}

void sign_canonicalize(DenseMatrix& u) {
    for (std::size_t j = 0; j < u.cols(); ++j) {
        double best = 0.0;
        std::size_t at = 0;
        for (std::size_t i = 0; i < u.rows(); ++i) {
            const double mag = std::abs(u.at(i, j));
            if (mag > best) {
                best = mag;
                at = i;
            }
        }
        if (u.at(at, j) < 0.0) {
            for (std::size_t i = 0; i < u.rows(); ++i) u.at(i, j) = -u.at(i, j);
        }
    }
}

}  // namespace

SvdResult truncated_svd(const SparseMatrix& a, std::size_t d, const SvdOptions& opts) {
    const std::size_t rows = a.n_rows();
    const std::size_t cols = a.n_cols();
    if (rows == 0 || cols == 0) throw validation_error("svd of an empty matrix");
    if (d < 1 || d > std::min(rows, cols))
        throw validation_error("svd rank d must satisfy 1 <= d <= min(shape)");
    if (!(opts.tol > 0.0)) throw validation_error("svd tolerance must be positive");
    if (opts.max_iter < 2) throw validation_error("svd max_iter must be >= 2");

    const std::size_t b = std::min(d + opts.oversample, std::min(rows, cols));
    const std::uint64_t seed = start_block_seed(rows, cols, d);
    DenseMatrix q = DenseMatrix::gaussian(rows, b, seed);
    SplitMix64 reseed_rng(SplitMix64::derive(seed, 0xab));
    orthonormalize_columns(q, reseed_rng);

    DenseMatrix w;  // cols×b
    DenseMatrix z;  // rows×b
    std::vector<double> prev;
    SymEig eig;
    bool converged = false;
    std::size_t iterations = 0;
    double last_change = 0.0;
    double last_residual = 0.0;

    while (iterations < opts.max_iter) {
        ++iterations;
        a.tmul_panel(q, w);
        a.mul_panel(w, z);
        DenseMatrix t = mul_at_b(q, z);
        for (std::size_t i = 0; i < b; ++i) {
            for (std::size_t j = i + 1; j < b; ++j) {
                const double avg = 0.5 * (t.at(i, j) + t.at(j, i));
                t.at(i, j) = avg;
                t.at(j, i) = avg;
            }
        }
        eig = symmetric_eigen(std::move(t));
        const double top = std::max(eig.values[0], 0.0);
        if (top == 0.0) {
            converged = true;
            break;
        }
        if (!prev.empty()) {
            double change = 0.0;
            for (std::size_t j = 0; j < d; ++j)
                change = std::max(change, std::abs(eig.values[j] - prev[j]));
            last_change = change / top;
            if (last_change <= opts.tol) {
                // Ritz values settled; also require the Ritz-pair residuals
                // ||AAᵀ(Qv_j) − λ_j(Qv_j)|| to settle so the vectors are
                // trustworthy, not only the values.
                DenseMatrix rot(b, d);
                for (std::size_t i = 0; i < b; ++i)
                    for (std::size_t j = 0; j < d; ++j) rot.at(i, j) = eig.vectors.at(i, j);
                const DenseMatrix zr = matmul(z, rot);
                const DenseMatrix qr = matmul(q, rot);
                std::vector<double> acc(d, 0.0);
                for (std::size_t r = 0; r < rows; ++r) {
                    const double* zrow = zr.row(r);
                    const double* qrow = qr.row(r);
                    for (std::size_t j = 0; j < d; ++j) {
                        const double resid = zrow[j] - eig.values[j] * qrow[j];
                        acc[j] += resid * resid;
                    }
                }
                double worst = 0.0;
                for (std::size_t j = 0; j < d; ++j) worst = std::max(worst, std::sqrt(acc[j]));
                last_residual = worst / top;
                if (last_residual <= opts.tol) {
                    converged = true;
                    break;
                }
            }
        }
        prev = eig.values;
        std::swap(q, z);
        orthonormalize_columns(q, reseed_rng);
    }
    if (!converged) {
        std::ostringstream msg;
        msg << "svd did not converge after " << iterations
            << " iterations; last relative Ritz change " << last_change
            << ", last relative residual " << last_residual;
        throw compute_error(msg.str());
    }

    const double sigma1 = std::sqrt(std::max(eig.values[0], 0.0));
    if (!(sigma1 > 0.0)) throw compute_error("matrix is numerically zero; no singular values");

    std::size_t kept = 0;
    while (kept < d) {
        const double s = std::sqrt(std::max(eig.values[kept], 0.0));
        if (s <= sigma1 * 1e-10) break;
        ++kept;
    }

    SvdResult out;
    out.iterations = iterations;
    out.rank_truncated = kept < d;
    out.sigma.resize(kept);
    for (std::size_t j = 0; j < kept; ++j) out.sigma[j] = std::sqrt(eig.values[j]);

    // Ritz vectors for the retained values.
    DenseMatrix rot(b, kept);
    for (std::size_t i = 0; i < b; ++i)
        for (std::size_t j = 0; j < kept; ++j) rot.at(i, j) = eig.vectors.at(i, j);
    out.u = matmul(q, rot);
    sign_canonicalize(out.u);

    // Residual diagnostic per retained column: ||AAᵀu_j − λ_j u_j|| / σ_1².
    a.tmul_panel(out.u, w);
    a.mul_panel(w, z);
    std::vector<double> acc(kept, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
        const double* zr = z.row(r);
        const double* ur = out.u.row(r);
        for (std::size_t j = 0; j < kept; ++j) {
            const double resid = zr[j] - eig.values[j] * ur[j];
            acc[j] += resid * resid;
        }
    }
    double worst = 0.0;
    for (std::size_t j = 0; j < kept; ++j) worst = std::max(worst, std::sqrt(acc[j]));
    out.residual = worst / (sigma1 * sigma1);
    return out;
}

DenseMatrix embedding_from_rows(const SparseMatrix& a, const SvdResult& svd) {
    if (svd.u.rows() != a.n_rows())
        throw validation_error("embedding: SVD row count does not match matrix");
    const std::size_t d = svd.sigma.size();
    DenseMatrix scaled(svd.u.rows(), d);
    std::vector<double> inv_sqrt(d);
    for (std::size_t j = 0; j < d; ++j) inv_sqrt[j] = 1.0 / std::sqrt(svd.sigma[j]);
    for (std::size_t i = 0; i < svd.u.rows(); ++i) {
        const double* ur = svd.u.row(i);
        double* sr = scaled.row(i);
        for (std::size_t j = 0; j < d; ++j) sr[j] = ur[j] * inv_sqrt[j];
    }
    DenseMatrix e;
    a.tmul_panel(scaled, e);
    return e;
}

EmbeddingMatrix EmbeddingMatrix::bind(DenseMatrix vectors, const Vocabulary& vocab) {
    return bind(std::move(vectors), vocab.words);
}

EmbeddingMatrix EmbeddingMatrix::bind(DenseMatrix vectors, std::vector<std::string> words) {
    if (vectors.rows() != words.size())
        throw validation_error("embedding rows do not match vocabulary size");
    for (std::size_t i = 0; i < vectors.rows(); ++i) {
        const double* r = vectors.row(i);
        for (std::size_t j = 0; j < vectors.cols(); ++j) {
            if (!std::isfinite(r[j])) throw compute_error("non-finite embedding value");
        }
    }
    EmbeddingMatrix e;
    e.vectors = std::move(vectors);
    e.words = std::move(words);
    e.index.reserve(e.words.size());
    for (std::size_t i = 0; i < e.words.size(); ++i)
        e.index.emplace(e.words[i], static_cast<std::uint32_t>(i));
    return e;
}

EmbeddingMatrix embed_from_qcontexts(const QContexts& q, const SvdResult& svd,
                                     const Vocabulary& vocab) {
    if (q.axis != QContexts::Axis::rows)
        throw validation_error("embedding requires a row-sampled Q-contexts matrix");
    if (vocab.size() != q.matrix.n_cols())
        throw validation_error("vocabulary size does not match Q-contexts columns");
    return EmbeddingMatrix::bind(embedding_from_rows(q.matrix, svd), vocab);
}

DenseMatrix context_coefficients(const QContexts& q, const SvdResult& svd) {
    if (q.axis != QContexts::Axis::rows)
        throw validation_error("context coefficients require a row-sampled Q-contexts matrix");
    if (svd.u.rows() != q.k)
        throw validation_error("context coefficients: SVD row count does not match k");
    const std::size_t d = svd.sigma.size();
    const double k = static_cast<double>(q.k);
    DenseMatrix lambda(q.k, d);
    for (std::size_t i = 0; i < q.k; ++i) {
        const double dinv = 1.0 / std::sqrt(k * q.probs[i]);
        const double* ur = svd.u.row(i);
        double* lr = lambda.row(i);
        for (std::size_t j = 0; j < d; ++j) lr[j] = dinv * ur[j] / std::sqrt(svd.sigma[j]);
    }
    return lambda;
}

DenseMatrix mf_embedding_vectors(const SparseMatrix& m, std::size_t d, const SvdOptions& opts) {
    const SvdResult svd = truncated_svd(m, d, opts);
    return embedding_from_rows(m, svd);
}

EmbeddingMatrix embed_full_mf(const SparseMatrix& m, std::size_t d, const Vocabulary& vocab,
                              const SvdOptions& opts) {
    if (vocab.size() != m.n_cols())
        throw validation_error("vocabulary size does not match matrix columns");
    return EmbeddingMatrix::bind(mf_embedding_vectors(m, d, opts), vocab);
}

void save_embeddings_word2vec(const std::string& path, const EmbeddingMatrix& e) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw compute_error("cannot open '" + path + "' for writing");
    out << e.vectors.rows() << ' ' << e.vectors.cols() << '\n';
    char num[64];
    for (std::size_t i = 0; i < e.vectors.rows(); ++i) {
        out << e.words[i];
        const double* r = e.vectors.row(i);
        for (std::size_t j = 0; j < e.vectors.cols(); ++j) {
            std::snprintf(num, sizeof(num), " %.6f", r[j]);
            out << num;
        }
        out << '\n';
    }
    if (!out) throw compute_error("write failed for '" + path + "'");
}

EmbeddingMatrix load_embeddings_word2vec(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw validation_error("cannot open embeddings file '" + path + "'");
    std::size_t n = 0, d = 0;
    if (!(in >> n >> d) || d == 0) throw validation_error("bad embeddings header in '" + path + "'");
    DenseMatrix vectors(n, d);
    std::vector<std::string> words(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(in >> words[i])) throw validation_error("truncated embeddings file '" + path + "'");
        double* r = vectors.row(i);
        for (std::size_t j = 0; j < d; ++j) {
            if (!(in >> r[j])) throw validation_error("truncated embeddings file '" + path + "'");
        }
    }
    return EmbeddingMatrix::bind(std::move(vectors), std::move(words));
}

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f != nullptr) std::fclose(f);
    }
};
using FileHandle = std::unique_ptr<std::FILE, FileCloser>;

constexpr char kSvdMagic[4] = {'W', 'E', 'Q', 'U'};

void write_all(std::FILE* f, const void* p, std::size_t bytes, const std::string& path) {
    if (std::fwrite(p, 1, bytes, f) != bytes) throw compute_error("short write to '" + path + "'");
}

void read_all(std::FILE* f, void* p, std::size_t bytes, const std::string& path) {
    if (std::fread(p, 1, bytes, f) != bytes) throw validation_error("truncated file '" + path + "'");
}

}  // namespace

void save_svd(const std::string& path, const SvdResult& svd) {
    FileHandle f(std::fopen(path.c_str(), "wb"));
    if (!f) throw compute_error("cannot open '" + path + "' for writing");
    write_all(f.get(), kSvdMagic, 4, path);
    const std::uint64_t rows = svd.u.rows();
    const std::uint64_t d = svd.sigma.size();
    const std::uint64_t iterations = svd.iterations;
    const std::uint64_t truncated = svd.rank_truncated ? 1 : 0;
    write_all(f.get(), &rows, 8, path);
    write_all(f.get(), &d, 8, path);
    write_all(f.get(), &iterations, 8, path);
    write_all(f.get(), &truncated, 8, path);
    write_all(f.get(), &svd.residual, 8, path);
    write_all(f.get(), svd.sigma.data(), d * 8, path);
    write_all(f.get(), svd.u.data(), rows * d * 8, path);
    if (std::fflush(f.get()) != 0) throw compute_error("flush failed for '" + path + "'");
}

SvdResult load_svd(const std::string& path) {
    FileHandle f(std::fopen(path.c_str(), "rb"));
    if (!f) throw validation_error("cannot open '" + path + "'");
    char magic[4];
    read_all(f.get(), magic, 4, path);
    if (std::memcmp(magic, kSvdMagic, 4) != 0)
        throw validation_error("bad magic in '" + path + "': expected 'WEQU'");
    std::uint64_t rows = 0, d = 0, iterations = 0, truncated = 0;
    SvdResult svd;
    read_all(f.get(), &rows, 8, path);
    read_all(f.get(), &d, 8, path);
    read_all(f.get(), &iterations, 8, path);
    read_all(f.get(), &truncated, 8, path);
    read_all(f.get(), &svd.residual, 8, path);
    svd.iterations = iterations;
    svd.rank_truncated = truncated != 0;
    svd.sigma.resize(d);
    read_all(f.get(), svd.sigma.data(), d * 8, path);
    svd.u = DenseMatrix(rows, d);
    read_all(f.get(), svd.u.data(), rows * d * 8, path);
    return svd;
}

}  // namespace weq
