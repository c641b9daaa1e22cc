#include "weq/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <memory>
#include <sstream>

#include "weq/error.hpp"
#include "weq/factorize.hpp"
#include "weq/kernels.hpp"
#include "weq/rng.hpp"
#include "weq/stats.hpp"

namespace weq {

namespace {

double now_seconds() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

// Sum over row pairs of squared inner products: ||A Bᵀ||_F².
double pairwise_dot_sq_sum(const SparseMatrix& a, const SparseMatrix& b) {
    double total = 0.0;
    for (std::size_t i = 0; i < a.n_rows(); ++i) {
        const auto ic = a.row_cols(i);
        const auto iv = a.row_values(i);
        for (std::size_t j = 0; j < b.n_rows(); ++j) {
            const auto jc = b.row_cols(j);
            const auto jv = b.row_values(j);
            double dot = 0.0;
            std::size_t p = 0, q = 0;
            while (p < ic.size() && q < jc.size()) {
                if (ic[p] < jc[q]) ++p;
                else if (jc[q] < ic[p]) ++q;
                else dot += iv[p++] * jv[q++];
            }
            total += dot * dot;
        }
    }
    return total;
}

// Dense n×n Gram accumulation: G += sign * AᵀA.
void accumulate_gram_dense(const SparseMatrix& a, double sign, DenseMatrix& g,
                           std::vector<double>& scratch) {
    const std::size_t n = a.n_cols();
    for (std::size_t r = 0; r < a.n_rows(); ++r) {
        const auto rc = a.row_cols(r);
        const auto rv = a.row_values(r);
        std::fill(scratch.begin(), scratch.end(), 0.0);
        for (std::size_t j = 0; j < rc.size(); ++j) scratch[rc[j]] = rv[j];
        for (std::size_t j = 0; j < rc.size(); ++j) {
            kernels::axpy(sign * rv[j], scratch.data(), g.row(rc[j]), n);
        }
    }
}

constexpr std::size_t kDensePathMaxCols = 1024;

}  // namespace

double operator_norm(const std::function<void(const double*, double*)>& apply, std::size_t n,
                     double tol, std::size_t max_iter, std::uint64_t seed, double zero_floor) {
    if (n == 0) throw validation_error("operator_norm: empty operator");
    if (!(tol > 0.0)) throw validation_error("operator_norm: tolerance must be positive");
    double best = 0.0;
    double last_estimate = 0.0;
    bool any_converged = false;
    std::vector<double> x(n), y(n);
    for (int restart = 0; restart < 3; ++restart) {
        SplitMix64 rng(SplitMix64::derive(seed, static_cast<std::uint64_t>(restart)));
        for (double& v : x) v = rng.next_gaussian();
        double nrm = std::sqrt(kernels::sumsq(x.data(), n));
        kernels::scal(1.0 / nrm, x.data(), n);
        double lambda = 0.0;
        bool converged = false;
        for (std::size_t it = 0; it < max_iter; ++it) {
            apply(x.data(), y.data());
            const double ynrm = std::sqrt(kernels::sumsq(y.data(), n));
            if (ynrm <= zero_floor) {
                lambda = ynrm;
                converged = true;
                break;
            }
            const double next = ynrm;  // ||Ax|| with unit x
            if (it > 0 && std::abs(next - lambda) <= tol * next) {
                lambda = next;
                converged = true;
                break;
            }
            lambda = next;
            kernels::scale_into(x.data(), 1.0 / ynrm, y.data(), n);
        }
        last_estimate = lambda;
        if (converged) {
            any_converged = true;
            best = std::max(best, lambda);
        }
    }
    if (!any_converged) {
        std::ostringstream msg;
        msg << "operator norm power iteration did not converge; last estimate " << last_estimate;
        throw compute_error(msg.str());
    }
    return best;
}

double gram_diff_opnorm(const SparseMatrix& r, const SparseMatrix& m, double tol,
                        std::size_t max_iter) {
    if (r.n_cols() != m.n_cols()) throw validation_error("gram_diff_opnorm: column mismatch");
    const std::size_t n = m.n_cols();
    std::vector<double> tr(r.n_rows()), tm(m.n_rows()), back(n);
    auto apply = [&](const double* x, double* y) {
        r.mul_vec(x, tr.data());
        r.tmul_vec(tr.data(), y);
        m.mul_vec(x, tm.data());
        m.tmul_vec(tm.data(), back.data());
        for (std::size_t i = 0; i < n; ++i) y[i] -= back[i];
    };
    // Differences below roundoff of the Gram magnitudes are numerically zero.
    const double floor = 1e-14 * std::max(r.frob_sq(), m.frob_sq());
    return operator_norm(apply, n, tol, max_iter, 0x0b5e55ed, floor);
}

double gram_diff_frob(const SparseMatrix& r, const SparseMatrix& m) {
    if (r.n_cols() != m.n_cols()) throw validation_error("gram_diff_frob: column mismatch");
    const std::size_t n = m.n_cols();
    if (n <= kDensePathMaxCols) {
        DenseMatrix g(n, n);
        std::vector<double> scratch(n);
        accumulate_gram_dense(r, 1.0, g, scratch);
        accumulate_gram_dense(m, -1.0, g, scratch);
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) total += kernels::sumsq(g.row(i), n);
        return std::sqrt(total);
    }
    const double rr = pairwise_dot_sq_sum(r, r);
    const double mm = pairwise_dot_sq_sum(m, m);
    const double cross = pairwise_dot_sq_sum(r, m);
    return std::sqrt(std::max(rr - 2.0 * cross + mm, 0.0));
}

double sigma_op_bound(const SparseMatrix& m) {
    if (!(m.frob_sq() > 0.0)) throw compute_error("sigma_op_bound of a zero matrix");
    const double frob_sq = m.frob_sq();

    std::vector<double> tmp(m.n_rows());
    auto apply_gram = [&](const double* x, double* y) {
        m.mul_vec(x, tmp.data());
        m.tmul_vec(tmp.data(), y);
    };
    const double op_sq =
        operator_norm(apply_gram, m.n_cols(), 1e-10, 2000, 0x0b5e55ed, 1e-14 * frob_sq);
    const double first = std::sqrt(frob_sq) * std::sqrt(op_sq);

    const double gram_frob_sq = pairwise_dot_sq_sum(m, m);  // ||MMᵀ||_F² = ||MᵀM||_F²
    const double radicand = frob_sq * frob_sq - gram_frob_sq;
    const double second = std::sqrt(std::max(radicand, 0.0));
    return std::min(first, second);
}

std::size_t rank_bound(const SparseMatrix& m) {
    if (m.frob_sq() == 0.0) return 0;
    const std::size_t min_shape = std::min(m.n_rows(), m.n_cols());
    if (min_shape <= 1024) {
        SvdOptions opts;
        opts.tol = 1e-9;
        opts.max_iter = 100;
        const SvdResult svd = truncated_svd(m, min_shape, opts);
        // The Gram route resolves singular values only down to about
        // sqrt(eps)·sigma_1; count above that noise floor.
        std::size_t rank = 0;
        for (double s : svd.sigma) {
            if (s > svd.sigma.front() * 1e-7) ++rank;
        }
        return rank;
    }
    std::size_t nonzero_rows = 0;
    for (std::size_t r = 0; r < m.n_rows(); ++r) {
        if (m.row_sq_norm(r) > 0.0) ++nonzero_rows;
    }
    return nonzero_rows;
}

std::uint64_t k_required(double sigma_bound, std::size_t stable_rank_bound, double eps) {
    if (!(eps > 0.0)) throw validation_error("k_required: eps must be positive");
    if (stable_rank_bound < 1) throw validation_error("k_required: rank bound must be >= 1");
    const double k = 3.0 * sigma_bound * sigma_bound / (eps * eps) *
                     std::log(static_cast<double>(stable_rank_bound));
    if (k >= 1.8e19) return ~0ull;
    return static_cast<std::uint64_t>(std::ceil(k));
}

std::vector<ConcentrationReport> concentration_experiment(const SparseMatrix& m,
                                                          std::span<const std::size_t> k_grid,
                                                          std::size_t trials,
                                                          std::uint64_t base_seed) {
    if (k_grid.empty()) throw validation_error("concentration experiment needs a k grid");
    if (trials < 1) throw validation_error("concentration experiment needs trials >= 1");
    const double bound = sigma_op_bound(m);
    const std::size_t rank = rank_bound(m);

    std::vector<ConcentrationReport> out;
    out.reserve(k_grid.size() * trials);
    for (const std::size_t k : k_grid) {
        for (std::size_t t = 0; t < trials; ++t) {
            const std::uint64_t seed = SplitMix64::derive(SplitMix64::derive(base_seed, k), t);
            const double start = now_seconds();
            const QContexts q = build_qcontexts(m, k, seed);
            ConcentrationReport row;
            row.k = k;
            row.trial = t;
            row.seed = seed;
            row.eps_op = gram_diff_opnorm(q.matrix, m, 1e-7, 2000);
            row.eps_frob = gram_diff_frob(q.matrix, m);
            row.seconds = now_seconds() - start;
            row.bound_sigma_op = bound;
            row.stable_rank_bound = rank;
            out.push_back(row);
        }
    }
    return out;
}

void save_report(const std::string& path, std::span<const ConcentrationReport> rows) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (f == nullptr) throw compute_error("cannot open '" + path + "' for writing");
    std::unique_ptr<std::FILE, int (*)(std::FILE*)> guard(f, &std::fclose);
    for (const ConcentrationReport& r : rows) {
        if (std::fprintf(f, "%zu\t%zu\t%.17g\t%.17g\t%.17g\t%.17g\n", r.k, r.trial, r.eps_op,
                         r.eps_frob, r.bound_sigma_op, r.seconds) < 0)
            throw compute_error("write failed for '" + path + "'");
    }
}

AblationResult sampler_ablation(const SparseMatrix& m, std::size_t k, std::size_t trials,
                                std::uint64_t base_seed) {
    if (trials < 1) throw validation_error("sampler ablation needs trials >= 1");
    AblationResult res;
    res.k = k;
    res.trials = trials;
    res.l2_frob_errors.reserve(trials);
    res.uniform_frob_errors.reserve(trials);
    std::vector<double> ratios;
    std::size_t losses = 0;
    for (std::size_t t = 0; t < trials; ++t) {
        const std::uint64_t seed = SplitMix64::derive(base_seed, t);
        const QContexts l2 = build_qcontexts(m, k, seed);
        const QContexts uni = build_qcontexts_uniform(m, k, seed);
        const double el = gram_diff_frob(l2.matrix, m);
        const double eu = gram_diff_frob(uni.matrix, m);
        res.l2_frob_errors.push_back(el);
        res.uniform_frob_errors.push_back(eu);
        if (el < eu) ++res.l2_wins;
        else if (eu < el) ++losses;
        if (eu > 0.0) ratios.push_back(el / eu);
    }
    res.median_ratio = ratios.empty() ? 1.0 : median(std::move(ratios));
    const std::size_t decisive = res.l2_wins + losses;
    res.sign_test_p = decisive == 0 ? 1.0 : sign_test_p(res.l2_wins, decisive);
    return res;
}

NnzTimeResult nnz_time_probe(std::span<const SparseMatrix> matrices, std::size_t probe_dim,
                             std::size_t repeats, std::uint64_t seed) {
    if (matrices.empty()) throw validation_error("nnz_time_probe needs at least one matrix");
    if (repeats < 1) throw validation_error("nnz_time_probe needs repeats >= 1");
    NnzTimeResult res;
    res.rows.reserve(matrices.size());
    for (std::size_t mi = 0; mi < matrices.size(); ++mi) {
        const SparseMatrix& m = matrices[mi];
        const std::size_t k = std::max<std::size_t>(1, m.n_rows() / 2);
        const std::uint64_t build_seed = SplitMix64::derive(seed, mi);

        // The SVD engine's own time is excluded; its factors are reused.
        const QContexts probe = build_qcontexts(m, k, build_seed);
        SvdOptions opts;
        opts.tol = 1e-3;
        opts.max_iter = 200;
        const std::size_t d = std::min(probe_dim, std::min(probe.matrix.n_rows(),
                                                           probe.matrix.n_cols()));
        const SvdResult svd = truncated_svd(probe.matrix, d, opts);

        std::vector<double> runs;
        runs.reserve(repeats);
        for (std::size_t rep = 0; rep < repeats; ++rep) {
            const double start = now_seconds();
            const SamplerState state = prepare_state(m, build_seed);
            (void)state;
            const QContexts q = build_qcontexts(m, k, build_seed);
            const DenseMatrix e = embedding_from_rows(q.matrix, svd);
            (void)e;
            runs.push_back(now_seconds() - start);
        }
        res.rows.push_back({m.nnz(), median(std::move(runs))});
    }
    if (res.rows.size() >= 2) {
        std::vector<double> xs, ys;
        for (const NnzTimeRow& r : res.rows) {
            xs.push_back(static_cast<double>(r.nnz));
            ys.push_back(r.tes_seconds);
        }
        try {
            res.pearson = pearson(xs, ys);
        } catch (const compute_error&) {
            res.pearson = std::nullopt;  // constant series
        }
    }
    return res;
}

}  // namespace weq
