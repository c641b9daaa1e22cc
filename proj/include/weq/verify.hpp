#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "weq/qsampler.hpp"
#include "weq/sparse.hpp"

namespace weq {

// Largest absolute eigenvalue of a symmetric operator given as x -> Ax, by
// power iteration with three random restarts. Estimates at or below
// `zero_floor` count as converged (the operator is numerically zero there).
double operator_norm(const std::function<void(const double*, double*)>& apply, std::size_t n,
                     double tol = 1e-9, std::size_t max_iter = 1000,
                     std::uint64_t seed = 0x0b5e55ed, double zero_floor = 0.0);

// ||R̃ᵀR̃ − MᵀM||_op via the implicit difference operator.
double gram_diff_opnorm(const SparseMatrix& r, const SparseMatrix& m, double tol = 1e-9,
                        std::size_t max_iter = 1000);

// ||R̃ᵀR̃ − MᵀM||_F via pairwise row inner products (desk-scale matrices).
double gram_diff_frob(const SparseMatrix& r, const SparseMatrix& m);

// min(||M||_F·||M||_op, sqrt(||M||_F⁴ − ||MᵀM||_F²)); a negative radicand from
// floating error clamps to zero.
double sigma_op_bound(const SparseMatrix& m);

// Numerical rank: retained singular values of a full-block decomposition when
// min(shape) <= 1024, else the count of nonzero rows (a valid upper bound).
std::size_t rank_bound(const SparseMatrix& m);

// Sample-size rule: ceil(3·bound²/ε²·ln(rank)); zero for rank-1 inputs, where
// sampling is exact.
std::uint64_t k_required(double sigma_bound, std::size_t stable_rank_bound, double eps);

struct ConcentrationReport {
    std::size_t k = 0;
    std::size_t trial = 0;
    std::uint64_t seed = 0;
    double eps_op = 0.0;
    double eps_frob = 0.0;
    double bound_sigma_op = 0.0;
    std::size_t stable_rank_bound = 0;
    double seconds = 0.0;
};

// Per (k, trial): build R̃ with a per-trial seed derived from base_seed,
// measure operator and Frobenius errors against MᵀM, record the bound.
std::vector<ConcentrationReport> concentration_experiment(const SparseMatrix& m,
                                                          std::span<const std::size_t> k_grid,
                                                          std::size_t trials,
                                                          std::uint64_t base_seed);

void save_report(const std::string& path, std::span<const ConcentrationReport> rows);

struct AblationResult {
    std::size_t k = 0;
    std::size_t trials = 0;
    std::vector<double> l2_frob_errors;
    std::vector<double> uniform_frob_errors;
    double median_ratio = 0.0;  // median of per-trial l2/uniform error ratios
    std::size_t l2_wins = 0;
    double sign_test_p = 1.0;
};

// Paired ℓ² vs uniform comparison on shared per-trial seeds.
AblationResult sampler_ablation(const SparseMatrix& m, std::size_t k, std::size_t trials,
                                std::uint64_t base_seed);

struct NnzTimeRow {
    std::size_t nnz = 0;
    double tes_seconds = 0.0;  // state preparation + sampling + embedding, no SVD
};

struct NnzTimeResult {
    std::vector<NnzTimeRow> rows;
    std::optional<double> pearson;  // empty when fewer than two matrices
};

// Times the pipeline-minus-SVD path per matrix (median of `repeats` runs on a
// monotonic clock) and correlates it with nnz.
NnzTimeResult nnz_time_probe(std::span<const SparseMatrix> matrices, std::size_t probe_dim = 16,
                             std::size_t repeats = 5, std::uint64_t seed = 1);

}  // namespace weq
