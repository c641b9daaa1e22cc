#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "weq/rng.hpp"
#include "weq/sparse.hpp"

namespace weq {

enum class SamplerKind { l2, uniform };

const char* sampler_name(SamplerKind k);
SamplerKind sampler_from_name(std::string_view name);

// Cumulative squared-row-norm array: cumsum[i] = ||r_0||² + ... + ||r_i||²,
// total = ||M||_F². Row c is drawn with probability ||r_c||²/||M||_F² by
// binary search over a uniform draw on [0, total).
struct SamplerState {
    std::vector<double> cumsum;
    double total = 0.0;
    std::uint64_t rng_seed = 0;
};

SamplerState prepare_state(const SparseMatrix& m, std::uint64_t seed);

// Leftmost index i with s < cumsum[i]; zero-norm rows are never selected.
std::size_t sample_index_for(const SamplerState& state, double s);
std::size_t sample_row(const SamplerState& state, SplitMix64& rng);

// Sampled, rescaled matrix: row i is row row_ids[i] of the source scaled so
// that every row has norm ||M||_F/sqrt(k). For axis == cols the matrix holds
// a column-sampled reduction and row_ids are sampled column indices.
struct QContexts {
    enum class Axis { rows, cols };
    SparseMatrix matrix;
    std::vector<std::uint32_t> row_ids;
    std::vector<double> probs;
    std::size_t k = 0;
    Axis axis = Axis::rows;
    double source_frob_sq = 0.0;
};

QContexts build_qcontexts(const SparseMatrix& m, std::size_t k, std::uint64_t seed);

// Uniform over rows with nonzero norm, rescaled by sqrt(n')/sqrt(k) so the
// Gram estimator stays unbiased (n' = number of nonzero-norm rows).
QContexts build_qcontexts_uniform(const SparseMatrix& m, std::size_t k, std::uint64_t seed);

// Applies the row sampler to R̃ᵀ and transposes back: a k×k' reduction with
// C̃C̃ᵀ ≈ R̃R̃ᵀ.
QContexts column_sample(const QContexts& r, std::size_t k_cols, std::uint64_t seed);

// Binary container (magic "WEQQ"): axis flag, shape, provenance ids and
// probabilities, then (u32 row, u32 col, f64 value) records sorted by row.
void save_qcontexts(const std::string& path, const QContexts& q);
QContexts load_qcontexts(const std::string& path);

}  // namespace weq
