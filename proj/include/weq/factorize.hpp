#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "weq/corpus.hpp"
#include "weq/dense.hpp"
#include "weq/qsampler.hpp"
#include "weq/sparse.hpp"

namespace weq {

struct SvdOptions {
    double tol = 1e-10;          // relative Ritz-value change, against the top value
    std::size_t max_iter = 300;
    std::size_t oversample = 8;  // block size = d + oversample, capped at min(shape)
};

// Top-d left singular structure of a sparse-row matrix A, from blocked
// subspace iteration on the (implicit) Gram operator AAᵀ. Columns with
// sigma_j <= sigma_1 * 1e-10 are dropped; rank_truncated records that the
// requested d shrank. U columns are sign-canonicalized: the entry of largest
// magnitude is positive.
struct SvdResult {
    DenseMatrix u;              // rows(A) × retained d
    std::vector<double> sigma;  // non-increasing, strictly positive
    std::size_t iterations = 0;
    double residual = 0.0;      // max_j ||AAᵀu_j − σ_j²u_j|| / σ_1²
    bool rank_truncated = false;
};

SvdResult truncated_svd(const SparseMatrix& a, std::size_t d, const SvdOptions& opts = {});

// Aᵀ · U · diag(sigma^{-1/2}); rows of A must match rows of U.
DenseMatrix embedding_from_rows(const SparseMatrix& a, const SvdResult& svd);

// Word vectors bound to a vocabulary; row i embeds words[i].
struct EmbeddingMatrix {
    DenseMatrix vectors;
    std::vector<std::string> words;
    std::unordered_map<std::string, std::uint32_t, StringHash, std::equal_to<>> index;

    std::size_t dim() const { return vectors.cols(); }
    const double* vector_of(std::uint32_t id) const { return vectors.row(id); }

    static EmbeddingMatrix bind(DenseMatrix vectors, const Vocabulary& vocab);
    static EmbeddingMatrix bind(DenseMatrix vectors, std::vector<std::string> words);
};

// E = R̃ᵀUΣ^{-1/2}. The SVD may come from R̃ itself or from its column-sampled
// Gram surrogate; U row count must equal k.
EmbeddingMatrix embed_from_qcontexts(const QContexts& q, const SvdResult& svd,
                                     const Vocabulary& vocab);

// Λ = D^{-1}UΣ^{-1/2} with D = diag(sqrt(k·p_i)); satisfies RᵀΛ = R̃ᵀUΣ^{-1/2}
// for the unrescaled sampled rows R.
DenseMatrix context_coefficients(const QContexts& q, const SvdResult& svd);

// Full matrix-factorization baseline: truncated SVD of M itself, E = V·diag(√σ)
// computed as MᵀUΣ^{-1/2}.
DenseMatrix mf_embedding_vectors(const SparseMatrix& m, std::size_t d,
                                 const SvdOptions& opts = {});
EmbeddingMatrix embed_full_mf(const SparseMatrix& m, std::size_t d, const Vocabulary& vocab,
                              const SvdOptions& opts = {});

// word2vec text format: "n d" header, then "word v1 ... vd" with fixed
// 6-decimal values.
void save_embeddings_word2vec(const std::string& path, const EmbeddingMatrix& e);
EmbeddingMatrix load_embeddings_word2vec(const std::string& path);

// Binary SVD container (magic "WEQU").
void save_svd(const std::string& path, const SvdResult& svd);
SvdResult load_svd(const std::string& path);

}  // namespace weq
