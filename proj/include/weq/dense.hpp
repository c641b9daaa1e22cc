#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "weq/rng.hpp"

namespace weq {

// Row-major dense matrix of doubles. Rows are contiguous so the kernel layer
// can run over them directly.
class DenseMatrix {
  public:
    DenseMatrix() = default;
    DenseMatrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

    static DenseMatrix gaussian(std::size_t rows, std::size_t cols, std::uint64_t seed);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double* row(std::size_t i) { return data_.data() + i * cols_; }
    const double* row(std::size_t i) const { return data_.data() + i * cols_; }
    double& at(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double at(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    void fill(double v) { data_.assign(data_.size(), v); }

    DenseMatrix transposed() const;

  private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// C = A * B
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);

// B = Aᵀ * A (symmetric, cols×cols)
DenseMatrix gram_of_columns(const DenseMatrix& a);

// Orthonormalizes the columns of Q in place (Cholesky-QR2 with a modified
// Gram-Schmidt fallback). Columns that collapse to zero are reseeded with
// deterministic gaussian fill from `rng` and re-orthogonalized, keeping the
// block full rank.
void orthonormalize_columns(DenseMatrix& q, SplitMix64& rng);

struct SymEig {
    std::vector<double> values;  // descending
    DenseMatrix vectors;         // column j pairs with values[j]
};

// Dense symmetric eigendecomposition: Householder tridiagonalization followed
// by implicit QL with shifts, eigenvectors accumulated.
SymEig symmetric_eigen(DenseMatrix a);

}  // namespace weq
