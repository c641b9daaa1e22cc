#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "weq/dense.hpp"

namespace weq {

struct Triplet {
    std::uint32_t row;
    std::uint32_t col;
    double value;
};

// Row-major sparse matrix: per-row column-sorted entries, no stored zeros,
// no duplicates. Squared row norms and the squared Frobenius norm are cached
// at construction.
class SparseMatrix {
  public:
    SparseMatrix() = default;

    // Accumulates duplicate triplets, drops exact zeros after accumulation.
    static SparseMatrix from_triplets(std::size_t n_rows, std::size_t n_cols,
                                      std::vector<Triplet> triplets);

    // Rows already sorted by column, unique, nonzero. Validated.
    static SparseMatrix from_csr(std::size_t n_rows, std::size_t n_cols,
                                 std::vector<std::uint64_t> row_ptr,
                                 std::vector<std::uint32_t> cols,
                                 std::vector<double> values);

    std::size_t n_rows() const { return n_rows_; }
    std::size_t n_cols() const { return n_cols_; }
    std::size_t nnz() const { return cols_.size(); }

    std::size_t row_nnz(std::size_t i) const { return row_ptr_[i + 1] - row_ptr_[i]; }
    std::span<const std::uint32_t> row_cols(std::size_t i) const {
        return {cols_.data() + row_ptr_[i], row_nnz(i)};
    }
    std::span<const double> row_values(std::size_t i) const {
        return {values_.data() + row_ptr_[i], row_nnz(i)};
    }

    double row_sq_norm(std::size_t i) const { return row_sq_norms_[i]; }
    const std::vector<double>& row_sq_norms() const { return row_sq_norms_; }
    double frob_sq() const { return frob_sq_; }
    double frob() const;

    SparseMatrix transposed() const;

    // y = A x (x has n_cols entries, y n_rows) and y = Aᵀ x.
    void mul_vec(const double* x, double* y) const;
    void tmul_vec(const double* x, double* y) const;

    // Y = A X (X: n_cols×b) and Y = Aᵀ X (X: n_rows×b); panels row-major.
    void mul_panel(const DenseMatrix& x, DenseMatrix& y) const;
    void tmul_panel(const DenseMatrix& x, DenseMatrix& y) const;

    DenseMatrix to_dense() const;

    // Entrywise sum; shapes must match.
    static SparseMatrix add(const SparseMatrix& a, const SparseMatrix& b);

    bool entries_equal(const SparseMatrix& other) const;

  private:
    std::size_t n_rows_ = 0;
    std::size_t n_cols_ = 0;
    std::vector<std::uint64_t> row_ptr_;
    std::vector<std::uint32_t> cols_;
    std::vector<double> values_;
    std::vector<double> row_sq_norms_;
    double frob_sq_ = 0.0;

    void finalize_norms();
    friend class SparseBuilder;
};

// Incremental row-ordered builder used by file loaders and samplers.
class SparseBuilder {
  public:
    SparseBuilder(std::size_t n_rows, std::size_t n_cols, std::size_t nnz_hint = 0);
    // Rows must be appended in order; entries within a row sorted by column.
    void append_row(std::span<const std::uint32_t> cols, std::span<const double> values,
                    double scale = 1.0);
    SparseMatrix finish();

  private:
    std::size_t n_rows_;
    std::size_t n_cols_;
    std::size_t next_row_ = 0;
    std::vector<std::uint64_t> row_ptr_;
    std::vector<std::uint32_t> cols_;
    std::vector<double> values_;
};

// Binary container: 4-byte magic, little-endian u64 n, u64 nnz, then nnz
// records of (u32 row, u32 col, f64 value) sorted by (row, col). Square
// matrices only ("WEQX" co-occurrence, "WEQM" information matrix).
void save_sparse_square(const std::string& path, const SparseMatrix& m, const char magic[4]);
SparseMatrix load_sparse_square(const std::string& path, const char expected_magic[4]);

}  // namespace weq
