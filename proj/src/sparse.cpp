#include "weq/sparse.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <memory>

#include "weq/error.hpp"
#include "weq/kernels.hpp"

static_assert(std::endian::native == std::endian::little,
              "file formats are little-endian; big-endian hosts are unsupported");

namespace weq {

void SparseMatrix::finalize_norms() {
    row_sq_norms_.resize(n_rows_);
    double total = 0.0;
    for (std::size_t i = 0; i < n_rows_; ++i) {
        const double s = kernels::sumsq(values_.data() + row_ptr_[i], row_nnz(i));
        row_sq_norms_[i] = s;
        total += s;
    }
    frob_sq_ = total;
}

double SparseMatrix::frob() const { return std::sqrt(frob_sq_); }

SparseMatrix SparseMatrix::from_triplets(std::size_t n_rows, std::size_t n_cols,
                                         std::vector<Triplet> triplets) {
    for (const Triplet& t : triplets) {
        if (t.row >= n_rows || t.col >= n_cols)
            throw validation_error("sparse triplet index out of range");
        if (!std::isfinite(t.value)) throw validation_error("sparse triplet value not finite");
    }
    std::sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
        return a.row != b.row ? a.row < b.row : a.col < b.col;
    });

    SparseMatrix m;
    m.n_rows_ = n_rows;
    m.n_cols_ = n_cols;
    m.row_ptr_.assign(n_rows + 1, 0);
    m.cols_.reserve(triplets.size());
    m.values_.reserve(triplets.size());

    std::size_t i = 0;
    for (std::size_t r = 0; r < n_rows; ++r) {
        while (i < triplets.size() && triplets[i].row == r) {
            const std::uint32_t c = triplets[i].col;
            double v = 0.0;
            while (i < triplets.size() && triplets[i].row == r && triplets[i].col == c) {
                v += triplets[i].value;
                ++i;
            }
            if (v != 0.0) {
                m.cols_.push_back(c);
                m.values_.push_back(v);
            }
        }
        m.row_ptr_[r + 1] = m.cols_.size();
    }
    m.finalize_norms();
    return m;
}

SparseMatrix SparseMatrix::from_csr(std::size_t n_rows, std::size_t n_cols,
                                    std::vector<std::uint64_t> row_ptr,
                                    std::vector<std::uint32_t> cols,
                                    std::vector<double> values) {
    if (row_ptr.size() != n_rows + 1 || row_ptr.front() != 0 || row_ptr.back() != cols.size() ||
        cols.size() != values.size())
        throw validation_error("malformed CSR arrays");
    for (std::size_t r = 0; r < n_rows; ++r) {
        if (row_ptr[r] > row_ptr[r + 1]) throw validation_error("CSR row pointers not monotone");
        for (std::size_t j = row_ptr[r]; j < row_ptr[r + 1]; ++j) {
            if (cols[j] >= n_cols) throw validation_error("CSR column out of range");
            if (j > row_ptr[r] && cols[j - 1] >= cols[j])
                throw validation_error("CSR columns not strictly increasing");
            if (values[j] == 0.0 || !std::isfinite(values[j]))
                throw validation_error("CSR stored value zero or not finite");
        }
    }
    SparseMatrix m;
    m.n_rows_ = n_rows;
    m.n_cols_ = n_cols;
    m.row_ptr_ = std::move(row_ptr);
    m.cols_ = std::move(cols);
    m.values_ = std::move(values);
    m.finalize_norms();
    return m;
}

SparseMatrix SparseMatrix::transposed() const {
    std::vector<std::uint64_t> ptr(n_cols_ + 1, 0);
    for (std::uint32_t c : cols_) ++ptr[c + 1];
    for (std::size_t c = 0; c < n_cols_; ++c) ptr[c + 1] += ptr[c];

    std::vector<std::uint32_t> tcols(nnz());
    std::vector<double> tvals(nnz());
    std::vector<std::uint64_t> cursor = ptr;
    for (std::size_t r = 0; r < n_rows_; ++r) {
        for (std::size_t j = row_ptr_[r]; j < row_ptr_[r + 1]; ++j) {
            const std::uint64_t dst = cursor[cols_[j]]++;
            tcols[dst] = static_cast<std::uint32_t>(r);
            tvals[dst] = values_[j];
        }
    }
    SparseMatrix t;
    t.n_rows_ = n_cols_;
    t.n_cols_ = n_rows_;
    t.row_ptr_ = std::move(ptr);
    t.cols_ = std::move(tcols);
    t.values_ = std::move(tvals);
    t.finalize_norms();
    return t;
}

void SparseMatrix::mul_vec(const double* x, double* y) const {
    for (std::size_t r = 0; r < n_rows_; ++r) {
        double acc = 0.0;
        for (std::size_t j = row_ptr_[r]; j < row_ptr_[r + 1]; ++j)
            acc += values_[j] * x[cols_[j]];
        y[r] = acc;
    }
}

void SparseMatrix::tmul_vec(const double* x, double* y) const {
    std::fill(y, y + n_cols_, 0.0);
    for (std::size_t r = 0; r < n_rows_; ++r) {
        const double xr = x[r];
        if (xr == 0.0) continue;
        for (std::size_t j = row_ptr_[r]; j < row_ptr_[r + 1]; ++j)
            y[cols_[j]] += values_[j] * xr;
    }
}

void SparseMatrix::mul_panel(const DenseMatrix& x, DenseMatrix& y) const {
    if (x.rows() != n_cols_) throw validation_error("mul_panel: panel rows != n_cols");
    if (y.rows() != n_rows_ || y.cols() != x.cols()) y = DenseMatrix(n_rows_, x.cols());
    else y.fill(0.0);
    const std::size_t b = x.cols();
    for (std::size_t r = 0; r < n_rows_; ++r) {
        double* yr = y.row(r);
        for (std::size_t j = row_ptr_[r]; j < row_ptr_[r + 1]; ++j)
            kernels::axpy(values_[j], x.row(cols_[j]), yr, b);
    }
}

void SparseMatrix::tmul_panel(const DenseMatrix& x, DenseMatrix& y) const {
    if (x.rows() != n_rows_) throw validation_error("tmul_panel: panel rows != n_rows");
    if (y.rows() != n_cols_ || y.cols() != x.cols()) y = DenseMatrix(n_cols_, x.cols());
    else y.fill(0.0);
    const std::size_t b = x.cols();
    for (std::size_t r = 0; r < n_rows_; ++r) {
        const double* xr = x.row(r);
        for (std::size_t j = row_ptr_[r]; j < row_ptr_[r + 1]; ++j)
            kernels::axpy(values_[j], xr, y.row(cols_[j]), b);
    }
}

DenseMatrix SparseMatrix::to_dense() const {
    DenseMatrix d(n_rows_, n_cols_);
    for (std::size_t r = 0; r < n_rows_; ++r) {
        double* dr = d.row(r);
        for (std::size_t j = row_ptr_[r]; j < row_ptr_[r + 1]; ++j) dr[cols_[j]] = values_[j];
    }
    return d;
}

SparseMatrix SparseMatrix::add(const SparseMatrix& a, const SparseMatrix& b) {
    if (a.n_rows_ != b.n_rows_ || a.n_cols_ != b.n_cols_)
        throw validation_error("sparse add: shape mismatch");
    SparseBuilder out(a.n_rows_, a.n_cols_, a.nnz() + b.nnz());
    std::vector<std::uint32_t> cols;
    std::vector<double> vals;
    for (std::size_t r = 0; r < a.n_rows_; ++r) {
        cols.clear();
        vals.clear();
        auto ac = a.row_cols(r), bc = b.row_cols(r);
        auto av = a.row_values(r), bv = b.row_values(r);
        std::size_t i = 0, j = 0;
        while (i < ac.size() || j < bc.size()) {
            std::uint32_t c;
            double v;
            if (j >= bc.size() || (i < ac.size() && ac[i] < bc[j])) {
                c = ac[i]; v = av[i]; ++i;
            } else if (i >= ac.size() || bc[j] < ac[i]) {
                c = bc[j]; v = bv[j]; ++j;
            } else {
                c = ac[i]; v = av[i] + bv[j]; ++i; ++j;
            }
            if (v != 0.0) {
                cols.push_back(c);
                vals.push_back(v);
            }
        }
        out.append_row(cols, vals);
    }
    return out.finish();
}

bool SparseMatrix::entries_equal(const SparseMatrix& other) const {
    return n_rows_ == other.n_rows_ && n_cols_ == other.n_cols_ && row_ptr_ == other.row_ptr_ &&
           cols_ == other.cols_ && values_ == other.values_;
}

SparseBuilder::SparseBuilder(std::size_t n_rows, std::size_t n_cols, std::size_t nnz_hint)
    : n_rows_(n_rows), n_cols_(n_cols) {
    row_ptr_.reserve(n_rows + 1);
    row_ptr_.push_back(0);
    cols_.reserve(nnz_hint);
    values_.reserve(nnz_hint);
}

void SparseBuilder::append_row(std::span<const std::uint32_t> cols,
                               std::span<const double> values, double scale) {
    if (next_row_ >= n_rows_) throw validation_error("builder: too many rows");
    if (cols.size() != values.size()) throw validation_error("builder: row arrays differ");
    cols_.insert(cols_.end(), cols.begin(), cols.end());
    const std::size_t at = values_.size();
    values_.resize(at + values.size());
    if (scale == 1.0) {
        std::copy(values.begin(), values.end(), values_.begin() + at);
    } else {
        kernels::scale_into(values_.data() + at, scale, values.data(), values.size());
    }
    ++next_row_;
    row_ptr_.push_back(cols_.size());
}

SparseMatrix SparseBuilder::finish() {
    while (next_row_ < n_rows_) {
        ++next_row_;
        row_ptr_.push_back(cols_.size());
    }
    return SparseMatrix::from_csr(n_rows_, n_cols_, std::move(row_ptr_), std::move(cols_),
                                  std::move(values_));
}

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f != nullptr) std::fclose(f);
    }
};
using FileHandle = std::unique_ptr<std::FILE, FileCloser>;

void write_all(std::FILE* f, const void* p, std::size_t bytes, const std::string& path) {
    if (std::fwrite(p, 1, bytes, f) != bytes)
        throw compute_error("short write to '" + path + "'");
}

void read_all(std::FILE* f, void* p, std::size_t bytes, const std::string& path) {
    if (std::fread(p, 1, bytes, f) != bytes)
        throw validation_error("truncated file '" + path + "'");
}

#pragma pack(push, 1)
struct Record {
    std::uint32_t row;
    std::uint32_t col;
    double value;
};
#pragma pack(pop)
static_assert(sizeof(Record) == 16);

}  // namespace

void save_sparse_square(const std::string& path, const SparseMatrix& m, const char magic[4]) {
    if (m.n_rows() != m.n_cols())
        throw validation_error("square sparse container requires n_rows == n_cols");
    FileHandle f(std::fopen(path.c_str(), "wb"));
    if (!f) throw compute_error("cannot open '" + path + "' for writing");
    write_all(f.get(), magic, 4, path);
    const std::uint64_t n = m.n_rows();
    const std::uint64_t nnz = m.nnz();
    write_all(f.get(), &n, 8, path);
    write_all(f.get(), &nnz, 8, path);
    std::vector<Record> buf;
    buf.reserve(1 << 16);
    for (std::size_t r = 0; r < m.n_rows(); ++r) {
        auto cols = m.row_cols(r);
        auto vals = m.row_values(r);
        for (std::size_t j = 0; j < cols.size(); ++j) {
            buf.push_back({static_cast<std::uint32_t>(r), cols[j], vals[j]});
            if (buf.size() == buf.capacity()) {
                write_all(f.get(), buf.data(), buf.size() * sizeof(Record), path);
                buf.clear();
            }
        }
    }
    if (!buf.empty()) write_all(f.get(), buf.data(), buf.size() * sizeof(Record), path);
    if (std::fflush(f.get()) != 0) throw compute_error("flush failed for '" + path + "'");
}

SparseMatrix load_sparse_square(const std::string& path, const char expected_magic[4]) {
    FileHandle f(std::fopen(path.c_str(), "rb"));
    if (!f) throw validation_error("cannot open '" + path + "'");
    char magic[4];
    read_all(f.get(), magic, 4, path);
    if (std::memcmp(magic, expected_magic, 4) != 0)
        throw validation_error("bad magic in '" + path + "': expected '" +
                               std::string(expected_magic, 4) + "'");
    std::uint64_t n = 0, nnz = 0;
    read_all(f.get(), &n, 8, path);
    read_all(f.get(), &nnz, 8, path);
    if (n > 0xFFFFFFFFull) throw validation_error("matrix dimension too large in '" + path + "'");

    std::vector<std::uint64_t> row_ptr(n + 1, 0);
    std::vector<std::uint32_t> cols(nnz);
    std::vector<double> values(nnz);
    std::vector<Record> buf(std::min<std::size_t>(nnz, 1 << 16));
    std::size_t at = 0;
    std::uint32_t prev_row = 0;
    std::uint32_t prev_col = 0;
    while (at < nnz) {
        const std::size_t chunk = std::min(buf.size(), static_cast<std::size_t>(nnz) - at);
        read_all(f.get(), buf.data(), chunk * sizeof(Record), path);
        for (std::size_t i = 0; i < chunk; ++i) {
            const Record& rec = buf[i];
            if (rec.row >= n || rec.col >= n)
                throw validation_error("record index out of range in '" + path + "'");
            if (at + i > 0 &&
                (rec.row < prev_row || (rec.row == prev_row && rec.col <= prev_col)))
                throw validation_error("records not sorted by (row, col) in '" + path + "'");
            prev_row = rec.row;
            prev_col = rec.col;
            ++row_ptr[rec.row + 1];
            cols[at + i] = rec.col;
            values[at + i] = rec.value;
        }
        at += chunk;
    }
    for (std::size_t r = 0; r < n; ++r) row_ptr[r + 1] += row_ptr[r];
    return SparseMatrix::from_csr(n, n, std::move(row_ptr), std::move(cols), std::move(values));
}

}  // namespace weq
