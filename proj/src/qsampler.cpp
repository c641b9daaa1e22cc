#include "weq/qsampler.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <memory>

#include "weq/error.hpp"

namespace weq {

const char* sampler_name(SamplerKind k) { return k == SamplerKind::l2 ? "l2" : "uniform"; }

SamplerKind sampler_from_name(std::string_view name) {
    if (name == "l2") return SamplerKind::l2;
    if (name == "uniform") return SamplerKind::uniform;
    throw validation_error("unknown sampler '" + std::string(name) + "'");
}

SamplerState prepare_state(const SparseMatrix& m, std::uint64_t seed) {
    if (!(m.frob_sq() > 0.0)) throw compute_error("cannot sample from zero matrix");
    SamplerState s;
    s.rng_seed = seed;
    s.cumsum.resize(m.n_rows());
    double running = 0.0;
    for (std::size_t i = 0; i < m.n_rows(); ++i) {
        running += m.row_sq_norm(i);
        s.cumsum[i] = running;
    }
    s.total = running;
    return s;
}

std::size_t sample_index_for(const SamplerState& state, double s) {
    const auto it = std::upper_bound(state.cumsum.begin(), state.cumsum.end(), s);
    if (it == state.cumsum.end()) return state.cumsum.size() - 1;  // s == total edge
    return static_cast<std::size_t>(it - state.cumsum.begin());
}

std::size_t sample_row(const SamplerState& state, SplitMix64& rng) {
    double s = rng.next_double() * state.total;
    if (s >= state.total) s = std::nextafter(state.total, 0.0);  // rounding guard
    return sample_index_for(state, s);
}

namespace {

QContexts assemble(const SparseMatrix& m, const std::vector<std::uint32_t>& ids,
                   const std::vector<double>& probs, const std::vector<double>& scales) {
    std::size_t nnz = 0;
    for (std::uint32_t id : ids) nnz += m.row_nnz(id);
    SparseBuilder builder(ids.size(), m.n_cols(), nnz);
    for (std::size_t i = 0; i < ids.size(); ++i) {
        builder.append_row(m.row_cols(ids[i]), m.row_values(ids[i]), scales[i]);
    }
    QContexts q;
    q.matrix = builder.finish();
    q.row_ids = ids;
    q.probs = probs;
    q.k = ids.size();
    q.axis = QContexts::Axis::rows;
    q.source_frob_sq = m.frob_sq();
    return q;
}

}  // namespace

QContexts build_qcontexts(const SparseMatrix& m, std::size_t k, std::uint64_t seed) {
    if (k < 1) throw validation_error("sample count k must be >= 1");
    const SamplerState state = prepare_state(m, seed);
    SplitMix64 rng(seed);
    const double fro = std::sqrt(state.total);
    const double sqrt_k = std::sqrt(static_cast<double>(k));

    std::vector<std::uint32_t> ids(k);
    std::vector<double> probs(k);
    std::vector<double> scales(k);
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t row = sample_row(state, rng);
        const double sq = m.row_sq_norm(row);
        ids[i] = static_cast<std::uint32_t>(row);
        probs[i] = sq / state.total;
        scales[i] = fro / (sqrt_k * std::sqrt(sq));
    }
    return assemble(m, ids, probs, scales);
}

QContexts build_qcontexts_uniform(const SparseMatrix& m, std::size_t k, std::uint64_t seed) {
    if (k < 1) throw validation_error("sample count k must be >= 1");
    if (!(m.frob_sq() > 0.0)) throw compute_error("cannot sample from zero matrix");
    std::vector<std::uint32_t> nonzero;
    nonzero.reserve(m.n_rows());
    for (std::size_t r = 0; r < m.n_rows(); ++r) {
        if (m.row_sq_norm(r) > 0.0) nonzero.push_back(static_cast<std::uint32_t>(r));
    }
    SplitMix64 rng(seed);
    const double p = 1.0 / static_cast<double>(nonzero.size());
    const double scale_base =
        std::sqrt(static_cast<double>(nonzero.size())) / std::sqrt(static_cast<double>(k));

    std::vector<std::uint32_t> ids(k);
    std::vector<double> probs(k, p);
    std::vector<double> scales(k, scale_base);
    for (std::size_t i = 0; i < k; ++i) {
        ids[i] = nonzero[rng.next_below(nonzero.size())];
    }
    return assemble(m, ids, probs, scales);
}

QContexts column_sample(const QContexts& r, std::size_t k_cols, std::uint64_t seed) {
    if (k_cols < 1) throw validation_error("column sample count k' must be >= 1");
    const SparseMatrix rt = r.matrix.transposed();
    QContexts sampled = build_qcontexts(rt, k_cols, seed);
    QContexts c;
    c.matrix = sampled.matrix.transposed();  // k×k'
    c.row_ids = std::move(sampled.row_ids);
    c.probs = std::move(sampled.probs);
    c.k = k_cols;
    c.axis = QContexts::Axis::cols;
    c.source_frob_sq = sampled.source_frob_sq;
    return c;
}

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f != nullptr) std::fclose(f);
    }
};
using FileHandle = std::unique_ptr<std::FILE, FileCloser>;

constexpr char kMagic[4] = {'W', 'E', 'Q', 'Q'};

void write_all(std::FILE* f, const void* p, std::size_t bytes, const std::string& path) {
    if (std::fwrite(p, 1, bytes, f) != bytes) throw compute_error("short write to '" + path + "'");
}

void read_all(std::FILE* f, void* p, std::size_t bytes, const std::string& path) {
    if (std::fread(p, 1, bytes, f) != bytes) throw validation_error("truncated file '" + path + "'");
}

#pragma pack(push, 1)
struct Record {
    std::uint32_t row;
    std::uint32_t col;
    double value;
};
#pragma pack(pop)

}  // namespace

void save_qcontexts(const std::string& path, const QContexts& q) {
    FileHandle f(std::fopen(path.c_str(), "wb"));
    if (!f) throw compute_error("cannot open '" + path + "' for writing");
    write_all(f.get(), kMagic, 4, path);
    const std::uint64_t axis = q.axis == QContexts::Axis::rows ? 0 : 1;
    const std::uint64_t rows = q.matrix.n_rows();
    const std::uint64_t cols = q.matrix.n_cols();
    const std::uint64_t k = q.k;
    const std::uint64_t nnz = q.matrix.nnz();
    write_all(f.get(), &axis, 8, path);
    write_all(f.get(), &rows, 8, path);
    write_all(f.get(), &cols, 8, path);
    write_all(f.get(), &k, 8, path);
    write_all(f.get(), &nnz, 8, path);
    write_all(f.get(), &q.source_frob_sq, 8, path);
    write_all(f.get(), q.row_ids.data(), k * 4, path);
    write_all(f.get(), q.probs.data(), k * 8, path);
    std::vector<Record> buf;
    buf.reserve(1 << 16);
    for (std::size_t r = 0; r < q.matrix.n_rows(); ++r) {
        auto rc = q.matrix.row_cols(r);
        auto rv = q.matrix.row_values(r);
        for (std::size_t j = 0; j < rc.size(); ++j) {
            buf.push_back({static_cast<std::uint32_t>(r), rc[j], rv[j]});
            if (buf.size() == buf.capacity()) {
                write_all(f.get(), buf.data(), buf.size() * sizeof(Record), path);
                buf.clear();
            }
        }
    }
    if (!buf.empty()) write_all(f.get(), buf.data(), buf.size() * sizeof(Record), path);
    if (std::fflush(f.get()) != 0) throw compute_error("flush failed for '" + path + "'");
}

QContexts load_qcontexts(const std::string& path) {
    FileHandle f(std::fopen(path.c_str(), "rb"));
    if (!f) throw validation_error("cannot open '" + path + "'");
    char magic[4];
    read_all(f.get(), magic, 4, path);
    if (std::memcmp(magic, kMagic, 4) != 0)
        throw validation_error("bad magic in '" + path + "': expected 'WEQQ'");
    std::uint64_t axis = 0, rows = 0, cols = 0, k = 0, nnz = 0;
    double source_frob_sq = 0.0;
    read_all(f.get(), &axis, 8, path);
    read_all(f.get(), &rows, 8, path);
    read_all(f.get(), &cols, 8, path);
    read_all(f.get(), &k, 8, path);
    read_all(f.get(), &nnz, 8, path);
    read_all(f.get(), &source_frob_sq, 8, path);
    if (axis > 1) throw validation_error("bad axis flag in '" + path + "'");

    QContexts q;
    q.axis = axis == 0 ? QContexts::Axis::rows : QContexts::Axis::cols;
    q.k = k;
    q.source_frob_sq = source_frob_sq;
    q.row_ids.resize(k);
    q.probs.resize(k);
    read_all(f.get(), q.row_ids.data(), k * 4, path);
    read_all(f.get(), q.probs.data(), k * 8, path);

    std::vector<Triplet> triplets(nnz);
    std::vector<Record> buf(std::min<std::size_t>(nnz, 1 << 16));
    std::size_t at = 0;
    while (at < nnz) {
        const std::size_t chunk = std::min(buf.size(), static_cast<std::size_t>(nnz) - at);
        read_all(f.get(), buf.data(), chunk * sizeof(Record), path);
        for (std::size_t i = 0; i < chunk; ++i) {
            triplets[at + i] = {buf[i].row, buf[i].col, buf[i].value};
        }
        at += chunk;
    }
    q.matrix = SparseMatrix::from_triplets(rows, cols, std::move(triplets));
    return q;
}

}  // namespace weq
