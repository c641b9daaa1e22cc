#include "weq/corpus.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>

#include "weq/error.hpp"
#include "weq/rng.hpp"

namespace weq {

namespace {

inline bool is_ascii_letter(unsigned char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

inline char lower(unsigned char c) { return c >= 'A' && c <= 'Z' ? char(c - 'A' + 'a') : char(c); }

// Expected continuation count for a UTF-8 lead byte, or -1 if invalid.
inline int utf8_continuations(unsigned char c) {
    if ((c & 0xE0) == 0xC0) return 1;
    if ((c & 0xF0) == 0xE0) return 2;
    if ((c & 0xF8) == 0xF0) return 3;
    return -1;
}

}  // namespace

void tokenize_stream(std::istream& in, const std::function<void(std::string_view)>& sink,
                     TokenizeStats* stats) {
    TokenizeStats local;
    std::string token;
    std::vector<char> buf(1 << 16);
    int pending_continuations = 0;
    while (in.good()) {
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        const std::size_t got = static_cast<std::size_t>(in.gcount());
        if (in.bad())
            throw compute_error("read error at byte offset " + std::to_string(local.bytes));
        for (std::size_t i = 0; i < got; ++i) {
            const unsigned char c = static_cast<unsigned char>(buf[i]);
            if (pending_continuations > 0) {
                if ((c & 0xC0) == 0x80) {
                    --pending_continuations;
                    continue;
                }
                ++local.invalid_utf8;  // truncated sequence
                pending_continuations = 0;
            }
            if (c < 0x80) {
                if (is_ascii_letter(c)) {
                    token.push_back(lower(c));
                } else if (!token.empty()) {
                    ++local.tokens;
                    sink(token);
                    token.clear();
                }
            } else {
                const int cont = utf8_continuations(c);
                if (cont < 0) {
                    ++local.invalid_utf8;
                } else {
                    pending_continuations = cont;
                }
                if (!token.empty()) {
                    ++local.tokens;
                    sink(token);
                    token.clear();
                }
            }
        }
        local.bytes += got;
    }
    if (pending_continuations > 0) ++local.invalid_utf8;
    if (!token.empty()) {
        ++local.tokens;
        sink(token);
    }
    if (stats != nullptr) *stats = local;
}

std::vector<std::string> tokenize(std::istream& in, TokenizeStats* stats) {
    std::vector<std::string> out;
    tokenize_stream(in, [&](std::string_view t) { out.emplace_back(t); }, stats);
    return out;
}

Vocabulary build_vocab_from_counts(
    std::unordered_map<std::string, std::uint64_t, StringHash, std::equal_to<>> counts,
    std::uint64_t min_count) {
    if (min_count < 1) throw validation_error("min_count must be >= 1");
    std::vector<std::pair<std::string, std::uint64_t>> kept;
    kept.reserve(counts.size());
    for (auto& [word, count] : counts) {
        if (count >= min_count) kept.emplace_back(word, count);
    }
    if (kept.empty()) throw compute_error("empty vocabulary");
    std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    Vocabulary v;
    v.words.reserve(kept.size());
    v.counts.reserve(kept.size());
    v.index.reserve(kept.size());
    for (std::size_t i = 0; i < kept.size(); ++i) {
        v.words.push_back(std::move(kept[i].first));
        v.counts.push_back(kept[i].second);
        v.index.emplace(v.words.back(), static_cast<std::uint32_t>(i));
    }
    return v;
}

Vocabulary build_vocab(std::span<const std::string> tokens, std::uint64_t min_count) {
    std::unordered_map<std::string, std::uint64_t, StringHash, std::equal_to<>> counts;
    for (const std::string& t : tokens) ++counts[t];
    return build_vocab_from_counts(std::move(counts), min_count);
}

void save_vocab(const std::string& path, const Vocabulary& vocab) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw compute_error("cannot open '" + path + "' for writing");
    for (std::size_t i = 0; i < vocab.size(); ++i) {
        out << vocab.words[i] << '\t' << vocab.counts[i] << '\n';
    }
    if (!out) throw compute_error("write failed for '" + path + "'");
}

Vocabulary load_vocab(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw validation_error("cannot open vocab file '" + path + "'");
    Vocabulary v;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const std::size_t tab = line.find('\t');
        if (tab == std::string::npos || tab == 0)
            throw validation_error("malformed vocab line " + std::to_string(lineno) + " in '" +
                                   path + "'");
        std::uint64_t count = 0;
        try {
            count = std::stoull(line.substr(tab + 1));
        } catch (const std::exception&) {
            throw validation_error("bad count on vocab line " + std::to_string(lineno));
        }
        std::string word = line.substr(0, tab);
        if (!v.counts.empty()) {
            const bool ordered = v.counts.back() > count ||
                                 (v.counts.back() == count && v.words.back() < word);
            if (!ordered)
                throw validation_error("vocab file not ordered at line " + std::to_string(lineno));
        }
        v.index.emplace(word, static_cast<std::uint32_t>(v.words.size()));
        v.words.push_back(std::move(word));
        v.counts.push_back(count);
    }
    if (v.words.empty()) throw validation_error("vocab file '" + path + "' has no entries");
    return v;
}

const char* weighting_name(Weighting w) {
    return w == Weighting::flat ? "flat" : "harmonic";
}

Weighting weighting_from_name(std::string_view name) {
    if (name == "flat") return Weighting::flat;
    if (name == "harmonic") return Weighting::harmonic;
    throw validation_error("unknown weighting '" + std::string(name) + "'");
}

PairAccumulator::PairAccumulator(std::size_t capacity_hint) {
    std::size_t cap = std::bit_ceil(std::max<std::size_t>(capacity_hint * 2, 1024));
    keys_.assign(cap, kEmpty);
    vals_.assign(cap, 0.0);
    mask_ = cap - 1;
    grow_at_ = cap * 7 / 10;
}

void PairAccumulator::grow() {
    std::vector<std::uint64_t> old_keys = std::move(keys_);
    std::vector<double> old_vals = std::move(vals_);
    const std::size_t cap = old_keys.size() * 2;
    keys_.assign(cap, kEmpty);
    vals_.assign(cap, 0.0);
    mask_ = cap - 1;
    grow_at_ = cap * 7 / 10;
    for (std::size_t i = 0; i < old_keys.size(); ++i) {
        if (old_keys[i] == kEmpty) continue;
        std::size_t slot = SplitMix64::mix(old_keys[i]) & mask_;
        while (keys_[slot] != kEmpty) slot = (slot + 1) & mask_;
        keys_[slot] = old_keys[i];
        vals_[slot] = old_vals[i];
    }
}

void PairAccumulator::add(std::uint32_t row, std::uint32_t col, double w) {
    const std::uint64_t key = (static_cast<std::uint64_t>(row) << 32) | col;
    std::size_t slot = SplitMix64::mix(key) & mask_;
    while (true) {
        if (keys_[slot] == key) {
            vals_[slot] += w;
            return;
        }
        if (keys_[slot] == kEmpty) {
            keys_[slot] = key;
            vals_[slot] = w;
            if (++count_ > grow_at_) grow();
            return;
        }
        slot = (slot + 1) & mask_;
    }
}

SparseMatrix PairAccumulator::to_matrix(std::size_t n) const {
    std::vector<std::uint64_t> row_ptr(n + 1, 0);
    for (std::size_t i = 0; i < keys_.size(); ++i) {
        if (keys_[i] != kEmpty) ++row_ptr[(keys_[i] >> 32) + 1];
    }
    for (std::size_t r = 0; r < n; ++r) row_ptr[r + 1] += row_ptr[r];

    struct ColVal {
        std::uint32_t col;
        double val;
    };
    std::vector<ColVal> entries(count_);
    std::vector<std::uint64_t> cursor(row_ptr.begin(), row_ptr.end() - 1);
    for (std::size_t i = 0; i < keys_.size(); ++i) {
        if (keys_[i] == kEmpty) continue;
        const std::size_t r = keys_[i] >> 32;
        entries[cursor[r]++] = {static_cast<std::uint32_t>(keys_[i] & 0xFFFFFFFFull), vals_[i]};
    }
    std::vector<std::uint32_t> cols(count_);
    std::vector<double> values(count_);
    for (std::size_t r = 0; r < n; ++r) {
        std::sort(entries.begin() + row_ptr[r], entries.begin() + row_ptr[r + 1],
                  [](const ColVal& a, const ColVal& b) { return a.col < b.col; });
        for (std::size_t j = row_ptr[r]; j < row_ptr[r + 1]; ++j) {
            cols[j] = entries[j].col;
            values[j] = entries[j].val;
        }
    }
    return SparseMatrix::from_csr(n, n, std::move(row_ptr), std::move(cols), std::move(values));
}

CooccurrenceAccumulator::CooccurrenceAccumulator(const Vocabulary& vocab, int window,
                                                 Weighting weighting, std::size_t lead_in)
    : vocab_(vocab),
      window_(window),
      weighting_(weighting),
      lead_in_(lead_in),
      ring_(static_cast<std::size_t>(window) + 1) {
    if (window < 1) throw validation_error("window must be >= 1");
}

void CooccurrenceAccumulator::add_token(std::string_view token) {
    const auto id = vocab_.id_of(token);
    if (id.has_value()) add_id(*id);
}

void CooccurrenceAccumulator::add_id(std::uint32_t id) {
    const std::uint64_t p = pos_;
    ring_[p % ring_.size()] = id;
    ++pos_;
    if (p < lead_in_) return;
    const std::uint64_t max_back = std::min<std::uint64_t>(window_, p);
    for (std::uint64_t d = 1; d <= max_back; ++d) {
        const std::uint32_t left = ring_[(p - d) % ring_.size()];
        const double w = weighting_ == Weighting::flat ? 1.0 : 1.0 / static_cast<double>(d);
        pairs_.add(left, id, w);
        pairs_.add(id, left, w);
    }
}

CooccurrenceCounts CooccurrenceAccumulator::finish() {
    CooccurrenceCounts out;
    out.window = window_;
    out.weighting = weighting_;
    out.matrix = pairs_.to_matrix(vocab_.size());
    return out;
}

CooccurrenceCounts count_cooccurrences(std::span<const std::string> tokens,
                                       const Vocabulary& vocab, int window, Weighting weighting,
                                       std::size_t lead_in) {
    CooccurrenceAccumulator acc(vocab, window, weighting, lead_in);
    for (const std::string& t : tokens) acc.add_token(t);
    return acc.finish();
}

}  // namespace weq
