#pragma once

#include <cstdint>
#include <functional>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "weq/sparse.hpp"

namespace weq {

struct TokenizeStats {
    std::uint64_t tokens = 0;
    std::uint64_t bytes = 0;
    std::uint64_t invalid_utf8 = 0;  // malformed byte sequences dropped
};

// Tokens are maximal runs of ASCII letters, lowercased; every other byte is a
// separator. Malformed UTF-8 sequences are counted and dropped (they contain
// no ASCII letters, so they never produce token bytes).
void tokenize_stream(std::istream& in, const std::function<void(std::string_view)>& sink,
                     TokenizeStats* stats = nullptr);
std::vector<std::string> tokenize(std::istream& in, TokenizeStats* stats = nullptr);

struct StringHash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const { return std::hash<std::string_view>{}(s); }
};

// Word ids are dense, ordered by descending corpus frequency with lexicographic
// tie-breaks; every count is >= the min_count used at build time.
struct Vocabulary {
    std::vector<std::string> words;
    std::vector<std::uint64_t> counts;
    std::unordered_map<std::string, std::uint32_t, StringHash, std::equal_to<>> index;

    std::size_t size() const { return words.size(); }
    std::optional<std::uint32_t> id_of(std::string_view w) const {
        auto it = index.find(w);
        if (it == index.end()) return std::nullopt;
        return it->second;
    }
};

Vocabulary build_vocab(std::span<const std::string> tokens, std::uint64_t min_count);
Vocabulary build_vocab_from_counts(
    std::unordered_map<std::string, std::uint64_t, StringHash, std::equal_to<>> counts,
    std::uint64_t min_count);

void save_vocab(const std::string& path, const Vocabulary& vocab);
Vocabulary load_vocab(const std::string& path);

enum class Weighting { flat, harmonic };

const char* weighting_name(Weighting w);
Weighting weighting_from_name(std::string_view name);

struct CooccurrenceCounts {
    SparseMatrix matrix;  // n×n, symmetric, strictly positive stored entries
    int window = 10;
    Weighting weighting = Weighting::harmonic;
};

// Open-addressing (row,col) -> weight accumulator sized for tens of millions
// of pairs.
class PairAccumulator {
  public:
    explicit PairAccumulator(std::size_t capacity_hint = 1 << 16);
    void add(std::uint32_t row, std::uint32_t col, double w);
    std::size_t size() const { return count_; }
    SparseMatrix to_matrix(std::size_t n) const;

  private:
    static constexpr std::uint64_t kEmpty = ~0ull;
    std::vector<std::uint64_t> keys_;
    std::vector<double> vals_;
    std::size_t mask_ = 0;
    std::size_t count_ = 0;
    std::size_t grow_at_ = 0;
    void grow();
};

// Streaming windowed pair counter. Out-of-vocabulary tokens are removed
// before windowing; positions and distances are measured over the filtered
// sequence. Each in-window ordered pair at distance d adds weight 1 (flat) or
// 1/d (harmonic) to both (c,w) and (w,c).
class CooccurrenceAccumulator {
  public:
    CooccurrenceAccumulator(const Vocabulary& vocab, int window, Weighting weighting,
                            std::size_t lead_in = 0);
    void add_token(std::string_view token);
    void add_id(std::uint32_t id);
    CooccurrenceCounts finish();

  private:
    const Vocabulary& vocab_;
    int window_;
    Weighting weighting_;
    std::size_t lead_in_;
    std::uint64_t pos_ = 0;
    std::vector<std::uint32_t> ring_;
    PairAccumulator pairs_;
};

// `lead_in` filtered positions at the start contribute left context only; used
// for sharded counting (shards overlap by `window` tokens and merge by
// entrywise addition).
CooccurrenceCounts count_cooccurrences(std::span<const std::string> tokens,
                                       const Vocabulary& vocab, int window, Weighting weighting,
                                       std::size_t lead_in = 0);

}  // namespace weq
