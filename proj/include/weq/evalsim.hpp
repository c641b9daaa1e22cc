#pragma once

#include <span>
#include <string>
#include <vector>

#include "weq/factorize.hpp"

namespace weq {

struct SimilarityDataset {
    struct Pair {
        std::string a;
        std::string b;
        double score;
    };
    std::vector<Pair> pairs;
    std::string name;
};

// One pair per line: word_a<TAB>word_b<TAB>score. Words are lowercased to
// match the tokenizer; duplicate unordered pairs are rejected.
SimilarityDataset load_similarity_dataset(const std::string& path);

// u·v/(||u||·||v||); zero vectors yield 0 and set *zero_flag when provided.
double cosine(std::span<const double> u, std::span<const double> v, bool* zero_flag = nullptr);

// Pearson correlation of average ranks (ties get the mean rank). Constant
// input is an error.
double spearman(std::span<const double> xs, std::span<const double> ys);

struct EvalResult {
    double score = 0.0;
    std::size_t covered = 0;
    std::size_t skipped = 0;
};

// Pairs with out-of-vocabulary words are skipped and counted; fewer than two
// covered pairs is an error.
EvalResult evaluate(const EmbeddingMatrix& embeddings, const SimilarityDataset& dataset);

}  // namespace weq
