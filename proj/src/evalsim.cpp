#include "weq/evalsim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_set>

#include "weq/error.hpp"
#include "weq/kernels.hpp"
#include "weq/stats.hpp"

namespace weq {

namespace {

std::string lowercased(std::string s) {
    for (char& c : s) {
        if (c >= 'A' && c <= 'Z') c = char(c - 'A' + 'a');
    }
    return s;
}

std::string stem_of(const std::string& path) {
    const std::size_t slash = path.find_last_of("/\\");
    const std::size_t start = slash == std::string::npos ? 0 : slash + 1;
    const std::size_t dot = path.find_last_of('.');
    const std::size_t end = dot == std::string::npos || dot <= start ? path.size() : dot;
    return path.substr(start, end - start);
}

}  // namespace

SimilarityDataset load_similarity_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw validation_error("cannot open similarity dataset '" + path + "'");
    SimilarityDataset ds;
    ds.name = stem_of(path);
    std::unordered_set<std::string> seen;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const std::size_t t1 = line.find('\t');
        const std::size_t t2 = t1 == std::string::npos ? std::string::npos : line.find('\t', t1 + 1);
        if (t1 == std::string::npos || t2 == std::string::npos || t1 == 0 || t2 == t1 + 1)
            throw validation_error("malformed pair on line " + std::to_string(lineno) + " of '" +
                                   path + "'");
        SimilarityDataset::Pair p;
        p.a = lowercased(line.substr(0, t1));
        p.b = lowercased(line.substr(t1 + 1, t2 - t1 - 1));
        try {
            p.score = std::stod(line.substr(t2 + 1));
        } catch (const std::exception&) {
            throw validation_error("bad score on line " + std::to_string(lineno) + " of '" + path +
                                   "'");
        }
        if (!std::isfinite(p.score))
            throw validation_error("non-finite score on line " + std::to_string(lineno));
        std::string key = p.a <= p.b ? p.a + "\t" + p.b : p.b + "\t" + p.a;
        if (!seen.insert(std::move(key)).second)
            throw validation_error("duplicate pair on line " + std::to_string(lineno) + " of '" +
                                   path + "'");
        ds.pairs.push_back(std::move(p));
    }
    return ds;
}

double cosine(std::span<const double> u, std::span<const double> v, bool* zero_flag) {
    if (u.size() != v.size()) throw validation_error("cosine: dimension mismatch");
    if (zero_flag != nullptr) *zero_flag = false;
    const double nu = kernels::sumsq(u.data(), u.size());
    const double nv = kernels::sumsq(v.data(), v.size());
    if (nu == 0.0 || nv == 0.0) {
        if (zero_flag != nullptr) *zero_flag = true;
        return 0.0;
    }
    const double c = kernels::dot(u.data(), v.data(), u.size()) / (std::sqrt(nu) * std::sqrt(nv));
    return std::clamp(c, -1.0, 1.0);
}

double spearman(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) throw validation_error("spearman: length mismatch");
    if (xs.size() < 2) throw validation_error("spearman: need at least two points");
    const std::vector<double> rx = average_ranks(xs);
    const std::vector<double> ry = average_ranks(ys);
    return pearson(rx, ry);
}

EvalResult evaluate(const EmbeddingMatrix& embeddings, const SimilarityDataset& dataset) {
    std::vector<double> human;
    std::vector<double> predicted;
    EvalResult res;
    const std::size_t d = embeddings.dim();
    for (const SimilarityDataset::Pair& p : dataset.pairs) {
        const auto ia = embeddings.index.find(p.a);
        const auto ib = embeddings.index.find(p.b);
        if (ia == embeddings.index.end() || ib == embeddings.index.end()) {
            ++res.skipped;
            continue;
        }
        human.push_back(p.score);
        predicted.push_back(cosine({embeddings.vectors.row(ia->second), d},
                                   {embeddings.vectors.row(ib->second), d}));
    }
    res.covered = human.size();
    if (res.covered < 2) throw compute_error("insufficient coverage: fewer than two pairs in-vocabulary");
    res.score = spearman(human, predicted);
    return res;
}

}  // namespace weq
