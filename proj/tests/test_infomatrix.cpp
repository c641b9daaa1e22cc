#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "weq/corpus.hpp"
#include "weq/error.hpp"
#include "weq/infomatrix.hpp"

using namespace weq;

namespace {

double entry(const SparseMatrix& m, std::uint32_t r, std::uint32_t c) {
    auto cols = m.row_cols(r);
    auto vals = m.row_values(r);
    for (std::size_t j = 0; j < cols.size(); ++j) {
        if (cols[j] == c) return vals[j];
    }
    return 0.0;
}

SparseMatrix from_dense(const std::vector<std::vector<double>>& d) {
    std::vector<Triplet> trips;
    for (std::size_t i = 0; i < d.size(); ++i) {
        for (std::size_t j = 0; j < d[i].size(); ++j) {
            if (d[i][j] != 0.0)
                trips.push_back(
                    {static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j), d[i][j]});
        }
    }
    return SparseMatrix::from_triplets(d.size(), d.empty() ? 0 : d[0].size(), std::move(trips));
}

// Random in-vocabulary id stream counted flat, as a toy-corpus fixture.
SparseMatrix toy_counts(std::size_t n, std::size_t len, int window, std::uint64_t seed) {
    SplitMix64 rng(seed);
    std::vector<std::uint32_t> ids(len);
    for (auto& id : ids) id = static_cast<std::uint32_t>(rng.next_below(n));
    return from_dense(oracles::brute_cooccurrence(ids, n, window, false));
}

}  // namespace

TEST_CASE("marginals sum rows and the total") {
    const SparseMatrix x1 = from_dense({{0, 1}, {1, 0}});
    const Marginals m1 = marginals(x1);
    CHECK(m1.row_sums == std::vector<double>{1.0, 1.0});
    CHECK(m1.total == 2.0);

    const SparseMatrix x2 = from_dense({{0, 1, 0}, {1, 0, 1}, {0, 1, 0}});
    const Marginals m2 = marginals(x2);
    CHECK(m2.row_sums == std::vector<double>{1.0, 2.0, 1.0});
    CHECK(m2.total == 4.0);

    const SparseMatrix x3 = from_dense({{0, 3}, {3, 0}});
    CHECK(marginals(x3).total == 6.0);

    CHECK_THROWS_WITH_AS(marginals(from_dense({{0.0, 0.0}, {0.0, 0.0}})),
                         "empty co-occurrence matrix", compute_error);
}

TEST_CASE("ppmi evaluates the formula and clamps") {
    // #(c,w)=4, #(c)=8, #(w)=4, |P|=16 comes from this 3x3 layout.
    const SparseMatrix x = from_dense({{0, 4, 4}, {4, 0, 0}, {4, 0, 0}});
    const Marginals m = marginals(x);
    CHECK(m.row_sums[0] == 8.0);
    CHECK(m.row_sums[1] == 4.0);
    CHECK(m.total == 16.0);

    const SparseMatrix ppmi = build_info_matrix(x, {InfoKind::ppmi, 1.0});
    CHECK(entry(ppmi, 0, 1) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(entry(ppmi, 0, 1) == doctest::Approx(0.693147).epsilon(1e-6));
    // zero-count position stays absent
    CHECK(entry(ppmi, 1, 2) == 0.0);
}

TEST_CASE("exact independence clamps to an absent entry") {
    // All marginals equal: #(c,w)|P| == #(c)#(w) everywhere.
    const SparseMatrix x = from_dense({{1, 1}, {1, 1}});
    const SparseMatrix ppmi = build_info_matrix(x, {InfoKind::ppmi, 1.0});
    CHECK(ppmi.nnz() == 0);
    // The unclamped pmi drops exact zeros too.
    const SparseMatrix pmi = build_info_matrix(x, {InfoKind::pmi, 1.0});
    CHECK(pmi.nnz() == 0);
}

TEST_CASE("ppmi equals sppmi at kappa 1, exactly") {
    const SparseMatrix x = toy_counts(10, 3000, 5, 42);
    const SparseMatrix a = build_info_matrix(x, {InfoKind::ppmi, 1.0});
    const SparseMatrix b = build_info_matrix(x, {InfoKind::sppmi, 1.0});
    CHECK(a.entries_equal(b));
}

TEST_CASE("larger shifts shrink entries and nnz") {
    const SparseMatrix x = toy_counts(12, 5000, 6, 43);
    const SparseMatrix k1 = build_info_matrix(x, {InfoKind::sppmi, 1.0});
    const SparseMatrix k2 = build_info_matrix(x, {InfoKind::sppmi, 2.0});
    const SparseMatrix k5 = build_info_matrix(x, {InfoKind::sppmi, 5.0});
    CHECK(k2.nnz() <= k1.nnz());
    CHECK(k5.nnz() <= k2.nnz());
    for (std::size_t r = 0; r < k2.n_rows(); ++r) {
        auto cols = k2.row_cols(r);
        auto vals = k2.row_values(r);
        for (std::size_t j = 0; j < cols.size(); ++j) {
            CHECK(vals[j] <= entry(k1, static_cast<std::uint32_t>(r), cols[j]));
        }
    }
}

TEST_CASE("information matrix of symmetric counts is symmetric") {
    const SparseMatrix x = toy_counts(14, 4000, 8, 44);
    const SparseMatrix m = build_info_matrix(x, {InfoKind::ppmi, 1.0});
    double worst = 0.0;
    for (std::size_t r = 0; r < m.n_rows(); ++r) {
        auto cols = m.row_cols(r);
        auto vals = m.row_values(r);
        for (std::size_t j = 0; j < cols.size(); ++j) {
            worst = std::max(worst,
                             std::abs(vals[j] - entry(m, cols[j], static_cast<std::uint32_t>(r))));
        }
    }
    CHECK(worst <= 1e-12);
}

TEST_CASE("matches the dense brute-force formulas on toy corpora") {
    for (std::uint64_t seed : {7ull, 8ull, 9ull}) {
        SplitMix64 rng(seed);
        const std::size_t n = 11;
        std::vector<std::uint32_t> ids(10000);
        for (auto& id : ids) id = static_cast<std::uint32_t>(rng.next_below(n));
        const auto counts = oracles::brute_cooccurrence(ids, n, 10, false);
        const SparseMatrix x = from_dense(counts);

        const struct {
            InfoKind kind;
            int oracle_kind;
            double shift;
        } cases[] = {{InfoKind::pmi, 0, 1.0},
                     {InfoKind::ppmi, 1, 1.0},
                     {InfoKind::spmi, 2, 5.0},
                     {InfoKind::sppmi, 3, 5.0}};
        for (const auto& c : cases) {
            const SparseMatrix got = build_info_matrix(x, {c.kind, c.shift});
            const auto want = oracles::brute_info_matrix(counts, c.oracle_kind, c.shift);
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = 0; j < n; ++j) {
                    CHECK(entry(got, i, j) == doctest::Approx(want[i][j]).epsilon(1e-12));
                }
            }
        }
    }
}

TEST_CASE("shift below one is rejected for shifted kinds") {
    const SparseMatrix x = from_dense({{0, 1}, {1, 0}});
    CHECK_THROWS_AS(build_info_matrix(x, {InfoKind::sppmi, 0.5}), validation_error);
    CHECK_NOTHROW(build_info_matrix(x, {InfoKind::ppmi, 0.5}));  // shift unused
}
