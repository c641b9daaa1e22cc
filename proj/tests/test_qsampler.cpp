#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "oracles.hpp"
#include "weq/error.hpp"
#include "weq/qsampler.hpp"

using namespace weq;

namespace {

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

// Rank-1 matrix u vᵀ stored sparse.
SparseMatrix rank_one(std::size_t n, std::uint64_t seed) {
    SplitMix64 rng(seed);
    std::vector<double> u(n), v(n);
    for (double& x : u) x = rng.next_gaussian();
    for (double& x : v) x = rng.next_gaussian();
    std::vector<std::vector<double>> d(n, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) d[i][j] = u[i] * v[j];
    return from_dense(d);
}

Eigen::MatrixXd gram(const SparseMatrix& a) {
    const Eigen::MatrixXd d = oracles::to_eigen(a);
    return d.transpose() * d;
}

}  // namespace

TEST_CASE("prepare_state cumulative sums") {
    // row norms squared [1, 3]
    const SparseMatrix m = from_dense({{1, 0}, {std::sqrt(3.0), 0}});
    const SamplerState s = prepare_state(m, 9);
    REQUIRE(s.cumsum.size() == 2);
    CHECK(s.cumsum[0] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(s.cumsum[1] == doctest::Approx(4.0).epsilon(1e-14));
    CHECK(s.total == doctest::Approx(4.0).epsilon(1e-14));
    CHECK(s.rng_seed == 9);

    const SparseMatrix single = from_dense({{std::sqrt(7.0)}});
    const SamplerState s1 = prepare_state(single, 0);
    CHECK(s1.total == doctest::Approx(7.0).epsilon(1e-14));

    CHECK_THROWS_WITH_AS(prepare_state(SparseMatrix::from_triplets(3, 3, {}), 1),
                         "cannot sample from zero matrix", compute_error);
}

TEST_CASE("search picks the leftmost interval, half-open") {
    SamplerState s;
    s.cumsum = {1.0, 4.0};
    s.total = 4.0;
    CHECK(sample_index_for(s, 0.5) == 0);
    CHECK(sample_index_for(s, 1.0) == 1);  // boundary goes right
    CHECK(sample_index_for(s, 0.0) == 0);
    CHECK(sample_index_for(s, 3.9999) == 1);

    SamplerState one;
    one.cumsum = {7.0};
    one.total = 7.0;
    for (double x : {0.0, 3.5, 6.999}) CHECK(sample_index_for(one, x) == 0);
}

TEST_CASE("zero-norm rows are never sampled") {
    SamplerState s;
    s.cumsum = {1.0, 1.0, 4.0};  // middle row has zero norm
    s.total = 4.0;
    CHECK(sample_index_for(s, 1.0) == 2);
    CHECK(sample_index_for(s, 0.999999) == 0);
    SplitMix64 rng(5);
    for (int i = 0; i < 2000; ++i) CHECK(sample_row(s, rng) != 1);
}

TEST_CASE("rank-1 sampling reproduces the Gram matrix exactly") {
    const SparseMatrix m = rank_one(5, 123);
    const Eigen::MatrixXd want = gram(m);
    for (std::size_t k : {1u, 3u, 8u}) {
        const QContexts q = build_qcontexts(m, k, 777);
        const Eigen::MatrixXd got = gram(q.matrix);
        CHECK((got - want).norm() <= 1e-10 * want.norm());
    }
}

TEST_CASE("line-8 rescale: matching norms copy the row unchanged") {
    // Two rows with norm 2 each: ||M||_F = sqrt(8)... use 4 rows of norm 2 so
    // ||M||_F = 4, k = 4, scale = 4/(2*2) = 1.
    std::vector<std::vector<double>> d(4, std::vector<double>(4, 0.0));
    for (std::size_t i = 0; i < 4; ++i) d[i][i] = 2.0;
    const SparseMatrix m = from_dense(d);
    const QContexts q = build_qcontexts(m, 4, 3);
    for (std::size_t i = 0; i < q.k; ++i) {
        CHECK(q.matrix.row_values(i)[0] == doctest::Approx(2.0).epsilon(1e-14));
    }
}

TEST_CASE("k=1 on a single-row matrix returns the row itself") {
    const SparseMatrix m = from_dense({{1.5, -2.0, 0.25}});
    const QContexts q = build_qcontexts(m, 1, 1);
    CHECK(q.row_ids == std::vector<std::uint32_t>{0});
    CHECK(q.matrix.entries_equal(m));
}

TEST_CASE("every sampled row has norm ||M||_F/sqrt(k)") {
    const SparseMatrix m = oracles::random_sparse(30, 40, 0.3, 8);
    for (std::size_t k : {1u, 5u, 17u}) {
        const QContexts q = build_qcontexts(m, k, 99);
        const double want = m.frob() / std::sqrt(static_cast<double>(k));
        for (std::size_t i = 0; i < k; ++i) {
            const double got = std::sqrt(q.matrix.row_sq_norm(i));
            CHECK(std::abs(got - want) <= 1e-9 * want);
        }
        for (std::uint32_t id : q.row_ids) CHECK(m.row_sq_norm(id) > 0.0);
    }
}

TEST_CASE("identical seed gives bit-identical builds") {
    const SparseMatrix m = oracles::random_sparse(25, 25, 0.4, 10);
    const QContexts a = build_qcontexts(m, 12, 31337);
    const QContexts b = build_qcontexts(m, 12, 31337);
    CHECK(a.row_ids == b.row_ids);
    CHECK(a.matrix.entries_equal(b.matrix));
    const QContexts c = build_qcontexts(m, 12, 31338);
    CHECK(a.row_ids != c.row_ids);
}

TEST_CASE("row frequencies match the length-squared distribution") {
    const SparseMatrix m = oracles::random_sparse(16, 16, 0.5, 21);
    const SamplerState state = prepare_state(m, 0);
    SplitMix64 rng(606);
    const std::size_t draws = 100000;
    std::vector<double> observed(m.n_rows(), 0.0);
    for (std::size_t i = 0; i < draws; ++i) ++observed[sample_row(state, rng)];

    double chi = 0.0;
    double dof = -1.0;
    for (std::size_t r = 0; r < m.n_rows(); ++r) {
        const double expected = draws * m.row_sq_norm(r) / m.frob_sq();
        if (expected == 0.0) {
            CHECK(observed[r] == 0.0);
            continue;
        }
        chi += (observed[r] - expected) * (observed[r] - expected) / expected;
        dof += 1.0;
    }
    CHECK(oracles::chi_square_p_value(chi, dof) > 0.001);
}

TEST_CASE("uniform sampler frequencies are flat over nonzero rows") {
    std::vector<std::vector<double>> d(10, std::vector<double>(10, 0.0));
    for (std::size_t i = 0; i < 10; ++i) {
        if (i != 4) d[i][i] = 1.0 + static_cast<double>(i);  // row 4 stays zero
    }
    const SparseMatrix m = from_dense(d);
    const std::size_t draws = 90000;
    const QContexts q = build_qcontexts_uniform(m, draws, 515);
    std::vector<double> observed(10, 0.0);
    for (std::uint32_t id : q.row_ids) ++observed[id];
    CHECK(observed[4] == 0.0);
    double chi = 0.0;
    for (std::size_t r = 0; r < 10; ++r) {
        if (r == 4) continue;
        const double expected = draws / 9.0;
        chi += (observed[r] - expected) * (observed[r] - expected) / expected;
    }
    CHECK(oracles::chi_square_p_value(chi, 8.0) > 0.001);
}

TEST_CASE("both samplers are unbiased Gram estimators") {
    const SparseMatrix m = oracles::random_sparse(8, 8, 0.7, 33);
    const Eigen::MatrixXd want = gram(m);
    const std::size_t trials = 10000;
    const std::size_t k = 4;

    for (const bool uniform : {false, true}) {
        Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(8, 8);
        Eigen::MatrixXd m2 = Eigen::MatrixXd::Zero(8, 8);
        for (std::size_t t = 0; t < trials; ++t) {
            const QContexts q = uniform ? build_qcontexts_uniform(m, k, 1000 + t)
                                        : build_qcontexts(m, k, 1000 + t);
            const Eigen::MatrixXd g = gram(q.matrix);
            mean += g;
            m2 += g.cwiseProduct(g);
        }
        mean /= static_cast<double>(trials);
        m2 /= static_cast<double>(trials);
        for (Eigen::Index i = 0; i < 8; ++i) {
            for (Eigen::Index j = 0; j < 8; ++j) {
                const double var = std::max(m2(i, j) - mean(i, j) * mean(i, j), 0.0);
                const double stderr_ij = std::sqrt(var / static_cast<double>(trials));
                CHECK(std::abs(mean(i, j) - want(i, j)) <= 4.0 * stderr_ij + 1e-9);
            }
        }
    }
}

TEST_CASE("length-squared sampling beats uniform on skewed rows") {
    std::vector<std::vector<double>> d(8, std::vector<double>(8, 0.0));
    for (std::size_t i = 0; i < 8; ++i) d[i][i] = i == 0 ? 10.0 : 0.1;
    const SparseMatrix m = from_dense(d);
    const Eigen::MatrixXd want = gram(m);
    double l2_mse = 0.0, uni_mse = 0.0;
    const std::size_t trials = 1000;
    for (std::size_t t = 0; t < trials; ++t) {
        l2_mse += (gram(build_qcontexts(m, 4, 7000 + t).matrix) - want).squaredNorm();
        uni_mse += (gram(build_qcontexts_uniform(m, 4, 7000 + t).matrix) - want).squaredNorm();
    }
    CHECK(l2_mse < uni_mse);
}

TEST_CASE("error decays with k on a rank-20 fixture") {
    const SparseMatrix m = oracles::random_low_rank(64, 8, 5150);
    const Eigen::MatrixXd want = gram(m);
    std::vector<double> medians;
    for (const std::size_t k : {8u, 32u, 128u, 512u}) {
        std::vector<double> errs;
        for (std::size_t t = 0; t < 20; ++t) {
            errs.push_back((gram(build_qcontexts(m, k, 42 + t).matrix) - want).norm());
        }
        std::sort(errs.begin(), errs.end());
        medians.push_back(0.5 * (errs[9] + errs[10]));
    }
    CHECK(medians[1] >= medians[2]);
    CHECK(medians[2] >= medians[3]);
    CHECK(medians[3] < 0.5 * medians[1]);
}

TEST_CASE("n=1 uniform and l2 sampling coincide") {
    const SparseMatrix m = from_dense({{2.0, 1.0}});
    const QContexts a = build_qcontexts(m, 4, 5);
    const QContexts b = build_qcontexts_uniform(m, 4, 5);
    CHECK(a.row_ids == b.row_ids);
    for (std::size_t i = 0; i < a.k; ++i) {
        auto av = a.matrix.row_values(i);
        auto bv = b.matrix.row_values(i);
        for (std::size_t j = 0; j < av.size(); ++j) {
            CHECK(av[j] == doctest::Approx(bv[j]).epsilon(1e-15));
        }
    }
}

TEST_CASE("column sampling: rank-1 and single-column exactness") {
    const SparseMatrix m = rank_one(6, 9);
    const QContexts r = build_qcontexts(m, 5, 11);
    const QContexts c = column_sample(r, 4, 13);
    CHECK(c.axis == QContexts::Axis::cols);
    CHECK(c.matrix.n_rows() == 5);
    CHECK(c.matrix.n_cols() == 4);
    const Eigen::MatrixXd rd = oracles::to_eigen(r.matrix);
    const Eigen::MatrixXd cd = oracles::to_eigen(c.matrix);
    const Eigen::MatrixXd rrt = rd * rd.transpose();
    const Eigen::MatrixXd cct = cd * cd.transpose();
    CHECK((rrt - cct).norm() <= 1e-9 * rrt.norm());

    // Frobenius mass is preserved by the row-norm invariant.
    CHECK(std::sqrt(c.matrix.frob_sq()) ==
          doctest::Approx(std::sqrt(r.matrix.frob_sq())).epsilon(1e-9));

    // Single-column case: C̃ = R̃.
    const SparseMatrix one_col = from_dense({{1.0}, {2.0}});
    QContexts rq;
    rq.matrix = one_col;
    rq.row_ids = {0, 1};
    rq.probs = {0.2, 0.8};
    rq.k = 2;
    rq.source_frob_sq = one_col.frob_sq();
    const QContexts cq = column_sample(rq, 1, 3);
    CHECK(cq.matrix.entries_equal(one_col));
}

TEST_CASE("qcontexts container round-trips") {
    const SparseMatrix m = oracles::random_sparse(14, 22, 0.3, 77);
    const QContexts q = build_qcontexts(m, 9, 123);
    const std::string path =
        (std::filesystem::temp_directory_path() / "weq_qctx_test.weqq").string();
    save_qcontexts(path, q);
    const QContexts back = load_qcontexts(path);
    CHECK(back.k == q.k);
    CHECK(back.axis == q.axis);
    CHECK(back.row_ids == q.row_ids);
    CHECK(back.probs == q.probs);
    CHECK(back.matrix.entries_equal(q.matrix));
    std::filesystem::remove(path);
}
