#include <Eigen/Eigenvalues>
#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "weq/dense.hpp"
#include "weq/error.hpp"

using namespace weq;

namespace {

DenseMatrix random_symmetric(std::size_t n, std::uint64_t seed) {
    const DenseMatrix g = DenseMatrix::gaussian(n, n, seed);
    DenseMatrix s(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) s.at(i, j) = 0.5 * (g.at(i, j) + g.at(j, i));
    return s;
}

}  // namespace

TEST_CASE("symmetric eigensolver matches Eigen on random matrices") {
    for (std::size_t n : {1u, 2u, 3u, 5u, 17u, 64u, 130u}) {
        const DenseMatrix s = random_symmetric(n, 1000 + n);
        const SymEig got = symmetric_eigen(s);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> want(oracles::to_eigen(s));
        REQUIRE(got.values.size() == n);
        for (std::size_t j = 0; j < n; ++j) {
            const double expect = want.eigenvalues()(static_cast<Eigen::Index>(n - 1 - j));
            CHECK(got.values[j] == doctest::Approx(expect).epsilon(1e-10));
        }
        // Eigenvector residuals: ||S v − λ v|| small.
        const Eigen::MatrixXd sd = oracles::to_eigen(s);
        const Eigen::MatrixXd vd = oracles::to_eigen(got.vectors);
        for (std::size_t j = 0; j < n; ++j) {
            const Eigen::VectorXd v = vd.col(static_cast<Eigen::Index>(j));
            CHECK((sd * v - got.values[j] * v).norm() <= 1e-9 * (std::abs(got.values[j]) + 1.0));
            CHECK(v.norm() == doctest::Approx(1.0).epsilon(1e-10));
        }
    }
}

TEST_CASE("eigensolver handles degenerate and diagonal input") {
    DenseMatrix d(4, 4);
    d.at(0, 0) = 3.0;
    d.at(1, 1) = 3.0;  // repeated eigenvalue
    d.at(2, 2) = -1.0;
    const SymEig got = symmetric_eigen(d);
    CHECK(got.values[0] == doctest::Approx(3.0));
    CHECK(got.values[1] == doctest::Approx(3.0));
    CHECK(got.values[2] == doctest::Approx(0.0));
    CHECK(got.values[3] == doctest::Approx(-1.0));

    const SymEig zero = symmetric_eigen(DenseMatrix(3, 3));
    for (double v : zero.values) CHECK(v == 0.0);
}

TEST_CASE("orthonormalize_columns produces an orthonormal basis") {
    SplitMix64 rng(9);
    for (std::size_t rows : {8u, 40u}) {
        for (std::size_t cols : {1u, 3u, 8u}) {
            DenseMatrix q = DenseMatrix::gaussian(rows, cols, rows * 31 + cols);
            orthonormalize_columns(q, rng);
            const Eigen::MatrixXd qd = oracles::to_eigen(q);
            const Eigen::MatrixXd gram = qd.transpose() * qd;
            CHECK((gram - Eigen::MatrixXd::Identity(cols, cols)).cwiseAbs().maxCoeff() <= 1e-12);
        }
    }
}

TEST_CASE("orthonormalize_columns survives rank-deficient blocks") {
    SplitMix64 rng(10);
    DenseMatrix q(12, 4);
    // Columns 0 and 1 identical; column 3 zero.
    for (std::size_t i = 0; i < 12; ++i) {
        const double v = std::sin(0.7 * static_cast<double>(i + 1));
        q.at(i, 0) = v;
        q.at(i, 1) = v;
        q.at(i, 2) = static_cast<double>(i);
    }
    orthonormalize_columns(q, rng);
    const Eigen::MatrixXd qd = oracles::to_eigen(q);
    const Eigen::MatrixXd gram = qd.transpose() * qd;
    CHECK((gram - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("matmul matches Eigen") {
    const DenseMatrix a = DenseMatrix::gaussian(7, 5, 3);
    const DenseMatrix b = DenseMatrix::gaussian(5, 9, 4);
    const DenseMatrix c = matmul(a, b);
    const Eigen::MatrixXd want = oracles::to_eigen(a) * oracles::to_eigen(b);
    CHECK((oracles::to_eigen(c) - want).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK_THROWS_AS(matmul(a, DenseMatrix::gaussian(4, 2, 5)), validation_error);
}

TEST_CASE("gram_of_columns matches Eigen") {
    const DenseMatrix a = DenseMatrix::gaussian(11, 6, 8);
    const DenseMatrix g = gram_of_columns(a);
    const Eigen::MatrixXd ad = oracles::to_eigen(a);
    CHECK((oracles::to_eigen(g) - Eigen::MatrixXd(ad.transpose() * ad)).cwiseAbs().maxCoeff() <=
          1e-12);
}
