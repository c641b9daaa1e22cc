#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "oracles.hpp"
#include "weq/error.hpp"
#include "weq/factorize.hpp"
#include "weq/verify.hpp"

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

SparseMatrix diag(std::initializer_list<double> values) {
    std::vector<std::vector<double>> d(values.size(), std::vector<double>(values.size(), 0.0));
    std::size_t i = 0;
    for (double v : values) {
        d[i][i] = v;
        ++i;
    }
    return from_dense(d);
}

}  // namespace

TEST_CASE("oracle sanity: dense svd of a diagonal matrix") {
    const oracles::DenseSvd svd = oracles::dense_svd(diag({3.0, 2.0, 1.0}));
    CHECK(svd.sigma(0) == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(svd.sigma(1) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(svd.sigma(2) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("diagonal matrix: top-2 singular structure") {
    const SvdResult svd = truncated_svd(diag({3.0, 2.0, 1.0}), 2);
    REQUIRE(svd.sigma.size() == 2);
    CHECK(svd.sigma[0] == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(svd.sigma[1] == doctest::Approx(2.0).epsilon(1e-12));
    // Sign canonicalization makes these exactly the identity columns.
    CHECK(svd.u.at(0, 0) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(svd.u.at(1, 1) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(std::abs(svd.u.at(1, 0)) < 1e-10);
    CHECK(svd.residual <= 1e-6);
}

TEST_CASE("scalar matrix") {
    const SvdResult svd = truncated_svd(from_dense({{3.0}}), 1);
    REQUIRE(svd.sigma.size() == 1);
    CHECK(svd.sigma[0] == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(std::abs(svd.u.at(0, 0)) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("singular values match the dense oracle on random matrices") {
    const SparseMatrix a = oracles::random_sparse(40, 60, 0.5, 5);
    const SvdResult got = truncated_svd(a, 10);
    const oracles::DenseSvd want = oracles::dense_svd(a);
    REQUIRE(got.sigma.size() == 10);
    for (std::size_t j = 0; j < 10; ++j) {
        CHECK(std::abs(got.sigma[j] - want.sigma(j)) <= 1e-8 * want.sigma(j));
    }
    // U columns orthonormal.
    const Eigen::MatrixXd u = oracles::to_eigen(got.u);
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(10, 10);
    CHECK((u.transpose() * u - eye).cwiseAbs().maxCoeff() <= 1e-8);
    CHECK(got.residual <= 1e-6);
}

TEST_CASE("rank deficiency shrinks d with the warning flag") {
    const SvdResult svd = truncated_svd(diag({4.0, 2.0, 0.0}), 3);
    CHECK(svd.rank_truncated);
    CHECK(svd.sigma.size() == 2);
}

TEST_CASE("svd input validation") {
    const SparseMatrix a = diag({1.0, 2.0});
    CHECK_THROWS_AS(truncated_svd(a, 0), validation_error);
    CHECK_THROWS_AS(truncated_svd(a, 3), validation_error);
    SvdOptions bad;
    bad.tol = 0.0;
    CHECK_THROWS_AS(truncated_svd(a, 1, bad), validation_error);
    SvdOptions tight;
    tight.tol = 1e-30;  // unreachable: forces the non-convergence error
    tight.max_iter = 3;
    CHECK_THROWS_AS(truncated_svd(oracles::random_sparse(20, 20, 0.5, 1), 4, tight),
                    compute_error);
}

TEST_CASE("embedding of a 1x1 matrix is sqrt(sigma)") {
    const SparseMatrix a = from_dense({{3.0}});
    const SvdResult svd = truncated_svd(a, 1);
    const DenseMatrix e = embedding_from_rows(a, svd);
    CHECK(e.at(0, 0) == doctest::Approx(std::sqrt(3.0)).epsilon(1e-12));
}

TEST_CASE("embedding of diag(3,2) is diag(sqrt(3),sqrt(2)) up to sign") {
    const SparseMatrix a = diag({3.0, 2.0});
    const SvdResult svd = truncated_svd(a, 2);
    const DenseMatrix e = embedding_from_rows(a, svd);
    CHECK(std::abs(e.at(0, 0)) == doctest::Approx(std::sqrt(3.0)).epsilon(1e-10));
    CHECK(std::abs(e.at(1, 1)) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-10));
    CHECK(std::abs(e.at(0, 1)) < 1e-10);
    CHECK(std::abs(e.at(1, 0)) < 1e-10);
}

TEST_CASE("embedding equals V sqrt(sigma) against the dense oracle") {
    const SparseMatrix a = oracles::random_sparse(30, 50, 0.6, 71);
    const SvdResult svd = truncated_svd(a, 8);
    const DenseMatrix e = embedding_from_rows(a, svd);
    const oracles::DenseSvd want = oracles::dense_svd(a);
    Eigen::MatrixXd want_e(50, 8);
    for (Eigen::Index j = 0; j < 8; ++j) {
        want_e.col(j) = want.v.col(j) * std::sqrt(want.sigma(j));
    }
    CHECK(oracles::max_abs_diff_sign_aligned(oracles::to_eigen(e), want_e) <= 1e-8);
}

TEST_CASE("context coefficients satisfy R-transpose-Lambda = E") {
    const SparseMatrix m = oracles::random_sparse(20, 26, 0.5, 12);
    const QContexts q = build_qcontexts(m, 9, 2);
    const SvdResult svd = truncated_svd(q.matrix, 5);
    const DenseMatrix lambda = context_coefficients(q, svd);
    const DenseMatrix e = embedding_from_rows(q.matrix, svd);

    // R = unrescaled sampled rows.
    std::vector<Triplet> trips;
    for (std::size_t i = 0; i < q.k; ++i) {
        auto cols = m.row_cols(q.row_ids[i]);
        auto vals = m.row_values(q.row_ids[i]);
        for (std::size_t j = 0; j < cols.size(); ++j)
            trips.push_back({static_cast<std::uint32_t>(i), cols[j], vals[j]});
    }
    const SparseMatrix r = SparseMatrix::from_triplets(q.k, m.n_cols(), std::move(trips));
    const Eigen::MatrixXd got = oracles::to_eigen(r).transpose() * oracles::to_eigen(lambda);
    CHECK((got - oracles::to_eigen(e)).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("k=1 context coefficient is the scalar D^{-1} sigma^{-1/2}") {
    const SparseMatrix m = from_dense({{2.0, 1.0}});
    const QContexts q = build_qcontexts(m, 1, 4);
    const SvdResult svd = truncated_svd(q.matrix, 1);
    const DenseMatrix lambda = context_coefficients(q, svd);
    const double dinv = 1.0 / std::sqrt(1.0 * q.probs[0]);
    const double want = dinv * svd.u.at(0, 0) / std::sqrt(svd.sigma[0]);
    CHECK(lambda.at(0, 0) == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("scaling the matrix by alpha scales E by sqrt(alpha) and Lambda by 1/sqrt(alpha)") {
    const SparseMatrix m = oracles::random_sparse(16, 18, 0.5, 3);
    std::vector<Triplet> scaled_trips;
    for (std::size_t r = 0; r < m.n_rows(); ++r) {
        auto cols = m.row_cols(r);
        auto vals = m.row_values(r);
        for (std::size_t j = 0; j < cols.size(); ++j)
            scaled_trips.push_back({static_cast<std::uint32_t>(r), cols[j], 4.0 * vals[j]});
    }
    const SparseMatrix m4 = SparseMatrix::from_triplets(16, 18, std::move(scaled_trips));

    const QContexts q1 = build_qcontexts(m, 7, 5);
    const QContexts q4 = build_qcontexts(m4, 7, 5);
    CHECK(q1.row_ids == q4.row_ids);  // alpha² scales the cumulative sums exactly

    const SvdResult s1 = truncated_svd(q1.matrix, 4);
    const SvdResult s4 = truncated_svd(q4.matrix, 4);
    const DenseMatrix e1 = embedding_from_rows(q1.matrix, s1);
    const DenseMatrix e4 = embedding_from_rows(q4.matrix, s4);
    CHECK(oracles::max_abs_diff_sign_aligned(oracles::to_eigen(e4),
                                             2.0 * oracles::to_eigen(e1)) <= 1e-8);

    const DenseMatrix l1 = context_coefficients(q1, s1);
    const DenseMatrix l4 = context_coefficients(q4, s4);
    CHECK(oracles::max_abs_diff_sign_aligned(oracles::to_eigen(l4),
                                             0.5 * oracles::to_eigen(l1)) <= 1e-8);
}

TEST_CASE("full-MF baseline on diag(4,1) with d=1") {
    const DenseMatrix e = mf_embedding_vectors(diag({4.0, 1.0}), 1);
    CHECK(std::abs(e.at(0, 0)) == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(std::abs(e.at(1, 0)) < 1e-10);
}

TEST_CASE("symmetric PSD: singular values equal the eigen-oracle's eigenvalues") {
    // B Bᵀ is PSD; its eigenvalues are squared singular values of B.
    const SparseMatrix b = oracles::random_sparse(10, 10, 0.8, 31);
    const Eigen::MatrixXd bd = oracles::to_eigen(b);
    const Eigen::MatrixXd psd = bd * bd.transpose();
    std::vector<Triplet> trips;
    for (Eigen::Index i = 0; i < 10; ++i)
        for (Eigen::Index j = 0; j < 10; ++j)
            trips.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j),
                             psd(i, j)});
    const SparseMatrix m = SparseMatrix::from_triplets(10, 10, std::move(trips));

    const SvdResult got = truncated_svd(m, 6);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(psd);
    for (std::size_t j = 0; j < 6; ++j) {
        const double want = eig.eigenvalues()(9 - static_cast<Eigen::Index>(j));
        CHECK(got.sigma[j] == doctest::Approx(want).epsilon(1e-8));
    }
}

TEST_CASE("d = rank reconstructs the matrix") {
    const SparseMatrix m = oracles::random_low_rank(24, 6, 88);
    const SvdResult svd = truncated_svd(m, 6);
    // V = MᵀU Σ^{-1}; reconstruction U Σ Vᵀ should recover M.
    const Eigen::MatrixXd md = oracles::to_eigen(m);
    const Eigen::MatrixXd u = oracles::to_eigen(svd.u);
    Eigen::MatrixXd v = md.transpose() * u;
    for (Eigen::Index j = 0; j < 6; ++j) v.col(j) /= svd.sigma[j];
    Eigen::MatrixXd recon = Eigen::MatrixXd::Zero(24, 24);
    for (Eigen::Index j = 0; j < 6; ++j)
        recon += svd.sigma[j] * u.col(j) * v.col(j).transpose();
    CHECK((md - recon).norm() <= 1e-8 * md.norm());
}

TEST_CASE("gram-route equivalence within the measured perturbation") {
    const SparseMatrix m = oracles::random_sparse(40, 48, 0.4, 17);
    const QContexts r = build_qcontexts(m, 24, 5);
    const QContexts c = column_sample(r, 20, 6);

    const SvdResult sr = truncated_svd(r.matrix, 6);
    const SvdResult sc = truncated_svd(c.matrix, 6);

    // Weyl: |σ_j²(C̃) − σ_j²(R̃)| <= ||C̃C̃ᵀ − R̃R̃ᵀ||_op.
    const Eigen::MatrixXd rd = oracles::to_eigen(r.matrix);
    const Eigen::MatrixXd cd = oracles::to_eigen(c.matrix);
    const double perturbation =
        oracles::dense_svd(Eigen::MatrixXd(rd * rd.transpose() - cd * cd.transpose())).sigma(0);
    for (std::size_t j = 0; j < 6; ++j) {
        const double diff = std::abs(sc.sigma[j] * sc.sigma[j] - sr.sigma[j] * sr.sigma[j]);
        CHECK(diff <= perturbation + 1e-8);
    }
}

TEST_CASE("embeddings and vocabulary bind and serialize") {
    const Vocabulary vocab = build_vocab(std::vector<std::string>{"b", "a", "b"}, 1);
    DenseMatrix vecs(2, 3);
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 3; ++j) vecs.at(i, j) = 0.25 * (1.0 + i) * (j + 1.0);
    const EmbeddingMatrix e = EmbeddingMatrix::bind(vecs, vocab);
    const std::string path =
        (std::filesystem::temp_directory_path() / "weq_emb_test.txt").string();
    save_embeddings_word2vec(path, e);
    const EmbeddingMatrix back = load_embeddings_word2vec(path);
    CHECK(back.words == e.words);
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 3; ++j)
            CHECK(back.vectors.at(i, j) == doctest::Approx(e.vectors.at(i, j)).epsilon(1e-6));
    std::filesystem::remove(path);

    DenseMatrix bad(2, 1);
    bad.at(0, 0) = std::nan("");
    CHECK_THROWS_AS(EmbeddingMatrix::bind(bad, vocab), compute_error);
}

TEST_CASE("svd container round-trips") {
    const SparseMatrix a = oracles::random_sparse(12, 15, 0.5, 2);
    const SvdResult svd = truncated_svd(a, 4);
    const std::string path =
        (std::filesystem::temp_directory_path() / "weq_svd_test.wequ").string();
    save_svd(path, svd);
    const SvdResult back = load_svd(path);
    CHECK(back.sigma == svd.sigma);
    CHECK(back.iterations == svd.iterations);
    CHECK(back.rank_truncated == svd.rank_truncated);
    for (std::size_t i = 0; i < svd.u.rows(); ++i)
        for (std::size_t j = 0; j < svd.u.cols(); ++j)
            CHECK(back.u.at(i, j) == svd.u.at(i, j));
    std::filesystem::remove(path);
}
