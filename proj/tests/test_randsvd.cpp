#include <gtest/gtest.h>

#include <Eigen/SVD>

#include <sstream>
#include <vector>

#include "lne/parallel.hpp"
#include "lne/randsvd.hpp"
#include "lne/sparse_matrix.hpp"

using namespace lne;

namespace {

DenseMatrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  DenseMatrix x(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) x(i, j) = static_cast<float>(gaussian_at(seed, i, j));
  return x;
}

SparseMatrix diagonal(std::uint64_t n, auto value) {
  std::vector<Triplet> t;
  for (std::uint64_t i = 0; i < n; ++i) t.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(i), static_cast<float>(value(i))});
  return SparseMatrix::from_triplets(n, std::move(t));
}

struct ThreadGuard {
  ~ThreadGuard() { set_num_workers(0); }
};

}  // namespace

TEST(EigSvd, MatchesJacobiOracle) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    DenseMatrix x = gaussian_matrix(1000, 64, seed);
    auto r = eig_svd(x);
    Eigen::MatrixXd u = r.U.cast<double>();
    Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(64, 64);
    EXPECT_LT((u.transpose() * u - eye).norm(), 1e-4 * 64);
    Eigen::JacobiSVD<Eigen::MatrixXd> oracle(x.cast<double>());
    for (Eigen::Index i = 0; i < 64; ++i) EXPECT_NEAR(r.S(i) / oracle.singularValues()(i), 1.0, 1e-4);
    Eigen::MatrixXd rebuilt = u * r.S.asDiagonal() * r.V.transpose();
    EXPECT_LT((rebuilt - x.cast<double>()).norm() / x.cast<double>().norm(), 1e-5);
  }
}

TEST(EigSvd, DiagonalInput) {
  DenseMatrix x(2, 2);
  x << 3, 0, 0, 2;
  auto r = eig_svd(x);
  EXPECT_NEAR(r.S(0), 3.0, 1e-6);
  EXPECT_NEAR(r.S(1), 2.0, 1e-6);
}

TEST(EigSvd, Random500x32AgainstJacobi) {
  DenseMatrix x = gaussian_matrix(500, 32, 77);
  auto r = eig_svd(x);
  Eigen::JacobiSVD<Eigen::MatrixXd> oracle(x.cast<double>());
  for (Eigen::Index i = 0; i < 32; ++i) EXPECT_NEAR(r.S(i) / oracle.singularValues()(i), 1.0, 1e-4);
  Eigen::MatrixXd rebuilt = r.U.cast<double>() * r.S.asDiagonal() * r.V.transpose();
  EXPECT_LT((rebuilt - x.cast<double>()).norm(), 1e-3 * x.cast<double>().norm());
}

TEST(EigSvd, SingularValuesDescend) {
  auto r = eig_svd(gaussian_matrix(300, 20, 9));
  for (Eigen::Index i = 1; i < r.S.size(); ++i) EXPECT_GE(r.S(i - 1), r.S(i));
}

TEST(EigSvd, ZeroMatrixGivesZeros) {
  DenseMatrix x = DenseMatrix::Zero(50, 4);
  auto r = eig_svd(x);
  EXPECT_EQ(r.S.norm(), 0.0);
  EXPECT_EQ(r.U.norm(), 0.0f);
}

TEST(EigSvd, RankDeficientStaysFinite) {
  DenseMatrix x = gaussian_matrix(200, 8, 1);
  x.col(7) = x.col(0);
  auto r = eig_svd(x);
  EXPECT_TRUE(r.U.allFinite());
  EXPECT_LT(r.S(7), 1e-3 * r.S(0));
}

TEST(EigSvd, RejectsWideInput) { EXPECT_THROW(eig_svd(gaussian_matrix(3, 5, 0)), InvalidArgument); }

TEST(EigSvd, IndependentOfThreadCount) {
  ThreadGuard guard;
  DenseMatrix x = gaussian_matrix(5000, 24, 4);
  set_num_workers(1);
  auto a = eig_svd(x);
  set_num_workers(7);
  auto b = eig_svd(x);
  EXPECT_EQ(a.S, b.S);
  EXPECT_EQ(a.U, b.U);
}

TEST(RandomizedSvd, RecoversKnownSpectrum) {
  const std::uint64_t n = 1000;
  SparseMatrix a = diagonal(n, [](std::uint64_t i) { return 1.0 / static_cast<double>(i + 1); });
  // Oversampling wide enough that (sigma_{d+s+1} / sigma_d)^(2q+1) is far below 1e-3.
  SvdParams p{10, 40, 3, 42};
  auto f = fast_randomized_svd(a, p);
  ASSERT_EQ(f.Sigma.size(), 10);
  for (Eigen::Index i = 0; i < 10; ++i) EXPECT_NEAR(f.Sigma(i) * static_cast<float>(i + 1), 1.0f, 1e-3f);
  ASSERT_EQ(f.U.rows(), static_cast<Eigen::Index>(n));
  Eigen::MatrixXd u = f.U.cast<double>();
  EXPECT_LT((u.transpose() * u - Eigen::MatrixXd::Identity(10, 10)).norm(), 1e-4);
}

TEST(RandomizedSvd, ExactForLowRank) {
  const std::uint64_t n = 300;
  SparseMatrix a = diagonal(n, [](std::uint64_t i) { return i < 5 ? 5.0 - static_cast<double>(i) : 0.0; });
  auto f = fast_randomized_svd(a, SvdParams{5, 8, 1, 1});
  for (Eigen::Index i = 0; i < 5; ++i) EXPECT_NEAR(f.Sigma(i), 5.0f - static_cast<float>(i), 1e-4f);
}

namespace {

struct DenseOp {
  Eigen::MatrixXd a;
  std::uint64_t n() const { return static_cast<std::uint64_t>(a.rows()); }
  DenseMatrix multiply(const DenseMatrix& x) const { return (a * x.cast<double>()).cast<float>(); }
};

}  // namespace

TEST(RandomizedSvd, RankDResidualAtQ1) {
  const Eigen::Index n = 400, d = 6;
  Eigen::MatrixXd b = gaussian_matrix(n, d, 8).cast<double>();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(b);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, d);
  Eigen::VectorXd lam(d);
  lam << 6, 5, 4, 3, 2, 1;
  DenseOp op{q * lam.asDiagonal() * q.transpose()};
  auto f = fast_randomized_svd(op, SvdParams{static_cast<std::uint32_t>(d), 4, 1, 3});
  Eigen::MatrixXd approx = f.U.cast<double>() * f.Sigma.cast<double>().asDiagonal() * f.V.cast<double>().transpose();
  EXPECT_LT((op.a - approx).norm(), 1e-3 * op.a.norm());
}

TEST(RandomizedSvd, DeterministicAcrossThreads) {
  ThreadGuard guard;
  SparseMatrix a = diagonal(2000, [](std::uint64_t i) { return 1.0 / std::sqrt(static_cast<double>(i + 1)); });
  SvdParams p{16, 8, 2, 5};
  set_num_workers(1);
  auto x = fast_randomized_svd(a, p);
  set_num_workers(8);
  auto y = fast_randomized_svd(a, p);
  EXPECT_EQ(x.U, y.U);
  EXPECT_EQ(x.Sigma, y.Sigma);
}

TEST(RandomizedSvd, ValidatesShape) {
  SparseMatrix a = diagonal(20, [](std::uint64_t) { return 1.0; });
  EXPECT_THROW(fast_randomized_svd(a, SvdParams{16, 8, 1, 0}), InvalidArgument);
  EXPECT_THROW(fast_randomized_svd(a, SvdParams{4, 4, 0, 0}), InvalidArgument);
}

TEST(Embedding, FromFactorsScalesBySqrtSigma) {
  SvdFactors f;
  f.U = DenseMatrix::Identity(4, 2);
  f.Sigma = Eigen::VectorXf(2);
  f.Sigma << 4.0f, 9.0f;
  auto e = embedding_from_factors(f);
  EXPECT_FLOAT_EQ(e.X(0, 0), 2.0f);
  EXPECT_FLOAT_EQ(e.X(1, 1), 3.0f);
}

TEST(Embedding, IdentityFactors) {
  SvdFactors f;
  f.U = DenseMatrix::Identity(2, 2);
  f.Sigma = Eigen::VectorXf(2);
  f.Sigma << 4.0f, 1.0f;
  auto e = embedding_from_factors(f);
  DenseMatrix want(2, 2);
  want << 2, 0, 0, 1;
  EXPECT_EQ(e.X, want);
}

TEST(Embedding, BinaryRoundTrip) {
  Embedding e{gaussian_matrix(37, 5, 3)};
  std::stringstream buf;
  write_embedding(e, buf);
  EXPECT_EQ(buf.str().size(), 8u + 4 + 8 + 4 + 37 * 5 * 4);
  auto back = read_embedding(buf);
  EXPECT_EQ(back.X, e.X);
}

TEST(Embedding, RejectsCorruptFiles) {
  std::stringstream bad("LNE2GRPH0000000000000000");
  EXPECT_THROW(read_embedding(bad), FormatError);
  Embedding e{gaussian_matrix(4, 2, 3)};
  std::stringstream buf;
  write_embedding(e, buf);
  std::string s = buf.str();
  std::stringstream cut(s.substr(0, s.size() - 1));
  EXPECT_THROW(read_embedding(cut), FormatError);
}
