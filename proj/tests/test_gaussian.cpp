#include <gtest/gtest.h>

#include <cmath>

#include "oapf/gaussian.hpp"
#include "oracles.hpp"

using namespace oapf;

TEST(Gaussian, StandardNormalAtMode) {
  EXPECT_NEAR(gaussian_logpdf(Vector::Zero(1), Vector::Zero(1), Matrix::Identity(1, 1)), -0.9189385332046727, 1e-14);
}

TEST(Gaussian, MatchesDenseOracle) {
  Matrix cov(3, 3);
  cov << 2.0, 0.3, 0.1, 0.3, 1.5, -0.2, 0.1, -0.2, 0.8;
  Vector x(3), m(3);
  x << 0.4, -1.0, 2.0;
  m << 0.1, 0.2, 0.3;
  EXPECT_NEAR(gaussian_logpdf(x, m, cov), oracle::mvn_logpdf(x, m, cov), 1e-12);
}

TEST(Gaussian, DiagonalPathAgreesWithFullPath) {
  Vector diag(3);
  diag << 0.5, 2.0, 3.0;
  Matrix cov = diag.asDiagonal();
  GaussianFactor fac(cov);
  EXPECT_TRUE(fac.is_diagonal());
  Vector v(3);
  v << 1.0, -2.0, 0.5;
  EXPECT_NEAR(fac.log_density(v), oracle::mvn_logpdf(v, Vector::Zero(3), cov), 1e-12);
  EXPECT_NEAR(fac.colour(fac.whiten(v)).cwiseAbs().maxCoeff(), v.cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Gaussian, RejectsBadCovariance) {
  Matrix asym(2, 2);
  asym << 1.0, 0.5, 0.0, 1.0;
  EXPECT_THROW(GaussianFactor{asym}, std::invalid_argument);
  Matrix indef(2, 2);
  indef << 1.0, 2.0, 2.0, 1.0;
  EXPECT_THROW(GaussianFactor{indef}, std::invalid_argument);
  EXPECT_THROW(GaussianFactor{Matrix(2, 3)}, std::invalid_argument);
  Matrix nan = Matrix::Identity(2, 2);
  nan(0, 0) = std::nan("");
  EXPECT_THROW(GaussianFactor{nan}, std::invalid_argument);
}

TEST(Gaussian, PairwiseMatchesLoop) {
  Matrix cov(2, 2);
  cov << 1.0, 0.4, 0.4, 2.0;
  GaussianFactor fac(cov);
  Matrix pts = Matrix::Random(2, 7) * 3.0;
  Matrix ctr = Matrix::Random(2, 5) * 3.0;
  const Matrix out = pairwise_log_density(fac, pts, ctr);
  ASSERT_EQ(out.rows(), 7);
  ASSERT_EQ(out.cols(), 5);
  for (Index i = 0; i < 7; ++i)
    for (Index j = 0; j < 5; ++j) EXPECT_NEAR(out(i, j), oracle::mvn_logpdf(pts.col(i), ctr.col(j), cov), 1e-10);
}

TEST(Gaussian, LogMixtureRowsSkipsZeroWeights) {
  Matrix lv(2, 3);
  lv << 0.0, 1.0, -1000.0, 2.0, -2.0, 0.0;
  Vector lw(3);
  lw << std::log(0.5), -std::numeric_limits<double>::infinity(), std::log(0.5);
  const Vector r = log_mixture_rows(lv, lw);
  EXPECT_NEAR(r[0], std::log(0.5 * std::exp(0.0) + 0.5 * std::exp(-1000.0)), 1e-12);
  EXPECT_NEAR(r[1], std::log(0.5 * std::exp(2.0) + 0.5), 1e-12);
}

TEST(Gaussian, LogSumExpStable) {
  Vector v(2);
  v << -1000.0, -1001.0;
  EXPECT_NEAR(log_sum_exp(v), -1000.0 + std::log1p(std::exp(-1.0)), 1e-12);
  EXPECT_EQ(log_sum_exp(Vector::Constant(3, -std::numeric_limits<double>::infinity())),
            -std::numeric_limits<double>::infinity());
  EXPECT_EQ(log_sum_exp(Vector()), -std::numeric_limits<double>::infinity());
}
