#include <gtest/gtest.h>

#include <random>

#include "oapf/nnls.hpp"
#include "oracles.hpp"

using namespace oapf;

TEST(Nnls, IdentityDesign) {
  NnlsProblem p{Matrix::Identity(2, 2), Vector(2), {}, {}};
  p.target << 0.3, 0.7;
  const NnlsSolution s = nnls_solve(p);
  EXPECT_TRUE(s.converged);
  EXPECT_NEAR(s.lambda[0], 0.3, 1e-15);
  EXPECT_NEAR(s.lambda[1], 0.7, 1e-15);
  EXPECT_NEAR(s.residual_norm, 0.0, 1e-15);
  EXPECT_LE(kkt_residual(p, s.lambda), 1e-12);
}

TEST(Nnls, InfeasibleUnconstrainedOptimum) {
  NnlsProblem p{Matrix(2, 2), Vector(2), {}, {}};
  p.design << 1.0, 2.0, 2.0, 1.0;
  p.target << 1.0, 0.0;
  const NnlsSolution s = nnls_solve(p);
  EXPECT_NEAR(s.lambda[0], 0.0, 1e-15);
  EXPECT_NEAR(s.lambda[1], 0.4, 1e-14);
  EXPECT_NEAR(s.residual_norm * s.residual_norm, 0.2, 1e-14);
  ASSERT_EQ(s.active_set.size(), 1u);
  EXPECT_EQ(s.active_set[0], 0);

  Vector bad(2);
  bad << 1.0, 0.0;
  EXPECT_NEAR(kkt_residual(p, bad), 4.0, 1e-14);
}

TEST(Nnls, ZeroDesignGivesZero) {
  NnlsProblem p{Matrix::Zero(3, 2), Vector::Constant(3, 1.0), {}, {}};
  const NnlsSolution s = nnls_solve(p);
  EXPECT_TRUE(s.converged);
  EXPECT_EQ(s.lambda, Vector::Zero(2));
}

TEST(Nnls, ZeroIsOptimalWithoutDescentDirection) {
  NnlsProblem p{Matrix::Identity(2, 2), Vector(2), {}, {}};
  p.target << -1.0, -0.5;
  EXPECT_NEAR(kkt_residual(p, Vector::Zero(2)), 0.0, 1e-15);
  EXPECT_EQ(nnls_solve(p).lambda, Vector::Zero(2));
}

TEST(Nnls, RejectsBadInput) {
  NnlsProblem p{Matrix::Identity(2, 2), Vector::Zero(3), {}, {}};
  EXPECT_THROW(nnls_solve(p), std::invalid_argument);
  p.target = Vector::Zero(2);
  p.target[0] = std::nan("");
  EXPECT_THROW(nnls_solve(p), std::invalid_argument);
  NnlsProblem q{Matrix::Identity(2, 2), Vector::Zero(2), {}, {}};
  Vector neg(2);
  neg << -1.0, 0.0;
  EXPECT_THROW(kkt_residual(q, neg), std::invalid_argument);
}

TEST(Nnls, IterationCapReturnsBestIterate) {
  NnlsProblem p{Matrix::Identity(3, 3), Vector::Constant(3, 1.0), {}, 1};
  const NnlsSolution s = nnls_solve(p);
  EXPECT_FALSE(s.converged);
  EXPECT_TRUE((s.lambda.array() >= 0.0).all());
}

TEST(Nnls, DuplicateColumnsHandled) {
  Matrix a(3, 3);
  a << 1.0, 1.0, 0.0, 2.0, 2.0, 1.0, 0.0, 0.0, 1.0;
  NnlsProblem p{a, Vector(3), {}, {}};
  p.target << 1.0, 3.0, 1.0;
  const NnlsSolution s = nnls_solve(p);
  EXPECT_TRUE(s.converged);
  EXPECT_NEAR(s.residual_norm * s.residual_norm, oracle::nnls_enumerate(a, p.target), 1e-12);
  EXPECT_LE(kkt_residual(p, s.lambda), p.tolerance());
}

TEST(Nnls, MatchesEnumerationOnRandomInstances) {
  std::mt19937_64 gen(7);
  std::uniform_int_distribution<int> dim(1, 8);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 200; ++trial) {
    const int e = dim(gen);
    const int k = dim(gen);
    Matrix a(e, k);
    Vector b(e);
    for (Index i = 0; i < e; ++i) {
      b[i] = nd(gen);
      for (Index j = 0; j < k; ++j) a(i, j) = nd(gen);
    }
    NnlsProblem p{a, b, {}, {}};
    const NnlsSolution s = nnls_solve(p);
    ASSERT_TRUE(s.converged) << "trial " << trial;
    EXPECT_LE(kkt_residual(p, s.lambda), p.tolerance()) << "trial " << trial;
    const double best = oracle::nnls_enumerate(a, b);
    EXPECT_NEAR(s.residual_norm * s.residual_norm, best, 1e-9) << "trial " << trial;
  }
}
