#pragma once

#include <Eigen/Dense>

namespace oapf {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Cholesky factor of a symmetric positive-definite covariance, with a fast
/// path for diagonal covariances. All densities are evaluated in log domain.
class GaussianFactor {
 public:
  /// Throws std::invalid_argument unless `cov` is square, finite, symmetric and
  /// positive definite.
  explicit GaussianFactor(const Matrix& cov);

  Index dim() const { return cov_.rows(); }
  const Matrix& cov() const { return cov_; }
  bool is_diagonal() const { return diagonal_; }

  /// -d/2 log(2 pi) - 1/2 log|cov|
  double log_normalizer() const { return log_normalizer_; }

  /// log N(diff; 0, cov)
  double log_density(const Vector& diff) const;

  /// L^{-1} v for cov = L L^T. Applied column-wise to a matrix.
  Vector whiten(const Vector& v) const;
  Matrix whiten(const Matrix& columns) const;

  /// L z; turns standard normal draws into draws with this covariance.
  Vector colour(const Vector& z) const;

 private:
  Matrix cov_;
  Matrix lower_;
  Vector inv_sd_;
  Vector sd_;
  bool diagonal_ = false;
  double log_normalizer_ = 0.0;
};

/// log N(x; mean, cov), factorizing cov on every call.
double gaussian_logpdf(const Vector& x, const Vector& mean, const Matrix& cov);

/// Entry (i, j) holds log N(points.col(i); centers.col(j), cov). Points and
/// centers are stored one per column.
Matrix pairwise_log_density(const GaussianFactor& kernel, const Matrix& points,
                            const Matrix& centers);

/// Row-wise log sum_j exp(log_weights[j] + log_values(i, j)). Columns with a
/// -inf weight are skipped; a row with no finite term yields -inf.
Vector log_mixture_rows(const Matrix& log_values, const Vector& log_weights);

/// Numerically stable log sum exp; -inf for an empty or all -inf input.
double log_sum_exp(const Vector& v);

}  // namespace oapf
