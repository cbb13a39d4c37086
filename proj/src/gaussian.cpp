#include "oapf/gaussian.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace oapf {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

bool is_diagonal_matrix(const Matrix& m) {
  for (Index j = 0; j < m.cols(); ++j)
    for (Index i = 0; i < m.rows(); ++i)
      if (i != j && m(i, j) != 0.0) return false;
  return true;
}

}  // namespace

GaussianFactor::GaussianFactor(const Matrix& cov) : cov_(cov) {
  if (cov.rows() == 0 || cov.rows() != cov.cols())
    throw std::invalid_argument("covariance must be a non-empty square matrix");
  if (!cov.allFinite()) throw std::invalid_argument("covariance has non-finite entries");
  const double scale = cov.cwiseAbs().maxCoeff();
  if (!(cov - cov.transpose()).isZero(1e-12 * scale))
    throw std::invalid_argument("covariance is not symmetric");

  const Index d = cov.rows();
  diagonal_ = is_diagonal_matrix(cov);
  double log_det = 0.0;
  if (diagonal_) {
    const Vector diag = cov.diagonal();
    if ((diag.array() <= 0.0).any())
      throw std::invalid_argument("covariance is not positive definite");
    sd_ = diag.cwiseSqrt();
    inv_sd_ = sd_.cwiseInverse();
    log_det = diag.array().log().sum();
  } else {
    Eigen::LLT<Matrix> llt(cov);
    if (llt.info() != Eigen::Success)
      throw std::invalid_argument("covariance is not positive definite");
    lower_ = llt.matrixL();
    if ((lower_.diagonal().array() <= 0.0).any())
      throw std::invalid_argument("covariance is not positive definite");
    log_det = 2.0 * lower_.diagonal().array().log().sum();
  }
  log_normalizer_ = -0.5 * static_cast<double>(d) * std::log(2.0 * std::numbers::pi) - 0.5 * log_det;
}

Vector GaussianFactor::whiten(const Vector& v) const {
  if (v.size() != dim()) throw std::invalid_argument("dimension mismatch in whiten");
  if (diagonal_) return v.cwiseProduct(inv_sd_);
  return lower_.triangularView<Eigen::Lower>().solve(v);
}

Matrix GaussianFactor::whiten(const Matrix& columns) const {
  if (columns.rows() != dim()) throw std::invalid_argument("dimension mismatch in whiten");
  if (diagonal_) return inv_sd_.asDiagonal() * columns;
  return lower_.triangularView<Eigen::Lower>().solve(columns);
}

Vector GaussianFactor::colour(const Vector& z) const {
  if (z.size() != dim()) throw std::invalid_argument("dimension mismatch in colour");
  if (diagonal_) return z.cwiseProduct(sd_);
  return lower_.triangularView<Eigen::Lower>() * z;
}

double GaussianFactor::log_density(const Vector& diff) const {
  return log_normalizer_ - 0.5 * whiten(diff).squaredNorm();
}

double gaussian_logpdf(const Vector& x, const Vector& mean, const Matrix& cov) {
  if (x.size() != mean.size()) throw std::invalid_argument("dimension mismatch in gaussian_logpdf");
  return GaussianFactor(cov).log_density(x - mean);
}

Matrix pairwise_log_density(const GaussianFactor& kernel, const Matrix& points,
                            const Matrix& centers) {
  const Matrix wp = kernel.whiten(points);
  const Matrix wc = kernel.whiten(centers);
  const Eigen::RowVectorXd center_norms = wc.colwise().squaredNorm();
  const Vector point_norms = wp.colwise().squaredNorm().transpose();

  Matrix sq = -2.0 * (wp.transpose() * wc);
  sq.colwise() += point_norms;
  sq.rowwise() += center_norms;
  return (kernel.log_normalizer() - 0.5 * sq.array().max(0.0)).matrix();
}

Vector log_mixture_rows(const Matrix& log_values, const Vector& log_weights) {
  if (log_values.cols() != log_weights.size())
    throw std::invalid_argument("weight count does not match mixture columns");

  std::vector<Index> live;
  live.reserve(static_cast<std::size_t>(log_weights.size()));
  for (Index j = 0; j < log_weights.size(); ++j)
    if (log_weights[j] > kNegInf) live.push_back(j);

  const Index rows = log_values.rows();
  Vector out = Vector::Constant(rows, kNegInf);
  if (live.empty()) return out;

  Matrix terms(rows, static_cast<Index>(live.size()));
  for (Index c = 0; c < terms.cols(); ++c) {
    const Index j = live[static_cast<std::size_t>(c)];
    terms.col(c) = log_values.col(j).array() + log_weights[j];
  }
  const Vector row_max = terms.rowwise().maxCoeff();
  for (Index i = 0; i < rows; ++i) {
    if (row_max[i] == kNegInf) continue;
    out[i] = row_max[i] + std::log((terms.row(i).array() - row_max[i]).exp().sum());
  }
  return out;
}

double log_sum_exp(const Vector& v) {
  if (v.size() == 0) return kNegInf;
  const double m = v.maxCoeff();
  if (m == kNegInf) return kNegInf;
  if (m == std::numeric_limits<double>::infinity()) return m;
  return m + std::log((v.array() - m).exp().sum());
}

}  // namespace oapf
