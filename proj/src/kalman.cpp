#include "oapf/kalman.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "oapf/errors.hpp"

namespace oapf {

KalmanState kalman_initial_state(const LgssmParams& params) {
  return KalmanState{params.prior_mean, params.prior_cov, 0.0, 0.0};
}

KalmanState kalman_step(const LgssmParams& p, const KalmanState& state, const Vector& y,
                        const KalmanOptions& options) {
  const Index d = p.transition.rows();
  if (state.mean.size() != d || state.cov.rows() != d || state.cov.cols() != d)
    throw std::invalid_argument("kalman_step: state dimension mismatch");
  if (y.size() != p.observation.rows()) throw std::invalid_argument("kalman_step: observation size mismatch");
  if (!y.allFinite()) throw std::invalid_argument("kalman_step: non-finite observation");

  // Predict.
  const Vector pred_mean = p.transition * state.mean + p.transition_offset;
  Matrix pred_cov = p.transition * state.cov * p.transition.transpose() + p.transition_cov;
  pred_cov = 0.5 * (pred_cov + pred_cov.transpose());

  // Innovation.
  const Vector innovation = y - p.observation * pred_mean - p.observation_offset;
  Matrix innov_cov = p.observation * pred_cov * p.observation.transpose() + p.observation_cov;
  innov_cov = 0.5 * (innov_cov + innov_cov.transpose());

  Eigen::SelfAdjointEigenSolver<Matrix> eig(innov_cov, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || hi / lo > options.max_condition)
    throw NumericalError("kalman_step: innovation covariance is not safely invertible");

  Eigen::LLT<Matrix> llt(innov_cov);
  // K = P C^T S^{-1}, computed as (S^{-1} C P)^T since S and P are symmetric.
  const Matrix gain = llt.solve(p.observation * pred_cov).transpose();

  KalmanState next;
  next.mean = pred_mean + gain * innovation;
  const Matrix ikc = Matrix::Identity(d, d) - gain * p.observation;
  if (options.joseph_form) {
    next.cov = ikc * pred_cov * ikc.transpose() + gain * p.observation_cov * gain.transpose();
  } else {
    next.cov = ikc * pred_cov;
  }
  next.cov = 0.5 * (next.cov + next.cov.transpose());

  const Matrix lower = llt.matrixL();
  const double log_det = 2.0 * lower.diagonal().array().log().sum();
  const double maha = lower.triangularView<Eigen::Lower>().solve(innovation).squaredNorm();
  const double dy = static_cast<double>(y.size());
  next.log_increment = -0.5 * (log_det + maha + dy * std::log(2.0 * std::numbers::pi));
  next.log_marginal = state.log_marginal + next.log_increment;
  if (!std::isfinite(next.log_marginal))
    throw NumericalError("kalman_step: log marginal likelihood is not finite");
  return next;
}

std::vector<KalmanState> kalman_run(const LgssmParams& params, const Matrix& observations,
                                    const KalmanOptions& options) {
  if (observations.cols() < 1) throw std::invalid_argument("kalman_run: need at least one observation");
  std::vector<KalmanState> states;
  states.reserve(static_cast<std::size_t>(observations.cols()) + 1);
  states.push_back(kalman_initial_state(params));
  for (Index t = 0; t < observations.cols(); ++t)
    states.push_back(kalman_step(params, states.back(), observations.col(t), options));
  return states;
}

}  // namespace oapf
