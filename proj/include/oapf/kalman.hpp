#pragma once

#include <vector>

#include "oapf/models.hpp"

namespace oapf {

/// Filtering moments after a step, together with the running log p(y_{1:t}).
struct KalmanState {
  Vector mean;
  Matrix cov;
  double log_marginal = 0.0;
  /// log p(y_t | y_{1:t-1}) of the step that produced this state; 0 for the
  /// initial state.
  double log_increment = 0.0;
};

struct KalmanOptions {
  bool joseph_form = false;
  /// Innovation covariances with a larger condition number are rejected.
  double max_condition = 1e12;
};

KalmanState kalman_initial_state(const LgssmParams& params);

/// One predict/update step. Throws NumericalError if the innovation
/// covariance is too ill-conditioned to invert.
KalmanState kalman_step(const LgssmParams& params, const KalmanState& state, const Vector& y,
                        const KalmanOptions& options = {});

/// Runs the filter over one observation per column. The returned sequence
/// starts with the initial state, so it holds T + 1 entries.
std::vector<KalmanState> kalman_run(const LgssmParams& params, const Matrix& observations,
                                    const KalmanOptions& options = {});

}  // namespace oapf
