#pragma once

#include <optional>
#include <string>
#include <variant>

#include "oapf/gaussian.hpp"
#include "oapf/rng.hpp"

namespace oapf {

enum class ModelKind { Lgssm, Lorenz63, StochVol };

std::string to_string(ModelKind kind);

/// Linear-Gaussian model:
///   x_0 ~ N(prior_mean, prior_cov)
///   x_t ~ N(transition x_{t-1} + transition_offset, transition_cov)
///   y_t ~ N(observation x_t + observation_offset, observation_cov)
struct LgssmParams {
  Matrix transition;
  Vector transition_offset;
  Matrix transition_cov;
  Matrix observation;
  Vector observation_offset;
  Matrix observation_cov;
  Vector prior_mean;
  Matrix prior_cov;
};

/// How the per-step transition noise of the discretized Lorenz system scales.
/// `Unit` uses noise_cov as is; `Dt` uses dt * noise_cov (Euler-Maruyama).
enum class NoiseScaling { Unit, Dt };

/// Stochastic Lorenz 63 under an Euler-Maruyama step, observed through its
/// first coordinate.
struct Lorenz63Params {
  double sigma = 10.0;
  double rho = 28.0;
  double beta = 2.667;
  double dt = 0.01;
  Matrix noise_cov = Matrix::Identity(3, 3);
  NoiseScaling noise_scaling = NoiseScaling::Unit;
  double obs_var = 1.0;
  Vector initial_state = Vector::Ones(3);
  Matrix prior_cov = Matrix::Identity(3, 3);
};

/// Multivariate stochastic volatility:
///   x_0 ~ N(mean, prior_cov)
///   x_t ~ N(mean + diag(persistence)(x_{t-1} - mean), noise_cov)
///   y_t ~ N(0, diag(exp(x_t)))
struct StochVolParams {
  Vector mean;
  Vector persistence;
  Matrix noise_cov;
  Matrix prior_cov;
};

/// Draws y_{1:T} together with the hidden x_{1:T}; one column per time step.
struct Trajectory {
  Matrix states;
  Matrix observations;
  std::uint64_t seed = 0;

  Index length() const { return states.cols(); }
};

/// An immutable state-space model: prior p(x_0), Gaussian transition kernel
/// f(x_t | x_{t-1}) and observation kernel g(y_t | x_t). Every transition in
/// this library is Gaussian with a state-independent covariance, which the
/// filters rely on when evaluating whole mixtures of transition kernels.
class ModelSpec {
 public:
  explicit ModelSpec(LgssmParams params);
  explicit ModelSpec(Lorenz63Params params);
  explicit ModelSpec(StochVolParams params);

  ModelKind kind() const;
  Index state_dim() const { return state_dim_; }
  Index obs_dim() const { return obs_dim_; }

  const LgssmParams* lgssm() const { return std::get_if<LgssmParams>(&params_); }
  const Lorenz63Params* lorenz() const { return std::get_if<Lorenz63Params>(&params_); }
  const StochVolParams* stochvol() const { return std::get_if<StochVolParams>(&params_); }

  /// log f(x | x_prev)
  double transition_logpdf(const Vector& x_prev, const Vector& x) const;
  /// log g(y | x)
  double observation_logpdf(const Vector& x, const Vector& y) const;
  /// log g(y | x) for every column of `states`.
  Vector observation_logpdf(const Matrix& states, const Vector& y) const;

  /// Mean of f(. | x_prev).
  Vector transition_mean(const Vector& x_prev) const;
  /// Column-wise transition means.
  Matrix transition_mean(const Matrix& prev) const;
  /// Covariance factor shared by every transition kernel.
  const GaussianFactor& transition_noise() const { return transition_noise_; }

  Vector sample_transition(const Vector& x_prev, RngStream& rng) const;
  Vector sample_prior(RngStream& rng) const;
  Vector sample_observation(const Vector& x, RngStream& rng) const;

 private:
  void check_state(const Vector& x, const char* what) const;
  void check_obs(const Vector& y) const;

  std::variant<LgssmParams, Lorenz63Params, StochVolParams> params_;
  Index state_dim_ = 0;
  Index obs_dim_ = 0;
  GaussianFactor transition_noise_;
  GaussianFactor prior_;
  std::optional<GaussianFactor> observation_noise_;
};

/// x_0 ~ prior, x_t ~ f(. | x_{t-1}), y_t ~ g(. | x_t) for t = 1..T. x_0 is
/// not returned. Throws SimulationError naming the step that went non-finite.
Trajectory simulate(const ModelSpec& model, int steps, RngStream& rng);

/// Parameterizations used by the shipped experiment configs.
namespace presets {

/// A = B = I/2, transition_cov = transition_var I, observation_cov = obs_var I,
/// offsets alternating (-2, 2, -2, ...), prior N(0, I).
LgssmParams linear_gaussian(Index dim, double transition_var = 5.0, double obs_var = 2.5);

/// m = 0, persistence = phi, U = U0 = I.
StochVolParams stochastic_volatility(Index dim, double phi = 1.0);

}  // namespace presets

}  // namespace oapf
