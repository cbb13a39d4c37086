#include "oapf/models.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "oapf/errors.hpp"

namespace oapf {

namespace {

using Params = std::variant<LgssmParams, Lorenz63Params, StochVolParams>;

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

Index validate(const LgssmParams& p) {
  const Index d = p.transition.rows();
  require(d >= 1 && p.transition.cols() == d, "lgssm: transition must be square");
  require(p.transition_offset.size() == d, "lgssm: transition_offset has wrong size");
  require(p.transition_cov.rows() == d && p.transition_cov.cols() == d,
          "lgssm: transition_cov has wrong shape");
  const Index dy = p.observation.rows();
  require(dy >= 1 && p.observation.cols() == d, "lgssm: observation matrix has wrong shape");
  require(p.observation_offset.size() == dy, "lgssm: observation_offset has wrong size");
  require(p.observation_cov.rows() == dy && p.observation_cov.cols() == dy,
          "lgssm: observation_cov has wrong shape");
  require(p.prior_mean.size() == d, "lgssm: prior_mean has wrong size");
  require(p.prior_cov.rows() == d && p.prior_cov.cols() == d, "lgssm: prior_cov has wrong shape");
  require(p.transition.allFinite() && p.transition_offset.allFinite() && p.observation.allFinite() &&
              p.observation_offset.allFinite() && p.prior_mean.allFinite(),
          "lgssm: non-finite parameter");
  return dy;
}

void validate(const Lorenz63Params& p) {
  require(std::isfinite(p.sigma) && std::isfinite(p.rho) && std::isfinite(p.beta),
          "lorenz63: drift parameters must be finite");
  require(std::isfinite(p.dt) && p.dt > 0.0, "lorenz63: dt must be positive");
  require(std::isfinite(p.obs_var) && p.obs_var > 0.0, "lorenz63: obs_var must be positive");
  require(p.noise_cov.rows() == 3 && p.noise_cov.cols() == 3, "lorenz63: noise_cov must be 3x3");
  require(p.initial_state.size() == 3 && p.initial_state.allFinite(),
          "lorenz63: initial_state must be a finite 3-vector");
  require(p.prior_cov.rows() == 3 && p.prior_cov.cols() == 3, "lorenz63: prior_cov must be 3x3");
}

void validate(const StochVolParams& p) {
  const Index d = p.mean.size();
  require(d >= 1, "stochvol: dimension must be positive");
  require(p.persistence.size() == d, "stochvol: persistence has wrong size");
  require(p.noise_cov.rows() == d && p.noise_cov.cols() == d, "stochvol: noise_cov has wrong shape");
  require(p.prior_cov.rows() == d && p.prior_cov.cols() == d, "stochvol: prior_cov has wrong shape");
  require(p.mean.allFinite() && p.persistence.allFinite(), "stochvol: non-finite parameter");
}

Index state_dim_of(const Params& p) {
  if (const auto* l = std::get_if<LgssmParams>(&p)) return l->transition.rows();
  if (std::holds_alternative<Lorenz63Params>(p)) return 3;
  return std::get<StochVolParams>(p).mean.size();
}

Index obs_dim_of(const Params& p) {
  if (const auto* l = std::get_if<LgssmParams>(&p)) return validate(*l);
  if (const auto* l = std::get_if<Lorenz63Params>(&p)) {
    validate(*l);
    return 1;
  }
  const auto& s = std::get<StochVolParams>(p);
  validate(s);
  return s.mean.size();
}

Matrix transition_cov_of(const Params& p) {
  if (const auto* l = std::get_if<LgssmParams>(&p)) return l->transition_cov;
  if (const auto* l = std::get_if<Lorenz63Params>(&p))
    return l->noise_scaling == NoiseScaling::Dt ? Matrix(l->dt * l->noise_cov) : l->noise_cov;
  return std::get<StochVolParams>(p).noise_cov;
}

Matrix prior_cov_of(const Params& p) {
  return std::visit([](const auto& v) -> Matrix { return v.prior_cov; }, p);
}

Vector prior_mean_of(const Params& p) {
  if (const auto* l = std::get_if<LgssmParams>(&p)) return l->prior_mean;
  if (const auto* l = std::get_if<Lorenz63Params>(&p)) return l->initial_state;
  return std::get<StochVolParams>(p).mean;
}

Vector lorenz_drift(const Lorenz63Params& p, const Vector& x) {
  Vector d(3);
  d[0] = p.sigma * (x[1] - x[0]);
  d[1] = x[0] * (p.rho - x[2]) - x[1];
  d[2] = x[0] * x[1] - p.beta * x[2];
  return d;
}

}  // namespace

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::Lgssm: return "lgssm";
    case ModelKind::Lorenz63: return "lorenz63";
    case ModelKind::StochVol: return "stochvol";
  }
  return "unknown";
}

ModelSpec::ModelSpec(LgssmParams params)
    : params_(std::move(params)),
      state_dim_(state_dim_of(params_)),
      obs_dim_(obs_dim_of(params_)),
      transition_noise_(transition_cov_of(params_)),
      prior_(prior_cov_of(params_)),
      observation_noise_(std::get<LgssmParams>(params_).observation_cov) {}

ModelSpec::ModelSpec(Lorenz63Params params)
    : params_(std::move(params)),
      state_dim_(state_dim_of(params_)),
      obs_dim_(obs_dim_of(params_)),
      transition_noise_(transition_cov_of(params_)),
      prior_(prior_cov_of(params_)) {}

ModelSpec::ModelSpec(StochVolParams params)
    : params_(std::move(params)),
      state_dim_(state_dim_of(params_)),
      obs_dim_(obs_dim_of(params_)),
      transition_noise_(transition_cov_of(params_)),
      prior_(prior_cov_of(params_)) {}

ModelKind ModelSpec::kind() const {
  if (std::holds_alternative<LgssmParams>(params_)) return ModelKind::Lgssm;
  if (std::holds_alternative<Lorenz63Params>(params_)) return ModelKind::Lorenz63;
  return ModelKind::StochVol;
}

void ModelSpec::check_state(const Vector& x, const char* what) const {
  if (x.size() != state_dim_)
    throw std::invalid_argument(std::string(what) + ": state dimension mismatch");
  if (!x.allFinite()) throw std::invalid_argument(std::string(what) + ": non-finite state");
}

void ModelSpec::check_obs(const Vector& y) const {
  if (y.size() != obs_dim_) throw std::invalid_argument("observation dimension mismatch");
  if (!y.allFinite()) throw std::invalid_argument("non-finite observation");
}

Vector ModelSpec::transition_mean(const Vector& x_prev) const {
  check_state(x_prev, "transition_mean");
  if (const auto* p = lgssm()) return p->transition * x_prev + p->transition_offset;
  if (const auto* p = lorenz()) return x_prev + p->dt * lorenz_drift(*p, x_prev);
  const auto& p = *stochvol();
  return p.mean + p.persistence.cwiseProduct(x_prev - p.mean);
}

Matrix ModelSpec::transition_mean(const Matrix& prev) const {
  if (prev.rows() != state_dim_) throw std::invalid_argument("transition_mean: dimension mismatch");
  if (const auto* p = lgssm()) return (p->transition * prev).colwise() + p->transition_offset;
  if (const auto* p = lorenz()) {
    Matrix out(3, prev.cols());
    for (Index m = 0; m < prev.cols(); ++m)
      out.col(m) = prev.col(m) + p->dt * lorenz_drift(*p, prev.col(m));
    return out;
  }
  const auto& p = *stochvol();
  return (p.persistence.asDiagonal() * (prev.colwise() - p.mean)).colwise() + p.mean;
}

double ModelSpec::transition_logpdf(const Vector& x_prev, const Vector& x) const {
  check_state(x, "transition_logpdf");
  return transition_noise_.log_density(x - transition_mean(x_prev));
}

double ModelSpec::observation_logpdf(const Vector& x, const Vector& y) const {
  check_state(x, "observation_logpdf");
  check_obs(y);
  Matrix one = x;
  return observation_logpdf(one, y)[0];
}

Vector ModelSpec::observation_logpdf(const Matrix& states, const Vector& y) const {
  if (states.rows() != state_dim_) throw std::invalid_argument("observation_logpdf: dimension mismatch");
  if (y.size() != obs_dim_) throw std::invalid_argument("observation dimension mismatch");
  const Index n = states.cols();
  if (const auto* p = lgssm()) {
    Matrix resid = (-(p->observation * states)).colwise() + (y - p->observation_offset);
    const Matrix white = observation_noise_->whiten(resid);
    return (observation_noise_->log_normalizer() - 0.5 * white.colwise().squaredNorm().array())
        .transpose()
        .matrix();
  }
  if (const auto* p = lorenz()) {
    const double norm = -0.5 * (kLog2Pi + std::log(p->obs_var));
    Vector out(n);
    for (Index m = 0; m < n; ++m) {
      const double r = y[0] - states(0, m);
      out[m] = norm - 0.5 * r * r / p->obs_var;
    }
    return out;
  }
  // Independent coordinates with variance exp(x_i).
  const double d = static_cast<double>(state_dim_);
  const Eigen::ArrayXd y2 = y.array().square();
  Vector out(n);
  for (Index m = 0; m < n; ++m) {
    const Eigen::ArrayXd x = states.col(m).array();
    out[m] = -0.5 * d * kLog2Pi - 0.5 * x.sum() - 0.5 * (y2 * (-x).exp()).sum();
  }
  return out;
}

Vector ModelSpec::sample_transition(const Vector& x_prev, RngStream& rng) const {
  return transition_mean(x_prev) + transition_noise_.colour(rng.normal_vector(state_dim_));
}

Vector ModelSpec::sample_prior(RngStream& rng) const {
  return prior_mean_of(params_) + prior_.colour(rng.normal_vector(state_dim_));
}

Vector ModelSpec::sample_observation(const Vector& x, RngStream& rng) const {
  check_state(x, "sample_observation");
  if (const auto* p = lgssm())
    return p->observation * x + p->observation_offset +
           observation_noise_->colour(rng.normal_vector(obs_dim_));
  if (const auto* p = lorenz()) {
    Vector y(1);
    y[0] = x[0] + std::sqrt(p->obs_var) * rng.normal();
    return y;
  }
  const Vector z = rng.normal_vector(state_dim_);
  return (0.5 * x.array()).exp().matrix().cwiseProduct(z);
}

Trajectory simulate(const ModelSpec& model, int steps, RngStream& rng) {
  if (steps < 1) throw std::invalid_argument("simulate: T must be at least 1");
  Trajectory traj;
  traj.states.resize(model.state_dim(), steps);
  traj.observations.resize(model.obs_dim(), steps);

  Vector x = model.sample_prior(rng);
  for (int t = 0; t < steps; ++t) {
    x = model.transition_mean(x) + model.transition_noise().colour(rng.normal_vector(model.state_dim()));
    if (!x.allFinite())
      throw SimulationError("simulate: state became non-finite at step " + std::to_string(t + 1), t + 1);
    Vector y = model.sample_observation(x, rng);
    if (!y.allFinite())
      throw SimulationError("simulate: observation became non-finite at step " + std::to_string(t + 1),
                            t + 1);
    traj.states.col(t) = x;
    traj.observations.col(t) = y;
  }
  return traj;
}

namespace presets {

LgssmParams linear_gaussian(Index dim, double transition_var, double obs_var) {
  Vector offset(dim);
  for (Index i = 0; i < dim; ++i) offset[i] = (i % 2 == 0) ? -2.0 : 2.0;
  LgssmParams p;
  p.transition = 0.5 * Matrix::Identity(dim, dim);
  p.transition_offset = offset;
  p.transition_cov = transition_var * Matrix::Identity(dim, dim);
  p.observation = 0.5 * Matrix::Identity(dim, dim);
  p.observation_offset = offset;
  p.observation_cov = obs_var * Matrix::Identity(dim, dim);
  p.prior_mean = Vector::Zero(dim);
  p.prior_cov = Matrix::Identity(dim, dim);
  return p;
}

StochVolParams stochastic_volatility(Index dim, double phi) {
  StochVolParams p;
  p.mean = Vector::Zero(dim);
  p.persistence = Vector::Constant(dim, phi);
  p.noise_cov = Matrix::Identity(dim, dim);
  p.prior_cov = Matrix::Identity(dim, dim);
  return p;
}

}  // namespace presets

}  // namespace oapf
