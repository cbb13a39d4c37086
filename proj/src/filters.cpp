#include "oapf/filters.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "oapf/errors.hpp"
#include "oapf/metrics.hpp"

namespace oapf {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

Vector log_of(const Vector& w) {
  Vector out(w.size());
  for (Index i = 0; i < w.size(); ++i) out[i] = w[i] > 0.0 ? std::log(w[i]) : kNegInf;
  return out;
}

Matrix gather_columns(const Matrix& m, const std::vector<Index>& idx) {
  Matrix out(m.rows(), static_cast<Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out.col(static_cast<Index>(i)) = m.col(idx[i]);
  return out;
}

/// Adds transition noise to each column of `means`.
Matrix perturb(const ModelSpec& model, const Matrix& means, RngStream& rng) {
  Matrix out = means;
  const GaussianFactor& noise = model.transition_noise();
  for (Index m = 0; m < out.cols(); ++m) out.col(m) += noise.colour(rng.normal_vector(out.rows()));
  return out;
}

void check_step_inputs(const ModelSpec& model, const ParticleSet& prev, const Vector& y) {
  if (prev.size() < 1) throw std::invalid_argument("filter step: empty particle set");
  if (prev.dim() != model.state_dim()) throw std::invalid_argument("filter step: particle dimension mismatch");
  if (prev.weights.size() != prev.size()) throw std::invalid_argument("filter step: weight count mismatch");
  if (y.size() != model.obs_dim()) throw std::invalid_argument("filter step: observation dimension mismatch");
  if (!y.allFinite()) throw std::invalid_argument("filter step: non-finite observation");
}

double mean_log(const Vector& log_w) {
  return log_sum_exp(log_w) - std::log(static_cast<double>(log_w.size()));
}

/// Indices of the `count` largest entries (ties to the lower index), returned
/// in ascending order.
std::vector<Index> select_top(const Vector& values, Index count) {
  std::vector<Index> order(static_cast<std::size_t>(values.size()));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return values[a] > values[b]; });
  order.resize(static_cast<std::size_t>(count));
  std::sort(order.begin(), order.end());
  return order;
}

OapfSystem assemble_system(const Matrix& design_log, const Vector& log_target) {
  const double target_scale = log_target.maxCoeff();
  if (target_scale == kNegInf) throw DegeneracyError("oapf: approximate filtering density is zero at every evaluation point");
  double design_scale = design_log.maxCoeff();
  OapfSystem sys;
  if (design_scale == kNegInf) {
    design_scale = 0.0;
    sys.problem.design = Matrix::Zero(design_log.rows(), design_log.cols());
  } else {
    sys.problem.design = (design_log.array() - design_scale).unaryExpr([](double v) { return std::exp(v); }).matrix();
  }
  sys.problem.target = (log_target.array() - target_scale).unaryExpr([](double v) { return std::exp(v); }).matrix();
  sys.log_design_scale = design_scale;
  sys.log_target_scale = target_scale;
  return sys;
}

Vector log_mixture_weights_from(const Matrix& log_kernel, const Vector& log_prev_weights,
                                const MixtureProposal& proposal, const Vector& log_g) {
  Vector log_lambda = Vector::Constant(log_kernel.cols(), kNegInf);
  for (Index k = 0; k < proposal.size(); ++k) {
    const Index a = proposal.ancestors[static_cast<std::size_t>(k)];
    if (proposal.weights[k] <= 0.0) continue;
    const double lk = std::log(proposal.weights[k]);
    const double cur = log_lambda[a];
    log_lambda[a] = cur == kNegInf ? lk : std::max(cur, lk) + std::log1p(std::exp(-std::abs(cur - lk)));
  }
  const Vector numerator = log_mixture_rows(log_kernel, log_prev_weights);
  const Vector denominator = log_mixture_rows(log_kernel, log_lambda);
  Vector out = log_g + numerator - denominator;
  for (Index m = 0; m < out.size(); ++m)
    if (std::isnan(out[m])) out[m] = kNegInf;
  return out;
}

void check_proposal(const ParticleSet& prev, const MixtureProposal& proposal) {
  if (proposal.size() < 1 || static_cast<Index>(proposal.ancestors.size()) != proposal.size() ||
      proposal.centers.cols() != proposal.size())
    throw std::invalid_argument("mixture proposal: inconsistent component counts");
  for (Index a : proposal.ancestors)
    if (a < 0 || a >= prev.size()) throw std::invalid_argument("mixture proposal: ancestor out of range");
  if ((proposal.weights.array() < 0.0).any() || !proposal.weights.allFinite())
    throw std::invalid_argument("mixture proposal: weights must be finite and non-negative");
}

}  // namespace

std::string to_string(FilterKind kind) {
  switch (kind) {
    case FilterKind::Bpf: return "bpf";
    case FilterKind::Apf: return "apf";
    case FilterKind::Iapf: return "iapf";
    case FilterKind::FaApf: return "fa_apf";
    case FilterKind::Oapf: return "oapf";
  }
  return "unknown";
}

std::optional<FilterKind> parse_filter_kind(std::string_view name) {
  if (name == "bpf") return FilterKind::Bpf;
  if (name == "apf") return FilterKind::Apf;
  if (name == "iapf") return FilterKind::Iapf;
  if (name == "fa_apf") return FilterKind::FaApf;
  if (name == "oapf") return FilterKind::Oapf;
  return std::nullopt;
}

StepResult bpf_step(const ModelSpec& model, const ParticleSet& prev, const Vector& y, RngStream& rng,
                    const StepOptions& options) {
  check_step_inputs(model, prev, y);
  const Index m = prev.size();
  const bool resample_now = !options.ess_threshold || ess(prev.weights) < *options.ess_threshold * static_cast<double>(m);

  std::vector<Index> ancestors(static_cast<std::size_t>(m));
  if (resample_now) {
    ancestors = resample(options.scheme, prev.weights, m, rng);
  } else {
    std::iota(ancestors.begin(), ancestors.end(), Index{0});
  }
  const Matrix means = model.transition_mean(gather_columns(prev.particles, ancestors));
  Matrix x = perturb(model, means, rng);
  Vector log_w = model.observation_logpdf(x, y);
  if (!resample_now) log_w += (log_of(prev.weights).array() + std::log(static_cast<double>(m))).matrix();

  StepResult out;
  out.partial_log_z = mean_log(log_w);
  out.particles = ParticleSet::weighted(std::move(x), std::move(log_w));
  out.mixture_weights = prev.weights;
  return out;
}

StepResult apf_step(const ModelSpec& model, const ParticleSet& prev, const Vector& y, RngStream& rng,
                    const StepOptions& options) {
  check_step_inputs(model, prev, y);
  const Index m = prev.size();
  const Matrix mu = model.transition_mean(prev.particles);
  const Vector log_g_mu = model.observation_logpdf(mu, y);
  const Vector log_pre = log_of(prev.weights) + log_g_mu;
  const NormalizedWeights first_stage = normalize_log_weights(log_pre);

  const std::vector<Index> ancestors = resample(options.scheme, first_stage.weights, m, rng);
  Matrix x = perturb(model, gather_columns(mu, ancestors), rng);
  Vector log_w = model.observation_logpdf(x, y);
  for (Index i = 0; i < m; ++i) log_w[i] -= log_g_mu[ancestors[static_cast<std::size_t>(i)]];

  StepResult out;
  out.partial_log_z = first_stage.log_sum + mean_log(log_w);
  out.particles = ParticleSet::weighted(std::move(x), std::move(log_w));
  out.mixture_weights = first_stage.weights;
  return out;
}

Vector iapf_mixture_weights(const ModelSpec& model, const ParticleSet& prev, const Vector& y, bool* fallback) {
  check_step_inputs(model, prev, y);
  const Index m = prev.size();
  const Matrix mu = model.transition_mean(prev.particles);
  const Matrix log_f = pairwise_log_density(model.transition_noise(), mu, mu);
  const Vector weighted = log_mixture_rows(log_f, log_of(prev.weights));
  const Vector unweighted = log_mixture_rows(log_f, Vector::Zero(m));
  const Vector log_lambda = model.observation_logpdf(mu, y) + weighted - unweighted;
  if (fallback) *fallback = false;
  try {
    return normalize_log_weights(log_lambda).weights;
  } catch (const DegeneracyError&) {
    if (fallback) *fallback = true;
    return Vector::Constant(m, 1.0 / static_cast<double>(m));
  }
}

Matrix sample_mixture(const ModelSpec& model, const MixtureProposal& proposal, Index count, RngStream& rng,
                      ResamplingScheme scheme, std::vector<Index>* components) {
  const std::vector<Index> comp = resample(scheme, proposal.weights, count, rng);
  Matrix x = perturb(model, gather_columns(proposal.centers, comp), rng);
  if (components) *components = comp;
  return x;
}

Vector mixture_log_weights(const ModelSpec& model, const ParticleSet& prev, const MixtureProposal& proposal,
                           const Vector& y, const Matrix& samples) {
  check_step_inputs(model, prev, y);
  check_proposal(prev, proposal);
  const Matrix mu = model.transition_mean(prev.particles);
  const Matrix log_f = pairwise_log_density(model.transition_noise(), samples, mu);
  return log_mixture_weights_from(log_f, log_of(prev.weights), proposal, model.observation_logpdf(samples, y));
}

Vector auxiliary_log_weights(const ModelSpec& model, const ParticleSet& prev, const MixtureProposal& proposal,
                             const Vector& y, const Matrix& samples, const std::vector<Index>& components) {
  check_step_inputs(model, prev, y);
  check_proposal(prev, proposal);
  if (static_cast<Index>(components.size()) != samples.cols())
    throw std::invalid_argument("auxiliary_log_weights: one component index per sample required");
  // The kernel is the ancestor's transition density, so f cancels.
  Vector out = model.observation_logpdf(samples, y);
  for (Index i = 0; i < out.size(); ++i) {
    const Index k = components[static_cast<std::size_t>(i)];
    const Index a = proposal.ancestors[static_cast<std::size_t>(k)];
    out[i] += std::log(prev.weights[a]) - std::log(proposal.weights[k]);
  }
  return out;
}

StepResult iapf_step(const ModelSpec& model, const ParticleSet& prev, const Vector& y, RngStream& rng,
                     const StepOptions& options) {
  const Index m = prev.size();
  MixtureProposal proposal;
  StepResult out;
  proposal.weights = iapf_mixture_weights(model, prev, y, &out.fallback);
  proposal.centers = model.transition_mean(prev.particles);
  proposal.ancestors.resize(static_cast<std::size_t>(m));
  std::iota(proposal.ancestors.begin(), proposal.ancestors.end(), Index{0});

  Matrix x = sample_mixture(model, proposal, m, rng, options.scheme);
  Vector log_w = mixture_log_weights(model, prev, proposal, y, x);
  out.partial_log_z = mean_log(log_w);
  out.particles = ParticleSet::weighted(std::move(x), std::move(log_w));
  out.mixture_weights = proposal.weights;
  out.proposal = std::move(proposal);
  return out;
}

double fa_apf_predictive_logpdf(const LgssmParams& p, const Vector& x_prev, const Vector& y) {
  const Vector mean = p.observation * (p.transition * x_prev + p.transition_offset) + p.observation_offset;
  const Matrix cov = p.observation * p.transition_cov * p.observation.transpose() + p.observation_cov;
  return gaussian_logpdf(y, mean, 0.5 * (cov + cov.transpose()));
}

StepResult fa_apf_step(const ModelSpec& model, const ParticleSet& prev, const Vector& y, RngStream& rng,
                       const StepOptions& options) {
  const LgssmParams* p = model.lgssm();
  if (!p) throw UnsupportedModelError("fa_apf requires the linear-Gaussian model");
  check_step_inputs(model, prev, y);
  const Index m = prev.size();
  const Index d = model.state_dim();

  Matrix pred_cov = p->observation * p->transition_cov * p->observation.transpose() + p->observation_cov;
  pred_cov = 0.5 * (pred_cov + pred_cov.transpose());
  const GaussianFactor predictive(pred_cov);
  const Matrix gain =
      pred_cov.llt().solve(p->observation * p->transition_cov).transpose();  // R C^T S^{-1}
  Matrix post_cov = (Matrix::Identity(d, d) - gain * p->observation) * p->transition_cov;
  const GaussianFactor posterior(0.5 * (post_cov + post_cov.transpose()));

  const Matrix mu = model.transition_mean(prev.particles);
  const Matrix resid = (-(p->observation * mu)).colwise() + (y - p->observation_offset);
  const Matrix white = predictive.whiten(resid);
  const Vector log_pred =
      (predictive.log_normalizer() - 0.5 * white.colwise().squaredNorm().array()).transpose().matrix();
  const Vector log_pre = log_of(prev.weights) + log_pred;
  const NormalizedWeights first_stage = normalize_log_weights(log_pre);

  const std::vector<Index> ancestors = resample(options.scheme, first_stage.weights, m, rng);
  Matrix x(d, m);
  for (Index i = 0; i < m; ++i) {
    const Index a = ancestors[static_cast<std::size_t>(i)];
    x.col(i) = mu.col(a) + gain * resid.col(a) + posterior.colour(rng.normal_vector(d));
  }

  StepResult out;
  out.partial_log_z = first_stage.log_sum;
  out.particles = ParticleSet::weighted(std::move(x), Vector::Constant(m, first_stage.log_sum));
  out.mixture_weights = first_stage.weights;
  return out;
}

SupportSelection oapf_select_support(const ModelSpec& model, const ParticleSet& prev, const Vector& y,
                                     Index kernels) {
  check_step_inputs(model, prev, y);
  if (kernels < 1 || kernels > prev.size())
    throw std::invalid_argument("oapf_select_support: need 1 <= K <= M");
  const Matrix mu = model.transition_mean(prev.particles);
  const Matrix log_f = pairwise_log_density(model.transition_noise(), mu, mu);
  const Vector log_rhs = model.observation_logpdf(mu, y) + log_mixture_rows(log_f, log_of(prev.weights));

  SupportSelection sel;
  sel.ancestors = select_top(log_rhs, kernels);
  sel.eval_points = gather_columns(mu, sel.ancestors);
  sel.log_rhs.resize(kernels);
  for (Index e = 0; e < kernels; ++e) sel.log_rhs[e] = log_rhs[sel.ancestors[static_cast<std::size_t>(e)]];
  return sel;
}

OapfSystem oapf_build_system(const ModelSpec& model, const ParticleSet& prev, const SupportSelection& support,
                             const Vector& y) {
  check_step_inputs(model, prev, y);
  if (support.size() < 1 || static_cast<Index>(support.ancestors.size()) != support.size())
    throw std::invalid_argument("oapf_build_system: invalid support");
  const Matrix mu = model.transition_mean(prev.particles);
  // Rows: evaluation points; columns: every previous particle's kernel.
  const Matrix log_f = pairwise_log_density(model.transition_noise(), support.eval_points, mu);
  const Vector log_target =
      model.observation_logpdf(support.eval_points, y) + log_mixture_rows(log_f, log_of(prev.weights));
  return assemble_system(gather_columns(log_f, support.ancestors), log_target);
}

OapfOptimization oapf_optimize(const ModelSpec& model, const ParticleSet& prev, const Vector& y, Index kernels) {
  check_step_inputs(model, prev, y);
  if (kernels < 1 || kernels > prev.size()) throw std::invalid_argument("oapf: need 1 <= K <= M");
  const Matrix mu = model.transition_mean(prev.particles);
  const Matrix log_f = pairwise_log_density(model.transition_noise(), mu, mu);
  const Vector log_rhs = model.observation_logpdf(mu, y) + log_mixture_rows(log_f, log_of(prev.weights));

  OapfOptimization opt;
  opt.support.ancestors = select_top(log_rhs, kernels);
  const auto& sel = opt.support.ancestors;
  opt.support.eval_points = gather_columns(mu, sel);
  opt.support.log_rhs.resize(kernels);
  Matrix design_log(kernels, kernels);
  for (Index e = 0; e < kernels; ++e) {
    const Index re = sel[static_cast<std::size_t>(e)];
    opt.support.log_rhs[e] = log_rhs[re];
    for (Index k = 0; k < kernels; ++k) design_log(e, k) = log_f(re, sel[static_cast<std::size_t>(k)]);
  }
  opt.system = assemble_system(design_log, opt.support.log_rhs);
  opt.solution = nnls_solve(opt.system.problem);

  const double total = opt.solution.lambda.sum();
  opt.proposal.centers = opt.support.eval_points;
  opt.proposal.ancestors = sel;
  if (opt.solution.converged && total > 0.0 && std::isfinite(total)) {
    opt.proposal.weights = opt.solution.lambda / total;
  } else {
    opt.fallback = true;
    opt.proposal.weights = Vector::Constant(kernels, 1.0 / static_cast<double>(kernels));
  }
  return opt;
}

StepResult oapf_step(const ModelSpec& model, const ParticleSet& prev, const Vector& y, Index kernels,
                     RngStream& rng, const StepOptions& options) {
  OapfOptimization opt = oapf_optimize(model, prev, y, kernels);
  Matrix x = sample_mixture(model, opt.proposal, prev.size(), rng, options.scheme);
  Vector log_w = mixture_log_weights(model, prev, opt.proposal, y, x);

  StepResult out;
  out.partial_log_z = mean_log(log_w);
  out.particles = ParticleSet::weighted(std::move(x), std::move(log_w));
  out.mixture_weights = opt.proposal.weights;
  out.fallback = opt.fallback;
  out.proposal = std::move(opt.proposal);
  return out;
}

ParticleSet initial_particles(const ModelSpec& model, Index count, RngStream& rng) {
  if (count < 1) throw std::invalid_argument("initial_particles: need at least one particle");
  Matrix x(model.state_dim(), count);
  for (Index m = 0; m < count; ++m) x.col(m) = model.sample_prior(rng);
  return ParticleSet::uniform(std::move(x));
}

StepResult filter_step(const ModelSpec& model, const FilterSettings& settings, const ParticleSet& prev,
                       const Vector& y, RngStream& rng) {
  switch (settings.kind) {
    case FilterKind::Bpf: return bpf_step(model, prev, y, rng, settings.step);
    case FilterKind::Apf: return apf_step(model, prev, y, rng, settings.step);
    case FilterKind::Iapf: return iapf_step(model, prev, y, rng, settings.step);
    case FilterKind::FaApf: return fa_apf_step(model, prev, y, rng, settings.step);
    case FilterKind::Oapf: {
      const Index k = settings.kernels > 0 ? settings.kernels : prev.size();
      return oapf_step(model, prev, y, k, rng, settings.step);
    }
  }
  throw std::invalid_argument("unknown filter kind");
}

FilterOutput run_filter(const ModelSpec& model, const FilterSettings& settings, const Matrix& observations,
                        RngStream& rng) {
  if (settings.particles < 1) throw std::invalid_argument("run_filter: need at least one particle");
  if (settings.kernels < 0 || settings.kernels > settings.particles)
    throw std::invalid_argument("run_filter: kernel count must lie in [0, M]");
  if (settings.step.ess_threshold && settings.kind != FilterKind::Bpf)
    throw std::invalid_argument("run_filter: the ESS-triggered resampling mode applies to the bootstrap filter only");
  if (settings.kind == FilterKind::FaApf && !model.lgssm())
    throw UnsupportedModelError("fa_apf requires the linear-Gaussian model");

  FilterOutput out;
  out.steps.reserve(static_cast<std::size_t>(observations.cols()));
  ParticleSet current = initial_particles(model, settings.particles, rng);
  for (Index t = 0; t < observations.cols(); ++t) {
    StepResult step = filter_step(model, settings, current, observations.col(t), rng);
    out.likelihood = accumulate_z(std::move(out.likelihood), step.partial_log_z);
    StepRecord rec;
    rec.ess = ess(step.particles.weights);
    rec.partial_log_z = step.partial_log_z;
    rec.joint_log_z = out.likelihood.joint_log_z;
    rec.sparsity = sparsity(step.mixture_weights);
    rec.mean = snis_mean(step.particles);
    rec.fallback = step.fallback;
    if (step.fallback) ++out.fallbacks;
    out.steps.push_back(std::move(rec));
    current = std::move(step.particles);
  }
  return out;
}

}  // namespace oapf
