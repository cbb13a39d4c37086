#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "oapf/models.hpp"
#include "oapf/nnls.hpp"
#include "oapf/particles.hpp"

namespace oapf {

enum class FilterKind { Bpf, Apf, Iapf, FaApf, Oapf };

std::string to_string(FilterKind kind);
std::optional<FilterKind> parse_filter_kind(std::string_view name);

struct StepOptions {
  ResamplingScheme scheme = ResamplingScheme::Multinomial;
  /// Bootstrap filter only: resample when ESS < threshold * M instead of at
  /// every step.
  std::optional<double> ess_threshold;
};

/// psi(x) = sum_k weights[k] f(x | prev particle ancestors[k]). Kernel k is
/// the transition kernel of particle ancestors[k]; centers holds the kernel
/// means, one per column.
struct MixtureProposal {
  Matrix centers;
  Vector weights;
  std::vector<Index> ancestors;

  Index size() const { return weights.size(); }
};

struct StepResult {
  ParticleSet particles;
  double partial_log_z = 0.0;
  /// Mixture weights that generated this step's particles, indexed like the
  /// kernels that were available (the previous particles, or the K selected
  /// kernels for the optimized filter).
  Vector mixture_weights;
  /// Set when the mixture weights fell back to uniform.
  bool fallback = false;
  std::optional<MixtureProposal> proposal;
};

/// Bootstrap filter: resample, propagate through f, weight by g.
StepResult bpf_step(const ModelSpec& model, const ParticleSet& prev, const Vector& y, RngStream& rng,
                    const StepOptions& options = {});

/// Auxiliary filter with first-stage weights w g(y | mu) and second-stage
/// weights g(y | x) / g(y | mu_ancestor).
StepResult apf_step(const ModelSpec& model, const ParticleSet& prev, const Vector& y, RngStream& rng,
                    const StepOptions& options = {});

/// Improved-APF mixture weights over all M transition kernels:
///   lambda_m ~ g(y | mu_m) sum_j w_j f(mu_m | x_j) / sum_j f(mu_m | x_j).
/// Falls back to uniform (and sets *fallback) if every weight vanishes.
Vector iapf_mixture_weights(const ModelSpec& model, const ParticleSet& prev, const Vector& y,
                            bool* fallback = nullptr);

/// Improved APF: i.i.d. draws from the IAPF mixture, weighted against the full
/// mixture.
StepResult iapf_step(const ModelSpec& model, const ParticleSet& prev, const Vector& y, RngStream& rng,
                     const StepOptions& options = {});

/// Fully adapted APF; only the linear-Gaussian model admits the closed-form
/// predictive likelihood. Throws UnsupportedModelError otherwise.
StepResult fa_apf_step(const ModelSpec& model, const ParticleSet& prev, const Vector& y, RngStream& rng,
                       const StepOptions& options = {});

/// log N(y; C(A x + c) + g, C R C^T + Q) for a linear-Gaussian model.
double fa_apf_predictive_logpdf(const LgssmParams& params, const Vector& x_prev, const Vector& y);

/// Evaluation points (kernel centers) retained for the weight optimization.
struct SupportSelection {
  Matrix eval_points;
  /// log of the approximate filtering density g(y|z) sum_j w_j f(z|x_j) at
  /// each evaluation point.
  Vector log_rhs;
  /// Previous-particle index owning each evaluation point / kernel.
  std::vector<Index> ancestors;

  Index size() const { return eval_points.cols(); }
};

/// Keeps the K transition-kernel centers with the largest approximate
/// filtering density; ties go to the lower index. The retained centers are
/// reported in ascending ancestor order. Throws std::invalid_argument unless
/// 1 <= K <= M.
SupportSelection oapf_select_support(const ModelSpec& model, const ParticleSet& prev, const Vector& y,
                                     Index kernels);

/// Linear system matching the mixture proposal to the approximate filtering
/// density at the evaluation points. The design and target are exponentiated
/// after subtracting their own maximum log entry; because NNLS is equivariant
/// under positive scaling, this changes the solution only by a positive
/// factor, which the later normalization removes.
struct OapfSystem {
  NnlsProblem problem;
  double log_design_scale = 0.0;
  double log_target_scale = 0.0;
};

/// Throws DegeneracyError if every target entry is zero.
OapfSystem oapf_build_system(const ModelSpec& model, const ParticleSet& prev, const SupportSelection& support,
                             const Vector& y);

struct OapfOptimization {
  SupportSelection support;
  OapfSystem system;
  NnlsSolution solution;
  MixtureProposal proposal;
  bool fallback = false;
};

/// Selection, system assembly, NNLS and normalization of the mixture weights.
/// Falls back to uniform weights over the K kernels when the solver returns
/// zero or does not converge.
OapfOptimization oapf_optimize(const ModelSpec& model, const ParticleSet& prev, const Vector& y,
                               Index kernels);

/// One step of the optimized auxiliary particle filter.
StepResult oapf_step(const ModelSpec& model, const ParticleSet& prev, const Vector& y, Index kernels,
                     RngStream& rng, const StepOptions& options = {});

/// Draws `count` samples from the mixture; component indices are written to
/// `components` when given.
Matrix sample_mixture(const ModelSpec& model, const MixtureProposal& proposal, Index count, RngStream& rng,
                      ResamplingScheme scheme = ResamplingScheme::Multinomial,
                      std::vector<Index>* components = nullptr);

/// Mixture importance weights for samples drawn from `proposal`:
///   log g(y|x) + log sum_i w_i f(x | x_i) - log sum_k lambda_k f(x | x_{a_k}).
Vector mixture_log_weights(const ModelSpec& model, const ParticleSet& prev, const MixtureProposal& proposal,
                           const Vector& y, const Matrix& samples);

/// Per-component (extended-space) weights for the same samples:
///   log g(y|x) + log w_a f(x | x_a) - log lambda_k f(x | x_a), with a = a_k
/// the ancestor of the component that generated x.
Vector auxiliary_log_weights(const ModelSpec& model, const ParticleSet& prev, const MixtureProposal& proposal,
                             const Vector& y, const Matrix& samples, const std::vector<Index>& components);

struct FilterSettings {
  FilterKind kind = FilterKind::Bpf;
  Index particles = 100;
  /// Kernel count for the optimized filter; 0 means K = M.
  Index kernels = 0;
  StepOptions step;
};

struct StepRecord {
  double ess = 0.0;
  double partial_log_z = 0.0;
  double joint_log_z = 0.0;
  double sparsity = 0.0;
  Vector mean;
  bool fallback = false;
};

struct FilterOutput {
  std::vector<StepRecord> steps;
  LikelihoodEstimate likelihood;
  int fallbacks = 0;
};

/// Draws M particles from the prior with weights 1/M.
ParticleSet initial_particles(const ModelSpec& model, Index count, RngStream& rng);

/// Advances any of the filters by one step.
StepResult filter_step(const ModelSpec& model, const FilterSettings& settings, const ParticleSet& prev,
                       const Vector& y, RngStream& rng);

/// Runs a filter over one observation per column. Throws DegeneracyError if
/// the cloud collapses.
FilterOutput run_filter(const ModelSpec& model, const FilterSettings& settings, const Matrix& observations,
                        RngStream& rng);

}  // namespace oapf
