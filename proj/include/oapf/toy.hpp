#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "oapf/filters.hpp"
#include "oapf/metrics.hpp"

namespace oapf {

/// A 1-D mixture-matching problem: previous particles with weights, Gaussian
/// transition kernels of common width and a Gaussian likelihood.
struct ToyVariant {
  std::string name;
  Vector particles;
  Vector weights;
  double likelihood_mean = 0.0;
  double likelihood_sd = 1.0;
  double kernel_sd = 1.0;
};

/// The two shipped settings, "a" and "b". Throws std::invalid_argument on any
/// other name.
ToyVariant toy_variant(const std::string& name);

/// The toy as a scalar linear-Gaussian model (x_t = x_{t-1} + noise, y_t = x_t
/// + noise) together with its particle set and observation.
struct ToyProblem {
  ModelSpec model;
  ParticleSet prev;
  Vector y;
};
ToyProblem toy_problem(const ToyVariant& variant);

struct ToyProposal {
  FilterKind filter;
  /// Weights on the transition kernels of the previous particles.
  Vector mixture_weights;
  double chi2 = 0.0;
};

struct ToyResult {
  ToyVariant variant;
  QuadratureGrid grid;
  std::vector<ToyProposal> proposals;  // bpf, apf, iapf, oapf
};

/// Builds the four proposals and their divergence from the filtering density
/// g(y|x) sum_j w_j f(x|x_j). Deterministic.
ToyResult run_toy(const ToyVariant& variant, ChiSquareKind kind = ChiSquareKind::Pearson);

/// log of the proposal sum_k lambda_k f(x | particle_k).
double toy_proposal_logpdf(const ToyVariant& variant, const Vector& lambda, double x);
/// log of the unnormalized filtering density.
double toy_target_logpdf(const ToyVariant& variant, double x);

/// Writes x, normalized target and the four proposal densities on `points`
/// evenly spaced nodes of the quadrature interval.
void write_toy_densities(const std::filesystem::path& path, const ToyResult& result, Index points = 1001);

}  // namespace oapf
