#pragma once

#include <functional>
#include <vector>

#include "oapf/gaussian.hpp"
#include "oapf/rng.hpp"

namespace oapf {

struct NormalizedWeights {
  Vector weights;
  double log_sum = 0.0;
};

/// weights = exp(log_w - log_sum) with log_sum = log sum exp(log_w).
/// Throws DegeneracyError when every entry is -inf.
NormalizedWeights normalize_log_weights(const Vector& log_w);

/// Weighted particle cloud at one time step; particles are stored one per
/// column.
struct ParticleSet {
  Matrix particles;
  Vector log_weights;  // unnormalized
  Vector weights;      // normalized
  double log_sum = 0.0;

  Index size() const { return particles.cols(); }
  Index dim() const { return particles.rows(); }

  /// Particles with equal weights 1/M (unnormalized log weights all zero).
  static ParticleSet uniform(Matrix particles);
  /// Normalizes `log_weights` and packages the cloud.
  static ParticleSet weighted(Matrix particles, Vector log_weights);
};

enum class ResamplingScheme { Multinomial, Systematic };

/// `count` i.i.d. categorical draws from `weights`.
std::vector<Index> multinomial_resample(const Vector& weights, Index count, RngStream& rng);
/// Systematic resampling: one uniform offset, evenly spaced positions.
std::vector<Index> systematic_resample(const Vector& weights, Index count, RngStream& rng);
std::vector<Index> resample(ResamplingScheme scheme, const Vector& weights, Index count, RngStream& rng);

/// Self-normalized importance sampling estimate sum_m w_m h(x_m).
Vector snis_estimate(const ParticleSet& pset, const std::function<Vector(const Vector&)>& h);
/// Posterior mean, i.e. snis_estimate with the identity.
Vector snis_mean(const ParticleSet& pset);

/// Per-step log normalizing-constant estimates and their running sum.
struct LikelihoodEstimate {
  std::vector<double> partial_log_z;
  double joint_log_z = 0.0;
};

/// Appends one step; throws std::invalid_argument on a non-finite value.
LikelihoodEstimate accumulate_z(LikelihoodEstimate estimate, double partial_log_z);

}  // namespace oapf
