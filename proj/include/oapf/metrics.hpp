#pragma once

#include <functional>
#include <vector>

#include "oapf/gaussian.hpp"

namespace oapf {

/// Effective sample size 1 / sum w^2 of normalized weights.
double ess(const Vector& weights);

/// Mean over t of ||estimate_t - truth_t||^2 / ||truth_t||^2. Throws
/// std::invalid_argument on length mismatch or a zero-norm truth.
double nmse(const std::vector<Vector>& estimates, const std::vector<Vector>& truths);

/// Fraction of entries below zero_tol.
double sparsity(const Vector& lambda, double zero_tol = 1e-12);

/// Uniform 1-D grid [lower, upper] with `points` nodes.
struct QuadratureGrid {
  double lower = 0.0;
  double upper = 1.0;
  Index points = 20001;

  /// Grid spanning [min center - 8 sd, max center + 8 sd].
  static QuadratureGrid covering(double min_center, double max_center, double sd, Index points = 20001);
};

enum class ChiSquareKind {
  /// int pi^2 / psi - 1
  Pearson,
  /// int (pi - psi)^2 / psi
  Symmetric,
};

using LogDensity = std::function<double(double)>;

/// Chi-square divergence of the proposal psi from the target pi by trapezoidal
/// quadrature. The target may be unnormalized; it is normalized on the grid
/// first. Throws SupportError where psi vanishes but pi does not.
double chi2_divergence(const LogDensity& target_logpdf, const LogDensity& proposal_logpdf,
                       const QuadratureGrid& grid, ChiSquareKind kind = ChiSquareKind::Pearson);

}  // namespace oapf
