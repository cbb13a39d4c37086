#include "oapf/metrics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "oapf/errors.hpp"

namespace oapf {

double ess(const Vector& weights) {
  if (weights.size() == 0) throw std::invalid_argument("ess: empty weights");
  return 1.0 / weights.squaredNorm();
}

double nmse(const std::vector<Vector>& estimates, const std::vector<Vector>& truths) {
  if (estimates.size() != truths.size() || estimates.empty())
    throw std::invalid_argument("nmse: need equal, non-zero numbers of estimates and truths");
  double total = 0.0;
  for (std::size_t t = 0; t < truths.size(); ++t) {
    if (estimates[t].size() != truths[t].size()) throw std::invalid_argument("nmse: dimension mismatch");
    const double denom = truths[t].squaredNorm();
    if (denom == 0.0) throw std::invalid_argument("nmse: truth has zero norm at step " + std::to_string(t));
    total += (estimates[t] - truths[t]).squaredNorm() / denom;
  }
  return total / static_cast<double>(truths.size());
}

double sparsity(const Vector& lambda, double zero_tol) {
  if (lambda.size() == 0) return 0.0;
  const auto zeros = (lambda.array() < zero_tol).count();
  return static_cast<double>(zeros) / static_cast<double>(lambda.size());
}

QuadratureGrid QuadratureGrid::covering(double min_center, double max_center, double sd, Index points) {
  return QuadratureGrid{min_center - 8.0 * sd, max_center + 8.0 * sd, points};
}

double chi2_divergence(const LogDensity& target_logpdf, const LogDensity& proposal_logpdf,
                       const QuadratureGrid& grid, ChiSquareKind kind) {
  if (grid.points < 2 || !(grid.upper > grid.lower)) throw std::invalid_argument("chi2_divergence: bad grid");
  const Index n = grid.points;
  const double h = (grid.upper - grid.lower) / static_cast<double>(n - 1);
  Vector log_pi(n);
  Vector log_psi(n);
  for (Index i = 0; i < n; ++i) {
    const double x = grid.lower + h * static_cast<double>(i);
    log_pi[i] = target_logpdf(x);
    log_psi[i] = proposal_logpdf(x);
  }

  auto trapezoid = [&](const Eigen::ArrayXd& f) {
    return h * (f.sum() - 0.5 * (f[0] + f[n - 1]));
  };

  const double top = log_pi.maxCoeff();
  if (!std::isfinite(top)) throw std::invalid_argument("chi2_divergence: target is zero on the grid");
  const double log_norm = top + std::log(trapezoid((log_pi.array() - top).exp()));

  Eigen::ArrayXd integrand(n);
  for (Index i = 0; i < n; ++i) {
    const double lp = log_pi[i] - log_norm;
    const double lq = log_psi[i];
    if (lp == -std::numeric_limits<double>::infinity()) {
      integrand[i] = kind == ChiSquareKind::Pearson ? 0.0 : std::exp(lq);
      continue;
    }
    if (lq == -std::numeric_limits<double>::infinity())
      throw SupportError("chi2_divergence: proposal vanishes where the target is positive");
    if (kind == ChiSquareKind::Pearson) {
      integrand[i] = std::exp(2.0 * lp - lq);
    } else {
      // (pi - psi)^2 / psi expanded so that a tiny psi cannot underflow to 0/0.
      integrand[i] = std::exp(2.0 * lp - lq) - 2.0 * std::exp(lp) + std::exp(lq);
    }
  }
  const double integral = trapezoid(integrand);
  return kind == ChiSquareKind::Pearson ? integral - 1.0 : integral;
}

}  // namespace oapf
