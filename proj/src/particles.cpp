#include "oapf/particles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "oapf/errors.hpp"

namespace oapf {

NormalizedWeights normalize_log_weights(const Vector& log_w) {
  if (log_w.size() == 0) throw std::invalid_argument("normalize_log_weights: empty input");
  if (log_w.array().isNaN().any()) throw std::invalid_argument("normalize_log_weights: NaN weight");
  const double top = log_w.maxCoeff();
  if (top == -std::numeric_limits<double>::infinity())
    throw DegeneracyError("all particles have zero weight");
  if (top == std::numeric_limits<double>::infinity())
    throw std::invalid_argument("normalize_log_weights: infinite weight");
  const Eigen::ArrayXd shifted = (log_w.array() - top).unaryExpr([](double v) { return std::exp(v); });
  const double total = shifted.sum();
  NormalizedWeights out;
  out.weights = (shifted / total).matrix();
  out.log_sum = top + std::log(total);
  return out;
}

ParticleSet ParticleSet::uniform(Matrix particles) {
  const Index m = particles.cols();
  if (m < 1) throw std::invalid_argument("ParticleSet: need at least one particle");
  ParticleSet p;
  p.particles = std::move(particles);
  p.log_weights = Vector::Zero(m);
  p.weights = Vector::Constant(m, 1.0 / static_cast<double>(m));
  p.log_sum = std::log(static_cast<double>(m));
  return p;
}

ParticleSet ParticleSet::weighted(Matrix particles, Vector log_weights) {
  if (particles.cols() < 1) throw std::invalid_argument("ParticleSet: need at least one particle");
  if (particles.cols() != log_weights.size())
    throw std::invalid_argument("ParticleSet: weight count does not match particle count");
  NormalizedWeights nw = normalize_log_weights(log_weights);
  ParticleSet p;
  p.particles = std::move(particles);
  p.log_weights = std::move(log_weights);
  p.weights = std::move(nw.weights);
  p.log_sum = nw.log_sum;
  return p;
}

namespace {

std::vector<double> cumulative(const Vector& weights) {
  if (weights.size() == 0) throw std::invalid_argument("resample: empty weights");
  if ((weights.array() < 0.0).any() || !weights.allFinite())
    throw std::invalid_argument("resample: weights must be finite and non-negative");
  std::vector<double> cdf(static_cast<std::size_t>(weights.size()));
  double acc = 0.0;
  for (Index i = 0; i < weights.size(); ++i) {
    acc += weights[i];
    cdf[static_cast<std::size_t>(i)] = acc;
  }
  if (!(acc > 0.0)) throw std::invalid_argument("resample: weights sum to zero");
  return cdf;
}

Index locate(const std::vector<double>& cdf, double u) {
  const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  auto idx = static_cast<Index>(it - cdf.begin());
  idx = std::min<Index>(idx, static_cast<Index>(cdf.size()) - 1);
  // Never land on a zero-weight entry through round-off at the top end.
  while (idx > 0 && cdf[static_cast<std::size_t>(idx)] == cdf[static_cast<std::size_t>(idx - 1)]) --idx;
  return idx;
}

}  // namespace

std::vector<Index> multinomial_resample(const Vector& weights, Index count, RngStream& rng) {
  const std::vector<double> cdf = cumulative(weights);
  const double total = cdf.back();
  std::vector<Index> out(static_cast<std::size_t>(count));
  for (auto& idx : out) idx = locate(cdf, rng.uniform() * total);
  return out;
}

std::vector<Index> systematic_resample(const Vector& weights, Index count, RngStream& rng) {
  const std::vector<double> cdf = cumulative(weights);
  const double total = cdf.back();
  const double step = total / static_cast<double>(count);
  const double offset = rng.uniform() * step;
  std::vector<Index> out(static_cast<std::size_t>(count));
  for (Index i = 0; i < count; ++i)
    out[static_cast<std::size_t>(i)] = locate(cdf, offset + static_cast<double>(i) * step);
  return out;
}

std::vector<Index> resample(ResamplingScheme scheme, const Vector& weights, Index count, RngStream& rng) {
  return scheme == ResamplingScheme::Systematic ? systematic_resample(weights, count, rng)
                                                : multinomial_resample(weights, count, rng);
}

Vector snis_estimate(const ParticleSet& pset, const std::function<Vector(const Vector&)>& h) {
  Vector acc;
  for (Index m = 0; m < pset.size(); ++m) {
    const Vector v = h(pset.particles.col(m));
    if (m == 0) acc = Vector::Zero(v.size());
    acc += pset.weights[m] * v;
  }
  return acc;
}

Vector snis_mean(const ParticleSet& pset) { return pset.particles * pset.weights; }

LikelihoodEstimate accumulate_z(LikelihoodEstimate estimate, double partial_log_z) {
  if (!std::isfinite(partial_log_z)) throw std::invalid_argument("accumulate_z: non-finite partial estimate");
  estimate.partial_log_z.push_back(partial_log_z);
  estimate.joint_log_z += partial_log_z;
  return estimate;
}

}  // namespace oapf
