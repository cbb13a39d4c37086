#include "oapf/toy.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include "oapf/csv.hpp"

namespace oapf {

namespace {

double normal_logpdf(double x, double mean, double sd) {
  const double z = (x - mean) / sd;
  return -0.5 * z * z - std::log(sd) - 0.5 * std::log(2.0 * std::numbers::pi);
}

double lse2(double a, double b) {
  if (a == -INFINITY) return b;
  if (b == -INFINITY) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

}  // namespace

ToyVariant toy_variant(const std::string& name) {
  ToyVariant v;
  v.name = name;
  v.particles.resize(4);
  v.weights.resize(4);
  v.kernel_sd = 0.5;
  if (name == "a") {
    v.particles << 2.0, 2.5, 3.0, 3.5;
    v.weights << 0.3, 0.3, 0.2, 0.2;
    v.likelihood_mean = 3.0;
    v.likelihood_sd = 0.8;
  } else if (name == "b") {
    v.particles << 2.0, 2.5, 5.0, 5.5;
    v.weights << 7.0 / 22.0, 1.0 / 11.0, 0.5, 1.0 / 11.0;
    v.likelihood_mean = 3.5;
    v.likelihood_sd = 1.2;
  } else {
    throw std::invalid_argument("toy variant must be \"a\" or \"b\", got \"" + name + "\"");
  }
  return v;
}

ToyProblem toy_problem(const ToyVariant& v) {
  if (v.particles.size() < 1 || v.particles.size() != v.weights.size())
    throw std::invalid_argument("toy: particles and weights must have equal, non-zero length");
  if (!(v.kernel_sd > 0.0) || !(v.likelihood_sd > 0.0)) throw std::invalid_argument("toy: widths must be positive");
  LgssmParams p;
  p.transition = Matrix::Identity(1, 1);
  p.transition_offset = Vector::Zero(1);
  p.transition_cov = Matrix::Constant(1, 1, v.kernel_sd * v.kernel_sd);
  p.observation = Matrix::Identity(1, 1);
  p.observation_offset = Vector::Zero(1);
  p.observation_cov = Matrix::Constant(1, 1, v.likelihood_sd * v.likelihood_sd);
  p.prior_mean = Vector::Zero(1);
  p.prior_cov = Matrix::Identity(1, 1);
  Vector log_w = v.weights.array().log().matrix();
  return ToyProblem{ModelSpec(std::move(p)), ParticleSet::weighted(v.particles.transpose(), std::move(log_w)),
                    Vector::Constant(1, v.likelihood_mean)};
}

double toy_proposal_logpdf(const ToyVariant& v, const Vector& lambda, double x) {
  double acc = -INFINITY;
  for (Index k = 0; k < lambda.size(); ++k)
    if (lambda[k] > 0.0) acc = lse2(acc, std::log(lambda[k]) + normal_logpdf(x, v.particles[k], v.kernel_sd));
  return acc;
}

double toy_target_logpdf(const ToyVariant& v, double x) {
  const Vector w = v.weights / v.weights.sum();
  return normal_logpdf(x, v.likelihood_mean, v.likelihood_sd) + toy_proposal_logpdf(v, w, x);
}

ToyResult run_toy(const ToyVariant& variant, ChiSquareKind kind) {
  const ToyProblem prob = toy_problem(variant);
  const Index m = prob.prev.size();
  ToyResult out;
  out.variant = variant;
  out.grid = QuadratureGrid::covering(variant.particles.minCoeff(), variant.particles.maxCoeff(),
                                      std::max(variant.kernel_sd, variant.likelihood_sd));

  const Vector log_g = prob.model.observation_logpdf(Matrix(prob.model.transition_mean(prob.prev.particles)), prob.y);
  const Vector apf = normalize_log_weights(prob.prev.log_weights + log_g).weights;
  const Vector iapf = iapf_mixture_weights(prob.model, prob.prev, prob.y);
  const OapfOptimization opt = oapf_optimize(prob.model, prob.prev, prob.y, m);

  auto target = [&](double x) { return toy_target_logpdf(variant, x); };
  for (auto [kind_f, lambda] : {std::pair{FilterKind::Bpf, prob.prev.weights}, std::pair{FilterKind::Apf, apf},
                                std::pair{FilterKind::Iapf, iapf}, std::pair{FilterKind::Oapf, opt.proposal.weights}}) {
    ToyProposal p;
    p.filter = kind_f;
    p.mixture_weights = lambda;
    auto proposal = [&](double x) { return toy_proposal_logpdf(variant, p.mixture_weights, x); };
    p.chi2 = chi2_divergence(target, proposal, out.grid, kind);
    out.proposals.push_back(std::move(p));
  }
  return out;
}

void write_toy_densities(const std::filesystem::path& path, const ToyResult& result, Index points) {
  if (points < 2) throw std::invalid_argument("write_toy_densities: need at least two points");
  // Normalizing constant of the target, from the full quadrature grid.
  const QuadratureGrid& g = result.grid;
  const double h = (g.upper - g.lower) / static_cast<double>(g.points - 1);
  double z = 0.0;
  for (Index i = 0; i < g.points; ++i) {
    const double f = std::exp(toy_target_logpdf(result.variant, g.lower + h * static_cast<double>(i)));
    z += (i == 0 || i == g.points - 1) ? 0.5 * f : f;
  }
  z *= h;

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "x,target";
  for (const auto& p : result.proposals) out << ',' << to_string(p.filter);
  out << '\n';
  const double step = (g.upper - g.lower) / static_cast<double>(points - 1);
  for (Index i = 0; i < points; ++i) {
    const double x = g.lower + step * static_cast<double>(i);
    out << format_number(x) << ',' << format_number(std::exp(toy_target_logpdf(result.variant, x)) / z);
    for (const auto& p : result.proposals)
      out << ',' << format_number(std::exp(toy_proposal_logpdf(result.variant, p.mixture_weights, x)));
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace oapf
