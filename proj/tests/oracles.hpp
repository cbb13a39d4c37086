#pragma once

// Reference computations used only by the tests. They are deliberately naive
// and share no code with the library.

#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

inline double normal_pdf(double x, double mean, double sd) {
  const double z = (x - mean) / sd;
  return std::exp(-0.5 * z * z) / (sd * std::sqrt(2.0 * std::numbers::pi));
}

inline double normal_logpdf(double x, double mean, double sd) { return std::log(normal_pdf(x, mean, sd)); }

/// log N(x; mean, cov) through a dense inverse and determinant.
inline double mvn_logpdf(const Eigen::VectorXd& x, const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov) {
  const Eigen::VectorXd r = x - mean;
  const double quad = r.dot(cov.inverse() * r);
  return -0.5 * (static_cast<double>(x.size()) * std::log(2.0 * std::numbers::pi) + std::log(cov.determinant()) + quad);
}

/// log p(y_{1:T}) of a linear-Gaussian model from the joint Gaussian of the
/// stacked observations.
inline double lgssm_joint_log_marginal(const Eigen::MatrixXd& A, const Eigen::VectorXd& c, const Eigen::MatrixXd& R,
                                       const Eigen::MatrixXd& C, const Eigen::VectorXd& g, const Eigen::MatrixXd& Q,
                                       const Eigen::VectorXd& m0, const Eigen::MatrixXd& S0,
                                       const Eigen::MatrixXd& ys) {
  const auto d = A.rows();
  const auto p = C.rows();
  const auto T = ys.cols();
  // x_t = A^t x_0 + sum_{s=1}^t A^{t-s} (c + e_s)
  std::vector<Eigen::MatrixXd> Apow(static_cast<std::size_t>(T + 1));
  Apow[0] = Eigen::MatrixXd::Identity(d, d);
  for (Eigen::Index t = 1; t <= T; ++t) Apow[static_cast<std::size_t>(t)] = A * Apow[static_cast<std::size_t>(t - 1)];

  std::vector<Eigen::VectorXd> mx(static_cast<std::size_t>(T + 1));
  mx[0] = m0;
  for (Eigen::Index t = 1; t <= T; ++t) mx[static_cast<std::size_t>(t)] = A * mx[static_cast<std::size_t>(t - 1)] + c;

  auto cov_x = [&](Eigen::Index s, Eigen::Index t) {  // Cov(x_s, x_t)
    Eigen::MatrixXd out = Apow[static_cast<std::size_t>(s)] * S0 * Apow[static_cast<std::size_t>(t)].transpose();
    for (Eigen::Index u = 1; u <= std::min(s, t); ++u)
      out += Apow[static_cast<std::size_t>(s - u)] * R * Apow[static_cast<std::size_t>(t - u)].transpose();
    return out;
  };

  Eigen::VectorXd mean(p * T);
  Eigen::MatrixXd cov(p * T, p * T);
  Eigen::VectorXd y(p * T);
  for (Eigen::Index s = 1; s <= T; ++s) {
    mean.segment((s - 1) * p, p) = C * mx[static_cast<std::size_t>(s)] + g;
    y.segment((s - 1) * p, p) = ys.col(s - 1);
    for (Eigen::Index t = 1; t <= T; ++t) {
      Eigen::MatrixXd block = C * cov_x(s, t) * C.transpose();
      if (s == t) block += Q;
      cov.block((s - 1) * p, (t - 1) * p, p, p) = block;
    }
  }
  return mvn_logpdf(y, mean, cov);
}

/// Exhaustive NNLS: the best feasible unconstrained least-squares solution
/// over every subset of columns.
inline double nnls_enumerate(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, Eigen::VectorXd* best_x = nullptr) {
  const auto k = A.cols();
  double best = b.squaredNorm();
  Eigen::VectorXd best_sol = Eigen::VectorXd::Zero(k);
  for (unsigned mask = 1; mask < (1u << k); ++mask) {
    std::vector<Eigen::Index> cols;
    for (Eigen::Index j = 0; j < k; ++j)
      if (mask & (1u << j)) cols.push_back(j);
    Eigen::MatrixXd sub(A.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t i = 0; i < cols.size(); ++i) sub.col(static_cast<Eigen::Index>(i)) = A.col(cols[i]);
    const Eigen::VectorXd z = sub.completeOrthogonalDecomposition().solve(b);
    if ((z.array() < 0.0).any()) continue;
    const double obj = (sub * z - b).squaredNorm();
    if (obj < best) {
      best = obj;
      best_sol.setZero();
      for (std::size_t i = 0; i < cols.size(); ++i) best_sol[cols[i]] = z[static_cast<Eigen::Index>(i)];
    }
  }
  if (best_x) *best_x = best_sol;
  return best;
}

/// Trapezoid rule of f on [lo, hi] with n nodes.
template <class F>
double trapezoid(F f, double lo, double hi, int n) {
  const double h = (hi - lo) / (n - 1);
  double acc = 0.5 * (f(lo) + f(hi));
  for (int i = 1; i < n - 1; ++i) acc += f(lo + h * i);
  return acc * h;
}

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

inline MeanSe mean_se(const std::vector<double>& v) {
  MeanSe out;
  for (double x : v) out.mean += x;
  out.mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - out.mean) * (x - out.mean);
  out.se = std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
  return out;
}

}  // namespace oracle
