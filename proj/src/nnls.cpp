#include "oapf/nnls.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace oapf {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
// A column whose component orthogonal to the passive set is below this
// fraction of its norm is treated as linearly dependent.
constexpr double kDependence = 1e-10;

/// Thin QR of the passive columns, A_P = Q R, together with Q^T b.
class ThinQr {
 public:
  ThinQr(Index rows, Index capacity, const Vector& target)
      : q_(rows, capacity), r_(Matrix::Zero(capacity, capacity)), qtb_(capacity), target_(target) {}

  Index size() const { return n_; }
  const std::vector<Index>& columns() const { return cols_; }

  bool append(const Vector& a, Index column) {
    if (n_ == q_.cols()) return false;
    const double a_norm = a.norm();
    if (a_norm == 0.0) return false;
    Vector v = a;
    Vector h = Vector::Zero(n_);
    if (n_ > 0) {
      for (int pass = 0; pass < 2; ++pass) {
        const Vector c = q_.leftCols(n_).transpose() * v;
        v.noalias() -= q_.leftCols(n_) * c;
        h += c;
      }
    }
    const double rho = v.norm();
    if (!(rho > kDependence * a_norm)) return false;
    q_.col(n_) = v / rho;
    r_.col(n_).setZero();
    r_.col(n_).head(n_) = h;
    r_(n_, n_) = rho;
    qtb_[n_] = q_.col(n_).dot(target_);
    cols_.push_back(column);
    ++n_;
    return true;
  }

  void remove(Index pos) {
    for (Index j = pos; j + 1 < n_; ++j) r_.col(j).head(j + 2) = r_.col(j + 1).head(j + 2);
    for (Index i = pos; i + 1 < n_; ++i) {
      const double a = r_(i, i);
      const double b = r_(i + 1, i);
      const double rr = std::hypot(a, b);
      if (rr == 0.0) continue;
      const double c = a / rr;
      const double s = b / rr;
      for (Index j = i; j + 1 < n_; ++j) {
        const double ri = r_(i, j);
        const double rj = r_(i + 1, j);
        r_(i, j) = c * ri + s * rj;
        r_(i + 1, j) = -s * ri + c * rj;
      }
      r_(i + 1, i) = 0.0;
      const double ti = qtb_[i];
      const double tj = qtb_[i + 1];
      qtb_[i] = c * ti + s * tj;
      qtb_[i + 1] = -s * ti + c * tj;
      const Vector qi = q_.col(i);
      const Vector qj = q_.col(i + 1);
      q_.col(i) = c * qi + s * qj;
      q_.col(i + 1) = -s * qi + c * qj;
    }
    r_.col(n_ - 1).setZero();
    r_.row(n_ - 1).setZero();
    cols_.erase(cols_.begin() + pos);
    --n_;
  }

  Vector solve() const {
    return r_.topLeftCorner(n_, n_).triangularView<Eigen::Upper>().solve(qtb_.head(n_));
  }

 private:
  Matrix q_;
  Matrix r_;
  Vector qtb_;
  const Vector& target_;
  std::vector<Index> cols_;
  Index n_ = 0;
};

void validate(const NnlsProblem& p) {
  if (p.design.rows() < 1 || p.design.cols() < 1)
    throw std::invalid_argument("nnls: design must have at least one row and column");
  if (p.target.size() != p.design.rows())
    throw std::invalid_argument("nnls: target length does not match design rows");
  if (!p.design.allFinite() || !p.target.allFinite())
    throw std::invalid_argument("nnls: non-finite entries in problem");
  if (p.tol && !(*p.tol >= 0.0)) throw std::invalid_argument("nnls: tolerance must be non-negative");
  if (p.max_iter && *p.max_iter < 1) throw std::invalid_argument("nnls: max_iter must be positive");
}

Vector passive_product(const Matrix& a, const std::vector<Index>& cols, const Vector& x) {
  Vector out = Vector::Zero(a.rows());
  for (Index c : cols) out.noalias() += x[c] * a.col(c);
  return out;
}

}  // namespace

double NnlsProblem::tolerance() const {
  if (tol) return *tol;
  const double max_col = design.colwise().norm().maxCoeff();
  return 10.0 * kEps * static_cast<double>(design.rows()) * max_col * std::max(1.0, target.norm());
}

int NnlsProblem::iteration_cap() const {
  return max_iter ? *max_iter : static_cast<int>(3 * design.cols());
}

NnlsSolution nnls_solve(const NnlsProblem& problem) {
  validate(problem);
  const Matrix& a = problem.design;
  const Vector& b = problem.target;
  const Index rows = a.rows();
  const Index k = a.cols();
  const double tol = problem.tolerance();
  const int cap = problem.iteration_cap();

  Vector x = Vector::Zero(k);
  std::vector<char> passive(static_cast<std::size_t>(k), 0);
  std::vector<char> rejected(static_cast<std::size_t>(k), 0);
  ThinQr qr(rows, std::min(rows, k), b);
  Vector w = a.transpose() * b;

  NnlsSolution sol;
  while (true) {
    Index enter = -1;
    double best = tol;
    for (Index j = 0; j < k; ++j) {
      const auto sj = static_cast<std::size_t>(j);
      if (!passive[sj] && !rejected[sj] && w[j] > best) {
        best = w[j];
        enter = j;
      }
    }
    if (enter < 0) {
      sol.converged = true;
      break;
    }
    if (sol.iterations >= cap) break;
    ++sol.iterations;

    if (!qr.append(a.col(enter), enter)) {
      rejected[static_cast<std::size_t>(enter)] = 1;
      continue;
    }
    Vector z = qr.solve();
    if (!(z[z.size() - 1] > 0.0)) {
      qr.remove(qr.size() - 1);
      rejected[static_cast<std::size_t>(enter)] = 1;
      continue;
    }
    passive[static_cast<std::size_t>(enter)] = 1;
    std::fill(rejected.begin(), rejected.end(), 0);

    // Step back towards the feasible region until the passive solution is
    // strictly positive.
    while ((z.array() <= 0.0).any()) {
      const auto& cols = qr.columns();
      double alpha = std::numeric_limits<double>::infinity();
      Index hit = -1;
      for (Index i = 0; i < z.size(); ++i) {
        if (z[i] > 0.0) continue;
        const double xi = x[cols[static_cast<std::size_t>(i)]];
        const double step = xi / (xi - z[i]);
        if (step < alpha) {
          alpha = step;
          hit = i;
        }
      }
      for (Index i = 0; i < z.size(); ++i) {
        const Index c = cols[static_cast<std::size_t>(i)];
        x[c] += alpha * (z[i] - x[c]);
      }
      x[cols[static_cast<std::size_t>(hit)]] = 0.0;
      for (Index i = z.size() - 1; i >= 0; --i) {
        const Index c = qr.columns()[static_cast<std::size_t>(i)];
        if (x[c] <= 0.0) {
          x[c] = 0.0;
          passive[static_cast<std::size_t>(c)] = 0;
          qr.remove(i);
        }
      }
      z = qr.size() > 0 ? qr.solve() : Vector();
    }
    for (Index i = 0; i < z.size(); ++i) x[qr.columns()[static_cast<std::size_t>(i)]] = z[i];

    w.noalias() = a.transpose() * (b - passive_product(a, qr.columns(), x));
  }

  // Re-solve the final passive set from scratch to shed drift accumulated by
  // the factor updates.
  if (sol.converged && qr.size() > 0) {
    const auto& cols = qr.columns();
    Matrix sub(rows, qr.size());
    for (Index i = 0; i < qr.size(); ++i) sub.col(i) = a.col(cols[static_cast<std::size_t>(i)]);
    const Vector fresh = sub.householderQr().solve(b);
    if (fresh.allFinite() && (fresh.array() > 0.0).all())
      for (Index i = 0; i < qr.size(); ++i) x[cols[static_cast<std::size_t>(i)]] = fresh[i];
  }

  sol.lambda = x.cwiseMax(0.0);
  sol.residual_norm = (a * sol.lambda - b).norm();
  for (Index j = 0; j < k; ++j)
    if (sol.lambda[j] == 0.0) sol.active_set.push_back(j);
  return sol;
}

double kkt_residual(const NnlsProblem& problem, const Vector& lambda) {
  validate(problem);
  if (lambda.size() != problem.design.cols())
    throw std::invalid_argument("kkt_residual: lambda has wrong length");
  if ((lambda.array() < 0.0).any()) throw std::invalid_argument("kkt_residual: lambda must be non-negative");
  const Vector grad = problem.design.transpose() * (problem.design * lambda - problem.target);
  double worst = 0.0;
  for (Index j = 0; j < lambda.size(); ++j) {
    const double v = lambda[j] > 0.0 ? std::abs(grad[j]) : std::max(0.0, -grad[j]);
    worst = std::max(worst, v);
  }
  return worst;
}

}  // namespace oapf
