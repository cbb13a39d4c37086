#pragma once

#include <optional>
#include <vector>

#include "oapf/gaussian.hpp"

namespace oapf {

/// min ||design * lambda - target||_2^2 subject to lambda >= 0.
struct NnlsProblem {
  Matrix design;
  Vector target;
  /// Gradient tolerance; defaults to 10 eps E max_k ||design_k|| max(1, ||target||).
  std::optional<double> tol;
  /// Cap on outer (column-entering) iterations; defaults to 3K.
  std::optional<int> max_iter;

  double tolerance() const;
  int iteration_cap() const;
};

struct NnlsSolution {
  Vector lambda;
  /// ||design * lambda - target||_2, recomputed from lambda.
  double residual_norm = 0.0;
  /// Indices with lambda_k == 0.
  std::vector<Index> active_set;
  int iterations = 0;
  bool converged = false;
};

/// Lawson-Hanson active-set NNLS. Least-squares subproblems on the passive
/// columns use a thin QR factorization that is updated as columns enter
/// (Gram-Schmidt with reorthogonalization) and leave (Givens rotations).
/// Among candidate columns with equal gradient the lowest index enters.
///
/// If the iteration cap is hit, the best iterate so far is returned with
/// converged = false. Throws std::invalid_argument on empty or non-finite
/// input.
NnlsSolution nnls_solve(const NnlsProblem& problem);

/// Largest KKT violation of lambda: |grad_k| where lambda_k > 0 and
/// max(0, -grad_k) where lambda_k == 0, with grad = design^T (design lambda - target).
/// Throws std::invalid_argument on a negative entry.
double kkt_residual(const NnlsProblem& problem, const Vector& lambda);

}  // namespace oapf
