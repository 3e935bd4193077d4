#pragma once

// Limited-memory BFGS with a strong-Wolfe line search, for smooth
// unconstrained problems.

#include <Eigen/Core>
#include <functional>
#include <string_view>
#include <vector>

namespace gradvi {

using Eigen::VectorXd;

/// Returns f(x) and writes the gradient into `grad` (already sized).
using ObjectiveFn = std::function<double(const VectorXd& x, VectorXd& grad)>;

/// One accepted line-search step: phi(alpha) = f(x + alpha d).
struct StepRecord {
  int iteration = 0;
  double alpha = 0.0;
  double phi0 = 0.0;
  double dphi0 = 0.0;
  double phi = 0.0;
  double dphi = 0.0;
};

struct SolverOptions {
  int memory = 10;
  int max_iters = 2000;
  /// On the infinity norm of the gradient.
  double grad_tol = 1e-5;
  /// On |f_prev - f| / max(|f_prev|, |f|, 1) between accepted iterates.
  double rel_obj_tol = 1e-9;
  double c1 = 1e-4;
  double c2 = 0.9;
  int max_line_search = 40;
  /// Called after every accepted step.
  std::function<void(const StepRecord&)> on_step;
};

enum class SolverStatus { converged_grad, converged_obj, max_iters, line_search_failure };

std::string_view status_name(SolverStatus s);

struct SolverResult {
  VectorXd x;
  double f = 0.0;
  /// Objective at x0 followed by one entry per accepted iteration.
  std::vector<double> trace;
  double grad_norm = 0.0;
  int n_iters = 0;
  int n_evals = 0;
  SolverStatus status = SolverStatus::max_iters;
};

/// Deterministic: identical inputs give identical iterates. Throws
/// NumericalError when f or its gradient is non-finite at x0 or at an
/// accepted point; a non-finite trial point only shortens the step.
SolverResult minimize(const ObjectiveFn& f, VectorXd x0, const SolverOptions& opts = {});

}  // namespace gradvi
