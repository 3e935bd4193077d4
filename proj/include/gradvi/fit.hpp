#pragma once

// Fitting entry points: initialization, optional prior warm-up, the
// quasi-Newton solve and result assembly.

#include <optional>
#include <vector>

#include "gradvi/objective.hpp"
#include "gradvi/optim.hpp"

namespace gradvi {

struct FitOptions {
  Method method = Method::compound;
  PriorFamily family = PriorFamily::ash;
  /// Ash grid size; ignored when `grid` is given.
  int k_mix = 20;
  std::vector<double> grid;
  /// Starting prior; defaults to equal mixture proportions (and a unit slab
  /// variance for point-normal).
  std::optional<Prior> prior_init;
  double sigma2_init = 1.0;
  /// Warm-start coefficients (length p). Null initialization when absent.
  std::optional<VectorXd> init;
  /// Prior-only iterations before the main solve; -1 means 50 when warm
  /// started and 0 otherwise.
  int prior_warmup_iters = -1;
  /// Blocks optimized in the main solve.
  BlockMask free;
  SolverOptions solver;
  /// Centre y and the columns of X and scale columns to unit variance.
  bool standardize = false;
};

struct FitTimings {
  double matvec_seconds = 0.0;
  double inversion_seconds = 0.0;
  double total_seconds = 0.0;
};

struct FitResult {
  Method method = Method::compound;
  /// Posterior means on the scale of the data passed to fit().
  VectorXd coef;
  /// Solver variables: coefficients (direct) or z (compound), on the fitted scale.
  VectorXd solver_coef;
  double intercept = 0.0;
  Prior prior = AshPrior::uniform({0.0});
  double sigma2 = 0.0;
  double elbo = 0.0;
  double elbo_init = 0.0;
  std::vector<double> elbo_trace;
  int n_iters = 0;
  int n_evals = 0;
  int warmup_iters = 0;
  double grad_norm = 0.0;
  SolverStatus status = SolverStatus::max_iters;
  FitTimings timing;
};

Prior initial_prior(const FitOptions& opts);

FitResult fit(const RegressionData& data, const FitOptions& opts = {});

/// X coef + intercept.
VectorXd predict(const RegressionData& data, const FitResult& result);

struct TrendFilterFit {
  FitResult fit;
  VectorXd trend;
};

/// Empirical Bayes trend filtering of order k in {0, 1, 2} against H^(k+1).
TrendFilterFit fit_trendfilter(const Eigen::Ref<const VectorXd>& y, int order, bool scaled,
                               const FitOptions& opts = {});

/// Minimizes `objective` over the free entries of `x0`, holding the rest fixed.
SolverResult minimize_blocks(const Objective& objective, const VectorXd& x0,
                             const BlockMask& mask, const SolverOptions& opts);

}  // namespace gradvi
