#pragma once

// Coordinate ascent on the posterior means with the prior and residual
// variance held fixed. Serves as an independent oracle for stationarity of
// the direct objective: at a fixed point, z_j = b_j + d_j^2 x_j^T r is exactly
// T(b_j).

#include "gradvi/objective.hpp"

namespace gradvi {

struct CaviState {
  VectorXd b;
  /// y - X b, updated after every coordinate.
  VectorXd resid;
  int sweeps = 0;

  static CaviState start(const RegressionData& data, VectorXd b0);
  static CaviState zeros(const RegressionData& data);
};

/// One pass over j = 0..p-1 in ascending order; returns max_j |delta b_j|.
double cavi_sweep(CaviState& state, const RegressionData& data, const Prior& g, double sigma2);

struct CaviResult {
  VectorXd b;
  int n_sweeps = 0;
  bool converged = false;
  /// Direct objective at the fixed g, sigma2 after every sweep.
  std::vector<double> objective_trace;
};

struct CaviOptions {
  double tol = 1e-8;
  int max_sweeps = 5000;
  bool record_objective = false;
};

CaviResult cavi_fit(const RegressionData& data, const Prior& g, double sigma2,
                    const CaviOptions& opts = {}, const VectorXd* b0 = nullptr);

/// Coefficient block of the direct objective's gradient at (b, g, sigma2).
VectorXd coefficient_gradient(const RegressionData& data, const Eigen::Ref<const VectorXd>& b,
                              const Prior& g, double sigma2);

}  // namespace gradvi
