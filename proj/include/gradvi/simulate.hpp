#pragma once

// Seeded generators for the sparse-regression and trend-filtering designs,
// plus the evaluation metrics used to compare fits.

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "gradvi/linop.hpp"

namespace gradvi {

enum class Design { iid, block };
std::string_view design_name(Design d);
Design parse_design(std::string_view name);

struct LinregSpec {
  int n = 500;
  int p = 10000;
  int s = 10;
  double pve = 0.6;
  Design design = Design::iid;
  std::uint64_t seed = 1;
  int n_blocks = 3;
  int min_block_size = 2000;
  double block_corr = 0.95;
};

struct LinregSim {
  RowMatrixXd X;
  VectorXd y;
  VectorXd b_true;
  double sigma2 = 0.0;
  std::vector<int> causal;       // sorted
  std::vector<int> block_sizes;  // empty for iid
};

/// Throws DomainError for an invalid spec.
LinregSim sim_linreg(const LinregSpec& spec);

/// Noise variance hitting the target PVE: var_xb (1 - pve) / pve.
double noise_for_pve(double var_xb, double pve);

/// Unbiased sample variance.
double sample_variance(const Eigen::Ref<const VectorXd>& v);

struct TrendSpec {
  int n = 4096;
  int n_changepoints = 10;
  double sigma = 0.2;
  std::uint64_t seed = 1;
};

struct TrendSim {
  VectorXd x;  // evenly spaced on [0, 1]
  VectorXd y;
  VectorXd mu_true;
  std::vector<int> changepoints;  // sorted, in 1..n-1
  VectorXd jumps;                 // length n, nonzero at the changepoints
};

TrendSim sim_trendfilter(const TrendSpec& spec);

/// ||a - b|| / sqrt(n).
double rmse(const Eigen::Ref<const VectorXd>& a, const Eigen::Ref<const VectorXd>& b);

struct Metrics {
  double rmse = 0.0;
  double rmse_ref = 0.0;
  /// Absent when the reference RMSE is zero and the method's is not.
  std::optional<double> delta_rmse_pct;
  double delta_elbo = 0.0;
};

/// RMSE of `pred` and `pred_ref` against `truth`, their relative difference in
/// percent, and ELBO_method - ELBO_ref.
Metrics metrics(const Eigen::Ref<const VectorXd>& truth, const Eigen::Ref<const VectorXd>& pred,
                const Eigen::Ref<const VectorXd>& pred_ref, double elbo_method, double elbo_ref);

}  // namespace gradvi
