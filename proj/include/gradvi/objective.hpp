#pragma once

// Penalized-regression form of the variational empirical Bayes objective.
//
//   h(b, g, sigma2) = ||y - X b||^2 / (2 sigma2) + sum_j rho(b_j, g, v_j^2)
//                     - 1/2 sum_j log d_j^2 + (n - p)/2 log(2 pi sigma2)
//
// with d_j^2 = 1 / x_j^T x_j and v_j^2 = sigma2 d_j^2. The direct objective
// is optimized over b and evaluates rho through the inverse T of the
// posterior mean; the compound objective substitutes b = S(z) and needs no
// inversion. ELBO = -h.

#include <memory>
#include <span>
#include <vector>

#include "gradvi/invert.hpp"
#include "gradvi/linop.hpp"
#include "gradvi/priors.hpp"

namespace gradvi {

struct RegressionData {
  std::shared_ptr<const LinearOperator> op;
  VectorXd y;
  VectorXd d2;  // 1 / x_j^T x_j
  double yty = 0.0;

  /// Throws DomainError on a length mismatch or a zero column.
  static RegressionData make(std::shared_ptr<const LinearOperator> op, VectorXd y);

  Index n() const { return op->rows(); }
  Index p() const { return op->cols(); }
};

enum class Method { direct, compound };
std::string_view method_name(Method m);
Method parse_method(std::string_view name);

/// [coefficients (p) | prior (packed_dim) | log sigma2 (1)]
class ParamLayout {
 public:
  ParamLayout(Index p, Index prior_dim) : p_(p), prior_dim_(prior_dim) {}

  Index p() const noexcept { return p_; }
  Index prior_dim() const noexcept { return prior_dim_; }
  Index size() const noexcept { return p_ + prior_dim_ + 1; }
  Index prior_offset() const noexcept { return p_; }
  Index sigma_index() const noexcept { return p_ + prior_dim_; }

 private:
  Index p_;
  Index prior_dim_;
};

struct ObjectiveValue {
  double value = 0.0;
  VectorXd grad;
  double elbo() const { return -value; }
};

/// Penalty at one coordinate and its partials in (coefficient, natural prior
/// parameters, v2).
struct PenaltyTerms {
  double value = 0.0;
  double d_coef = 0.0;
  std::vector<double> d_prior;
  double d_v2 = 0.0;
};

/// rho(b) = -l(T(b)) - (T(b) - b)^2 / (2 v2).
PenaltyTerms penalty_direct(double b, const Prior& g, double v2,
                            const InversionOptions& opts = {});

/// rho(S(z)) = -l(z) - (z - S(z))^2 / (2 v2) as a function of (z, g, v2).
PenaltyTerms penalty_compound(double z, const Prior& g, double v2);

/// Cumulative wall time and call counts, for the fit-level timing breakdown.
struct ObjectiveStats {
  double matvec_seconds = 0.0;
  double inversion_seconds = 0.0;
  double total_seconds = 0.0;
  long forward_products = 0;
  long adjoint_products = 0;
  long evaluations = 0;
};

/// Objective with analytic gradient over the packed parameter vector.
class Objective {
 public:
  Objective(const RegressionData& data, Method method, Prior prior_like,
            InversionOptions inversion = default_inversion());

  /// Tight tolerances: the direct gradient (T(b) - b)/v2 inherits the
  /// inversion error divided by v2.
  static InversionOptions default_inversion();

  ObjectiveValue evaluate(const VectorXd& params) const;

  const ParamLayout& layout() const noexcept { return layout_; }
  Method method() const noexcept { return method_; }
  const RegressionData& data() const noexcept { return data_; }
  const Prior& prior_like() const noexcept { return prior_like_; }

  VectorXd pack(const Eigen::Ref<const VectorXd>& coef, const Prior& g, double sigma2) const;
  Prior unpack_prior(const VectorXd& params) const;
  double unpack_sigma2(const VectorXd& params) const;

  const ObjectiveStats& stats() const noexcept { return stats_; }
  void reset_stats() const { stats_ = {}; }

 private:
  ObjectiveValue evaluate_direct(const VectorXd& params) const;
  ObjectiveValue evaluate_compound(const VectorXd& params) const;
  void check(const VectorXd& params) const;

  RegressionData data_;
  Method method_;
  Prior prior_like_;
  InversionOptions inversion_;
  ParamLayout layout_;
  mutable ObjectiveStats stats_;
};

ObjectiveValue objective_direct(const VectorXd& params, const RegressionData& data,
                                const Prior& prior_like);
ObjectiveValue objective_compound(const VectorXd& params, const RegressionData& data,
                                  const Prior& prior_like);

/// b_j = S(z_j) with v_j^2 = sigma2 d_j^2.
VectorXd recover_coefficients(const Eigen::Ref<const VectorXd>& z, const Prior& g,
                              double sigma2, const RegressionData& data);

/// Inverse of recover_coefficients.
VectorXd invert_coefficients(const Eigen::Ref<const VectorXd>& b, const Prior& g,
                             double sigma2, const RegressionData& data,
                             const InversionOptions& opts = Objective::default_inversion());

/// Which blocks of the packed vector move; frozen blocks keep their values
/// from `base` and receive no gradient.
struct BlockMask {
  bool coef = true;
  bool prior = true;
  bool sigma2 = true;
};

/// Indices of the free entries of a packed vector under `mask`.
std::vector<Index> free_indices(const ParamLayout& layout, const BlockMask& mask);

}  // namespace gradvi
