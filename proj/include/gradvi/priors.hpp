#pragma once

// Zero-centred normal mixture priors and the normal-means quantities built on
// them: the log marginal likelihood l(z; g, s^2), its partial derivatives, and
// the posterior mean (shrinkage) operator S(z) = z + s^2 l'(z).

#include <cstddef>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

namespace gradvi {

enum class PriorFamily { ash, point_normal };

std::string_view family_name(PriorFamily family);
PriorFamily parse_family(std::string_view name);

/// Scale mixture of normals sum_k w_k N(0, sigma_k^2) over a fixed variance grid.
///
/// The weights are stored together with their softmax pre-image so that the
/// packed (unconstrained) form never has to take logarithms of tiny weights.
class AshPrior {
 public:
  /// Throws DomainError unless the grid is ascending and nonnegative and the
  /// weights lie on the simplex (within 1e-12).
  AshPrior(std::vector<double> grid, std::vector<double> weights);

  /// Equal weights 1/K.
  static AshPrior uniform(std::vector<double> grid);
  static AshPrior from_logits(std::vector<double> grid, std::span<const double> logits);

  std::size_t size() const noexcept { return grid_.size(); }
  const std::vector<double>& grid() const noexcept { return grid_; }
  const std::vector<double>& weights() const noexcept { return weights_; }
  const std::vector<double>& logits() const noexcept { return logits_; }

 private:
  AshPrior() = default;
  static void check_grid(const std::vector<double>& grid);

  std::vector<double> grid_;
  std::vector<double> weights_;
  std::vector<double> logits_;
};

/// Spike-and-slab prior (1 - w) delta_0 + w N(0, sigma_1^2).
class PointNormalPrior {
 public:
  PointNormalPrior(double slab_weight, double slab_variance);

  double slab_weight() const noexcept { return w_; }
  double slab_variance() const noexcept { return var_; }

 private:
  double w_;
  double var_;
};

/// A new family is added as another alternative; every free function below
/// dispatches with std::visit.
using Prior = std::variant<AshPrior, PointNormalPrior>;

PriorFamily family_of(const Prior& g);

/// Number of natural parameters: K weights for ash, (w, sigma_1^2) for
/// point-normal. NmEval::d_prior is laid out in this order.
std::size_t natural_dim(const Prior& g);

/// Number of unconstrained parameters: K - 1 logits for ash, 2 for point-normal.
std::size_t packed_dim(const Prior& g);

/// Mixture representation shared by all families (components may have weight 0).
struct MixtureView {
  std::vector<double> weights;
  std::vector<double> variances;
};
MixtureView mixture_components(const Prior& g);

/// Value and partials of the normal-means log marginal likelihood at one point.
struct NmEval {
  double logml = 0.0;
  double d_z = 0.0;
  double d_zz = 0.0;
  /// Partials with respect to the natural prior parameters.
  std::vector<double> d_prior;
  /// Partial with respect to the noise variance s^2.
  double d_s2 = 0.0;
  /// Mixed partials of l' = dl/dz, needed by the compound objective.
  std::vector<double> d_z_prior;
  double d_z_s2 = 0.0;
  /// S(z) and S'(z), computed in responsibility form.
  double posterior_mean = 0.0;
  double posterior_mean_deriv = 0.0;
};

NmEval nm_logml(double z, const Prior& g, double s2);

/// Same as above, reusing the storage of `out` (no allocation once sized).
void nm_logml(double z, const Prior& g, double s2, NmEval& out);

double posterior_mean(double z, const Prior& g, double s2);
double posterior_mean_deriv(double z, const Prior& g, double s2);

std::vector<double> pack_prior(const Prior& g);
Prior unpack_prior(std::span<const double> packed, PriorFamily family,
                   std::span<const double> grid = {});
/// Unpacks into the same family (and grid) as `like`.
Prior unpack_prior(std::span<const double> packed, const Prior& like);

/// Chain rule from natural-parameter gradient to packed-parameter gradient,
/// evaluated at `g`. `d_natural` has natural_dim(g) entries, `d_packed`
/// packed_dim(g) entries.
void natural_to_packed_grad(const Prior& g, std::span<const double> d_natural,
                            std::span<double> d_packed);

/// sigma_k^2 = (2^((k-1)/K) - 1)^2, k = 1..K.
std::vector<double> default_ash_grid(int K);

/// True when the prior is a single normal N(0, tau^2) with tau^2 > 0, which
/// gives a linear shrinkage operator. `variance` receives tau^2.
bool is_single_normal(const Prior& g, double* variance = nullptr);

}  // namespace gradvi
