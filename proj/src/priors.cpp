#include "gradvi/priors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "gradvi/errors.hpp"

namespace gradvi {

namespace {

constexpr double kSimplexTol = 1e-12;
const double kLog2Pi = std::log(2.0 * std::numbers::pi);

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

void check_s2(double s2) {
  if (!(s2 > 0.0) || !std::isfinite(s2))
    throw DomainError("normal-means variance s2 must be positive and finite, got " +
                      std::to_string(s2));
}

// Per-component partials of the mixture log marginal likelihood. Spans that
// are empty are skipped.
struct ComponentOut {
  std::span<double> d_weight;     // dl/dw_k
  std::span<double> d_var;        // dl/dsigma_k^2
  std::span<double> d_z_weight;   // dl'/dw_k
  std::span<double> d_z_var;      // dl'/dsigma_k^2
};

// Evaluates a zero-centred normal mixture. A zero-variance component is the
// point mass; its marginal is N(z | 0, s2) and nothing divides by sigma_k^2.
void eval_mixture(double z, std::span<const double> w, std::span<const double> var,
                  double s2, NmEval& out, const ComponentOut& comp) {
  const std::size_t K = w.size();
  thread_local std::vector<double> lphi;
  lphi.resize(K);
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < K; ++k) {
    const double tau = var[k] + s2;
    lphi[k] = -0.5 * (kLog2Pi + std::log(tau) + z * z / tau);
    if (w[k] > 0.0) m = std::max(m, std::log(w[k]) + lphi[k]);
  }
  if (!std::isfinite(m)) throw DomainError("prior has no component with positive weight");

  double sum = 0.0;
  for (std::size_t k = 0; k < K; ++k)
    if (w[k] > 0.0) sum += w[k] * std::exp(lphi[k] - m);
  const double logml = m + std::log(sum);

  // phi_k / L is dl/dw_k; the responsibility is r_k = w_k phi_k / L.
  thread_local std::vector<double> ratio;
  ratio.resize(K);
  double dz = 0.0, second = 0.0, ds2 = 0.0, shrink = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    ratio[k] = std::exp(lphi[k] - logml);
    if (w[k] <= 0.0) continue;
    const double tau = var[k] + s2;
    const double r = w[k] * ratio[k];
    const double a = -z / tau;
    const double c = -0.5 / tau + 0.5 * z * z / (tau * tau);
    dz += r * a;
    second += r * (a * a - 1.0 / tau);
    ds2 += r * c;
    shrink += r * var[k] / tau;
  }
  const double dzz = second - dz * dz;

  double dzs2 = 0.0, slope_corr = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    const double tau = var[k] + s2;
    const double a = -z / tau;
    const double c = -0.5 / tau + 0.5 * z * z / (tau * tau);
    const double r = w[k] > 0.0 ? w[k] * ratio[k] : 0.0;
    const double dzvar = r * (c * (a - dz) + z / (tau * tau));
    dzs2 += dzvar;
    slope_corr += r * (a - dz) * var[k] / tau;
    if (!comp.d_weight.empty()) comp.d_weight[k] = ratio[k];
    if (!comp.d_var.empty()) comp.d_var[k] = r * c;
    if (!comp.d_z_weight.empty()) comp.d_z_weight[k] = ratio[k] * (a - dz);
    if (!comp.d_z_var.empty()) comp.d_z_var[k] = dzvar;
  }

  out.logml = logml;
  out.d_z = dz;
  out.d_zz = dzz;
  out.d_s2 = ds2;
  out.d_z_s2 = dzs2;
  out.posterior_mean = z * shrink;
  out.posterior_mean_deriv = shrink + z * slope_corr;
}

double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void reject_nan(std::span<const double> v) {
  for (double x : v)
    if (std::isnan(x)) throw DomainError("NaN in prior parameters");
}

}  // namespace

std::string_view family_name(PriorFamily family) {
  switch (family) {
    case PriorFamily::ash:
      return "ash";
    case PriorFamily::point_normal:
      return "point-normal";
  }
  return "unknown";
}

PriorFamily parse_family(std::string_view name) {
  if (name == "ash") return PriorFamily::ash;
  if (name == "point-normal" || name == "point_normal") return PriorFamily::point_normal;
  throw DomainError("unknown prior family '" + std::string(name) + "'");
}

// ---------------------------------------------------------------- AshPrior

void AshPrior::check_grid(const std::vector<double>& grid) {
  if (grid.empty()) throw DomainError("ash prior needs a nonempty variance grid");
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (!(grid[k] >= 0.0) || !std::isfinite(grid[k]))
      throw DomainError("ash grid variances must be finite and nonnegative");
    if (k > 0 && grid[k] < grid[k - 1])
      throw DomainError("ash grid variances must be sorted ascending");
  }
}

AshPrior::AshPrior(std::vector<double> grid, std::vector<double> weights)
    : grid_(std::move(grid)), weights_(std::move(weights)) {
  check_grid(grid_);
  if (weights_.size() != grid_.size())
    throw DomainError("ash prior: weights and grid differ in length");
  reject_nan(weights_);
  double total = 0.0;
  for (double w : weights_) {
    if (w < 0.0) throw DomainError("ash prior: negative mixture weight");
    total += w;
  }
  if (std::abs(total - 1.0) > kSimplexTol)
    throw DomainError("ash prior: weights do not sum to one");
  logits_.resize(weights_.size());
  for (std::size_t k = 0; k < weights_.size(); ++k)
    logits_[k] = std::log(weights_[k]);  // -inf for empty components
}

AshPrior AshPrior::uniform(std::vector<double> grid) {
  const std::size_t K = grid.size();
  return AshPrior(std::move(grid), std::vector<double>(K, 1.0 / static_cast<double>(K)));
}

AshPrior AshPrior::from_logits(std::vector<double> grid, std::span<const double> logits) {
  check_grid(grid);
  if (logits.size() != grid.size())
    throw DomainError("ash prior: logits and grid differ in length");
  reject_nan(logits);
  AshPrior g;
  g.grid_ = std::move(grid);
  g.logits_.assign(logits.begin(), logits.end());
  const double m = *std::max_element(logits.begin(), logits.end());
  if (!std::isfinite(m)) throw DomainError("ash prior: logits have no finite maximum");
  g.weights_.resize(logits.size());
  double total = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    g.weights_[k] = std::exp(logits[k] - m);
    total += g.weights_[k];
  }
  for (double& w : g.weights_) w /= total;
  return g;
}

// --------------------------------------------------------- PointNormalPrior

PointNormalPrior::PointNormalPrior(double slab_weight, double slab_variance)
    : w_(slab_weight), var_(slab_variance) {
  if (std::isnan(w_) || std::isnan(var_)) throw DomainError("NaN in point-normal prior");
  if (w_ < 0.0 || w_ > 1.0) throw DomainError("point-normal slab weight must lie in [0, 1]");
  if (var_ < 0.0 || !std::isfinite(var_))
    throw DomainError("point-normal slab variance must be finite and nonnegative");
}

// ------------------------------------------------------------ dispatchers

PriorFamily family_of(const Prior& g) {
  return std::holds_alternative<AshPrior>(g) ? PriorFamily::ash : PriorFamily::point_normal;
}

std::size_t natural_dim(const Prior& g) {
  return std::visit(overloaded{[](const AshPrior& a) { return a.size(); },
                               [](const PointNormalPrior&) { return std::size_t{2}; }},
                    g);
}

std::size_t packed_dim(const Prior& g) {
  return std::visit(overloaded{[](const AshPrior& a) { return a.size() - 1; },
                               [](const PointNormalPrior&) { return std::size_t{2}; }},
                    g);
}

MixtureView mixture_components(const Prior& g) {
  return std::visit(
      overloaded{[](const AshPrior& a) { return MixtureView{a.weights(), a.grid()}; },
                 [](const PointNormalPrior& pn) {
                   return MixtureView{{1.0 - pn.slab_weight(), pn.slab_weight()},
                                      {0.0, pn.slab_variance()}};
                 }},
      g);
}

void nm_logml(double z, const Prior& g, double s2, NmEval& out) {
  check_s2(s2);
  if (!std::isfinite(z)) throw DomainError("normal-means observation must be finite");
  std::visit(overloaded{
                 [&](const AshPrior& a) {
                   const std::size_t K = a.size();
                   out.d_prior.resize(K);
                   out.d_z_prior.resize(K);
                   eval_mixture(z, a.weights(), a.grid(), s2, out,
                                {out.d_prior, {}, out.d_z_prior, {}});
                 },
                 [&](const PointNormalPrior& pn) {
                   const double w[2] = {1.0 - pn.slab_weight(), pn.slab_weight()};
                   const double var[2] = {0.0, pn.slab_variance()};
                   double dw[2], dvar[2], dzw[2], dzvar[2];
                   eval_mixture(z, w, var, s2, out, {dw, dvar, dzw, dzvar});
                   out.d_prior.resize(2);
                   out.d_z_prior.resize(2);
                   out.d_prior[0] = dw[1] - dw[0];
                   out.d_prior[1] = dvar[1];
                   out.d_z_prior[0] = dzw[1] - dzw[0];
                   out.d_z_prior[1] = dzvar[1];
                 }},
             g);
}

NmEval nm_logml(double z, const Prior& g, double s2) {
  NmEval out;
  nm_logml(z, g, s2, out);
  return out;
}

double posterior_mean(double z, const Prior& g, double s2) {
  thread_local NmEval scratch;
  nm_logml(z, g, s2, scratch);
  return scratch.posterior_mean;
}

double posterior_mean_deriv(double z, const Prior& g, double s2) {
  thread_local NmEval scratch;
  nm_logml(z, g, s2, scratch);
  return scratch.posterior_mean_deriv;
}

std::vector<double> pack_prior(const Prior& g) {
  return std::visit(
      overloaded{[](const AshPrior& a) {
                   const auto& lg = a.logits();
                   std::vector<double> v(a.size() - 1);
                   for (std::size_t k = 0; k + 1 < a.size(); ++k) v[k] = lg[k] - lg.back();
                   for (double x : v)
                     if (!std::isfinite(x))
                       throw DomainError("ash weights must be strictly positive to pack");
                   return v;
                 },
                 [](const PointNormalPrior& pn) {
                   const double w = pn.slab_weight();
                   std::vector<double> v{std::log(w) - std::log1p(-w),
                                         std::log(pn.slab_variance())};
                   for (double x : v)
                     if (!std::isfinite(x))
                       throw DomainError(
                           "point-normal prior needs 0 < w < 1 and slab variance > 0 to pack");
                   return v;
                 }},
      g);
}

Prior unpack_prior(std::span<const double> packed, PriorFamily family,
                   std::span<const double> grid) {
  reject_nan(packed);
  switch (family) {
    case PriorFamily::ash: {
      if (packed.size() + 1 != grid.size())
        throw DomainError("ash unpack: expected " + std::to_string(grid.size() - 1) +
                          " packed values");
      std::vector<double> logits(packed.begin(), packed.end());
      logits.push_back(0.0);
      return AshPrior::from_logits(std::vector<double>(grid.begin(), grid.end()), logits);
    }
    case PriorFamily::point_normal:
      if (packed.size() != 2) throw DomainError("point-normal unpack: expected 2 values");
      return PointNormalPrior(logistic(packed[0]), std::exp(packed[1]));
  }
  throw DomainError("unknown prior family");
}

Prior unpack_prior(std::span<const double> packed, const Prior& like) {
  if (const auto* a = std::get_if<AshPrior>(&like))
    return unpack_prior(packed, PriorFamily::ash, a->grid());
  return unpack_prior(packed, PriorFamily::point_normal);
}

void natural_to_packed_grad(const Prior& g, std::span<const double> d_natural,
                            std::span<double> d_packed) {
  if (d_natural.size() != natural_dim(g) || d_packed.size() != packed_dim(g))
    throw DomainError("natural_to_packed_grad: dimension mismatch");
  std::visit(overloaded{[&](const AshPrior& a) {
                          // Softmax Jacobian with the last logit pinned at zero.
                          const auto& w = a.weights();
                          double mean = 0.0;
                          for (std::size_t k = 0; k < w.size(); ++k) mean += w[k] * d_natural[k];
                          for (std::size_t m = 0; m + 1 < w.size(); ++m)
                            d_packed[m] = w[m] * (d_natural[m] - mean);
                        },
                        [&](const PointNormalPrior& pn) {
                          const double w = pn.slab_weight();
                          d_packed[0] = d_natural[0] * w * (1.0 - w);
                          d_packed[1] = d_natural[1] * pn.slab_variance();
                        }},
             g);
}

std::vector<double> default_ash_grid(int K) {
  if (K < 1) throw DomainError("ash grid size K must be at least 1");
  std::vector<double> grid(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k) {
    const double s = std::exp2(static_cast<double>(k) / K) - 1.0;
    grid[static_cast<std::size_t>(k)] = s * s;
  }
  return grid;
}

bool is_single_normal(const Prior& g, double* variance) {
  double tau = 0.0;
  bool single = false;
  if (const auto* a = std::get_if<AshPrior>(&g)) {
    int active = 0;
    for (std::size_t k = 0; k < a->size(); ++k) {
      if (a->weights()[k] > 0.0) {
        ++active;
        tau = a->grid()[k];
      }
    }
    single = active == 1 && tau > 0.0;
  } else {
    const auto& pn = std::get<PointNormalPrior>(g);
    single = pn.slab_weight() == 1.0 && pn.slab_variance() > 0.0;
    tau = pn.slab_variance();
  }
  if (single && variance) *variance = tau;
  return single;
}

}  // namespace gradvi
