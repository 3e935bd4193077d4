#include "gradvi/objective.hpp"

#include <chrono>
#include <cmath>
#include <numbers>
#include <string>

#include "gradvi/errors.hpp"

namespace gradvi {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

// Value and partials of rho at b given its (already computed) inverse T.
void penalty_from_inverse(double b, double T, const Prior& g, double v2, NmEval& nm,
                          PenaltyTerms& out) {
  nm_logml(T, g, v2, nm);
  const double gap = T - b;
  out.value = -nm.logml - gap * gap / (2.0 * v2);
  out.d_coef = gap / v2;
  out.d_prior.resize(nm.d_prior.size());
  for (std::size_t k = 0; k < nm.d_prior.size(); ++k) out.d_prior[k] = -nm.d_prior[k];
  out.d_v2 = -nm.d_s2 + 0.5 * nm.d_z * nm.d_z;
}

}  // namespace

std::string_view method_name(Method m) {
  return m == Method::direct ? "direct" : "compound";
}

Method parse_method(std::string_view name) {
  if (name == "direct") return Method::direct;
  if (name == "compound") return Method::compound;
  throw DomainError("unknown method '" + std::string(name) + "'");
}

RegressionData RegressionData::make(std::shared_ptr<const LinearOperator> op, VectorXd y) {
  if (!op) throw DomainError("regression data needs an operator");
  if (op->rows() < 1 || op->cols() < 1) throw DomainError("regression data needs n, p >= 1");
  if (y.size() != op->rows())
    throw DomainError("response has length " + std::to_string(y.size()) + " but operator has " +
                      std::to_string(op->rows()) + " rows");
  for (Index i = 0; i < y.size(); ++i)
    if (!std::isfinite(y[i])) throw DomainError("response contains non-finite values");
  RegressionData data;
  const VectorXd norms = op->column_sq_norms();
  data.d2.resize(norms.size());
  for (Index j = 0; j < norms.size(); ++j) {
    if (!(norms[j] > 0.0) || !std::isfinite(norms[j]))
      throw DomainError("column " + std::to_string(j) + " has zero or non-finite norm");
    data.d2[j] = 1.0 / norms[j];
  }
  data.op = std::move(op);
  data.yty = y.squaredNorm();
  data.y = std::move(y);
  return data;
}

// ------------------------------------------------------------- penalties

PenaltyTerms penalty_direct(double b, const Prior& g, double v2, const InversionOptions& opts) {
  const double bb[1] = {b};
  const double vv[1] = {v2};
  const double T = invert(bb, g, vv, opts).front();
  NmEval nm;
  PenaltyTerms out;
  penalty_from_inverse(b, T, g, v2, nm, out);
  return out;
}

PenaltyTerms penalty_compound(double z, const Prior& g, double v2) {
  const NmEval nm = nm_logml(z, g, v2);
  PenaltyTerms out;
  // (z - S(z))^2 / (2 v2) = v2 l'^2 / 2 by Tweedie.
  out.value = -nm.logml - 0.5 * v2 * nm.d_z * nm.d_z;
  out.d_coef = -nm.d_z - v2 * nm.d_z * nm.d_zz;
  out.d_prior.resize(nm.d_prior.size());
  for (std::size_t k = 0; k < nm.d_prior.size(); ++k)
    out.d_prior[k] = -nm.d_prior[k] - v2 * nm.d_z * nm.d_z_prior[k];
  out.d_v2 = -nm.d_s2 - 0.5 * nm.d_z * nm.d_z - v2 * nm.d_z * nm.d_z_s2;
  return out;
}

// ------------------------------------------------------------- Objective

Objective::Objective(const RegressionData& data, Method method, Prior prior_like,
                     InversionOptions inversion)
    : data_(data),
      method_(method),
      prior_like_(std::move(prior_like)),
      inversion_(inversion),
      layout_(data.p(), static_cast<Index>(packed_dim(prior_like_))) {}

InversionOptions Objective::default_inversion() {
  InversionOptions opts;
  opts.tol = 1e-14;
  return opts;
}

void Objective::check(const VectorXd& params) const {
  if (params.size() != layout_.size())
    throw DomainError("objective: packed vector has length " + std::to_string(params.size()) +
                      ", expected " + std::to_string(layout_.size()));
}

VectorXd Objective::pack(const Eigen::Ref<const VectorXd>& coef, const Prior& g,
                         double sigma2) const {
  if (coef.size() != layout_.p()) throw DomainError("objective: coefficient length mismatch");
  if (!(sigma2 > 0.0)) throw DomainError("objective: sigma2 must be positive");
  const auto packed = pack_prior(g);
  if (static_cast<Index>(packed.size()) != layout_.prior_dim())
    throw DomainError("objective: prior does not match the objective's prior family");
  VectorXd x(layout_.size());
  x.head(layout_.p()) = coef;
  for (Index k = 0; k < layout_.prior_dim(); ++k)
    x[layout_.prior_offset() + k] = packed[static_cast<std::size_t>(k)];
  x[layout_.sigma_index()] = std::log(sigma2);
  return x;
}

Prior Objective::unpack_prior(const VectorXd& params) const {
  check(params);
  return gradvi::unpack_prior(
      std::span<const double>(params.data() + layout_.prior_offset(),
                              static_cast<std::size_t>(layout_.prior_dim())),
      prior_like_);
}

double Objective::unpack_sigma2(const VectorXd& params) const {
  check(params);
  return std::exp(params[layout_.sigma_index()]);
}

ObjectiveValue Objective::evaluate(const VectorXd& params) const {
  const auto t0 = Clock::now();
  ObjectiveValue out =
      method_ == Method::direct ? evaluate_direct(params) : evaluate_compound(params);
  stats_.total_seconds += seconds_since(t0);
  ++stats_.evaluations;
  return out;
}

ObjectiveValue Objective::evaluate_direct(const VectorXd& params) const {
  check(params);
  const RegressionData& d = data_;
  const Index n = d.n(), p = d.p();
  const Prior g = unpack_prior(params);
  const double sigma2 = unpack_sigma2(params);
  const auto b = params.head(p);
  const VectorXd v2 = sigma2 * d.d2;

  auto t0 = Clock::now();
  const std::vector<double> T =
      invert(std::span<const double>(b.data(), static_cast<std::size_t>(p)), g,
             std::span<const double>(v2.data(), static_cast<std::size_t>(p)), inversion_);
  stats_.inversion_seconds += seconds_since(t0);

  t0 = Clock::now();
  VectorXd resid = d.y - d.op->matvec(b);
  const VectorXd xtr = d.op->rmatvec(resid);
  stats_.matvec_seconds += seconds_since(t0);
  ++stats_.forward_products;
  ++stats_.adjoint_products;

  ObjectiveValue out;
  out.grad.resize(layout_.size());
  const std::size_t nat = natural_dim(g);
  std::vector<double> d_nat(nat, 0.0);
  double penalty = 0.0, log_d2 = 0.0, d_sigma2 = 0.0;
  NmEval nm;
  PenaltyTerms term;
  for (Index j = 0; j < p; ++j) {
    penalty_from_inverse(b[j], T[static_cast<std::size_t>(j)], g, v2[j], nm, term);
    penalty += term.value;
    log_d2 += std::log(d.d2[j]);
    out.grad[j] = -xtr[j] / sigma2 + term.d_coef;
    for (std::size_t k = 0; k < nat; ++k) d_nat[k] += term.d_prior[k];
    d_sigma2 += term.d_v2 * d.d2[j];
  }
  const double rss = resid.squaredNorm();
  const double np = static_cast<double>(n - p);
  out.value = rss / (2.0 * sigma2) + penalty - 0.5 * log_d2 +
              0.5 * np * (kLog2Pi + std::log(sigma2));
  d_sigma2 += -rss / (2.0 * sigma2 * sigma2) + np / (2.0 * sigma2);

  natural_to_packed_grad(g, d_nat,
                         std::span<double>(out.grad.data() + layout_.prior_offset(),
                                           static_cast<std::size_t>(layout_.prior_dim())));
  out.grad[layout_.sigma_index()] = sigma2 * d_sigma2;
  return out;
}

ObjectiveValue Objective::evaluate_compound(const VectorXd& params) const {
  check(params);
  const RegressionData& d = data_;
  const Index n = d.n(), p = d.p();
  const Prior g = unpack_prior(params);
  const double sigma2 = unpack_sigma2(params);
  const auto z = params.head(p);

  // One normal-means evaluation per coordinate; everything below reuses it.
  VectorXd b(p), slope(p), dz(p), dz_s2(p), d_s2(p), logml(p);
  const std::size_t nat = natural_dim(g);
  std::vector<double> dprior(static_cast<std::size_t>(p) * nat),
      dzprior(static_cast<std::size_t>(p) * nat);
  NmEval nm;
  for (Index j = 0; j < p; ++j) {
    nm_logml(z[j], g, sigma2 * d.d2[j], nm);
    b[j] = nm.posterior_mean;
    slope[j] = nm.posterior_mean_deriv;
    dz[j] = nm.d_z;
    dz_s2[j] = nm.d_z_s2;
    d_s2[j] = nm.d_s2;
    logml[j] = nm.logml;
    std::copy(nm.d_prior.begin(), nm.d_prior.end(), dprior.begin() + j * nat);
    std::copy(nm.d_z_prior.begin(), nm.d_z_prior.end(), dzprior.begin() + j * nat);
  }

  const auto t0 = Clock::now();
  VectorXd resid = d.y - d.op->matvec(b);
  const VectorXd xtr = d.op->rmatvec(resid);
  stats_.matvec_seconds += seconds_since(t0);
  ++stats_.forward_products;
  ++stats_.adjoint_products;

  ObjectiveValue out;
  out.grad.resize(layout_.size());
  std::vector<double> d_nat(nat, 0.0);
  double penalty = 0.0, log_d2 = 0.0, d_sigma2 = 0.0;
  for (Index j = 0; j < p; ++j) {
    const double v2 = sigma2 * d.d2[j];
    const double c = xtr[j] / sigma2;
    const double e = c + dz[j];  // residual pull plus prior pull, in z units
    penalty += -logml[j] - 0.5 * v2 * dz[j] * dz[j];
    log_d2 += std::log(d.d2[j]);
    out.grad[j] = -slope[j] * e;
    const double* dp = dprior.data() + j * nat;
    const double* dzp = dzprior.data() + j * nat;
    for (std::size_t k = 0; k < nat; ++k) d_nat[k] += -dp[k] - v2 * dzp[k] * e;
    d_sigma2 += d.d2[j] * (-d_s2[j] - 0.5 * dz[j] * dz[j] - c * dz[j] - v2 * dz_s2[j] * e);
  }
  const double rss = resid.squaredNorm();
  const double np = static_cast<double>(n - p);
  out.value = rss / (2.0 * sigma2) + penalty - 0.5 * log_d2 +
              0.5 * np * (kLog2Pi + std::log(sigma2));
  d_sigma2 += -rss / (2.0 * sigma2 * sigma2) + np / (2.0 * sigma2);

  natural_to_packed_grad(g, d_nat,
                         std::span<double>(out.grad.data() + layout_.prior_offset(),
                                           static_cast<std::size_t>(layout_.prior_dim())));
  out.grad[layout_.sigma_index()] = sigma2 * d_sigma2;
  return out;
}

ObjectiveValue objective_direct(const VectorXd& params, const RegressionData& data,
                                const Prior& prior_like) {
  return Objective(data, Method::direct, prior_like).evaluate(params);
}

ObjectiveValue objective_compound(const VectorXd& params, const RegressionData& data,
                                  const Prior& prior_like) {
  return Objective(data, Method::compound, prior_like).evaluate(params);
}

VectorXd recover_coefficients(const Eigen::Ref<const VectorXd>& z, const Prior& g,
                              double sigma2, const RegressionData& data) {
  if (z.size() != data.p()) throw DomainError("recover_coefficients: length mismatch");
  VectorXd b(z.size());
  for (Index j = 0; j < z.size(); ++j) b[j] = posterior_mean(z[j], g, sigma2 * data.d2[j]);
  return b;
}

VectorXd invert_coefficients(const Eigen::Ref<const VectorXd>& b, const Prior& g,
                             double sigma2, const RegressionData& data,
                             const InversionOptions& opts) {
  if (b.size() != data.p()) throw DomainError("invert_coefficients: length mismatch");
  const VectorXd v2 = sigma2 * data.d2;
  const VectorXd bb = b;
  const auto z = invert(std::span<const double>(bb.data(), static_cast<std::size_t>(bb.size())),
                        g, std::span<const double>(v2.data(), static_cast<std::size_t>(v2.size())),
                        opts);
  return Eigen::Map<const VectorXd>(z.data(), static_cast<Index>(z.size()));
}

std::vector<Index> free_indices(const ParamLayout& layout, const BlockMask& mask) {
  std::vector<Index> idx;
  if (mask.coef)
    for (Index j = 0; j < layout.p(); ++j) idx.push_back(j);
  if (mask.prior)
    for (Index k = 0; k < layout.prior_dim(); ++k) idx.push_back(layout.prior_offset() + k);
  if (mask.sigma2) idx.push_back(layout.sigma_index());
  return idx;
}

}  // namespace gradvi
