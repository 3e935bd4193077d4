#include "gradvi/fit.hpp"

#include <chrono>
#include <cmath>
#include <string>

#include "gradvi/errors.hpp"

namespace gradvi {

namespace {

constexpr int kDefaultWarmup = 50;

bool all_free(const BlockMask& m) { return m.coef && m.prior && m.sigma2; }

}  // namespace

Prior initial_prior(const FitOptions& opts) {
  if (opts.prior_init) {
    if (family_of(*opts.prior_init) != opts.family)
      throw DomainError("initial prior does not match the requested family");
    return *opts.prior_init;
  }
  if (opts.family == PriorFamily::point_normal) return PointNormalPrior(0.5, 1.0);
  return AshPrior::uniform(opts.grid.empty() ? default_ash_grid(opts.k_mix) : opts.grid);
}

SolverResult minimize_blocks(const Objective& objective, const VectorXd& x0,
                             const BlockMask& mask, const SolverOptions& opts) {
  if (all_free(mask)) {
    return minimize(
        [&](const VectorXd& x, VectorXd& grad) {
          ObjectiveValue v = objective.evaluate(x);
          grad = std::move(v.grad);
          return v.value;
        },
        x0, opts);
  }
  const std::vector<Index> idx = free_indices(objective.layout(), mask);
  VectorXd sub(static_cast<Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) sub[static_cast<Index>(i)] = x0[idx[i]];
  VectorXd full = x0;
  SolverResult res = minimize(
      [&](const VectorXd& x, VectorXd& grad) {
        for (std::size_t i = 0; i < idx.size(); ++i) full[idx[i]] = x[static_cast<Index>(i)];
        const ObjectiveValue v = objective.evaluate(full);
        for (std::size_t i = 0; i < idx.size(); ++i) grad[static_cast<Index>(i)] = v.grad[idx[i]];
        return v.value;
      },
      sub, opts);
  full = x0;
  for (std::size_t i = 0; i < idx.size(); ++i) full[idx[i]] = res.x[static_cast<Index>(i)];
  res.x = std::move(full);
  return res;
}

FitResult fit(const RegressionData& input, const FitOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  const Index p = input.p();
  if (opts.init && opts.init->size() != p)
    throw DomainError("warm-start vector has length " + std::to_string(opts.init->size()) +
                      ", expected p = " + std::to_string(p));
  if (!(opts.sigma2_init > 0.0)) throw DomainError("initial sigma2 must be positive");

  // Optionally refit on centred and scaled data; results are mapped back below.
  std::shared_ptr<const StandardizedOperator> standardized;
  RegressionData data = input;
  double y_mean = 0.0;
  if (opts.standardize) {
    standardized = std::make_shared<const StandardizedOperator>(input.op);
    y_mean = input.y.mean();
    data = RegressionData::make(standardized, input.y.array() - y_mean);
  }

  Prior prior = initial_prior(opts);
  VectorXd b_init = VectorXd::Zero(p);
  if (opts.init) {
    b_init = *opts.init;
    if (standardized) b_init = b_init.cwiseProduct(standardized->column_scales());
  }
  const bool warm = opts.init && !b_init.isZero(0.0);
  const int warmup = opts.prior_warmup_iters >= 0 ? opts.prior_warmup_iters
                                                  : (opts.init ? kDefaultWarmup : 0);

  FitResult result;
  result.method = opts.method;
  FitTimings timing;

  // Prior-only warm-up on the direct objective with b and sigma2 frozen.
  if (warmup > 0 && packed_dim(prior) > 0) {
    const Objective direct(data, Method::direct, prior);
    SolverOptions wopts = opts.solver;
    wopts.max_iters = warmup;
    const SolverResult w = minimize_blocks(direct, direct.pack(b_init, prior, opts.sigma2_init),
                                           {false, true, false}, wopts);
    prior = direct.unpack_prior(w.x);
    result.warmup_iters = w.n_iters;
    timing.matvec_seconds += direct.stats().matvec_seconds;
    timing.inversion_seconds += direct.stats().inversion_seconds;
  }

  const Objective objective(data, opts.method, prior);
  VectorXd start_coef = b_init;
  if (opts.method == Method::compound) {
    if (warm) {
      const auto ti = std::chrono::steady_clock::now();
      start_coef = invert_coefficients(b_init, prior, opts.sigma2_init, data);
      timing.inversion_seconds +=
          std::chrono::duration<double>(std::chrono::steady_clock::now() - ti).count();
    } else {
      start_coef.setZero();
    }
  }
  const VectorXd x0 = objective.pack(start_coef, prior, opts.sigma2_init);
  const SolverResult sol = minimize_blocks(objective, x0, opts.free, opts.solver);

  result.prior = objective.unpack_prior(sol.x);
  result.sigma2 = objective.unpack_sigma2(sol.x);
  result.solver_coef = sol.x.head(p);
  VectorXd coef = opts.method == Method::compound
                      ? recover_coefficients(result.solver_coef, result.prior, result.sigma2, data)
                      : VectorXd(result.solver_coef);
  result.elbo = -sol.f;
  result.elbo_init = -sol.trace.front();
  result.elbo_trace.reserve(sol.trace.size());
  for (double v : sol.trace) result.elbo_trace.push_back(-v);
  result.n_iters = sol.n_iters;
  result.n_evals = sol.n_evals;
  result.grad_norm = sol.grad_norm;
  result.status = sol.status;

  if (standardized) {
    coef = coef.cwiseQuotient(standardized->column_scales());
    result.intercept = y_mean - standardized->column_means().dot(coef);
  }
  result.coef = std::move(coef);

  timing.matvec_seconds += objective.stats().matvec_seconds;
  timing.inversion_seconds += objective.stats().inversion_seconds;
  timing.total_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  result.timing = timing;
  return result;
}

VectorXd predict(const RegressionData& data, const FitResult& result) {
  VectorXd out = data.op->matvec(result.coef);
  out.array() += result.intercept;
  return out;
}

TrendFilterFit fit_trendfilter(const Eigen::Ref<const VectorXd>& y, int order, bool scaled,
                               const FitOptions& opts) {
  const auto op = tf_operator(y.size(), order, scaled);
  const RegressionData data = RegressionData::make(op, y);
  TrendFilterFit out;
  out.fit = fit(data, opts);
  out.trend = predict(data, out.fit);
  return out;
}

}  // namespace gradvi
