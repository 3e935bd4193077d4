#include "gradvi/cavi.hpp"

#include <cmath>
#include <memory>

#include "gradvi/errors.hpp"

namespace gradvi {

CaviState CaviState::start(const RegressionData& data, VectorXd b0) {
  if (b0.size() != data.p()) throw DomainError("cavi: initial coefficients have wrong length");
  CaviState s;
  s.resid = data.y - data.op->matvec(b0);
  s.b = std::move(b0);
  return s;
}

CaviState CaviState::zeros(const RegressionData& data) {
  return start(data, VectorXd::Zero(data.p()));
}

double cavi_sweep(CaviState& state, const RegressionData& data, const Prior& g, double sigma2) {
  if (!(sigma2 > 0.0)) throw DomainError("cavi: sigma2 must be positive");
  const Index p = data.p();
  double max_change = 0.0;
  for (Index j = 0; j < p; ++j) {
    const double d2 = data.d2[j];
    const double z = state.b[j] + d2 * data.op->column_dot(j, state.resid);
    const double updated = posterior_mean(z, g, sigma2 * d2);
    const double delta = updated - state.b[j];
    if (delta != 0.0) {
      data.op->axpy_column(j, -delta, state.resid);
      state.b[j] = updated;
    }
    max_change = std::max(max_change, std::abs(delta));
  }
  // Resynchronize to cap drift from the incremental updates.
  state.resid = data.y - data.op->matvec(state.b);
  ++state.sweeps;
  return max_change;
}

CaviResult cavi_fit(const RegressionData& data, const Prior& g, double sigma2,
                    const CaviOptions& opts, const VectorXd* b0) {
  CaviState state = b0 ? CaviState::start(data, *b0) : CaviState::zeros(data);
  CaviResult res;
  std::unique_ptr<Objective> objective;
  if (opts.record_objective) objective = std::make_unique<Objective>(data, Method::direct, g);
  while (state.sweeps < opts.max_sweeps) {
    const double change = cavi_sweep(state, data, g, sigma2);
    if (objective) res.objective_trace.push_back(objective->evaluate(objective->pack(state.b, g, sigma2)).value);
    if (change <= opts.tol) {
      res.converged = true;
      break;
    }
  }
  res.b = std::move(state.b);
  res.n_sweeps = state.sweeps;
  return res;
}

VectorXd coefficient_gradient(const RegressionData& data, const Eigen::Ref<const VectorXd>& b,
                              const Prior& g, double sigma2) {
  const Objective objective(data, Method::direct, g);
  return objective.evaluate(objective.pack(b, g, sigma2)).grad.head(data.p());
}

}  // namespace gradvi
