#include "gradvi/gradvi.h"

#include <exception>
#include <memory>
#include <new>
#include <string>

#include "gradvi/cavi.hpp"
#include "gradvi/errors.hpp"
#include "gradvi/fit.hpp"
#include "gradvi/simulate.hpp"

using namespace gradvi;

struct gradvi_dataset {
  RegressionData data;
  bool standardize = false;
};

struct gradvi_fit {
  FitResult result;
  std::string status;
  std::string method;
  std::string family;
  MixtureView mixture;
};

struct gradvi_simulation {
  Index n = 0;
  Index p = 0;
  RowMatrixXd X;
  VectorXd y;
  VectorXd truth;
  double sigma2 = 0.0;
  std::vector<int> support;
  std::vector<int> block_sizes;
};

namespace {

thread_local std::string last_error;

gradvi_status fail(gradvi_status code, const std::string& message) {
  last_error = message;
  return code;
}

// Runs `body`, translating library exceptions into status codes.
template <class F>
gradvi_status guarded(F&& body) {
  try {
    last_error.clear();
    body();
    return GRADVI_OK;
  } catch (const DomainError& e) {
    return fail(GRADVI_ERR_DOMAIN, e.what());
  } catch (const ConvergenceError& e) {
    return fail(GRADVI_ERR_CONVERGENCE, e.what());
  } catch (const NumericalError& e) {
    return fail(GRADVI_ERR_NUMERICAL, e.what());
  } catch (const RangeError& e) {
    return fail(GRADVI_ERR_RANGE, e.what());
  } catch (const std::bad_alloc&) {
    return fail(GRADVI_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(GRADVI_ERR_INTERNAL, e.what());
  }
}

gradvi_status null_arg(const char* name) {
  return fail(GRADVI_ERR_NULL, std::string("null argument: ") + name);
}

gradvi_status copy_out(const double* src, size_t have, double* out, size_t len) {
  if (!out) return null_arg("out");
  if (len < have)
    return fail(GRADVI_ERR_DOMAIN, "output buffer holds " + std::to_string(len) + " values, need " +
                                       std::to_string(have));
  std::copy(src, src + have, out);
  return GRADVI_OK;
}

}  // namespace

extern "C" {

const char* gradvi_last_error(void) { return last_error.c_str(); }

const char* gradvi_status_string(gradvi_status status) {
  switch (status) {
    case GRADVI_OK:
      return "ok";
    case GRADVI_ERR_DOMAIN:
      return "domain error";
    case GRADVI_ERR_CONVERGENCE:
      return "convergence error";
    case GRADVI_ERR_NUMERICAL:
      return "numerical error";
    case GRADVI_ERR_RANGE:
      return "range error";
    case GRADVI_ERR_IO:
      return "i/o error";
    case GRADVI_ERR_INTERNAL:
      return "internal error";
    case GRADVI_ERR_NULL:
      return "null argument";
  }
  return "unknown status";
}

const char* gradvi_version(void) { return GRADVI_VERSION; }

// ---------------------------------------------------------------- datasets

gradvi_status gradvi_dataset_dense(const double* X, size_t n, size_t p, const double* y,
                                   int standardize, gradvi_dataset** out) {
  if (!X) return null_arg("X");
  if (!y) return null_arg("y");
  if (!out) return null_arg("out");
  *out = nullptr;
  return guarded([&] {
    const auto rows = static_cast<Index>(n), cols = static_cast<Index>(p);
    RowMatrixXd M = Eigen::Map<const RowMatrixXd>(X, rows, cols);
    auto op = std::make_shared<const DenseOperator>(std::move(M));
    auto ds = std::make_unique<gradvi_dataset>(
        gradvi_dataset{RegressionData::make(std::move(op), Eigen::Map<const VectorXd>(y, rows)),
                       standardize != 0});
    *out = ds.release();
  });
}

gradvi_status gradvi_dataset_trendfilter(const double* y, size_t n, int order, int scaled,
                                         gradvi_dataset** out) {
  if (!y) return null_arg("y");
  if (!out) return null_arg("out");
  *out = nullptr;
  return guarded([&] {
    const auto rows = static_cast<Index>(n);
    auto ds = std::make_unique<gradvi_dataset>(gradvi_dataset{
        RegressionData::make(tf_operator(rows, order, scaled != 0), Eigen::Map<const VectorXd>(y, rows)),
        false});
    *out = ds.release();
  });
}

void gradvi_dataset_free(gradvi_dataset* data) { delete data; }
size_t gradvi_dataset_n(const gradvi_dataset* data) {
  return data ? static_cast<size_t>(data->data.n()) : 0;
}
size_t gradvi_dataset_p(const gradvi_dataset* data) {
  return data ? static_cast<size_t>(data->data.p()) : 0;
}

// ---------------------------------------------------------------- fitting

void gradvi_fit_options_default(gradvi_fit_options* opts) {
  if (!opts) return;
  const FitOptions d;
  opts->method = GRADVI_METHOD_COMPOUND;
  opts->prior = GRADVI_PRIOR_ASH;
  opts->k_mix = d.k_mix;
  opts->sigma2_init = d.sigma2_init;
  opts->max_iters = d.solver.max_iters;
  opts->grad_tol = d.solver.grad_tol;
  opts->rel_obj_tol = d.solver.rel_obj_tol;
  opts->lbfgs_memory = d.solver.memory;
  opts->prior_warmup_iters = d.prior_warmup_iters;
}

gradvi_status gradvi_fit_run(const gradvi_dataset* data, const gradvi_fit_options* opts,
                             const double* init, size_t init_len, gradvi_fit** out) {
  if (!data) return null_arg("data");
  if (!out) return null_arg("out");
  *out = nullptr;
  gradvi_fit_options o;
  if (opts)
    o = *opts;
  else
    gradvi_fit_options_default(&o);
  return guarded([&] {
    FitOptions fo;
    fo.method = o.method == GRADVI_METHOD_DIRECT ? Method::direct : Method::compound;
    fo.family = o.prior == GRADVI_PRIOR_POINT_NORMAL ? PriorFamily::point_normal : PriorFamily::ash;
    fo.k_mix = o.k_mix;
    fo.sigma2_init = o.sigma2_init;
    fo.solver.max_iters = o.max_iters;
    fo.solver.grad_tol = o.grad_tol;
    fo.solver.rel_obj_tol = o.rel_obj_tol;
    fo.solver.memory = o.lbfgs_memory;
    fo.prior_warmup_iters = o.prior_warmup_iters;
    fo.standardize = data->standardize;
    if (init) fo.init = Eigen::Map<const VectorXd>(init, static_cast<Index>(init_len));
    auto f = std::make_unique<gradvi_fit>();
    f->result = fit(data->data, fo);
    f->status = status_name(f->result.status);
    f->method = method_name(f->result.method);
    f->family = family_name(family_of(f->result.prior));
    f->mixture = mixture_components(f->result.prior);
    *out = f.release();
  });
}

void gradvi_fit_free(gradvi_fit* fit) { delete fit; }

size_t gradvi_fit_p(const gradvi_fit* fit) {
  return fit ? static_cast<size_t>(fit->result.coef.size()) : 0;
}

gradvi_status gradvi_fit_coef(const gradvi_fit* fit, double* out, size_t len) {
  if (!fit) return null_arg("fit");
  return copy_out(fit->result.coef.data(), static_cast<size_t>(fit->result.coef.size()), out, len);
}

double gradvi_fit_intercept(const gradvi_fit* fit) { return fit ? fit->result.intercept : 0.0; }
double gradvi_fit_sigma2(const gradvi_fit* fit) { return fit ? fit->result.sigma2 : 0.0; }
double gradvi_fit_elbo(const gradvi_fit* fit) { return fit ? fit->result.elbo : 0.0; }
double gradvi_fit_elbo_init(const gradvi_fit* fit) { return fit ? fit->result.elbo_init : 0.0; }
int gradvi_fit_iterations(const gradvi_fit* fit) { return fit ? fit->result.n_iters : 0; }
int gradvi_fit_evaluations(const gradvi_fit* fit) { return fit ? fit->result.n_evals : 0; }
int gradvi_fit_warmup_iterations(const gradvi_fit* fit) { return fit ? fit->result.warmup_iters : 0; }
double gradvi_fit_grad_norm(const gradvi_fit* fit) { return fit ? fit->result.grad_norm : 0.0; }
const char* gradvi_fit_status(const gradvi_fit* fit) { return fit ? fit->status.c_str() : ""; }
int gradvi_fit_converged(const gradvi_fit* fit) {
  return fit && (fit->result.status == SolverStatus::converged_grad ||
                 fit->result.status == SolverStatus::converged_obj);
}
const char* gradvi_fit_method(const gradvi_fit* fit) { return fit ? fit->method.c_str() : ""; }
const char* gradvi_fit_prior_family(const gradvi_fit* fit) { return fit ? fit->family.c_str() : ""; }

size_t gradvi_fit_prior_size(const gradvi_fit* fit) { return fit ? fit->mixture.weights.size() : 0; }

gradvi_status gradvi_fit_prior(const gradvi_fit* fit, double* weights, double* variances, size_t len) {
  if (!fit) return null_arg("fit");
  const auto& m = fit->mixture;
  if (const auto s = copy_out(m.weights.data(), m.weights.size(), weights, len); s != GRADVI_OK) return s;
  return copy_out(m.variances.data(), m.variances.size(), variances, len);
}

size_t gradvi_fit_elbo_trace_size(const gradvi_fit* fit) {
  return fit ? fit->result.elbo_trace.size() : 0;
}

gradvi_status gradvi_fit_elbo_trace(const gradvi_fit* fit, double* out, size_t len) {
  if (!fit) return null_arg("fit");
  return copy_out(fit->result.elbo_trace.data(), fit->result.elbo_trace.size(), out, len);
}

void gradvi_fit_timings(const gradvi_fit* fit, double* matvec_seconds, double* inversion_seconds,
                        double* total_seconds) {
  if (!fit) return;
  if (matvec_seconds) *matvec_seconds = fit->result.timing.matvec_seconds;
  if (inversion_seconds) *inversion_seconds = fit->result.timing.inversion_seconds;
  if (total_seconds) *total_seconds = fit->result.timing.total_seconds;
}

gradvi_status gradvi_fit_predict(const gradvi_fit* fit, const gradvi_dataset* data, double* out,
                                 size_t len) {
  if (!fit) return null_arg("fit");
  if (!data) return null_arg("data");
  if (data->data.p() != fit->result.coef.size())
    return fail(GRADVI_ERR_DOMAIN, "fit and dataset have different numbers of predictors");
  VectorXd pred;
  const gradvi_status s = guarded([&] { pred = predict(data->data, fit->result); });
  if (s != GRADVI_OK) return s;
  return copy_out(pred.data(), static_cast<size_t>(pred.size()), out, len);
}

// ---------------------------------------------------------------- oracle

gradvi_status gradvi_cavi_check(const gradvi_dataset* data, const gradvi_fit* fit, double tol,
                                int max_sweeps, double* coef, size_t len, int* sweeps,
                                double* grad_inf_norm) {
  if (!data) return null_arg("data");
  if (!fit) return null_arg("fit");
  if (data->standardize)
    return fail(GRADVI_ERR_DOMAIN, "coordinate ascent check needs an unstandardized dataset");
  if (data->data.p() != fit->result.coef.size())
    return fail(GRADVI_ERR_DOMAIN, "fit and dataset have different numbers of predictors");
  CaviResult res;
  double gnorm = 0.0;
  const gradvi_status s = guarded([&] {
    CaviOptions opts;
    opts.tol = tol;
    opts.max_sweeps = max_sweeps;
    res = cavi_fit(data->data, fit->result.prior, fit->result.sigma2, opts);
    gnorm = coefficient_gradient(data->data, res.b, fit->result.prior, fit->result.sigma2)
                .cwiseAbs()
                .maxCoeff();
  });
  if (s != GRADVI_OK) return s;
  if (sweeps) *sweeps = res.n_sweeps;
  if (grad_inf_norm) *grad_inf_norm = gnorm;
  if (coef) return copy_out(res.b.data(), static_cast<size_t>(res.b.size()), coef, len);
  return GRADVI_OK;
}

// ---------------------------------------------------------------- simulation

void gradvi_linreg_spec_default(gradvi_linreg_spec* spec) {
  if (!spec) return;
  const LinregSpec d;
  spec->n = d.n;
  spec->p = d.p;
  spec->s = d.s;
  spec->pve = d.pve;
  spec->design = GRADVI_DESIGN_IID;
  spec->seed = d.seed;
  spec->min_block_size = d.min_block_size;
}

gradvi_status gradvi_simulate_linreg(const gradvi_linreg_spec* spec, gradvi_simulation** out) {
  if (!spec) return null_arg("spec");
  if (!out) return null_arg("out");
  *out = nullptr;
  return guarded([&] {
    LinregSpec s;
    s.n = spec->n;
    s.p = spec->p;
    s.s = spec->s;
    s.pve = spec->pve;
    s.design = spec->design == GRADVI_DESIGN_BLOCK ? Design::block : Design::iid;
    s.seed = spec->seed;
    s.min_block_size = spec->min_block_size;
    LinregSim sim = sim_linreg(s);
    auto h = std::make_unique<gradvi_simulation>();
    h->n = sim.X.rows();
    h->p = sim.X.cols();
    h->X = std::move(sim.X);
    h->y = std::move(sim.y);
    h->truth = std::move(sim.b_true);
    h->sigma2 = sim.sigma2;
    h->support = std::move(sim.causal);
    h->block_sizes = std::move(sim.block_sizes);
    *out = h.release();
  });
}

gradvi_status gradvi_simulate_trendfilter(int n, int n_changepoints, double sigma, uint64_t seed,
                                          gradvi_simulation** out) {
  if (!out) return null_arg("out");
  *out = nullptr;
  return guarded([&] {
    TrendSpec s;
    s.n = n;
    s.n_changepoints = n_changepoints;
    s.sigma = sigma;
    s.seed = seed;
    TrendSim sim = sim_trendfilter(s);
    auto h = std::make_unique<gradvi_simulation>();
    h->n = sim.y.size();
    h->y = std::move(sim.y);
    h->truth = std::move(sim.mu_true);
    h->sigma2 = sigma * sigma;
    h->support = std::move(sim.changepoints);
    *out = h.release();
  });
}

void gradvi_simulation_free(gradvi_simulation* sim) { delete sim; }
size_t gradvi_simulation_n(const gradvi_simulation* sim) { return sim ? static_cast<size_t>(sim->n) : 0; }
size_t gradvi_simulation_p(const gradvi_simulation* sim) { return sim ? static_cast<size_t>(sim->p) : 0; }
const double* gradvi_simulation_X(const gradvi_simulation* sim) {
  return sim && sim->p > 0 ? sim->X.data() : nullptr;
}
const double* gradvi_simulation_y(const gradvi_simulation* sim) { return sim ? sim->y.data() : nullptr; }
const double* gradvi_simulation_truth(const gradvi_simulation* sim) {
  return sim ? sim->truth.data() : nullptr;
}
size_t gradvi_simulation_truth_size(const gradvi_simulation* sim) {
  return sim ? static_cast<size_t>(sim->truth.size()) : 0;
}
double gradvi_simulation_sigma2(const gradvi_simulation* sim) { return sim ? sim->sigma2 : 0.0; }
size_t gradvi_simulation_support_size(const gradvi_simulation* sim) {
  return sim ? sim->support.size() : 0;
}
const int* gradvi_simulation_support(const gradvi_simulation* sim) {
  return sim ? sim->support.data() : nullptr;
}
size_t gradvi_simulation_block_count(const gradvi_simulation* sim) {
  return sim ? sim->block_sizes.size() : 0;
}
const int* gradvi_simulation_block_sizes(const gradvi_simulation* sim) {
  return sim ? sim->block_sizes.data() : nullptr;
}

// ---------------------------------------------------------------- utilities

gradvi_status gradvi_rmse(const double* a, const double* b, size_t len, double* out) {
  if (!a) return null_arg("a");
  if (!b) return null_arg("b");
  if (!out) return null_arg("out");
  return guarded([&] {
    const auto n = static_cast<Index>(len);
    *out = rmse(Eigen::Map<const VectorXd>(a, n), Eigen::Map<const VectorXd>(b, n));
  });
}

gradvi_status gradvi_default_grid(int K, double* out, size_t len) {
  std::vector<double> grid;
  const gradvi_status s = guarded([&] { grid = default_ash_grid(K); });
  if (s != GRADVI_OK) return s;
  return copy_out(grid.data(), grid.size(), out, len);
}

}  // extern "C"
