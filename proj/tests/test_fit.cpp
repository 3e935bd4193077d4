#include <cmath>
#include <random>

#include "doctest.h"
#include "gradvi/cavi.hpp"
#include "gradvi/errors.hpp"
#include "gradvi/fit.hpp"
#include "gradvi/simulate.hpp"
#include "support.hpp"

using namespace gradvi;

namespace {

RegressionData simulated(std::uint64_t seed, int n, int p, int s) {
  LinregSpec spec;
  spec.n = n;
  spec.p = p;
  spec.s = s;
  spec.seed = seed;
  LinregSim sim = sim_linreg(spec);
  return RegressionData::make(std::make_shared<const DenseOperator>(std::move(sim.X)), sim.y);
}

}  // namespace

TEST_CASE("null response") {
  std::mt19937_64 rng(51);
  const auto X = std::make_shared<const DenseOperator>(testing::random_matrix(rng, 40, 20));
  const RegressionData data = RegressionData::make(X, VectorXd::Zero(40));
  FitOptions opts;
  opts.solver.max_iters = 200;
  const FitResult r = fit(data, opts);
  CHECK(r.coef.cwiseAbs().maxCoeff() <= 1e-8);
  CHECK(std::isfinite(r.elbo));
}

TEST_CASE("direct and compound reach the same optimum") {
  const RegressionData data = simulated(3, 100, 200, 5);
  FitOptions opts;
  opts.method = Method::compound;
  const FitResult c = fit(data, opts);
  opts.method = Method::direct;
  const FitResult d = fit(data, opts);
  CHECK(std::abs(c.elbo - d.elbo) <= 1e-3 * std::abs(c.elbo));
  CHECK(c.elbo >= c.elbo_init);
  CHECK(d.elbo >= d.elbo_init);
  for (std::size_t i = 1; i < c.elbo_trace.size(); ++i) CHECK(c.elbo_trace[i] >= c.elbo_trace[i - 1]);
}

TEST_CASE("point-normal fit") {
  const RegressionData data = simulated(4, 100, 150, 4);
  FitOptions opts;
  opts.family = PriorFamily::point_normal;
  const FitResult r = fit(data, opts);
  CHECK(r.status != SolverStatus::line_search_failure);
  const auto& g = std::get<PointNormalPrior>(r.prior);
  CHECK(g.slab_weight() < 0.5);
}

TEST_CASE("fixed prior and sigma2 reproduce the CAVI fixed point") {
  std::mt19937_64 rng(52);
  const RegressionData data = simulated(5, 80, 30, 3);
  const Prior g = testing::near_spike_ash(0.7, 10);
  FitOptions opts;
  opts.prior_init = g;
  opts.sigma2_init = 1.3;
  opts.free = {true, false, false};
  opts.solver.grad_tol = 1e-10;
  opts.solver.rel_obj_tol = 0.0;
  for (Method m : {Method::direct, Method::compound}) {
    opts.method = m;
    const FitResult r = fit(data, opts);
    CaviOptions copts;
    copts.tol = 1e-12;
    const CaviResult cav = cavi_fit(data, g, 1.3, copts);
    CHECK((r.coef - cav.b).cwiseAbs().maxCoeff() <= 1e-6);
  }
}

TEST_CASE("warm start") {
  const RegressionData data = simulated(6, 100, 120, 4);
  FitOptions opts;
  const FitResult cold = fit(data, opts);
  opts.init = cold.coef;
  const FitResult warm = fit(data, opts);
  CHECK(warm.warmup_iters > 0);
  CHECK(std::abs(warm.elbo - cold.elbo) <= 1e-3 * std::abs(cold.elbo));
  opts.init = VectorXd::Zero(5);
  CHECK_THROWS_AS(fit(data, opts), DomainError);
}

TEST_CASE("standardized fit recovers an intercept") {
  std::mt19937_64 rng(53);
  RowMatrixXd X = testing::random_matrix(rng, 150, 20);
  X.col(3).array() = 3.0 * X.col(3).array() + 4.0;
  VectorXd b = VectorXd::Zero(20);
  b[3] = 1.0;
  b[7] = -2.0;
  const auto op = std::make_shared<const DenseOperator>(X);
  const VectorXd y = op->matvec(b).array() + 10.0 + 0.3 * testing::random_vector(rng, 150).array();
  const RegressionData data = RegressionData::make(op, y);
  FitOptions opts;
  opts.standardize = true;
  const FitResult r = fit(data, opts);
  CHECK(std::abs(r.coef[3] - 1.0) < 0.05);
  CHECK(std::abs(r.coef[7] + 2.0) < 0.1);
  CHECK(std::abs(r.intercept - 10.0) < 0.5);
  CHECK(rmse(predict(data, r), y) < 0.4);
}

TEST_CASE("trend filtering") {
  SUBCASE("noiseless step") {
    VectorXd y = VectorXd::Zero(256);
    y.tail(100).setConstant(2.0);
    const TrendFilterFit tf = fit_trendfilter(y, 0, true);
    CHECK(tf.trend.size() == 256);
    CHECK(rmse(tf.trend, y) < 0.05);
  }
  SUBCASE("constant response") {
    const VectorXd y = VectorXd::Constant(128, 1.5);
    const TrendFilterFit tf = fit_trendfilter(y, 0, true);
    CHECK((tf.trend.array() - 1.5).abs().maxCoeff() < 1e-3);
    CHECK(tf.fit.coef.tail(127).cwiseAbs().maxCoeff() < 1e-3);
  }
  SUBCASE("denoising") {
    TrendSpec spec;
    spec.n = 512;
    spec.sigma = 0.5;
    const TrendSim sim = sim_trendfilter(spec);
    const TrendFilterFit tf = fit_trendfilter(sim.y, 0, true);
    CHECK(rmse(tf.trend, sim.mu_true) < rmse(sim.y, sim.mu_true));
  }
  SUBCASE("higher orders") {
    const VectorXd x = VectorXd::LinSpaced(128, 0.0, 1.0);
    const VectorXd y = (x.array() - 0.5).abs();
    for (int order : {1, 2}) {
      FitOptions opts;
      opts.solver.max_iters = 100;
      const TrendFilterFit tf = fit_trendfilter(y, order, true, opts);
      CHECK(tf.trend.size() == 128);
      CHECK(tf.fit.elbo >= tf.fit.elbo_init);
    }
  }
  CHECK_THROWS_AS(fit_trendfilter(VectorXd::Zero(10), 3, true), DomainError);
}
