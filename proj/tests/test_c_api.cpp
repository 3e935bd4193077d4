#include <cmath>
#include <cstring>
#include <vector>

#include "doctest.h"
#include "gradvi/gradvi.h"

TEST_CASE("simulate, fit and query through the C interface") {
  gradvi_linreg_spec spec;
  gradvi_linreg_spec_default(&spec);
  spec.n = 80;
  spec.p = 60;
  spec.s = 3;
  spec.seed = 9;
  gradvi_simulation* sim = nullptr;
  REQUIRE(gradvi_simulate_linreg(&spec, &sim) == GRADVI_OK);
  REQUIRE(gradvi_simulation_n(sim) == 80);
  REQUIRE(gradvi_simulation_p(sim) == 60);
  CHECK(gradvi_simulation_support_size(sim) == 3);

  gradvi_dataset* data = nullptr;
  REQUIRE(gradvi_dataset_dense(gradvi_simulation_X(sim), 80, 60, gradvi_simulation_y(sim), 0, &data) ==
          GRADVI_OK);
  gradvi_fit_options opts;
  gradvi_fit_options_default(&opts);
  CHECK(opts.k_mix == 20);
  CHECK(opts.method == GRADVI_METHOD_COMPOUND);

  gradvi_fit* fit = nullptr;
  REQUIRE(gradvi_fit_run(data, &opts, nullptr, 0, &fit) == GRADVI_OK);
  CHECK(gradvi_fit_converged(fit));
  CHECK(std::strcmp(gradvi_fit_method(fit), "compound") == 0);
  CHECK(std::strcmp(gradvi_fit_prior_family(fit), "ash") == 0);
  CHECK(gradvi_fit_elbo(fit) >= gradvi_fit_elbo_init(fit));

  std::vector<double> coef(60), pred(80);
  CHECK(gradvi_fit_coef(fit, coef.data(), coef.size()) == GRADVI_OK);
  CHECK(gradvi_fit_predict(fit, data, pred.data(), pred.size()) == GRADVI_OK);
  double err = 0.0;
  CHECK(gradvi_rmse(coef.data(), gradvi_simulation_truth(sim), 60, &err) == GRADVI_OK);
  CHECK(err < 0.2);

  const size_t K = gradvi_fit_prior_size(fit);
  REQUIRE(K == 20);
  std::vector<double> w(K), grid(K);
  CHECK(gradvi_fit_prior(fit, w.data(), grid.data(), K) == GRADVI_OK);
  double total = 0.0;
  for (double x : w) total += x;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));

  std::vector<double> trace(gradvi_fit_elbo_trace_size(fit));
  CHECK(gradvi_fit_elbo_trace(fit, trace.data(), trace.size()) == GRADVI_OK);
  CHECK(trace.back() == gradvi_fit_elbo(fit));

  int sweeps = 0;
  double gnorm = 1.0;
  CHECK(gradvi_cavi_check(data, fit, 1e-10, 10000, nullptr, 0, &sweeps, &gnorm) == GRADVI_OK);
  CHECK(gnorm <= 1e-6);
  CHECK(sweeps > 0);

  // Short output buffers and warm starts of the wrong length are reported.
  CHECK(gradvi_fit_coef(fit, coef.data(), 10) == GRADVI_ERR_DOMAIN);
  CHECK(std::strlen(gradvi_last_error()) > 0);
  gradvi_fit* bad = nullptr;
  CHECK(gradvi_fit_run(data, &opts, coef.data(), 5, &bad) == GRADVI_ERR_DOMAIN);
  CHECK(bad == nullptr);

  // Warm start from the fitted coefficients.
  gradvi_fit* warm = nullptr;
  CHECK(gradvi_fit_run(data, &opts, coef.data(), coef.size(), &warm) == GRADVI_OK);
  CHECK(gradvi_fit_warmup_iterations(warm) > 0);

  gradvi_fit_free(warm);
  gradvi_fit_free(fit);
  gradvi_dataset_free(data);
  gradvi_simulation_free(sim);
}

TEST_CASE("trend filtering through the C interface") {
  gradvi_simulation* sim = nullptr;
  REQUIRE(gradvi_simulate_trendfilter(256, 3, 0.1, 4, &sim) == GRADVI_OK);
  CHECK(gradvi_simulation_p(sim) == 0);
  CHECK(gradvi_simulation_X(sim) == nullptr);
  gradvi_dataset* data = nullptr;
  REQUIRE(gradvi_dataset_trendfilter(gradvi_simulation_y(sim), 256, 0, 1, &data) == GRADVI_OK);
  gradvi_fit* fit = nullptr;
  REQUIRE(gradvi_fit_run(data, nullptr, nullptr, 0, &fit) == GRADVI_OK);
  std::vector<double> trend(256);
  CHECK(gradvi_fit_predict(fit, data, trend.data(), trend.size()) == GRADVI_OK);
  double fit_err = 0.0, raw_err = 0.0;
  gradvi_rmse(trend.data(), gradvi_simulation_truth(sim), 256, &fit_err);
  gradvi_rmse(gradvi_simulation_y(sim), gradvi_simulation_truth(sim), 256, &raw_err);
  CHECK(fit_err < raw_err);
  gradvi_fit_free(fit);
  gradvi_dataset_free(data);
  gradvi_simulation_free(sim);
}

TEST_CASE("C interface errors") {
  gradvi_dataset* data = nullptr;
  const double y[4] = {1, 2, 3, 4};
  CHECK(gradvi_dataset_trendfilter(y, 4, 3, 0, &data) == GRADVI_ERR_DOMAIN);
  CHECK(data == nullptr);
  CHECK(gradvi_dataset_trendfilter(nullptr, 4, 0, 0, &data) == GRADVI_ERR_NULL);
  const double X[4] = {1, 0, 1, 0};
  CHECK(gradvi_dataset_dense(X, 2, 2, y, 0, &data) == GRADVI_ERR_DOMAIN);
  gradvi_linreg_spec spec;
  gradvi_linreg_spec_default(&spec);
  spec.pve = 1.5;
  gradvi_simulation* sim = nullptr;
  CHECK(gradvi_simulate_linreg(&spec, &sim) == GRADVI_ERR_DOMAIN);
  CHECK(std::strstr(gradvi_last_error(), "pve") != nullptr);
  CHECK(std::strcmp(gradvi_status_string(GRADVI_ERR_RANGE), "range error") == 0);
  double grid[3];
  CHECK(gradvi_default_grid(3, grid, 3) == GRADVI_OK);
  CHECK(grid[0] == 0.0);
  CHECK(gradvi_default_grid(0, grid, 3) == GRADVI_ERR_DOMAIN);
  gradvi_dataset_free(nullptr);
  gradvi_fit_free(nullptr);
  gradvi_simulation_free(nullptr);
}
