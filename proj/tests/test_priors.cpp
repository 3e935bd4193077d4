#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "gradvi/errors.hpp"
#include "gradvi/priors.hpp"
#include "support.hpp"

using namespace gradvi;
using testing::central_diff;
using testing::strict_rel_err;

namespace {

double normal_pdf(double x, double mean, double var) {
  return std::exp(-0.5 * (x - mean) * (x - mean) / var) / std::sqrt(2.0 * std::numbers::pi * var);
}

// Composite Simpson on [-L, L] for int N(z | mu, s2) N(mu | 0, tau) dmu.
double slab_marginal_quadrature(double z, double tau, double s2) {
  const int m = 20000;
  const double L = 40.0;
  const double h = 2.0 * L / m;
  double acc = 0.0;
  for (int i = 0; i <= m; ++i) {
    const double mu = -L + i * h;
    const double w = (i == 0 || i == m) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    acc += w * normal_pdf(z, mu, s2) * normal_pdf(mu, 0.0, tau);
  }
  return acc * h / 3.0;
}

Prior two_point() { return AshPrior({0.0, 1.0}, {0.5, 0.5}); }

}  // namespace

TEST_CASE("nm_logml closed forms") {
  const Prior single = AshPrior({1.0}, {1.0});
  CHECK(nm_logml(0.0, single, 1.0).logml ==
        doctest::Approx(-0.5 * std::log(4.0 * std::numbers::pi)).epsilon(1e-14));
  CHECK(nm_logml(0.0, single, 1.0).logml == doctest::Approx(-1.26551212348464539).epsilon(1e-14));

  const Prior spike_only = PointNormalPrior(0.0, 1.0);
  for (double z : {-3.0, -0.2, 0.0, 1.7, 12.0})
    CHECK(nm_logml(z, spike_only, 1.0).logml ==
          doctest::Approx(std::log(normal_pdf(z, 0.0, 1.0))).epsilon(1e-13));
}

TEST_CASE("nm_logml two-component mixture against quadrature") {
  // Frozen from an mpmath evaluation of log(1/2 N(1|0,1) + 1/2 N(1|0,2)).
  const double frozen = -1.46605997380627935;
  CHECK(nm_logml(1.0, two_point(), 1.0).logml == doctest::Approx(frozen).epsilon(1e-14));
  const double quad = 0.5 * normal_pdf(1.0, 0.0, 1.0) + 0.5 * slab_marginal_quadrature(1.0, 1.0, 1.0);
  CHECK(std::log(quad) == doctest::Approx(frozen).epsilon(1e-9));
}

TEST_CASE("nm_logml rejects bad inputs") {
  CHECK_THROWS_AS(nm_logml(0.0, two_point(), 0.0), DomainError);
  CHECK_THROWS_AS(nm_logml(0.0, two_point(), -1.0), DomainError);
  CHECK_THROWS_AS(AshPrior({}, {}), DomainError);
  CHECK_THROWS_AS(AshPrior({1.0, 0.5}, {0.5, 0.5}), DomainError);
  CHECK_THROWS_AS(AshPrior({0.0, 1.0}, {0.7, 0.7}), DomainError);
  CHECK_THROWS_AS(PointNormalPrior(1.5, 1.0), DomainError);
}

TEST_CASE("nm_logml stays finite for large observations") {
  const Prior g = testing::near_spike_ash(0.9);
  for (double z : {1e3, -1e5, 1e6}) {
    const NmEval e = nm_logml(z, g, 1e-2);
    CHECK(std::isfinite(e.logml));
    CHECK(std::isfinite(e.d_z));
    CHECK(std::isfinite(e.d_zz));
    CHECK(std::isfinite(e.d_s2));
    for (double d : e.d_prior) CHECK(std::isfinite(d));
  }
}

TEST_CASE("posterior mean examples") {
  const Prior single = AshPrior({1.0}, {1.0});
  CHECK(posterior_mean(2.0, single, 1.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(posterior_mean(0.0, two_point(), 0.7) == 0.0);
  CHECK(posterior_mean(0.0, PointNormalPrior(0.3, 2.0), 0.7) == 0.0);
  // Frozen from mpmath quadrature of the posterior mean.
  CHECK(posterior_mean(1.0, two_point(), 1.0) == doctest::Approx(0.237937674655983627).epsilon(1e-13));
}

TEST_CASE("posterior mean: responsibility form matches Tweedie form") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> uz(-8.0, 8.0), us(0.05, 4.0);
  for (int t = 0; t < 200; ++t) {
    const Prior g = testing::random_ash(rng, default_ash_grid(10));
    const double z = uz(rng), s2 = us(rng);
    const NmEval e = nm_logml(z, g, s2);
    CHECK(std::abs(e.posterior_mean - (z + s2 * e.d_z)) <= 1e-10 * std::max(1.0, std::abs(z)));
  }
}

TEST_CASE("posterior_mean_deriv") {
  const Prior single = AshPrior({1.0}, {1.0});
  for (double z : {-2.0, 0.0, 0.3, 5.0})
    CHECK(posterior_mean_deriv(z, single, 1.0) == doctest::Approx(0.5).epsilon(1e-14));

  const Prior all_spike = AshPrior({0.0, 1.0}, {1.0, 0.0});
  for (double z : {-2.0, 0.0, 3.0}) {
    CHECK(posterior_mean(z, all_spike, 1.0) == 0.0);
    CHECK(posterior_mean_deriv(z, all_spike, 1.0) == 0.0);
  }

  const double slope0 = posterior_mean_deriv(0.0, two_point(), 1.0);
  CHECK(slope0 > 0.0);
  CHECK(slope0 < 1.0);
  const double fd = central_diff([](double z) { return posterior_mean(z, two_point(), 1.0); }, 0.0, 1e-6);
  CHECK(strict_rel_err(slope0, fd) < 1e-5);

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> uz(-6.0, 6.0), us(0.05, 3.0);
  for (int t = 0; t < 200; ++t) {
    const Prior g = testing::random_ash(rng, default_ash_grid(8));
    const double z = uz(rng), s2 = us(rng);
    const double h = 1e-6 * std::max(1.0, std::abs(z));
    const double fd_t = central_diff([&](double x) { return posterior_mean(x, g, s2); }, z, h);
    CHECK(strict_rel_err(posterior_mean_deriv(z, g, s2), fd_t) < 1e-5);
  }
}

TEST_CASE("pack and unpack") {
  const Prior uniform = AshPrior::uniform(default_ash_grid(7));
  for (double v : pack_prior(uniform)) CHECK(v == 0.0);

  const auto pn = pack_prior(PointNormalPrior(0.5, 1.0));
  CHECK(pn[0] == 0.0);
  CHECK(pn[1] == 0.0);

  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd(0.0, 2.0);
  const auto grid = default_ash_grid(12);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> v(11);
    for (double& x : v) x = nd(rng);
    const auto back = pack_prior(unpack_prior(v, PriorFamily::ash, grid));
    for (std::size_t k = 0; k < v.size(); ++k) CHECK(std::abs(back[k] - v[k]) <= 1e-12);

    const std::vector<double> q{nd(rng), nd(rng)};
    const auto back_pn = pack_prior(unpack_prior(q, PriorFamily::point_normal));
    CHECK(std::abs(back_pn[0] - q[0]) <= 1e-12);
    CHECK(std::abs(back_pn[1] - q[1]) <= 1e-12);
  }

  const std::vector<double> bad{0.0, std::nan("")};
  CHECK_THROWS_AS(unpack_prior(bad, PriorFamily::point_normal), DomainError);
  CHECK_THROWS_AS(unpack_prior(std::vector<double>{1.0}, PriorFamily::ash, grid), DomainError);
}

TEST_CASE("softmax reproduces weights") {
  std::mt19937_64 rng(8);
  const AshPrior g = testing::random_ash(rng, default_ash_grid(20));
  const AshPrior back = std::get<AshPrior>(unpack_prior(pack_prior(g), Prior(g)));
  for (std::size_t k = 0; k < g.size(); ++k)
    CHECK(std::abs(back.weights()[k] - g.weights()[k]) <= 1e-12);
}

TEST_CASE("default ash grid") {
  const auto g20 = default_ash_grid(20);
  REQUIRE(g20.size() == 20);
  CHECK(g20[0] == 0.0);
  // Direct evaluation of (2^(19/20) - 1)^2.
  CHECK(g20[19] == doctest::Approx(0.8683866504478472).epsilon(1e-14));
  CHECK(default_ash_grid(1) == std::vector<double>{0.0});
  CHECK_THROWS_AS(default_ash_grid(0), DomainError);
}

TEST_CASE("property: Tweedie consistency") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> uz(-10.0, 10.0), us(0.01, 5.0);
  std::uniform_int_distribution<int> uk(1, 20);
  for (int t = 0; t < 1000; ++t) {
    const Prior g = (t % 4 == 3) ? Prior(testing::random_point_normal(rng))
                                 : Prior(testing::random_ash(rng, default_ash_grid(uk(rng))));
    const double z = uz(rng), s2 = us(rng);
    const double h = 1e-5 * std::max(1.0, std::abs(z));
    const double fd = central_diff([&](double x) { return nm_logml(x, g, s2).logml; }, z, h);
    const double lhs = s2 * fd;
    const double rhs = posterior_mean(z, g, s2) - z;
    CHECK(std::abs(lhs - rhs) <= 1e-5 * std::max(1.0, std::abs(rhs)));
  }
}

TEST_CASE("property: shrinkage, oddness and monotonicity") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> us(0.01, 4.0);
  for (int t = 0; t < 50; ++t) {
    const Prior g = (t % 3 == 0) ? Prior(testing::random_point_normal(rng))
                                 : Prior(testing::random_ash(rng, default_ash_grid(20)));
    const double s2 = us(rng);
    double prev = -1e300;
    for (int i = -400; i <= 400; ++i) {
      const double z = 0.05 * i;
      const double S = posterior_mean(z, g, s2);
      CHECK(S >= prev);
      prev = S;
      if (z != 0.0) {
        const double ratio = S / z;
        CHECK(ratio >= 0.0);
        CHECK(ratio <= 1.0);
        CHECK(posterior_mean(-z, g, s2) == doctest::Approx(-S).epsilon(1e-15));
      }
    }
  }
}

TEST_CASE("property: every NmEval partial matches finite differences") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> uz(-5.0, 5.0), us(0.1, 3.0);
  auto check_close = [](double analytic, double fd) {
    CHECK(std::abs(analytic - fd) <= 1e-5 * std::max(1.0, std::abs(fd)));
  };
  for (int t = 0; t < 60; ++t) {
    const bool pn = t % 2 == 1;
    const auto grid = default_ash_grid(6);
    const Prior g = pn ? Prior(testing::random_point_normal(rng)) : Prior(testing::random_ash(rng, grid));
    const double z = uz(rng), s2 = us(rng);
    const NmEval e = nm_logml(z, g, s2);

    check_close(e.d_z, central_diff([&](double x) { return nm_logml(x, g, s2).logml; }, z, 1e-6));
    check_close(e.d_zz, central_diff([&](double x) { return nm_logml(x, g, s2).d_z; }, z, 1e-6));
    check_close(e.d_s2, central_diff([&](double x) { return nm_logml(z, g, x).logml; }, s2, 1e-7));
    check_close(e.d_z_s2, central_diff([&](double x) { return nm_logml(z, g, x).d_z; }, s2, 1e-7));

    // Natural parameters, perturbed one at a time.
    const std::size_t nat = natural_dim(g);
    for (std::size_t k = 0; k < nat; ++k) {
      auto perturbed = [&](double delta) -> Prior {
        if (pn) {
          const auto& q = std::get<PointNormalPrior>(g);
          return k == 0 ? PointNormalPrior(q.slab_weight() + delta, q.slab_variance())
                        : PointNormalPrior(q.slab_weight(), q.slab_variance() + delta);
        }
        // Weights off the simplex are fine for the marginal: build the
        // mixture by hand.
        return g;
      };
      if (pn) {
        const double h = 1e-6;
        const double fd = (nm_logml(z, perturbed(h), s2).logml - nm_logml(z, perturbed(-h), s2).logml) / (2 * h);
        const double fdz = (nm_logml(z, perturbed(h), s2).d_z - nm_logml(z, perturbed(-h), s2).d_z) / (2 * h);
        check_close(e.d_prior[k], fd);
        check_close(e.d_z_prior[k], fdz);
      } else {
        // dl/dw_k = phi_k / L exactly; check through the simplex direction
        // e_k - e_last, which stays a valid prior.
        const auto& a = std::get<AshPrior>(g);
        const std::size_t last = a.size() - 1;
        if (k == last) continue;
        const double h = 1e-7;
        auto shifted = [&](double delta) {
          std::vector<double> w = a.weights();
          w[k] += delta;
          w[last] -= delta;
          return Prior(AshPrior(a.grid(), w));
        };
        const double fd = (nm_logml(z, shifted(h), s2).logml - nm_logml(z, shifted(-h), s2).logml) / (2 * h);
        const double fdz = (nm_logml(z, shifted(h), s2).d_z - nm_logml(z, shifted(-h), s2).d_z) / (2 * h);
        check_close(e.d_prior[k] - e.d_prior[last], fd);
        check_close(e.d_z_prior[k] - e.d_z_prior[last], fdz);
      }
    }
  }
}

TEST_CASE("property: single-component ash equals the normal closed form") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> uz(-6.0, 6.0), us(0.1, 3.0);
  const auto grid = default_ash_grid(5);
  for (int t = 0; t < 50; ++t) {
    const std::size_t k = 1 + static_cast<std::size_t>(t % 4);
    std::vector<double> w(5, 0.0);
    w[k] = 1.0;
    const Prior g = AshPrior(grid, w);
    const double z = uz(rng), s2 = us(rng);
    const double tau = grid[k] + s2;
    CHECK(nm_logml(z, g, s2).logml ==
          doctest::Approx(std::log(normal_pdf(z, 0.0, tau))).epsilon(1e-13));
    CHECK(posterior_mean(z, g, s2) == doctest::Approx(z * grid[k] / tau).epsilon(1e-13));
  }
}
