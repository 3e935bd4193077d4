#pragma once

// Shared test helpers: seeded random instances and finite-difference oracles.
// Nothing here calls into the code paths it is used to check.

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "gradvi/linop.hpp"
#include "gradvi/objective.hpp"
#include "gradvi/priors.hpp"

namespace testing {

using gradvi::Index;
using gradvi::VectorXd;

inline double central_diff(const std::function<double(double)>& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

/// Relative error with a floor of one on the denominator.
inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max(1.0, std::max(std::abs(a), std::abs(b)));
}

inline double strict_rel_err(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

/// Random ash prior on `grid` with Dirichlet(1)-like weights.
inline gradvi::AshPrior random_ash(std::mt19937_64& rng, std::vector<double> grid) {
  std::exponential_distribution<double> e(1.0);
  std::vector<double> w(grid.size());
  double total = 0.0;
  for (double& x : w) total += (x = e(rng) + 1e-3);
  for (double& x : w) x /= total;
  w.back() = 1.0;
  for (std::size_t k = 0; k + 1 < w.size(); ++k) w.back() -= w[k];
  return gradvi::AshPrior(std::move(grid), std::move(w));
}

inline gradvi::PointNormalPrior random_point_normal(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.05, 0.95), v(0.1, 3.0);
  return {u(rng), v(rng)};
}

/// Ash prior with `spike` mass on a zero-variance first component.
inline gradvi::AshPrior near_spike_ash(double spike, int K = 20) {
  std::vector<double> grid = gradvi::default_ash_grid(K);
  std::vector<double> w(grid.size(), (1.0 - spike) / static_cast<double>(K - 1));
  w[0] = spike;
  double rest = 0.0;
  for (std::size_t k = 1; k + 1 < w.size(); ++k) rest += w[k];
  w.back() = 1.0 - spike - rest;
  return {std::move(grid), std::move(w)};
}

inline gradvi::RowMatrixXd random_matrix(std::mt19937_64& rng, Index n, Index p) {
  std::normal_distribution<double> nd(0.0, 1.0);
  gradvi::RowMatrixXd X(n, p);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < p; ++j) X(i, j) = nd(rng);
  return X;
}

inline VectorXd random_vector(std::mt19937_64& rng, Index n, double sd = 1.0) {
  std::normal_distribution<double> nd(0.0, sd);
  VectorXd v(n);
  for (Index i = 0; i < n; ++i) v[i] = nd(rng);
  return v;
}

/// Central-difference gradient of f at x, with step 1e-6 max(1, |x_i|).
inline VectorXd fd_gradient(const std::function<double(const VectorXd&)>& f, const VectorXd& x) {
  VectorXd g(x.size());
  VectorXd xp = x;
  for (Index i = 0; i < x.size(); ++i) {
    const double h = 1e-6 * std::max(1.0, std::abs(x[i]));
    xp[i] = x[i] + h;
    const double fp = f(xp);
    xp[i] = x[i] - h;
    const double fm = f(xp);
    xp[i] = x[i];
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

/// Largest entrywise relative error (floor one) between two gradients.
inline double max_rel_err(const VectorXd& a, const VectorXd& b) {
  double worst = 0.0;
  for (Index i = 0; i < a.size(); ++i) worst = std::max(worst, rel_err(a[i], b[i]));
  return worst;
}

/// Random regression problem for gradient checks: Gaussian X, sparse-ish
/// truth, and a packed parameter vector at a random interior point.
struct GradientInstance {
  gradvi::RegressionData data;
  gradvi::Prior prior;
  VectorXd params;
};

/// `K == 1` uses a single slab of variance one, since the default grid of
/// size one is the point mass alone.
inline GradientInstance gradient_instance(std::mt19937_64& rng, gradvi::Method method,
                                          gradvi::PriorFamily family, int K, Index n = 50,
                                          Index p = 120) {
  auto X = std::make_shared<const gradvi::DenseOperator>(random_matrix(rng, n, p));
  const VectorXd b_true = random_vector(rng, p, 0.3);
  const VectorXd y = X->matvec(b_true) + random_vector(rng, n);
  GradientInstance inst{gradvi::RegressionData::make(X, y), gradvi::PointNormalPrior(0.5, 1.0), {}};
  if (family == gradvi::PriorFamily::point_normal) {
    inst.prior = random_point_normal(rng);
  } else {
    inst.prior = K == 1 ? gradvi::AshPrior({1.0}, {1.0})
                        : random_ash(rng, gradvi::default_ash_grid(K));
  }
  std::uniform_real_distribution<double> us(0.5, 2.0);
  const double sigma2 = us(rng);
  const gradvi::Objective obj(inst.data, method, inst.prior);
  // Coefficients well inside the range of S: small b for direct, moderate z
  // for compound.
  const VectorXd coef = random_vector(rng, p, method == gradvi::Method::direct ? 0.05 : 1.0);
  inst.params = obj.pack(coef, inst.prior, sigma2);
  return inst;
}

}  // namespace testing
