#include "gradvi/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "gradvi/errors.hpp"

namespace gradvi {

namespace {

using Rng = std::mt19937_64;

// Uniform sample of k distinct indices from [lo, hi), returned sorted.
std::vector<int> sample_without_replacement(Rng& rng, int lo, int hi, int k) {
  std::vector<int> pool(static_cast<std::size_t>(hi - lo));
  std::iota(pool.begin(), pool.end(), lo);
  for (int i = 0; i < k; ++i) {
    std::uniform_int_distribution<int> pick(i, static_cast<int>(pool.size()) - 1);
    std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(pick(rng))]);
  }
  pool.resize(static_cast<std::size_t>(k));
  std::sort(pool.begin(), pool.end());
  return pool;
}

void validate(const LinregSpec& spec) {
  if (spec.n < 2) throw DomainError("simulation needs n >= 2");
  if (spec.p < 1) throw DomainError("simulation needs p >= 1");
  if (spec.s < 1 || spec.s > spec.p) throw DomainError("simulation needs 1 <= s <= p");
  if (!(spec.pve > 0.0 && spec.pve < 1.0)) throw DomainError("pve must lie in (0, 1)");
  if (spec.design == Design::block) {
    if (spec.n_blocks < 1) throw DomainError("block design needs at least one block");
    if (spec.min_block_size < 1) throw DomainError("minimum block size must be positive");
    if (static_cast<long>(spec.n_blocks) * spec.min_block_size > spec.p)
      throw DomainError("block design: " + std::to_string(spec.n_blocks) + " blocks of at least " +
                        std::to_string(spec.min_block_size) + " do not fit in p = " +
                        std::to_string(spec.p));
    if (!(spec.block_corr >= 0.0 && spec.block_corr < 1.0))
      throw DomainError("block correlation must lie in [0, 1)");
  }
}

}  // namespace

std::string_view design_name(Design d) { return d == Design::iid ? "iid" : "block"; }

Design parse_design(std::string_view name) {
  if (name == "iid") return Design::iid;
  if (name == "block") return Design::block;
  throw DomainError("unknown design '" + std::string(name) + "'");
}

double noise_for_pve(double var_xb, double pve) {
  if (!(pve > 0.0 && pve < 1.0)) throw DomainError("pve must lie in (0, 1)");
  return var_xb * (1.0 - pve) / pve;
}

double sample_variance(const Eigen::Ref<const VectorXd>& v) {
  if (v.size() < 2) return 0.0;
  const double mean = v.mean();
  return (v.array() - mean).square().sum() / static_cast<double>(v.size() - 1);
}

LinregSim sim_linreg(const LinregSpec& spec) {
  validate(spec);
  Rng rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  LinregSim sim;
  sim.X.resize(spec.n, spec.p);

  if (spec.design == Design::iid) {
    for (Index i = 0; i < spec.n; ++i)
      for (Index j = 0; j < spec.p; ++j) sim.X(i, j) = normal(rng);
  } else {
    // Block sizes: minimum plus a uniform split of the remainder.
    const int extra = spec.p - spec.n_blocks * spec.min_block_size;
    std::uniform_int_distribution<int> cut(0, extra);
    std::vector<int> cuts{0, extra};
    for (int b = 1; b < spec.n_blocks; ++b) cuts.push_back(cut(rng));
    std::sort(cuts.begin(), cuts.end());
    for (int b = 0; b < spec.n_blocks; ++b)
      sim.block_sizes.push_back(spec.min_block_size + cuts[static_cast<std::size_t>(b) + 1] -
                                cuts[static_cast<std::size_t>(b)]);
    // x_ij = sqrt(rho) u_i,block + sqrt(1 - rho) e_ij gives unit variance and
    // within-block correlation rho.
    const double shared = std::sqrt(spec.block_corr);
    const double own = std::sqrt(1.0 - spec.block_corr);
    for (Index i = 0; i < spec.n; ++i) {
      Index j = 0;
      for (int size : sim.block_sizes) {
        const double u = normal(rng);
        for (int c = 0; c < size; ++c, ++j) sim.X(i, j) = shared * u + own * normal(rng);
      }
    }
  }

  sim.causal = sample_without_replacement(rng, 0, spec.p, spec.s);
  sim.b_true = VectorXd::Zero(spec.p);
  for (int j : sim.causal) sim.b_true[j] = normal(rng);

  const VectorXd signal = sim.X * sim.b_true;
  sim.sigma2 = noise_for_pve(sample_variance(signal), spec.pve);
  const double sd = std::sqrt(sim.sigma2);
  sim.y.resize(spec.n);
  for (Index i = 0; i < spec.n; ++i) sim.y[i] = signal[i] + sd * normal(rng);
  return sim;
}

TrendSim sim_trendfilter(const TrendSpec& spec) {
  if (spec.n < 2) throw DomainError("trend simulation needs n >= 2");
  if (spec.n_changepoints < 0 || spec.n_changepoints >= spec.n)
    throw DomainError("number of changepoints must lie in [0, n)");
  if (!(spec.sigma >= 0.0) || !std::isfinite(spec.sigma))
    throw DomainError("noise sigma must be finite and nonnegative");
  Rng rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  TrendSim sim;
  sim.x = VectorXd::LinSpaced(spec.n, 0.0, 1.0);
  sim.changepoints = sample_without_replacement(rng, 1, spec.n, spec.n_changepoints);
  sim.jumps = VectorXd::Zero(spec.n);
  for (int c : sim.changepoints) sim.jumps[c] = normal(rng);
  sim.mu_true.resize(spec.n);
  double level = 0.0;
  for (Index i = 0; i < spec.n; ++i) sim.mu_true[i] = (level += sim.jumps[i]);
  sim.y.resize(spec.n);
  for (Index i = 0; i < spec.n; ++i) sim.y[i] = sim.mu_true[i] + spec.sigma * normal(rng);
  return sim;
}

double rmse(const Eigen::Ref<const VectorXd>& a, const Eigen::Ref<const VectorXd>& b) {
  if (a.size() != b.size()) throw DomainError("rmse: length mismatch");
  if (a.size() == 0) throw DomainError("rmse: empty vectors");
  return (a - b).norm() / std::sqrt(static_cast<double>(a.size()));
}

Metrics metrics(const Eigen::Ref<const VectorXd>& truth, const Eigen::Ref<const VectorXd>& pred,
                const Eigen::Ref<const VectorXd>& pred_ref, double elbo_method, double elbo_ref) {
  Metrics m;
  m.rmse = rmse(truth, pred);
  m.rmse_ref = rmse(truth, pred_ref);
  if (m.rmse_ref > 0.0)
    m.delta_rmse_pct = 100.0 * (m.rmse - m.rmse_ref) / m.rmse_ref;
  else if (m.rmse == 0.0)
    m.delta_rmse_pct = 0.0;
  m.delta_elbo = elbo_method - elbo_ref;
  return m;
}

}  // namespace gradvi
