#include "gradvi/invert.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gradvi/errors.hpp"

namespace gradvi {

namespace {

void check_options(const InversionOptions& opts) {
  if (!(opts.tol > 0.0)) throw DomainError("inversion tolerance must be positive");
  if (opts.max_iters < 1) throw DomainError("inversion max_iters must be at least 1");
  if (opts.max_expand < 0) throw DomainError("inversion max_expand must be nonnegative");
}

void check_v2(std::span<const double> v2) {
  for (double v : v2)
    if (!(v > 0.0) || !std::isfinite(v))
      throw DomainError("inversion variances must be positive and finite");
}

bool is_constant(std::span<const double> v) {
  if (v.empty()) return true;
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  return *hi - *lo <= 1e-12 * std::abs(*hi);
}

}  // namespace

// ----------------------------------------------------------- MonotoneCubic

MonotoneCubic::MonotoneCubic(std::vector<double> x, std::vector<double> y)
    : x_(std::move(x)), y_(std::move(y)) {
  const std::size_t n = x_.size();
  if (n < 2 || y_.size() != n) throw DomainError("MonotoneCubic needs at least two knots");
  std::vector<double> delta(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double h = x_[i + 1] - x_[i];
    if (!(h > 0.0)) throw DomainError("MonotoneCubic knots must be strictly increasing");
    delta[i] = (y_[i + 1] - y_[i]) / h;
  }
  slope_.assign(n, 0.0);
  slope_[0] = delta[0];
  slope_[n - 1] = delta[n - 2];
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (delta[i - 1] * delta[i] <= 0.0) continue;
    // Weighted harmonic mean (Fritsch-Butland form).
    const double h0 = x_[i] - x_[i - 1];
    const double h1 = x_[i + 1] - x_[i];
    const double w0 = 2.0 * h1 + h0;
    const double w1 = h1 + 2.0 * h0;
    slope_[i] = (w0 + w1) / (w0 / delta[i - 1] + w1 / delta[i]);
  }
  // Endpoint slopes: clip to preserve monotonicity.
  for (std::size_t i : {std::size_t{0}, n - 1}) {
    const double d = i == 0 ? delta[0] : delta[n - 2];
    if (slope_[i] * d <= 0.0) slope_[i] = 0.0;
    if (std::abs(slope_[i]) > 3.0 * std::abs(d)) slope_[i] = 3.0 * d;
  }
}

double MonotoneCubic::operator()(double t) const {
  if (t <= x_.front()) return y_.front();
  if (t >= x_.back()) return y_.back();
  const auto it = std::upper_bound(x_.begin(), x_.end(), t);
  const std::size_t i = static_cast<std::size_t>(it - x_.begin()) - 1;
  const double h = x_[i + 1] - x_[i];
  const double s = (t - x_[i]) / h;
  const double s2 = s * s;
  const double s3 = s2 * s;
  const double h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
  const double h10 = s3 - 2.0 * s2 + s;
  const double h01 = -2.0 * s3 + 3.0 * s2;
  const double h11 = s3 - s2;
  return h00 * y_[i] + h10 * h * slope_[i] + h01 * y_[i + 1] + h11 * h * slope_[i + 1];
}

// ---------------------------------------------------------------- methods

std::vector<double> invert_analytic_normal(std::span<const double> b, const Prior& g,
                                           std::span<const double> v2) {
  double tau = 0.0;
  if (!is_single_normal(g, &tau))
    throw DomainError("analytic inversion needs a single-normal prior");
  if (b.size() != v2.size()) throw DomainError("invert: b and v2 differ in length");
  check_v2(v2);
  std::vector<double> z(b.size());
  for (std::size_t j = 0; j < b.size(); ++j) z[j] = b[j] * (tau + v2[j]) / tau;
  return z;
}

std::vector<double> invert_trisection(std::span<const double> b, const Prior& g,
                                      std::span<const double> v2,
                                      const InversionOptions& opts) {
  check_options(opts);
  if (b.size() != v2.size()) throw DomainError("invert: b and v2 differ in length");
  check_v2(v2);
  const std::size_t p = b.size();
  std::vector<double> z(p, 0.0);
  std::vector<double> target(p), lo(p), hi(p);
  std::vector<std::size_t> active;
  active.reserve(p);
  for (std::size_t j = 0; j < p; ++j) {
    if (!std::isfinite(b[j])) throw DomainError("invert: non-finite target");
    if (b[j] == 0.0) continue;
    target[j] = std::abs(b[j]);
    // 0 <= S(z)/z <= 1 puts the root at or above |b|.
    lo[j] = target[j];
    hi[j] = 2.0 * target[j] + 1.0;
    active.push_back(j);
  }

  // Grow every bracket until S(hi) >= |b|, all coordinates together.
  std::vector<std::size_t> pending = active;
  for (int step = 0; !pending.empty(); ++step) {
    std::vector<std::size_t> still;
    for (std::size_t j : pending) {
      if (posterior_mean(hi[j], g, v2[j]) >= target[j]) continue;
      lo[j] = hi[j];
      hi[j] *= 2.0;
      still.push_back(j);
    }
    if (!still.empty() && step >= opts.max_expand)
      throw ConvergenceError("invert_trisection: could not bracket coordinate " +
                                 std::to_string(still.front()) + " after " +
                                 std::to_string(opts.max_expand) + " doublings",
                             still.front());
    pending.swap(still);
  }

  // Trisection until a bracket is narrow, then Newton steps on S(z) - |b|
  // kept inside the bracket. A Newton step that leaves the bracket falls
  // back to one trisection step.
  NmEval nm;
  std::vector<double> guess(p, 0.0);
  std::vector<char> polishing(p, 0);
  for (int iter = 0; iter < opts.max_iters && !active.empty(); ++iter) {
    std::vector<std::size_t> still;
    still.reserve(active.size());
    for (std::size_t j : active) {
      const double floor = 1e-12 * std::max(1.0, target[j]);
      if (polishing[j]) {
        nm_logml(guess[j], g, v2[j], nm);
        const double r = nm.posterior_mean - target[j];
        if (std::abs(r) <= opts.tol) {
          z[j] = guess[j];
          continue;
        }
        if (r > 0.0)
          hi[j] = guess[j];
        else
          lo[j] = guess[j];
        const double next = nm.posterior_mean_deriv > 0.0 ? guess[j] - r / nm.posterior_mean_deriv : lo[j];
        if (next > lo[j] && next < hi[j] && std::abs(next - guess[j]) > 0.25 * floor) {
          guess[j] = next;
          still.push_back(j);
          continue;
        }
        if (hi[j] - lo[j] <= floor || std::abs(next - guess[j]) <= 0.25 * floor) {
          z[j] = next > lo[j] && next < hi[j] ? next : 0.5 * (lo[j] + hi[j]);
          continue;
        }
        polishing[j] = 0;
      }
      const double width = hi[j] - lo[j];
      const double m1 = lo[j] + width / 3.0;
      const double m2 = hi[j] - width / 3.0;
      const double s1 = posterior_mean(m1, g, v2[j]);
      const double s2 = posterior_mean(m2, g, v2[j]);
      if (s2 < s1) throw InternalError("invert_trisection: posterior mean is not monotone");
      if (std::abs(s1 - target[j]) <= opts.tol) {
        z[j] = m1;
        continue;
      }
      if (std::abs(s2 - target[j]) <= opts.tol) {
        z[j] = m2;
        continue;
      }
      if (s1 > target[j]) {
        hi[j] = m1;
      } else if (s2 > target[j]) {
        lo[j] = m1;
        hi[j] = m2;
      } else {
        lo[j] = m2;
      }
      if (hi[j] - lo[j] <= floor) {
        z[j] = 0.5 * (lo[j] + hi[j]);
        continue;
      }
      if (hi[j] - lo[j] <= 1e-3 * std::max(1.0, target[j])) {
        polishing[j] = 1;
        guess[j] = 0.5 * (lo[j] + hi[j]);
      }
      still.push_back(j);
    }
    active.swap(still);
  }
  for (std::size_t j : active) z[j] = 0.5 * (lo[j] + hi[j]);
  for (std::size_t j = 0; j < p; ++j)
    if (b[j] < 0.0) z[j] = -z[j];
  return z;
}

namespace {

// Newton on S(z) = t kept inside [lo, hi], bisecting when a step leaves it.
double polish_in_bracket(double t, double lo, double hi, double z, const Prior& g, double v2,
                         const InversionOptions& opts) {
  NmEval nm;
  const double floor = 1e-12 * std::max(1.0, hi);
  for (int it = 0; it < opts.max_iters; ++it) {
    nm_logml(z, g, v2, nm);
    const double r = nm.posterior_mean - t;
    if (std::abs(r) <= opts.tol) return z;
    if (r > 0.0)
      hi = z;
    else
      lo = z;
    if (hi - lo <= floor) break;
    const double next = nm.posterior_mean_deriv > 0.0 ? z - r / nm.posterior_mean_deriv : lo;
    z = next > lo && next < hi ? next : 0.5 * (lo + hi);
  }
  return z;
}

}  // namespace

std::vector<double> invert_fssi(std::span<const double> b, const Prior& g, double v2,
                                const InversionOptions& opts) {
  check_options(opts);
  if (!(v2 > 0.0) || !std::isfinite(v2))
    throw DomainError("invert_fssi: variance must be positive and finite");
  if (opts.fssi_grid_points < 4) throw DomainError("invert_fssi: grid needs at least 4 points");
  double bmax = 0.0;
  for (double x : b) {
    if (!std::isfinite(x)) throw DomainError("invert: non-finite target");
    bmax = std::max(bmax, std::abs(x));
  }
  std::vector<double> z(b.size(), 0.0);
  if (bmax == 0.0) return z;

  const int n_lin = opts.fssi_grid_points / 2;
  const int n_geo = opts.fssi_grid_points - n_lin;
  double z_max = std::max(10.0, 2.0 * bmax);
  for (int ext = 0;; ++ext) {
    if (posterior_mean(z_max, g, v2) >= bmax) break;
    if (ext >= opts.max_expand)
      throw RangeError("invert_fssi: target " + std::to_string(bmax) +
                       " lies beyond the posterior-mean range of the grid");
    z_max *= 2.0;
  }

  std::vector<double> zs, ss;
  zs.reserve(static_cast<std::size_t>(opts.fssi_grid_points));
  ss.reserve(zs.capacity());
  auto push = [&](double zi) {
    const double si = posterior_mean(zi, g, v2);
    // Keep the swapped knots strictly increasing; a flat stretch of S would
    // otherwise give duplicate abscissae.
    if (!ss.empty() && !(si > ss.back())) return;
    zs.push_back(zi);
    ss.push_back(si);
  };
  for (int i = 0; i < n_lin; ++i) push(static_cast<double>(i) / n_lin);
  const double ratio = std::pow(z_max, 1.0 / (n_geo - 1));
  for (int i = 0; i < n_geo; ++i) push(i + 1 == n_geo ? z_max : std::pow(ratio, i));
  if (zs.size() < 2) throw InternalError("invert_fssi: posterior mean is flat on the grid");

  const MonotoneCubic inverse(ss, zs);
  NmEval nm;
  for (std::size_t j = 0; j < b.size(); ++j) {
    if (b[j] == 0.0) continue;
    const double t = std::abs(b[j]);
    if (t > inverse.upper()) throw RangeError("invert_fssi: query above grid range");
    // The interpolant is usually within tolerance already. Where S bends
    // sharply (spike-to-slab switch) it is not, so refine inside the knot
    // interval, which brackets the root.
    double zj = inverse(t);
    nm_logml(zj, g, v2, nm);
    if (std::abs(nm.posterior_mean - t) > opts.tol) {
      const auto k = static_cast<std::size_t>(std::upper_bound(ss.begin(), ss.end(), t) - ss.begin());
      double lo = k == 0 ? 0.0 : zs[k - 1];
      double hi = k >= zs.size() ? zs.back() : zs[k];
      zj = polish_in_bracket(t, lo, hi, std::clamp(zj, lo, hi), g, v2, opts);
    }
    z[j] = std::copysign(zj, b[j]);
  }
  return z;
}

InversionMethod choose_inversion_method(const Prior& g, std::span<const double> v2,
                                        const InversionOptions& opts) {
  if (opts.method != InversionMethod::automatic) return opts.method;
  if (is_single_normal(g)) return InversionMethod::analytic_normal;
  if (is_constant(v2)) return InversionMethod::fssi;
  return InversionMethod::trisection;
}

std::vector<double> invert(std::span<const double> b, const Prior& g,
                           std::span<const double> v2, const InversionOptions& opts) {
  if (b.size() != v2.size()) throw DomainError("invert: b and v2 differ in length");
  switch (choose_inversion_method(g, v2, opts)) {
    case InversionMethod::analytic_normal:
      return invert_analytic_normal(b, g, v2);
    case InversionMethod::fssi:
      check_v2(v2);
      return invert_fssi(b, g, v2.empty() ? 1.0 : v2.front(), opts);
    case InversionMethod::trisection:
    case InversionMethod::automatic:
      break;
  }
  return invert_trisection(b, g, v2, opts);
}

}  // namespace gradvi
