#include "gradvi/optim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "gradvi/errors.hpp"

namespace gradvi {

namespace {

bool finite(double v) { return std::isfinite(v); }

bool finite(const VectorXd& v) { return v.allFinite(); }

std::vector<double> to_std(const VectorXd& v) { return {v.data(), v.data() + v.size()}; }

struct Trial {
  double alpha = 0.0;
  double phi = 0.0;
  double dphi = 0.0;
  VectorXd x;
  VectorXd g;
  bool ok() const { return finite(phi) && finite(dphi); }
};

// Minimizer of the cubic matching (phi, dphi) at a and b; NaN if undefined.
double cubic_min(const Trial& a, const Trial& b) {
  const double d1 = a.dphi + b.dphi - 3.0 * (a.phi - b.phi) / (a.alpha - b.alpha);
  const double disc = d1 * d1 - a.dphi * b.dphi;
  if (!(disc >= 0.0)) return std::numeric_limits<double>::quiet_NaN();
  const double d2 = std::copysign(std::sqrt(disc), b.alpha - a.alpha);
  const double denom = b.dphi - a.dphi + 2.0 * d2;
  if (denom == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return b.alpha - (b.alpha - a.alpha) * (b.dphi + d2 - d1) / denom;
}

class LineSearch {
 public:
  LineSearch(const ObjectiveFn& f, const SolverOptions& opts, const VectorXd& x,
             const VectorXd& d, double phi0, double dphi0, int& evals)
      : f_(f), opts_(opts), x_(x), d_(d), phi0_(phi0), dphi0_(dphi0), evals_(evals) {}

  // Strong-Wolfe search (bracketing phase followed by zoom).
  bool run(double alpha0, Trial& accepted) {
    Trial prev{0.0, phi0_, dphi0_, {}, {}};
    double alpha = alpha0;
    for (int i = 0; i < opts_.max_line_search; ++i) {
      Trial cur = eval(alpha);
      if (!cur.ok() || cur.phi > phi0_ + opts_.c1 * alpha * dphi0_ ||
          (i > 0 && cur.phi >= prev.phi))
        return zoom(prev, cur, accepted);
      if (std::abs(cur.dphi) <= -opts_.c2 * dphi0_) {
        accepted = std::move(cur);
        return true;
      }
      if (cur.dphi >= 0.0) return zoom(cur, prev, accepted);
      double next = cubic_min(prev, cur);
      if (!finite(next) || next < 1.1 * alpha || next > 10.0 * alpha) next = 2.0 * alpha;
      prev = std::move(cur);
      alpha = next;
    }
    return false;
  }

 private:
  Trial eval(double alpha) {
    Trial t;
    t.alpha = alpha;
    t.x = x_ + alpha * d_;
    t.g.resize(x_.size());
    t.phi = f_(t.x, t.g);
    ++evals_;
    t.dphi = finite(t.g) ? t.g.dot(d_) : std::numeric_limits<double>::quiet_NaN();
    if (!finite(t.phi)) t.phi = std::numeric_limits<double>::infinity();
    return t;
  }

  // `lo` satisfies sufficient decrease and has the lowest phi so far; the
  // minimizer lies between lo and hi.
  bool zoom(Trial lo, Trial hi, Trial& accepted) {
    for (int i = 0; i < opts_.max_line_search; ++i) {
      const double a = std::min(lo.alpha, hi.alpha);
      const double b = std::max(lo.alpha, hi.alpha);
      const double width = b - a;
      if (width <= 1e-16 * std::max(1.0, b)) return false;
      double alpha = hi.ok() ? cubic_min(lo, hi) : std::numeric_limits<double>::quiet_NaN();
      if (!finite(alpha) || alpha < a + 0.1 * width || alpha > b - 0.1 * width)
        alpha = 0.5 * (a + b);
      Trial cur = eval(alpha);
      if (!cur.ok() || cur.phi > phi0_ + opts_.c1 * alpha * dphi0_ || cur.phi >= lo.phi) {
        hi = std::move(cur);
        continue;
      }
      if (std::abs(cur.dphi) <= -opts_.c2 * dphi0_) {
        accepted = std::move(cur);
        return true;
      }
      if (cur.dphi * (hi.alpha - lo.alpha) >= 0.0) hi = lo;
      lo = std::move(cur);
    }
    return false;
  }

  const ObjectiveFn& f_;
  const SolverOptions& opts_;
  const VectorXd& x_;
  const VectorXd& d_;
  double phi0_;
  double dphi0_;
  int& evals_;
};

}  // namespace

std::string_view status_name(SolverStatus s) {
  switch (s) {
    case SolverStatus::converged_grad:
      return "converged_grad";
    case SolverStatus::converged_obj:
      return "converged_obj";
    case SolverStatus::max_iters:
      return "max_iters";
    case SolverStatus::line_search_failure:
      return "line_search_failure";
  }
  return "unknown";
}

SolverResult minimize(const ObjectiveFn& f, VectorXd x0, const SolverOptions& opts) {
  if (!(opts.c1 > 0.0 && opts.c1 < opts.c2 && opts.c2 < 1.0))
    throw DomainError("solver needs 0 < c1 < c2 < 1");
  if (opts.memory < 1) throw DomainError("solver memory must be at least 1");
  if (opts.max_iters < 0) throw DomainError("solver max_iters must be nonnegative");

  SolverResult res;
  res.x = std::move(x0);
  VectorXd g(res.x.size());
  res.f = f(res.x, g);
  res.n_evals = 1;
  if (!finite(res.f) || !finite(g))
    throw NumericalError("objective or gradient is not finite at the starting point",
                         to_std(res.x));
  res.trace.push_back(res.f);
  res.grad_norm = g.lpNorm<Eigen::Infinity>();
  if (res.grad_norm <= opts.grad_tol) {
    res.status = SolverStatus::converged_grad;
    return res;
  }

  std::deque<VectorXd> s_hist, y_hist;
  std::deque<double> rho_hist;
  std::vector<double> alpha_buf;
  bool retried = false;
  res.status = SolverStatus::max_iters;

  while (res.n_iters < opts.max_iters) {
    // Two-loop recursion for d = -H g.
    VectorXd d = -g;
    double alpha0 = 1.0;
    if (s_hist.empty()) {
      alpha0 = 1.0 / g.norm();
    } else {
      const std::size_t m = s_hist.size();
      alpha_buf.assign(m, 0.0);
      for (std::size_t i = m; i-- > 0;) {
        alpha_buf[i] = rho_hist[i] * s_hist[i].dot(d);
        d -= alpha_buf[i] * y_hist[i];
      }
      d *= s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
      for (std::size_t i = 0; i < m; ++i) {
        const double beta = rho_hist[i] * y_hist[i].dot(d);
        d += (alpha_buf[i] - beta) * s_hist[i];
      }
    }
    double dphi0 = g.dot(d);
    if (!(dphi0 < 0.0)) {
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      d = -g;
      alpha0 = 1.0 / g.norm();
      dphi0 = g.dot(d);
    }

    Trial step;
    LineSearch ls(f, opts, res.x, d, res.f, dphi0, res.n_evals);
    if (!ls.run(alpha0, step)) {
      if (!retried && !s_hist.empty()) {
        retried = true;
        s_hist.clear();
        y_hist.clear();
        rho_hist.clear();
        continue;
      }
      res.status = SolverStatus::line_search_failure;
      break;
    }
    retried = false;

    VectorXd s = step.x - res.x;
    VectorXd y = step.g - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm() && sy > 0.0) {
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(y));
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > opts.memory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }

    const double f_prev = res.f;
    res.x = std::move(step.x);
    g = std::move(step.g);
    res.f = step.phi;
    ++res.n_iters;
    res.trace.push_back(res.f);
    res.grad_norm = g.lpNorm<Eigen::Infinity>();
    if (opts.on_step)
      opts.on_step({res.n_iters, step.alpha, f_prev, dphi0, step.phi, step.dphi});

    if (res.grad_norm <= opts.grad_tol) {
      res.status = SolverStatus::converged_grad;
      break;
    }
    const double scale = std::max({std::abs(f_prev), std::abs(res.f), 1.0});
    if (std::abs(f_prev - res.f) <= opts.rel_obj_tol * scale) {
      res.status = SolverStatus::converged_obj;
      break;
    }
  }
  return res;
}

}  // namespace gradvi
