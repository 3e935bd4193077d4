#pragma once

// Inversion of the posterior-mean operator: given b, find z with S(z) = b.

#include <span>
#include <vector>

#include "gradvi/priors.hpp"

namespace gradvi {

enum class InversionMethod { automatic, trisection, fssi, analytic_normal };

struct InversionOptions {
  /// Target on |S(z) - b|.
  double tol = 1e-8;
  /// Bracket doublings (trisection) or grid extensions (FSSI) before giving up.
  int max_expand = 60;
  int max_iters = 200;
  InversionMethod method = InversionMethod::automatic;
  /// FSSI table size: half on the linear segment [0, 1], half geometric.
  int fssi_grid_points = 2000;
};

/// Lockstep trisection over all coordinates, each with its own variance v2[j].
std::vector<double> invert_trisection(std::span<const double> b, const Prior& g,
                                      std::span<const double> v2,
                                      const InversionOptions& opts = {});

/// Switch-variables-and-interpolate inversion for a shared variance v2.
std::vector<double> invert_fssi(std::span<const double> b, const Prior& g, double v2,
                                const InversionOptions& opts = {});

/// Closed form for a single-normal prior N(0, tau^2): T(b) = b (tau^2 + v2) / tau^2.
std::vector<double> invert_analytic_normal(std::span<const double> b, const Prior& g,
                                           std::span<const double> v2);

/// Picks analytic for single-normal priors, FSSI when v2 is constant and
/// trisection otherwise, unless `opts.method` forces a method.
std::vector<double> invert(std::span<const double> b, const Prior& g,
                           std::span<const double> v2, const InversionOptions& opts = {});

/// Method `invert` would use for these inputs.
InversionMethod choose_inversion_method(const Prior& g, std::span<const double> v2,
                                        const InversionOptions& opts = {});

/// Monotonicity-preserving piecewise cubic Hermite interpolant (Fritsch-Carlson).
/// Knots must be strictly increasing and values monotone.
class MonotoneCubic {
 public:
  MonotoneCubic(std::vector<double> x, std::vector<double> y);

  double operator()(double t) const;
  double lower() const noexcept { return x_.front(); }
  double upper() const noexcept { return x_.back(); }

 private:
  std::vector<double> x_;
  std::vector<double> y_;
  std::vector<double> slope_;
};

}  // namespace gradvi
