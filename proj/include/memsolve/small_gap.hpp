#pragma once

// Steady small-gap model u'' = lambda/(1+u)^2 on (-1,1), u(+-1) = 0.
//
// Even solutions are parametrized by their midpoint value u0: integrate
// w'' = 1/(1+w)^2, w(0) = u0, w'(0) = 0 until w reaches 0 at s = xbar; then
// lambda = xbar^2 and u(x) = w(xbar x). This turns the bifurcation diagram into
// the scalar curve u0 -> lambda(u0), whose maximum is the pull-in voltage.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "memsolve/error.hpp"
#include "memsolve/grid.hpp"

namespace memsolve {

struct SmallGapConfig {
  double step = 1e-4;            // RK4 step in the stretched variable
  double crossing_tol = 1e-12;   // the crossing bracket is at least this tight
  double ode_tol = 1e-8;
  double tol_fold = 1e-6;
  double delta_touch = 1e-3;
  double x_max_guard = 50.0;
  std::size_t sweep_points = 400;
  std::size_t standard_points = 8193;  // default profile grid

  LineGrid standard_grid() const { return LineGrid(standard_points); }
};

enum class BranchSide { StableSide, UnstableSide };

inline const char* to_string(BranchSide b) noexcept {
  return b == BranchSide::StableSide ? "stable" : "unstable";
}

struct SmallGapBranch {
  double lambda = 0;
  double u0_mid = 0;
  GridFunction1D profile;
  BranchSide branch = BranchSide::StableSide;
};

struct PullInResult {
  double lambda_star = 0;
  double u0_at_fold = 0;
  std::vector<std::pair<double, double>> curve;  // (u0_mid, lambda), u0 ascending
};

namespace detail {

struct ShootTrajectory {
  std::vector<double> s, w, dw;
  double xbar = 0;

  // Cubic Hermite interpolation of the stored states.
  double eval(double at) const {
    if (at <= 0.0) return w.front();
    auto it = std::upper_bound(s.begin(), s.end(), at);
    if (it == s.end()) return w.back();
    const std::size_t k = static_cast<std::size_t>(it - s.begin()) - 1;
    return hermite(s[k], s[k + 1], w[k], w[k + 1], dw[k], dw[k + 1], at);
  }

  static double hermite(double s0, double s1, double w0, double w1, double d0, double d1, double at) {
    const double h = s1 - s0;
    const double t = (at - s0) / h;
    const double t2 = t * t, t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * w0 + (t3 - 2 * t2 + t) * h * d0 + (-2 * t3 + 3 * t2) * w1 + (t3 - t2) * h * d1;
  }
};

// Integrates from s = 0 until w crosses zero. The step shrinks with the local
// time scale (1+w)^{3/2} so that starts close to the plate stay resolved.
inline ShootTrajectory shoot(double u0, const SmallGapConfig& cfg, bool keep_states) {
  if (!(u0 > -1.0 && u0 < 0.0)) {
    fail(ErrorCode::BadParameter, "midpoint deflection u0 must lie in (-1,0), got " + std::to_string(u0));
  }
  auto accel = [](double w) { return 1.0 / ((1.0 + w) * (1.0 + w)); };
  ShootTrajectory tr;
  double s = 0.0, w = u0, dw = 0.0;
  if (keep_states) {
    tr.s.push_back(s);
    tr.w.push_back(w);
    tr.dw.push_back(dw);
  }
  while (true) {
    const double gap = 1.0 + w;
    const double h = std::min(cfg.step, 0.01 * gap * std::sqrt(gap));
    const double k1w = dw, k1v = accel(w);
    const double k2w = dw + 0.5 * h * k1v, k2v = accel(w + 0.5 * h * k1w);
    const double k3w = dw + 0.5 * h * k2v, k3v = accel(w + 0.5 * h * k2w);
    const double k4w = dw + h * k3v, k4v = accel(w + h * k3w);
    const double w1 = w + h / 6.0 * (k1w + 2 * k2w + 2 * k3w + k4w);
    const double dw1 = dw + h / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v);
    const double s1 = s + h;
    if (w1 >= 0.0) {
      // Bisect past crossing_tol down to adjacent doubles: the profile pins u(1) = 0,
      // and any offset there is amplified by 1/h^2 in the second differences.
      double lo = s, hi = s1;
      for (;;) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (ShootTrajectory::hermite(s, s1, w, w1, dw, dw1, mid) < 0.0) lo = mid; else hi = mid;
      }
      tr.xbar = 0.5 * (lo + hi);
      if (keep_states) {
        tr.s.push_back(s1);
        tr.w.push_back(w1);
        tr.dw.push_back(dw1);
      }
      return tr;
    }
    s = s1;
    w = w1;
    dw = dw1;
    if (keep_states) {
      tr.s.push_back(s);
      tr.w.push_back(w);
      tr.dw.push_back(dw);
    }
    if (s > cfg.x_max_guard) {
      fail(ErrorCode::NoCrossing, "no zero crossing before s = " + std::to_string(cfg.x_max_guard));
    }
  }
}

}  // namespace detail

/// lambda(u0) only, without the profile.
inline double lambda_at(double u0, const SmallGapConfig& cfg = {}) {
  const double xbar = detail::shoot(u0, cfg, false).xbar;
  return xbar * xbar;
}

struct ShootResult {
  double lambda;
  double xbar;
  GridFunction1D profile;
};

inline ShootResult lambda_of_u0(double u0, const LineGrid& grid, const SmallGapConfig& cfg = {}) {
  const detail::ShootTrajectory tr = detail::shoot(u0, cfg, true);
  std::vector<double> v(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double x = std::abs(grid.node(i));
    v[i] = (x == 0.0) ? u0 : (x == 1.0 ? 0.0 : tr.eval(tr.xbar * x));
  }
  return {tr.xbar * tr.xbar, tr.xbar, GridFunction1D(grid, std::move(v))};
}

inline ShootResult lambda_of_u0(double u0, const SmallGapConfig& cfg = {}) {
  return lambda_of_u0(u0, cfg.standard_grid(), cfg);
}

/// Sweeps u0 over (-1+delta, -delta) with nodes clustered at both ends, then
/// refines the maximum of lambda(u0) by golden-section search.
inline PullInResult pull_in(const SmallGapConfig& cfg = {}) {
  const std::size_t n = cfg.sweep_points;
  if (n < 5) fail(ErrorCode::BadParameter, "pull-in sweep needs at least 5 points");
  const double lo = -1.0 + cfg.delta_touch, hi = -cfg.delta_touch;
  const double pi = std::acos(-1.0);
  PullInResult res;
  res.curve.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) / static_cast<double>(n - 1);
    const double u0 = lo + (hi - lo) * 0.5 * (1.0 - std::cos(pi * t));
    res.curve.emplace_back(u0, lambda_at(u0, cfg));
  }
  std::size_t best = 0;
  for (std::size_t k = 1; k < n; ++k)
    if (res.curve[k].second > res.curve[best].second) best = k;
  if (best == 0 || best == n - 1) {
    fail(ErrorCode::FoldNotBracketed, "lambda(u0) is monotone over the sweep; no interior maximum");
  }

  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = res.curve[best - 1].first, b = res.curve[best + 1].first;
  double c = b - invphi * (b - a), d = a + invphi * (b - a);
  double fc = lambda_at(c, cfg), fd = lambda_at(d, cfg);
  while (b - a > 1e-10) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = lambda_at(c, cfg);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = lambda_at(d, cfg);
    }
  }
  res.u0_at_fold = 0.5 * (a + b);
  res.lambda_star = lambda_at(res.u0_at_fold, cfg);
  return res;
}

namespace detail {
inline constexpr double min_shooting_gap = 1e-12;

// Bisection for lambda_at(u0) = lambda on [lo, hi] where lambda - lambda_at changes sign.
inline double invert_piece(double lambda, double lo, double f_lo, double hi, const SmallGapConfig& cfg) {
  for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double f_mid = lambda_at(mid, cfg) - lambda;
    if ((f_mid < 0.0) == (f_lo < 0.0)) {
      lo = mid;
      f_lo = f_mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}
}  // namespace detail

/// All even steady states at a given lambda, sampled on `grid`.
///
/// Both preimages below the fold, a single one within tol_fold of it, none
/// above. For lambda below about 5e-13 the unstable branch lies closer to the
/// plate than min_shooting_gap and is not returned.
inline std::vector<SmallGapBranch> solve_at_lambda(double lambda, const PullInResult& fold, const LineGrid& grid,
                                                   const SmallGapConfig& cfg = {}) {
  if (!(lambda > 0.0)) fail(ErrorCode::BadParameter, "lambda must be > 0");
  std::vector<SmallGapBranch> out;
  auto make = [&](double u0) {
    const BranchSide side =
        std::abs(u0) < std::abs(fold.u0_at_fold) ? BranchSide::StableSide : BranchSide::UnstableSide;
    out.push_back({lambda, u0, lambda_of_u0(u0, grid, cfg).profile, side});
  };

  if (lambda > fold.lambda_star + cfg.tol_fold) return out;
  if (lambda >= fold.lambda_star - cfg.tol_fold) {
    make(fold.u0_at_fold);
    return out;
  }
  // stable piece: lambda(u0) falls from lambda_star at the fold to 0 at u0 = 0
  make(detail::invert_piece(lambda, fold.u0_at_fold, fold.lambda_star - lambda, 0.0, cfg));
  // unstable piece: rises from 0 at u0 = -1 to lambda_star. lambda(-1 + a) ~ a/2 for
  // small a, so for small lambda the bracket is pushed below -1 + delta_touch.
  double gap = cfg.delta_touch;
  double f_deep = lambda_at(-1.0 + gap, cfg) - lambda;
  while (f_deep >= 0.0 && gap > detail::min_shooting_gap) {
    gap *= 0.1;
    f_deep = lambda_at(-1.0 + gap, cfg) - lambda;
  }
  if (f_deep < 0.0) make(detail::invert_piece(lambda, -1.0 + gap, f_deep, fold.u0_at_fold, cfg));
  return out;
}

inline std::vector<SmallGapBranch> solve_at_lambda(double lambda, const PullInResult& fold,
                                                   const SmallGapConfig& cfg = {}) {
  return solve_at_lambda(lambda, fold, cfg.standard_grid(), cfg);
}

}  // namespace memsolve
