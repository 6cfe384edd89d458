#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "memsolve/error.hpp"
#include "memsolve/grid.hpp"
#include "memsolve/membrane_profile.hpp"
#include "memsolve/potential.hpp"
#include "memsolve/transformed_operator.hpp"

namespace memsolve {

/// Membership margins for the admissible set: even profiles with 0 <= u'' <= r0.
struct AdmissibilityReport {
  double even_margin = 0;    // max |u(x) - u(-x)|
  double convexity_min = 0;  // min u''
  double convexity_max = 0;  // max u''
  double slope_max = 0;      // max |u'|
  double depth_min = 0;      // min u
  double r0 = 0;
  bool verdict = false;
};

inline void check_r0(double r0) {
  if (!(r0 > 0.0 && r0 < 2.0)) {
    fail(ErrorCode::BadParameter, "r0 must lie in (0,2), got " + std::to_string(r0));
  }
}

inline AdmissibilityReport check_admissible(const MembraneProfile& u, double r0, double tol_sym = defaults::tol_sym,
                                            double tol_c = defaults::tol_c) {
  check_r0(r0);
  AdmissibilityReport rep;
  rep.r0 = r0;
  const std::size_t n = u.size();
  const auto uu = u.u().values();
  const auto d2u = u.d2u().values();
  for (std::size_t i = 0; i < n; ++i) rep.even_margin = std::max(rep.even_margin, std::abs(uu[i] - uu[n - 1 - i]));
  rep.convexity_min = *std::min_element(d2u.begin(), d2u.end());
  rep.convexity_max = *std::max_element(d2u.begin(), d2u.end());
  rep.slope_max = norm_inf(u.du());
  rep.depth_min = *std::min_element(uu.begin(), uu.end());
  rep.verdict = rep.even_margin <= tol_sym && rep.convexity_min >= -tol_c && rep.convexity_max <= r0 + tol_c;

  // Consequences of membership: -r0/2 <= u <= 0 and |u'| <= 2 r0.
  if (rep.verdict && (rep.depth_min < -0.5 * r0 - tol_c || rep.slope_max > 2.0 * r0 + tol_c)) {
    fail(ErrorCode::InternalInconsistency,
         "profile is admissible for r0 = " + std::to_string(r0) + " but violates depth/slope consequences (min u = " +
             std::to_string(rep.depth_min) + ", max |u'| = " + std::to_string(rep.slope_max) + ")");
  }
  return rep;
}

/// Electrostatic load g_u = (1 + eps^2 u'^2)/(1+u)^2 * |d_eta phi_u(.,1)|^2.
struct LoadProfile {
  GridFunction1D g;
  GridFunction1D trace;
};

inline LoadProfile compute_load(const MembraneProfile& u, const PotentialSolution& sol, double eps,
                                double delta_touch = defaults::delta_touch) {
  check_touchdown(u, delta_touch);
  GridFunction1D trace = trace_d_eta_top(sol.phi);
  GridFunction1D g(u.grid());
  const double e2 = eps * eps;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double gap = 1.0 + u[i];
    const double du = u.du()[i];
    g[i] = (1.0 + e2 * du * du) / (gap * gap) * trace[i] * trace[i];
  }
  return {std::move(g), std::move(trace)};
}

/// v = S(u): the solution of v'' = lambda g at interior nodes with v(+-1) = 0
/// (second-difference tridiagonal system, Thomas algorithm).
inline MembraneProfile apply_S(const LoadProfile& load, double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    fail(ErrorCode::BadParameter, "lambda must be a finite non-negative number");
  }
  const LineGrid& grid = load.g.grid();
  const std::size_t n = grid.size();
  const std::size_t m = n - 2;
  const double h2 = grid.spacing() * grid.spacing();

  // -v_{i-1} + 2 v_i - v_{i+1} = -h^2 lambda g_i: symmetric positive definite, no pivoting needed.
  std::vector<double> diag(m, 2.0), rhs(m);
  for (std::size_t k = 0; k < m; ++k) rhs[k] = -h2 * lambda * load.g[k + 1];
  for (std::size_t k = 1; k < m; ++k) {
    const double w = -1.0 / diag[k - 1];
    diag[k] += w;
    rhs[k] -= w * rhs[k - 1];
  }
  std::vector<double> v(n, 0.0);
  v[m] = rhs[m - 1] / diag[m - 1];
  for (std::size_t k = m - 1; k-- > 0;) v[k + 1] = (rhs[k] + v[k + 2]) / diag[k];

  for (double x : v) {
    if (!std::isfinite(x)) fail(ErrorCode::LinearSolveFailure, "membrane solve produced non-finite values");
  }
  return MembraneProfile(GridFunction1D(grid, std::move(v)));
}

/// Overload matching the map's natural signature; u only fixes the grid.
inline MembraneProfile apply_S(const MembraneProfile& u, const LoadProfile& load, double lambda) {
  if (!(u.grid() == load.g.grid())) fail(ErrorCode::BadParameter, "load and profile grids differ");
  return apply_S(load, lambda);
}

// ---------------------------------------------------------------------------
// Small-voltage threshold: the largest lambda with
//   4 lambda (1 + 4 eps^2 r0^2)(1 + 2 eps^2) / (2 - r0)^2 <= r0,
// which keeps 0 <= S(u)'' <= r0 on the admissible set.

inline double lambda0_bound(double r0, double eps) {
  check_r0(r0);
  if (!(eps >= 0.0 && eps <= 1.0)) {
    fail(ErrorCode::BadParameter, "eps must lie in [0,1], got " + std::to_string(eps));
  }
  const double e2 = eps * eps;
  return r0 * (2.0 - r0) * (2.0 - r0) / (4.0 * (1.0 + 4.0 * e2 * r0 * r0) * (1.0 + 2.0 * e2));
}

/// Worst case over eps in (0,1): the bound at eps = 1.
inline double lambda0_bound_uniform(double r0) {
  check_r0(r0);
  return r0 * (2.0 - r0) * (2.0 - r0) / (12.0 * (1.0 + 4.0 * r0 * r0));
}

struct Lambda0Optimum {
  double r0;
  double lambda0;
};

/// Golden-section maximization of the threshold over r0 in (0,2); nullopt eps means uniform.
inline Lambda0Optimum optimize_lambda0(std::optional<double> eps, double tol = 1e-12) {
  auto f = [&](double r0) { return eps ? lambda0_bound(r0, *eps) : lambda0_bound_uniform(r0); };
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = 1e-12, b = 2.0 - 1e-12;
  double c = b - invphi * (b - a), d = a + invphi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = f(d);
    }
  }
  const double r = 0.5 * (a + b);
  return {r, f(r)};
}

}  // namespace memsolve
