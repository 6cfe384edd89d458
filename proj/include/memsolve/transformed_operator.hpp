#pragma once

// The u-dependent operator obtained by pulling the anisotropic Laplacian
// eps^2 d_xx + d_zz on {-1 < z < u(x)} back to the rectangle through
// eta = (1+z)/(1+u(x)):
//
//   L_u w = eps^2 w_xx - 2 eps^2 eta u'/(1+u) w_xeta
//         + (1 + eps^2 eta^2 u'^2)/(1+u)^2 w_etaeta
//         + eps^2 eta [2 (u'/(1+u))^2 - u''/(1+u)] w_eta

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "memsolve/error.hpp"
#include "memsolve/grid.hpp"
#include "memsolve/membrane_profile.hpp"

namespace memsolve {

namespace defaults {
inline constexpr double delta_touch = 1e-3;
inline constexpr double tol_cmp = 1e-6;
inline constexpr double tol_sym = 1e-9;
inline constexpr double tol_c = 1e-8;
}  // namespace defaults

/// Coefficients of L_u and the source f_u = L_u(eta) at one point.
struct OperatorSample {
  double a_xx;
  double a_xeta;
  double a_etaeta;
  double b_eta;
  double f;
};

/// Pointwise evaluation from u, u', u'' at the abscissa.
inline OperatorSample sample_operator(double eps, double u, double du, double d2u, double eta,
                                      double delta_touch = defaults::delta_touch) {
  const double gap = 1.0 + u;
  if (!(gap > delta_touch)) {
    fail(ErrorCode::TouchdownInput,
         "1 + u = " + std::to_string(gap) + " is below the touchdown threshold " + std::to_string(delta_touch));
  }
  const double e2 = eps * eps;
  const double p = du / gap;
  OperatorSample s{};
  s.a_xx = e2;
  s.a_xeta = -2.0 * e2 * eta * p;
  s.a_etaeta = (1.0 + e2 * eta * eta * du * du) / (gap * gap);
  s.b_eta = e2 * eta * (2.0 * p * p - d2u / gap);
  s.f = s.b_eta;
  return s;
}

inline OperatorSample sample_operator(const MembraneProfile& u, double eps, std::size_t i, double eta,
                                      double delta_touch = defaults::delta_touch) {
  return sample_operator(eps, u[i], u.du()[i], u.d2u()[i], eta, delta_touch);
}

inline void check_eps(double eps) {
  if (!(eps > 0.0 && eps <= 1.0)) {
    fail(ErrorCode::BadParameter, "aspect ratio eps must lie in (0,1], got " + std::to_string(eps));
  }
}

inline void check_touchdown(const MembraneProfile& u, double delta_touch) {
  if (!(u.min_gap() > delta_touch)) {
    fail(ErrorCode::TouchdownInput, "min(1+u) = " + std::to_string(u.min_gap()) +
                                        " is below the touchdown threshold " + std::to_string(delta_touch));
  }
}

// ---------------------------------------------------------------------------

/// Extremes of the principal part's trace, determinant and smaller eigenvalue.
struct EllipticityReport {
  double t_min;
  double t_max;
  double d_min;
  double mu_minus_min;
};

inline EllipticityReport ellipticity_report(const MembraneProfile& u, double eps, const RectGrid& grid,
                                            double delta_touch = defaults::delta_touch) {
  check_touchdown(u, delta_touch);
  constexpr double inf = std::numeric_limits<double>::infinity();
  EllipticityReport r{inf, -inf, inf, inf};
  const double e2 = eps * eps;
  for (std::size_t i = 0; i < grid.nx(); ++i) {
    const double gap = 1.0 + u[i];
    const double d = e2 / (gap * gap);
    for (std::size_t j = 0; j < grid.n_eta(); ++j) {
      const OperatorSample s = sample_operator(u, eps, i, grid.eta(j), delta_touch);
      const double t = e2 + s.a_etaeta;
      // 2d / (t + sqrt(t^2 - 4d)) avoids the cancellation in (t - sqrt(t^2 - 4d))/2.
      const double mu_minus = 2.0 * d / (t + std::sqrt(std::max(0.0, t * t - 4.0 * d)));
      r.t_min = std::min(r.t_min, t);
      r.t_max = std::max(r.t_max, t);
      r.d_min = std::min(r.d_min, d);
      r.mu_minus_min = std::min(r.mu_minus_min, mu_minus);
    }
  }
  return r;
}

// ---------------------------------------------------------------------------

/// Non-divergence discretization of L_u at interior nodes (zero on the boundary).
/// Uses the same stencils as the potential solver, so L_u applied to the solved
/// phi reproduces the linear-system residual.
inline GridFunction2D apply_operator(const MembraneProfile& u, double eps, const GridFunction2D& w,
                                     double delta_touch = defaults::delta_touch) {
  const RectGrid& g = w.grid();
  const double hx = g.hx(), he = g.h_eta();
  GridFunction2D out(g);
  for (std::size_t i = 1; i + 1 < g.nx(); ++i) {
    for (std::size_t j = 1; j + 1 < g.n_eta(); ++j) {
      const OperatorSample s = sample_operator(u, eps, i, g.eta(j), delta_touch);
      const double wxx = (w(i + 1, j) - 2.0 * w(i, j) + w(i - 1, j)) / (hx * hx);
      const double wee = (w(i, j + 1) - 2.0 * w(i, j) + w(i, j - 1)) / (he * he);
      const double we = (w(i, j + 1) - w(i, j - 1)) / (2.0 * he);
      const double wxe = (w(i + 1, j + 1) - w(i + 1, j - 1) - w(i - 1, j + 1) + w(i - 1, j - 1)) / (4.0 * hx * he);
      out(i, j) = s.a_xx * wxx + s.a_xeta * wxe + s.a_etaeta * wee + s.b_eta * we;
    }
  }
  return out;
}

/// Divergence-form discretization of the same operator:
///   d_x(eps^2 w_x - eps^2 eta p w_eta) + d_eta(-eps^2 eta p w_x + A w_eta)
///   + eps^2 p w_x - eps^2 eta p^2 w_eta,         p = u'/(1+u),
/// with fluxes at cell faces. Only used to cross-check apply_operator.
inline GridFunction2D apply_operator_divergence(const MembraneProfile& u, double eps, const GridFunction2D& w,
                                                double delta_touch = defaults::delta_touch) {
  check_touchdown(u, delta_touch);
  const RectGrid& g = w.grid();
  const double hx = g.hx(), he = g.h_eta();
  const double e2 = eps * eps;
  auto p_at = [&](std::size_t i) { return u.du()[i] / (1.0 + u[i]); };
  auto w_eta = [&](std::size_t i, std::size_t j) { return (w(i, j + 1) - w(i, j - 1)) / (2.0 * he); };
  auto w_x = [&](std::size_t i, std::size_t j) { return (w(i + 1, j) - w(i - 1, j)) / (2.0 * hx); };

  GridFunction2D out(g);
  for (std::size_t i = 1; i + 1 < g.nx(); ++i) {
    const double p = p_at(i);
    const double du = u.du()[i];
    const double gap = 1.0 + u[i];
    const double p_right = 0.5 * (p + p_at(i + 1));
    const double p_left = 0.5 * (p + p_at(i - 1));
    for (std::size_t j = 1; j + 1 < g.n_eta(); ++j) {
      const double eta = g.eta(j);
      const double flux_right = e2 * (w(i + 1, j) - w(i, j)) / hx - e2 * eta * p_right * 0.5 * (w_eta(i, j) + w_eta(i + 1, j));
      const double flux_left = e2 * (w(i, j) - w(i - 1, j)) / hx - e2 * eta * p_left * 0.5 * (w_eta(i, j) + w_eta(i - 1, j));

      const double eta_up = eta + 0.5 * he, eta_dn = eta - 0.5 * he;
      const double a_up = (1.0 + e2 * eta_up * eta_up * du * du) / (gap * gap);
      const double a_dn = (1.0 + e2 * eta_dn * eta_dn * du * du) / (gap * gap);
      const double flux_up = -e2 * eta_up * p * 0.5 * (w_x(i, j) + w_x(i, j + 1)) + a_up * (w(i, j + 1) - w(i, j)) / he;
      const double flux_dn = -e2 * eta_dn * p * 0.5 * (w_x(i, j) + w_x(i, j - 1)) + a_dn * (w(i, j) - w(i, j - 1)) / he;

      out(i, j) = (flux_right - flux_left) / hx + (flux_up - flux_dn) / he + e2 * p * w_x(i, j) -
                  e2 * eta * p * p * w_eta(i, j);
    }
  }
  return out;
}

}  // namespace memsolve
