#pragma once

// Solves L_u Phi = -f_u, Phi = 0 on the boundary of the rectangle, and returns
// phi = Phi + eta together with the checks the continuous problem guarantees.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "memsolve/banded_lu.hpp"
#include "memsolve/error.hpp"
#include "memsolve/grid.hpp"
#include "memsolve/membrane_profile.hpp"
#include "memsolve/transformed_operator.hpp"

namespace memsolve {

struct LinearSolverConfig {
  double tol = 1e-10;          // residual contract: |A x - b|_inf <= tol * (1 + |b|_inf)
  int max_refinements = 3;     // iterative refinement sweeps after the direct solve
};

struct PotentialSolution {
  GridFunction2D phi;
  GridFunction2D capital_phi;
  double lin_residual = 0.0;
  int iterations = 0;
};

namespace detail {

// 9-point stencil rows of the interior system, kept for residual evaluation.
struct StencilSystem {
  std::size_t nx_in = 0, ne_in = 0;
  // offsets (di, dj) in the order used by coeff[k][s]
  static constexpr std::array<std::array<int, 2>, 9> offsets{{{-1, -1}, {-1, 0}, {-1, 1}, {0, -1}, {0, 0},
                                                              {0, 1}, {1, -1}, {1, 0}, {1, 1}}};
  std::vector<std::array<double, 9>> coeff;
  std::vector<double> rhs;

  std::size_t unknown(std::size_t i, std::size_t j) const noexcept { return (i - 1) * ne_in + (j - 1); }

  std::vector<double> residual(std::span<const double> x) const {
    std::vector<double> r(rhs);
    for (std::size_t i = 1; i <= nx_in; ++i) {
      for (std::size_t j = 1; j <= ne_in; ++j) {
        const std::size_t k = unknown(i, j);
        double ax = 0.0;
        for (std::size_t s = 0; s < 9; ++s) {
          const std::size_t ii = i + offsets[s][0], jj = j + offsets[s][1];
          if (ii < 1 || ii > nx_in || jj < 1 || jj > ne_in) continue;
          ax += coeff[k][s] * x[unknown(ii, jj)];
        }
        r[k] -= ax;
      }
    }
    return r;
  }
};

inline StencilSystem assemble(const MembraneProfile& u, double eps, const RectGrid& grid, double delta_touch) {
  StencilSystem sys;
  sys.nx_in = grid.nx() - 2;
  sys.ne_in = grid.n_eta() - 2;
  const std::size_t n = sys.nx_in * sys.ne_in;
  sys.coeff.assign(n, {});
  sys.rhs.assign(n, 0.0);
  const double hx = grid.hx(), he = grid.h_eta();
  for (std::size_t i = 1; i <= sys.nx_in; ++i) {
    for (std::size_t j = 1; j <= sys.ne_in; ++j) {
      const OperatorSample s = sample_operator(u, eps, i, grid.eta(j), delta_touch);
      const double cx = s.a_xx / (hx * hx);
      const double ce = s.a_etaeta / (he * he);
      const double cb = s.b_eta / (2.0 * he);
      const double cm = s.a_xeta / (4.0 * hx * he);
      auto& c = sys.coeff[sys.unknown(i, j)];
      c = {cm, cx, -cm, ce - cb, -2.0 * cx - 2.0 * ce, ce + cb, -cm, cx, cm};
      sys.rhs[sys.unknown(i, j)] = -s.f;
    }
  }
  return sys;
}

}  // namespace detail

/// Banded direct solve of the transformed potential problem for a given membrane.
inline PotentialSolution assemble_and_solve(const MembraneProfile& u, double eps, const RectGrid& grid,
                                            const LinearSolverConfig& lin_cfg = {},
                                            double delta_touch = defaults::delta_touch) {
  check_eps(eps);
  if (!(u.grid() == grid.line())) fail(ErrorCode::BadParameter, "membrane grid does not match the rectangle grid");
  check_touchdown(u, delta_touch);

  const detail::StencilSystem sys = detail::assemble(u, eps, grid, delta_touch);
  const std::size_t m = sys.ne_in;
  const std::size_t n = sys.nx_in * m;

  BandedMatrix a(n, m + 1, m + 1);
  for (std::size_t i = 1; i <= sys.nx_in; ++i) {
    for (std::size_t j = 1; j <= sys.ne_in; ++j) {
      const std::size_t k = sys.unknown(i, j);
      for (std::size_t s = 0; s < 9; ++s) {
        const std::size_t ii = i + detail::StencilSystem::offsets[s][0];
        const std::size_t jj = j + detail::StencilSystem::offsets[s][1];
        if (ii < 1 || ii > sys.nx_in || jj < 1 || jj > sys.ne_in) continue;
        a.at(k, sys.unknown(ii, jj)) = sys.coeff[k][s];
      }
    }
  }
  const BandedLU lu(std::move(a));

  std::vector<double> x(sys.rhs);
  lu.solve_in_place(x);
  const double target = lin_cfg.tol * (1.0 + norm_inf(sys.rhs));
  std::vector<double> r = sys.residual(x);
  double res = norm_inf(r);
  int iterations = 1;
  while (res > target && iterations <= lin_cfg.max_refinements) {
    lu.solve_in_place(r);
    for (std::size_t k = 0; k < n; ++k) x[k] += r[k];
    r = sys.residual(x);
    res = norm_inf(r);
    ++iterations;
  }
  if (!(res <= target)) {
    fail(ErrorCode::LinearSolveFailure,
         "potential residual " + std::to_string(res) + " above target " + std::to_string(target));
  }

  GridFunction2D cap(grid);
  for (std::size_t i = 1; i <= sys.nx_in; ++i)
    for (std::size_t j = 1; j <= sys.ne_in; ++j) cap(i, j) = x[sys.unknown(i, j)];
  GridFunction2D phi(grid);
  for (std::size_t i = 0; i < grid.nx(); ++i)
    for (std::size_t j = 0; j < grid.n_eta(); ++j) phi(i, j) = cap(i, j) + grid.eta(j);
  return {std::move(phi), std::move(cap), res, iterations};
}

// ---------------------------------------------------------------------------

/// Signed margins (negative = violated) of the comparison bounds
///   phi <= 1,  phi >= eta (1+u),  phi >= eta^(1+2 eps^2),  0 <= d_eta phi(.,1) <= 1 + 2 eps^2.
struct ComparisonReport {
  double upper = 0;         // min(1 - phi)
  double lower_affine = 0;  // min(phi - eta (1+u))
  double lower_power = 0;   // min(phi - eta^(1+2 eps^2))
  double trace = 0;         // min(trace, 1 + 2 eps^2 - trace)
  std::size_t worst_upper_i = 0, worst_upper_j = 0;

  double worst() const noexcept { return std::min({upper, lower_affine, lower_power, trace}); }
};

inline ComparisonReport verify_comparison(const PotentialSolution& sol, const MembraneProfile& u, double eps) {
  const GridFunction2D& phi = sol.phi;
  const RectGrid& g = phi.grid();
  const double alpha = 2.0 * eps * eps;
  constexpr double inf = std::numeric_limits<double>::infinity();
  ComparisonReport r{inf, inf, inf, inf};
  for (std::size_t i = 0; i < g.nx(); ++i) {
    for (std::size_t j = 0; j < g.n_eta(); ++j) {
      const double eta = g.eta(j);
      const double v = phi(i, j);
      if (1.0 - v < r.upper) {
        r.upper = 1.0 - v;
        r.worst_upper_i = i;
        r.worst_upper_j = j;
      }
      r.lower_affine = std::min(r.lower_affine, v - eta * (1.0 + u[i]));
      r.lower_power = std::min(r.lower_power, v - std::pow(eta, 1.0 + alpha));
    }
  }
  const GridFunction1D tr = trace_d_eta_top(phi);
  for (std::size_t i = 0; i < g.nx(); ++i) r.trace = std::min({r.trace, tr[i], 1.0 + alpha - tr[i]});
  return r;
}

/// |LHS - RHS| of the energy identity obtained by testing L_u Phi = -f_u with Phi:
///   int f Phi = eps^2 int (Phi_x - eta p Phi_eta)^2 + int Phi_eta^2/(1+u)^2
///             + eps^2 int eta (2 p^2 - u''/(1+u)) Phi Phi_eta,      p = u'/(1+u).
/// Gradients by second-order differences, integrals by the trapezoid rule.
inline double energy_identity_residual(const GridFunction2D& capital_phi, const MembraneProfile& u, double eps) {
  const RectGrid& g = capital_phi.grid();
  const GridFunction2D px = d_x(capital_phi);
  const GridFunction2D pe = d_eta(capital_phi);
  const double e2 = eps * eps;
  GridFunction2D lhs(g), rhs(g);
  for (std::size_t i = 0; i < g.nx(); ++i) {
    const double gap = 1.0 + u[i];
    const double p = u.du()[i] / gap;
    const double q = u.d2u()[i] / gap;
    for (std::size_t j = 0; j < g.n_eta(); ++j) {
      const double eta = g.eta(j);
      const double c = e2 * eta * (2.0 * p * p - q);
      const double Phi = capital_phi(i, j);
      const double skew = px(i, j) - eta * p * pe(i, j);
      lhs(i, j) = c * Phi;
      rhs(i, j) = e2 * skew * skew + pe(i, j) * pe(i, j) / (gap * gap) + c * Phi * pe(i, j);
    }
  }
  return std::abs(integrate(lhs) - integrate(rhs));
}

inline double energy_identity_residual(const PotentialSolution& sol, const MembraneProfile& u, double eps) {
  return energy_identity_residual(sol.capital_phi, u, eps);
}

}  // namespace memsolve
