#pragma once

// Coupled membrane/potential solver: damped Picard iteration of the map S
// starting from the membrane at rest, plus residual checks and the pull-back
// of the potential to the physical gap region.

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "memsolve/error.hpp"
#include "memsolve/grid.hpp"
#include "memsolve/membrane_map.hpp"
#include "memsolve/membrane_profile.hpp"
#include "memsolve/potential.hpp"
#include "memsolve/transformed_operator.hpp"

namespace memsolve {

struct SolverConfig {
  double eps = 0.1;
  double lambda = 0.01;
  double r0 = 1.0;
  std::size_t nx = 257;
  std::size_t neta = 129;
  double relax_omega = 1.0;
  double fp_tol = 1e-10;
  int fp_max_iter = 200;
  double lin_tol = 1e-10;
  double tol_cmp = defaults::tol_cmp;
  double tol_sym = defaults::tol_sym;
  double tol_c = defaults::tol_c;
  double delta_touch = defaults::delta_touch;
  double fp_residual_tol = 1e-6;
  bool symmetrize = false;

  RectGrid grid() const { return RectGrid(nx, neta); }
  LinearSolverConfig linear() const { return {lin_tol, 3}; }

  /// Throws BadParameter naming the first violated bound.
  void validate() const {
    auto bad = [](const std::string& msg) { fail(ErrorCode::BadParameter, msg); };
    if (!(eps > 0.0 && eps <= 1.0)) bad("epsilon must lie in (0,1]");
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) bad("lambda must be >= 0");
    if (!(r0 > 0.0 && r0 < 2.0)) bad("r0 must lie in (0,2)");
    if (nx < 5 || nx % 2 == 0) bad("nx must be odd and >= 5");
    if (neta < 5) bad("neta must be >= 5");
    if (!(relax_omega > 0.0 && relax_omega <= 1.0)) bad("relax_omega must lie in (0,1]");
    if (fp_max_iter < 1) bad("fp_max_iter must be >= 1");
    for (auto [name, v] : {std::pair{"fp_tol", fp_tol}, {"lin_tol", lin_tol}, {"tol_cmp", tol_cmp},
                           {"tol_sym", tol_sym}, {"tol_c", tol_c}, {"delta_touch", delta_touch},
                           {"fp_residual_tol", fp_residual_tol}}) {
      if (!(v > 0.0)) bad(std::string(name) + " must be > 0");
    }
  }

  bool in_lambda0_regime() const { return lambda <= lambda0_bound(r0, eps); }
};

/// One evaluation of the map: potential for u, its load, and S(u).
struct MapEvaluation {
  PotentialSolution potential;
  LoadProfile load;
  MembraneProfile image;
};

inline MapEvaluation evaluate_map(const MembraneProfile& u, const SolverConfig& cfg) {
  PotentialSolution pot = assemble_and_solve(u, cfg.eps, cfg.grid(), cfg.linear(), cfg.delta_touch);
  LoadProfile load = compute_load(u, pot, cfg.eps, cfg.delta_touch);
  MembraneProfile image = apply_S(load, cfg.lambda);
  return {std::move(pot), std::move(load), std::move(image)};
}

struct CoupledSolution {
  MembraneProfile u;
  PotentialSolution potential;
  LoadProfile load;
  int iterations = 0;
  double final_update_norm = 0;
  AdmissibilityReport admissibility;
  bool in_lambda0_regime = false;
  std::vector<double> update_history;
  double fixed_point_defect = 0;  // |S(u) - u|_inf at the returned u
};

inline CoupledSolution solve_coupled(const SolverConfig& cfg) {
  cfg.validate();
  const RectGrid grid = cfg.grid();
  const double omega = cfg.relax_omega;
  MembraneProfile u = MembraneProfile::zero(grid.line());
  std::vector<double> history;

  bool converged = false;
  bool unchanged = false;  // last update was exactly zero, so the last evaluation is at the returned u
  int iterations = 0;
  std::optional<MapEvaluation> last;
  for (int k = 1; k <= cfg.fp_max_iter; ++k) {
    if (!(u.min_gap() > cfg.delta_touch)) {
      fail(ErrorCode::TouchdownApproach, "iterate " + std::to_string(k) + " has min(1+u) = " +
                                             std::to_string(u.min_gap()));
    }
    last = evaluate_map(u, cfg);
    const MapEvaluation& step = *last;
    const std::size_t n = u.size();
    std::vector<double> next(n);
    for (std::size_t i = 0; i < n; ++i) next[i] = (1.0 - omega) * u[i] + omega * step.image[i];
    if (cfg.symmetrize) {
      for (std::size_t i = 0; i < n / 2; ++i) {
        const double avg = 0.5 * (next[i] + next[n - 1 - i]);
        next[i] = next[n - 1 - i] = avg;
      }
    }
    double update = 0.0;
    for (std::size_t i = 0; i < n; ++i) update = std::max(update, std::abs(next[i] - u[i]));
    history.push_back(update);

    MembraneProfile candidate(GridFunction1D(grid.line(), std::move(next)));
    const AdmissibilityReport adm = check_admissible(candidate, cfg.r0, cfg.tol_sym, cfg.tol_c);
    if (!adm.verdict) {
      std::ostringstream msg;
      msg << "iterate " << k << " left the admissible set (u'' in [" << adm.convexity_min << ", "
          << adm.convexity_max << "], asymmetry " << adm.even_margin << ", r0 = " << cfg.r0
          << "); try a smaller lambda or a larger r0";
      fail(ErrorCode::LeftAdmissibleSet, msg.str());
    }
    u = std::move(candidate);
    iterations = k;
    if (update <= cfg.fp_tol) {
      converged = true;
      unchanged = update == 0.0;
      break;
    }
  }
  if (!converged) {
    throw NonConvergenceError("no fixed point within " + std::to_string(cfg.fp_max_iter) + " iterations (last update " +
                                  std::to_string(history.back()) + ")",
                              history);
  }
  if (!(u.min_gap() > cfg.delta_touch)) {
    fail(ErrorCode::TouchdownApproach, "converged profile has min(1+u) = " + std::to_string(u.min_gap()));
  }

  MapEvaluation final_eval = unchanged ? std::move(*last) : evaluate_map(u, cfg);
  double defect = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) defect = std::max(defect, std::abs(final_eval.image[i] - u[i]));

  CoupledSolution sol{u,          std::move(final_eval.potential), std::move(final_eval.load), iterations,
                      history.back(), check_admissible(u, cfg.r0, cfg.tol_sym, cfg.tol_c), cfg.in_lambda0_regime(),
                      history,    defect};
  return sol;
}

// ---------------------------------------------------------------------------

enum class ResidualStencil {
  Discrete,   // the stencils the solver itself uses: small at convergence
  HighOrder,  // fourth-order differences: measures truncation, shrinks under refinement
};

struct Residuals {
  double r_membrane = 0;
  double r_potential = 0;
};

namespace detail {
inline double d1_fourth(std::span<const double> f, std::size_t k, double h) {
  return (f[k - 2] - 8.0 * f[k - 1] + 8.0 * f[k + 1] - f[k + 2]) / (12.0 * h);
}
inline double d2_fourth(std::span<const double> f, std::size_t k, double h) {
  return (-f[k - 2] + 16.0 * f[k - 1] - 30.0 * f[k] + 16.0 * f[k + 1] - f[k + 2]) / (12.0 * h * h);
}
}  // namespace detail

/// Residuals of the membrane equation u'' = lambda (1+eps^2 u'^2)/(1+u)^2 |d_eta phi(.,1)|^2
/// and of L_u phi = 0, in the max norm over interior nodes.
inline Residuals residual_check(const MembraneProfile& u, const GridFunction2D& phi, const SolverConfig& cfg,
                                ResidualStencil stencil = ResidualStencil::Discrete) {
  const RectGrid& g = phi.grid();
  const double e2 = cfg.eps * cfg.eps;
  Residuals r;
  if (stencil == ResidualStencil::Discrete) {
    const GridFunction1D tr = trace_d_eta_top(phi);
    for (std::size_t i = 1; i + 1 < u.size(); ++i) {
      const double gap = 1.0 + u[i];
      const double du = u.du()[i];
      const double rhs = cfg.lambda * (1.0 + e2 * du * du) / (gap * gap) * tr[i] * tr[i];
      r.r_membrane = std::max(r.r_membrane, std::abs(u.d2u()[i] - rhs));
    }
    r.r_potential = norm_inf(apply_operator(u, cfg.eps, phi, cfg.delta_touch));
    return r;
  }

  // Fourth-order evaluation on nodes at least two cells from the boundary.
  const double hx = g.hx(), he = g.h_eta();
  const auto uu = u.u().values();
  const std::size_t top = g.n_eta() - 1;
  for (std::size_t i = 2; i + 2 < u.size(); ++i) {
    const double gap = 1.0 + uu[i];
    const double du = detail::d1_fourth(uu, i, hx);
    const double d2u = detail::d2_fourth(uu, i, hx);
    // fourth-order one-sided derivative at eta = 1
    const double tr = (25.0 * phi(i, top) - 48.0 * phi(i, top - 1) + 36.0 * phi(i, top - 2) -
                       16.0 * phi(i, top - 3) + 3.0 * phi(i, top - 4)) /
                      (12.0 * he);
    const double rhs = cfg.lambda * (1.0 + e2 * du * du) / (gap * gap) * tr * tr;
    r.r_membrane = std::max(r.r_membrane, std::abs(d2u - rhs));
  }
  const double cw[5] = {1.0, -8.0, 0.0, 8.0, -1.0};
  const double cw2[5] = {-1.0, 16.0, -30.0, 16.0, -1.0};
  for (std::size_t i = 2; i + 2 < g.nx(); ++i) {
    const double du = detail::d1_fourth(uu, i, hx);
    const double d2u = detail::d2_fourth(uu, i, hx);
    for (std::size_t j = 2; j + 2 < g.n_eta(); ++j) {
      const OperatorSample s = sample_operator(cfg.eps, uu[i], du, d2u, g.eta(j), cfg.delta_touch);
      double wxx = 0.0, wee = 0.0, we = 0.0, wxe = 0.0;
      for (int a = 0; a < 5; ++a) {
        const std::size_t ii = i + a - 2, jj = j + a - 2;
        wxx += cw2[a] * phi(ii, j);
        wee += cw2[a] * phi(i, jj);
        we += cw[a] * phi(i, jj);
        if (cw[a] == 0.0) continue;
        double de = 0.0;
        for (int b = 0; b < 5; ++b) de += cw[b] * phi(ii, j + b - 2);
        wxe += cw[a] * de;
      }
      wxx /= 12.0 * hx * hx;
      wee /= 12.0 * he * he;
      we /= 12.0 * he;
      wxe /= 144.0 * hx * he;
      const double val = s.a_xx * wxx + s.a_xeta * wxe + s.a_etaeta * wee + s.b_eta * we;
      r.r_potential = std::max(r.r_potential, std::abs(val));
    }
  }
  return r;
}

inline Residuals residual_check(const CoupledSolution& sol, const SolverConfig& cfg,
                                ResidualStencil stencil = ResidualStencil::Discrete) {
  return residual_check(sol.u, sol.potential.phi, cfg, stencil);
}

// ---------------------------------------------------------------------------

/// The potential on the physical region {-1 < z < u(x)}, sampled at the images
/// z = (1+u(x)) eta - 1 of the rectangle nodes, next to the small-gap potential
/// (1+z)/(1+u(x)).
struct PhysicalPotential {
  std::size_t nx = 0, neta = 0;
  std::vector<double> x, z, psi, psi0;  // node (i,j) at i*neta + j

  std::size_t index(std::size_t i, std::size_t j) const noexcept { return i * neta + j; }
};

inline PhysicalPotential reconstruct_physical(const MembraneProfile& u, const GridFunction2D& phi) {
  const RectGrid& g = phi.grid();
  PhysicalPotential out;
  out.nx = g.nx();
  out.neta = g.n_eta();
  const std::size_t n = g.size();
  out.x.resize(n);
  out.z.resize(n);
  out.psi.resize(n);
  out.psi0.resize(n);
  for (std::size_t i = 0; i < g.nx(); ++i) {
    const double gap = 1.0 + u[i];
    for (std::size_t j = 0; j < g.n_eta(); ++j) {
      const std::size_t k = out.index(i, j);
      const double eta = g.eta(j);
      out.x[k] = g.x(i);
      // endpoints of each column are pinned to the plate and the membrane
      out.z[k] = (j == 0) ? -1.0 : (j + 1 == g.n_eta() ? u[i] : gap * eta - 1.0);
      out.psi[k] = phi(i, j);
      out.psi0[k] = (1.0 + out.z[k]) / gap;
    }
  }
  return out;
}

inline PhysicalPotential reconstruct_physical(const CoupledSolution& sol) {
  return reconstruct_physical(sol.u, sol.potential.phi);
}

}  // namespace memsolve
