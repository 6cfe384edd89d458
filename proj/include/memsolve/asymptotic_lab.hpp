#pragma once

// Vanishing aspect ratio experiments: solve the coupled problem along a
// decreasing eps ladder at fixed lambda, measure the deviation of the potential
// from its small-gap form, fit log-log rates and compare the membrane with the
// small-gap steady state.

#include <algorithm>
#include <cmath>
#include <functional>
#include <future>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "memsolve/error.hpp"
#include "memsolve/fixed_point.hpp"
#include "memsolve/grid.hpp"
#include "memsolve/membrane_map.hpp"
#include "memsolve/small_gap.hpp"

namespace memsolve {

struct SweepRecord {
  double eps = 0;
  bool ok = false;
  std::string error;
  int iterations = 0;
  double norm_Phi_inf = 0;
  double norm_Phi_L2 = 0;
  double norm_dPhi_L2 = 0;
  double norm_d2Phi_L2 = 0;
  double norm_trace_L2 = 0;
  double u_gap_W1inf = 0;
  double u_gap_unstable_W1inf = std::numeric_limits<double>::quiet_NaN();
  double psi_gap_L2 = 0;
  double psi_gap_L2_transformed = 0;
  double f_inf = 0;
  double lin_residual = 0;
  double h_eta = 0;
  bool phi_bound_ok = false;  // |Phi|_inf <= 1 + tol_cmp
  bool f_bound_ok = false;    // |f|_inf <= 2 eps^2/k0^4 + eps^2/k0^2, k0 = 1 - r0/2
};

struct SweepOptions {
  SmallGapConfig small_gap{};
  unsigned threads = 0;  // 0: hardware concurrency
};

struct SweepResult {
  double lambda = 0;
  std::vector<SweepRecord> records;
  std::optional<GridFunction1D> u0_stable;
  std::optional<GridFunction1D> u0_unstable;
};

/// Integral of |psi - (1+z)/(1+u)|^2 over {-1 < z < u(x)}, by the trapezoid
/// rule on the physical sample points (z spacing taken from the samples).
inline double physical_psi_gap_squared(const PhysicalPotential& p, const LineGrid& line) {
  double total = 0.0;
  for (std::size_t i = 0; i < p.nx; ++i) {
    double col = 0.0;
    for (std::size_t j = 0; j + 1 < p.neta; ++j) {
      const std::size_t a = p.index(i, j), b = p.index(i, j + 1);
      const double da = p.psi[a] - p.psi0[a], db = p.psi[b] - p.psi0[b];
      col += 0.5 * (p.z[b] - p.z[a]) * (da * da + db * db);
    }
    total += trapezoid_weight(i, p.nx, line.spacing()) * col;
  }
  return total;
}

/// The same quantity via eta = (1+z)/(1+u): int_Omega |phi - eta|^2 (1+u) d(x,eta).
inline double transformed_psi_gap_squared(const GridFunction2D& capital_phi, const MembraneProfile& u) {
  const RectGrid& g = capital_phi.grid();
  GridFunction2D w(g);
  for (std::size_t i = 0; i < g.nx(); ++i)
    for (std::size_t j = 0; j < g.n_eta(); ++j) w(i, j) = capital_phi(i, j) * capital_phi(i, j) * (1.0 + u[i]);
  return integrate(w);
}

inline SweepRecord measure(const CoupledSolution& sol, const SolverConfig& cfg, const GridFunction1D* u0_stable,
                           const GridFunction1D* u0_unstable) {
  SweepRecord rec;
  rec.eps = cfg.eps;
  rec.ok = true;
  rec.iterations = sol.iterations;
  const GridFunction2D& cap = sol.potential.capital_phi;
  const RectGrid& g = cap.grid();
  rec.norm_Phi_inf = norm_inf(cap);
  rec.norm_Phi_L2 = norm_l2(cap);
  rec.norm_dPhi_L2 = norm_l2(d_eta(cap));
  rec.norm_d2Phi_L2 = norm_l2(d_eta2(cap));
  rec.norm_trace_L2 = norm_l2(trace_d_eta_top(cap));
  rec.lin_residual = sol.potential.lin_residual;
  rec.h_eta = g.h_eta();

  auto gap_to = [&](const GridFunction1D& ref) {
    GridFunction1D diff(sol.u.grid());
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = sol.u[i] - ref[i];
    return norm_w1inf(diff);
  };
  rec.u_gap_W1inf = u0_stable ? gap_to(*u0_stable) : norm_w1inf(sol.u.u());
  if (u0_unstable) rec.u_gap_unstable_W1inf = gap_to(*u0_unstable);

  rec.psi_gap_L2 = std::sqrt(physical_psi_gap_squared(reconstruct_physical(sol), g.line()));
  rec.psi_gap_L2_transformed = std::sqrt(transformed_psi_gap_squared(cap, sol.u));

  for (std::size_t i = 0; i < g.nx(); ++i) {
    const OperatorSample s = sample_operator(sol.u, cfg.eps, i, 1.0, cfg.delta_touch);
    rec.f_inf = std::max(rec.f_inf, std::abs(s.f));  // |f| is largest at eta = 1
  }
  const double k0 = 1.0 - 0.5 * cfg.r0;
  const double e2 = cfg.eps * cfg.eps;
  rec.phi_bound_ok = rec.norm_Phi_inf <= 1.0 + cfg.tol_cmp;
  rec.f_bound_ok = rec.f_inf <= 2.0 * e2 / std::pow(k0, 4) + e2 / (k0 * k0) + cfg.tol_cmp;
  return rec;
}

/// Solves the coupled problem for every eps in the ladder and measures each solution.
/// A failed eps yields a record with ok = false and the error message.
inline SweepResult run_sweep(double lambda, const std::vector<double>& eps_list, const SolverConfig& tmpl,
                             const SweepOptions& opts = {}) {
  if (eps_list.empty()) fail(ErrorCode::BadParameter, "eps ladder is empty");
  for (std::size_t k = 0; k < eps_list.size(); ++k) {
    if (!(eps_list[k] > 0.0 && eps_list[k] <= 1.0)) fail(ErrorCode::BadParameter, "eps ladder entries must lie in (0,1]");
    if (k > 0 && !(eps_list[k] < eps_list[k - 1])) fail(ErrorCode::BadParameter, "eps ladder must be strictly decreasing");
  }
  if (!(lambda >= 0.0)) fail(ErrorCode::BadParameter, "lambda must be >= 0");
  const double bound = lambda0_bound(tmpl.r0, eps_list.front());
  if (lambda > bound) {
    fail(ErrorCode::BadParameter, "lambda = " + std::to_string(lambda) + " exceeds the small-voltage threshold " +
                                      std::to_string(bound) + " at the largest eps");
  }

  SweepResult out;
  out.lambda = lambda;
  const LineGrid line(tmpl.nx);
  if (lambda > 0.0) {
    const PullInResult fold = pull_in(opts.small_gap);
    for (auto& b : solve_at_lambda(lambda, fold, line, opts.small_gap)) {
      if (b.branch == BranchSide::StableSide && !out.u0_stable) out.u0_stable = b.profile;
      if (b.branch == BranchSide::UnstableSide && !out.u0_unstable) out.u0_unstable = b.profile;
    }
  } else {
    out.u0_stable = GridFunction1D(line);
  }

  auto one = [&](double eps) {
    SolverConfig cfg = tmpl;
    cfg.eps = eps;
    cfg.lambda = lambda;
    try {
      const CoupledSolution sol = solve_coupled(cfg);
      return measure(sol, cfg, out.u0_stable ? &*out.u0_stable : nullptr,
                     out.u0_unstable ? &*out.u0_unstable : nullptr);
    } catch (const Error& e) {
      SweepRecord rec;
      rec.eps = eps;
      rec.ok = false;
      rec.error = e.what();
      return rec;
    }
  };

  unsigned threads = opts.threads ? opts.threads : std::max(1u, std::thread::hardware_concurrency());
  out.records.resize(eps_list.size());
  for (std::size_t start = 0; start < eps_list.size(); start += threads) {
    const std::size_t stop = std::min(eps_list.size(), start + threads);
    std::vector<std::future<SweepRecord>> jobs;
    for (std::size_t k = start; k < stop; ++k) {
      jobs.push_back(std::async(threads > 1 ? std::launch::async : std::launch::deferred, one, eps_list[k]));
    }
    for (std::size_t k = start; k < stop; ++k) out.records[k] = jobs[k - start].get();
  }
  return out;
}

// ---------------------------------------------------------------------------

struct RateEntry {
  std::string quantity;
  std::optional<double> exponent;   // the power of eps in the upper bound, if any
  std::optional<double> threshold;  // required minimum slope
  std::string status = "skipped";   // "fitted" or "skipped"
  std::string reason;
  double slope = 0;
  double intercept = 0;
  double k_sup = 0;  // max over the ladder of value / eps^exponent
  std::vector<double> eps_used;
  bool passed = true;
};

struct RateReport {
  std::vector<RateEntry> entries;

  bool all_passed() const {
    return std::all_of(entries.begin(), entries.end(), [](const RateEntry& e) { return e.passed; });
  }
  const RateEntry& at(const std::string& name) const {
    for (const auto& e : entries)
      if (e.quantity == name) return e;
    fail(ErrorCode::BadParameter, "no rate entry named " + name);
  }
};

/// Log-log slopes of the sweep norms against eps. The bounds are upper bounds,
/// so a contract passes when the measured slope is at least exponent - slack.
/// Values within floor_factor of the algebraic floor are left out of the fit.
inline RateReport fit_rates(const std::vector<SweepRecord>& records, double slack = 0.1, double floor_factor = 100.0) {
  std::vector<const SweepRecord*> ok;
  for (const auto& r : records)
    if (r.ok) ok.push_back(&r);
  if (ok.size() < 3) {
    fail(ErrorCode::InsufficientData, "rate fitting needs at least 3 successful records, got " + std::to_string(ok.size()));
  }

  struct Quantity {
    const char* name;
    std::optional<double> exponent;
    bool contract;
    std::function<double(const SweepRecord&)> value;
    std::function<double(const SweepRecord&)> floor;
  };
  auto lin_floor = [](const SweepRecord& r) { return std::max(r.lin_residual, 1e-15); };
  const std::vector<Quantity> quantities{
      {"norm_Phi_L2", 0.5, true, [](const SweepRecord& r) { return r.norm_Phi_L2; }, lin_floor},
      {"norm_dPhi_L2", 1.0, true, [](const SweepRecord& r) { return r.norm_dPhi_L2; },
       [&](const SweepRecord& r) { return lin_floor(r) / r.h_eta; }},
      {"norm_d2Phi_L2", 2.0, true, [](const SweepRecord& r) { return r.norm_d2Phi_L2; },
       [&](const SweepRecord& r) { return lin_floor(r) / (r.h_eta * r.h_eta); }},
      {"norm_trace_L2", 1.0, true, [](const SweepRecord& r) { return r.norm_trace_L2; },
       [&](const SweepRecord& r) { return lin_floor(r) / r.h_eta; }},
      {"u_gap_W1inf", std::nullopt, false, [](const SweepRecord& r) { return r.u_gap_W1inf; }, lin_floor},
      {"psi_gap_L2", std::nullopt, false, [](const SweepRecord& r) { return r.psi_gap_L2; }, lin_floor},
  };

  RateReport rep;
  for (const auto& q : quantities) {
    RateEntry e;
    e.quantity = q.name;
    e.exponent = q.exponent;
    if (q.contract) e.threshold = *q.exponent - slack;
    std::vector<std::pair<double, double>> pts;
    for (const SweepRecord* r : ok) {
      const double v = q.value(*r);
      if (v > floor_factor * q.floor(*r)) {
        pts.emplace_back(r->eps, v);
        e.eps_used.push_back(r->eps);
      }
      if (q.exponent && v > 0.0) e.k_sup = std::max(e.k_sup, v / std::pow(r->eps, *q.exponent));
    }
    if (pts.size() < 3) {
      e.reason = "NonPositiveData: fewer than 3 values above the floor";
      rep.entries.push_back(std::move(e));
      continue;
    }
    const LogLogFit fit = fit_loglog_slope(pts);
    e.status = "fitted";
    e.slope = fit.slope;
    e.intercept = fit.intercept;
    e.passed = !e.threshold || fit.slope >= *e.threshold;
    rep.entries.push_back(std::move(e));
  }
  return rep;
}

/// True when the successful records' values strictly decrease as eps decreases.
inline bool strictly_decreasing(const std::vector<SweepRecord>& records,
                                const std::function<double(const SweepRecord&)>& value) {
  std::optional<double> prev;
  for (const auto& r : records) {
    if (!r.ok) continue;
    const double v = value(r);
    if (prev && !(v < *prev)) return false;
    prev = v;
  }
  return true;
}

// ---------------------------------------------------------------------------

struct TraceInequality {
  double lhs;  // |d_eta theta(.,1)|_{L2(-1,1)}
  double rhs;  // sqrt(2) (|d_eta theta|_{L2} + |d_eta^2 theta|_{L2})
};

inline TraceInequality trace_inequality_check(const GridFunction2D& theta) {
  const double lhs = norm_l2(trace_d_eta_top(theta));
  const double rhs = std::sqrt(2.0) * (norm_l2(d_eta(theta)) + norm_l2(d_eta2(theta)));
  return {lhs, rhs};
}

}  // namespace memsolve
