#pragma once

// Workflows behind the memsolve command-line tool. Each cmd_* function runs
// one workflow, writes its files after all computation has finished and
// returns the process exit code. Needs nlohmann/json on the include path.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "memsolve/asymptotic_lab.hpp"
#include "memsolve/error.hpp"
#include "memsolve/fixed_point.hpp"
#include "memsolve/membrane_map.hpp"
#include "memsolve/small_gap.hpp"

namespace memsolve::cli {

using json = nlohmann::ordered_json;

inline constexpr const char* tool_version = "0.1.0";

enum ExitCode : int {
  exit_ok = 0,
  exit_internal = 1,
  exit_nonconvergence = 2,
  exit_admissibility = 3,
  exit_config = 4,
  exit_rate_contract = 5,
};

inline int exit_code_for(ErrorCode c) noexcept {
  switch (c) {
    case ErrorCode::BadParameter: return exit_config;
    case ErrorCode::NonConvergence:
    case ErrorCode::LinearSolveFailure:
    case ErrorCode::NoCrossing:
    case ErrorCode::FoldNotBracketed: return exit_nonconvergence;
    case ErrorCode::LeftAdmissibleSet:
    case ErrorCode::TouchdownApproach:
    case ErrorCode::TouchdownInput:
    case ErrorCode::InternalInconsistency: return exit_admissibility;
    default: return exit_internal;
  }
}

// FNV-1a, 64 bit
inline std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL) noexcept {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// CSV text built in memory; written out only once the workflow has succeeded.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : cols_(header.size()) {
    line(header);
  }

  void row(std::initializer_list<double> values) {
    std::vector<std::string> cells;
    cells.reserve(values.size());
    for (double v : values) cells.push_back(fmt(v));
    line(cells);
  }
  void row(const std::vector<std::string>& cells) { line(cells); }

  const std::string& text() const noexcept { return text_; }

 private:
  void line(const std::vector<std::string>& cells) {
    if (cells.size() != cols_) fail(ErrorCode::InternalInconsistency, "csv row width mismatch");
    for (std::size_t k = 0; k < cells.size(); ++k) {
      if (k) text_ += ',';
      text_ += cells[k];
    }
    text_ += '\n';
  }
  std::size_t cols_;
  std::string text_;
};

// ---------------------------------------------------------------------------
// Run manifest

struct RunManifest {
  std::string command;
  json config = json::object();
  std::map<std::string, std::string> input_hashes;
  std::map<std::string, std::string> output_hashes;
  json extra = json::object();
  double wall_clock_seconds = 0;

  /// Hash of the deterministic part (command, resolved config, version, inputs).
  std::string hash() const {
    json j{{"command", command}, {"config", config}, {"tool_version", tool_version}, {"inputs", input_hashes}};
    return hex64(fnv1a(j.dump()));
  }

  json to_json() const {
    json j;
    j["command"] = command;
    j["tool_version"] = tool_version;
    j["manifest_hash"] = hash();
    j["config"] = config;
    j["input_hashes"] = input_hashes;
    j["outputs"] = output_hashes;
    for (auto& [k, v] : extra.items()) j[k] = v;
    j["wall_clock_seconds"] = wall_clock_seconds;
    return j;
  }
};

/// Collects output files and writes them, plus manifest.json, in one go.
class OutputSet {
 public:
  void add(const std::string& name, std::string content) { files_.emplace_back(name, std::move(content)); }

  void write(const std::filesystem::path& dir, RunManifest& manifest) const {
    std::filesystem::create_directories(dir);
    for (const auto& [name, content] : files_) {
      manifest.output_hashes[name] = hex64(fnv1a(content));
      std::ofstream os(dir / name, std::ios::binary);
      os << content;
      if (!os) fail(ErrorCode::BadParameter, "cannot write " + (dir / name).string());
    }
    std::ofstream os(dir / "manifest.json", std::ios::binary);
    os << manifest.to_json().dump(2) << '\n';
  }

 private:
  std::vector<std::pair<std::string, std::string>> files_;
};

inline std::string json_text(json j, const RunManifest& m) {
  j["manifest_hash"] = m.hash();
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Configuration

struct RunConfig {
  SolverConfig solver;
  std::vector<double> eps_ladder{0.4, 0.2, 0.1, 0.05, 0.025};
};

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  if (!is) fail(ErrorCode::BadParameter, "cannot open config file " + p.string());
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

/// Parses a JSON config; unknown keys and wrong types are BadParameter errors.
inline RunConfig parse_config(const std::string& text, bool allow_ladder) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::BadParameter, std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) fail(ErrorCode::BadParameter, "config must be a JSON object");

  RunConfig rc;
  SolverConfig& c = rc.solver;
  auto number = [](const json& v, const std::string& key) {
    if (!v.is_number()) fail(ErrorCode::BadParameter, "config key '" + key + "' must be a number");
    return v.get<double>();
  };
  auto count = [](const json& v, const std::string& key) -> long long {
    if (!v.is_number_integer()) fail(ErrorCode::BadParameter, "config key '" + key + "' must be an integer");
    return v.get<long long>();
  };
  auto positive_size = [&](const json& v, const std::string& key) {
    const long long n = count(v, key);
    if (n < 0) fail(ErrorCode::BadParameter, "config key '" + key + "' must be non-negative");
    return static_cast<std::size_t>(n);
  };

  if (j.contains("epsilon") && j.contains("eps")) fail(ErrorCode::BadParameter, "give only one of 'epsilon' and 'eps'");
  for (auto& [key, v] : j.items()) {
    if (key == "epsilon" || key == "eps") c.eps = number(v, key);
    else if (key == "lambda") c.lambda = number(v, key);
    else if (key == "r0") c.r0 = number(v, key);
    else if (key == "nx") c.nx = positive_size(v, key);
    else if (key == "neta") c.neta = positive_size(v, key);
    else if (key == "relax_omega") c.relax_omega = number(v, key);
    else if (key == "fp_tol") c.fp_tol = number(v, key);
    else if (key == "fp_max_iter") c.fp_max_iter = static_cast<int>(count(v, key));
    else if (key == "lin_tol") c.lin_tol = number(v, key);
    else if (key == "tol_cmp") c.tol_cmp = number(v, key);
    else if (key == "tol_sym") c.tol_sym = number(v, key);
    else if (key == "tol_c") c.tol_c = number(v, key);
    else if (key == "delta_touch") c.delta_touch = number(v, key);
    else if (key == "eps_ladder" && allow_ladder) {
      if (!v.is_array() || v.empty()) fail(ErrorCode::BadParameter, "eps_ladder must be a non-empty array");
      rc.eps_ladder.clear();
      for (const auto& e : v) rc.eps_ladder.push_back(number(e, key));
    } else {
      fail(ErrorCode::BadParameter, "unknown config key '" + key + "'");
    }
  }
  c.validate();
  return rc;
}

inline json resolved_config(const RunConfig& rc, bool with_ladder) {
  const SolverConfig& c = rc.solver;
  json j{{"epsilon", c.eps},         {"lambda", c.lambda},   {"r0", c.r0},
         {"nx", c.nx},               {"neta", c.neta},       {"relax_omega", c.relax_omega},
         {"fp_tol", c.fp_tol},       {"fp_max_iter", c.fp_max_iter},
         {"lin_tol", c.lin_tol},     {"tol_cmp", c.tol_cmp}, {"tol_sym", c.tol_sym},
         {"tol_c", c.tol_c},         {"delta_touch", c.delta_touch}};
  if (with_ladder) j["eps_ladder"] = rc.eps_ladder;
  return j;
}

// Runs a workflow body and turns library errors into exit codes.
template <class Body>
int guarded(std::ostream& err, Body&& body) {
  try {
    return body();
  } catch (const NonConvergenceError& e) {
    err << "error: " << e.what() << "\n  update history:";
    for (double h : e.history()) err << ' ' << h;
    err << '\n';
    return exit_nonconvergence;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return exit_config;
  }
}

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------------------
// solve

inline int cmd_solve(const std::filesystem::path& config_path, const std::filesystem::path& out_dir,
                     std::ostream& err = std::cerr) {
  return guarded(err, [&] {
    const auto t0 = std::chrono::steady_clock::now();
    const std::string text = read_file(config_path);
    const RunConfig rc = parse_config(text, false);
    const SolverConfig& cfg = rc.solver;

    RunManifest man;
    man.command = "solve";
    man.config = resolved_config(rc, false);
    man.input_hashes[config_path.filename().string()] = hex64(fnv1a(text));

    const CoupledSolution sol = solve_coupled(cfg);
    const RectGrid g = cfg.grid();

    CsvTable u_csv({"x", "u", "du", "d2u"});
    for (std::size_t i = 0; i < g.nx(); ++i) u_csv.row({g.x(i), sol.u[i], sol.u.du()[i], sol.u.d2u()[i]});

    CsvTable pot_csv({"x", "eta", "phi", "Phi"});
    for (std::size_t i = 0; i < g.nx(); ++i)
      for (std::size_t j = 0; j < g.n_eta(); ++j)
        pot_csv.row({g.x(i), g.eta(j), sol.potential.phi(i, j), sol.potential.capital_phi(i, j)});

    const PhysicalPotential phys = reconstruct_physical(sol);
    CsvTable phys_csv({"x", "z", "psi", "psi0"});
    for (std::size_t k = 0; k < phys.x.size(); ++k) phys_csv.row({phys.x[k], phys.z[k], phys.psi[k], phys.psi0[k]});

    const ComparisonReport cmp = verify_comparison(sol.potential, sol.u, cfg.eps);
    const Residuals res = residual_check(sol, cfg);
    const AdmissibilityReport& adm = sol.admissibility;
    const GridFunction1D& tr = sol.load.trace;
    json diag;
    diag["iterations"] = sol.iterations;
    diag["final_update_norm"] = sol.final_update_norm;
    diag["fixed_point_defect"] = sol.fixed_point_defect;
    diag["update_history"] = sol.update_history;
    diag["in_lambda0_regime"] = sol.in_lambda0_regime;
    diag["lambda0"] = lambda0_bound(cfg.r0, cfg.eps);
    diag["norms"] = {{"u_inf", norm_inf(sol.u.u())},
                     {"Phi_inf", norm_inf(sol.potential.capital_phi)},
                     {"Phi_L2", norm_l2(sol.potential.capital_phi)},
                     {"trace_min", *std::min_element(tr.values().begin(), tr.values().end())},
                     {"trace_max", *std::max_element(tr.values().begin(), tr.values().end())},
                     {"load_inf", norm_inf(sol.load.g)}};
    diag["admissibility"] = {{"verdict", adm.verdict},           {"even_margin", adm.even_margin},
                             {"convexity_min", adm.convexity_min}, {"convexity_max", adm.convexity_max},
                             {"slope_max", adm.slope_max},         {"depth_min", adm.depth_min},
                             {"r0", adm.r0}};
    diag["comparison_margins"] = {{"upper", cmp.upper},
                                  {"lower_affine", cmp.lower_affine},
                                  {"lower_power", cmp.lower_power},
                                  {"trace", cmp.trace}};
    diag["residuals"] = {{"membrane", res.r_membrane}, {"potential", res.r_potential},
                         {"linear", sol.potential.lin_residual}};

    OutputSet out;
    out.add("u.csv", u_csv.text());
    out.add("potential.csv", pot_csv.text());
    out.add("physical.csv", phys_csv.text());
    out.add("diagnostics.json", json_text(diag, man));
    man.wall_clock_seconds = seconds_since(t0);
    out.write(out_dir, man);
    return int{exit_ok};
  });
}

// ---------------------------------------------------------------------------
// smallgap

struct SmallGapOptions {
  std::optional<double> lambda;  // profiles at this lambda
  bool pullin = false;           // report the fold (and its profile)
  std::size_t nx = 257;          // profile grid
};

inline int cmd_smallgap(const SmallGapOptions& opt, const std::filesystem::path& out_dir,
                        std::ostream& err = std::cerr) {
  return guarded(err, [&] {
    const auto t0 = std::chrono::steady_clock::now();
    if (opt.lambda.has_value() == opt.pullin) {
      fail(ErrorCode::BadParameter, "exactly one of --lambda and --pullin is required");
    }
    if (opt.lambda && !(*opt.lambda > 0.0)) fail(ErrorCode::BadParameter, "--lambda must be > 0");
    const LineGrid grid(opt.nx);
    const SmallGapConfig cfg;

    RunManifest man;
    man.command = "smallgap";
    man.config = {{"nx", opt.nx},
                  {"step", cfg.step},
                  {"crossing_tol", cfg.crossing_tol},
                  {"tol_fold", cfg.tol_fold},
                  {"delta_touch", cfg.delta_touch},
                  {"sweep_points", cfg.sweep_points}};
    if (opt.lambda) man.config["lambda"] = *opt.lambda;
    else man.config["pullin"] = true;

    const PullInResult fold = pull_in(cfg);
    const double lambda = opt.lambda ? *opt.lambda : fold.lambda_star;
    const std::vector<SmallGapBranch> branches = solve_at_lambda(lambda, fold, grid, cfg);

    CsvTable br_csv({"branch", "x", "u"});
    for (const auto& b : branches)
      for (std::size_t i = 0; i < grid.size(); ++i) br_csv.row({to_string(b.branch), fmt(grid.node(i)), fmt(b.profile[i])});
    CsvTable curve_csv({"u0_mid", "lambda"});
    for (const auto& [u0, lam] : fold.curve) curve_csv.row({u0, lam});

    OutputSet out;
    out.add("branches.csv", br_csv.text());
    out.add("curve.csv", curve_csv.text());
    if (opt.pullin) {
      out.add("pullin.json", json_text({{"lambda_star", fold.lambda_star}, {"u0_at_fold", fold.u0_at_fold}}, man));
    }
    json blist = json::array();
    for (const auto& b : branches) blist.push_back({{"branch", to_string(b.branch)}, {"u0_mid", b.u0_mid}});
    man.extra["branch_count"] = branches.size();
    man.extra["branches"] = blist;
    man.wall_clock_seconds = seconds_since(t0);
    out.write(out_dir, man);
    return int{exit_ok};
  });
}

// ---------------------------------------------------------------------------
// sweep

inline std::string plot_script() {
  return R"(# Log-log plot of the sweep norms against eps. Usage: python plot_sweep.py [sweep.csv]
import csv
import sys

import matplotlib.pyplot as plt

path = sys.argv[1] if len(sys.argv) > 1 else "sweep.csv"
with open(path) as fh:
    rows = [r for r in csv.DictReader(fh) if r["ok"] == "1"]
eps = [float(r["eps"]) for r in rows]
columns = ["norm_Phi_L2", "norm_dPhi_L2", "norm_d2Phi_L2", "norm_trace_L2", "u_gap_W1inf", "psi_gap_L2"]
fig, ax = plt.subplots()
for c in columns:
    vals = [float(r[c]) for r in rows]
    pts = [(e, v) for e, v in zip(eps, vals) if v > 0]
    if pts:
        ax.loglog(*zip(*pts), marker="o", label=c)
ax.set_xlabel("eps")
ax.set_ylabel("norm")
ax.legend()
fig.savefig("sweep.png", dpi=150)
)";
}

inline int cmd_sweep(const std::filesystem::path& config_path, const std::filesystem::path& out_dir, bool plots,
                     std::ostream& err = std::cerr) {
  return guarded(err, [&] {
    const auto t0 = std::chrono::steady_clock::now();
    const std::string text = read_file(config_path);
    const RunConfig rc = parse_config(text, true);

    RunManifest man;
    man.command = "sweep";
    man.config = resolved_config(rc, true);
    man.input_hashes[config_path.filename().string()] = hex64(fnv1a(text));

    const SweepResult sw = run_sweep(rc.solver.lambda, rc.eps_ladder, rc.solver);

    CsvTable csv({"eps", "ok", "iterations", "norm_Phi_inf", "norm_Phi_L2", "norm_dPhi_L2", "norm_d2Phi_L2",
                  "norm_trace_L2", "u_gap_W1inf", "u_gap_unstable_W1inf", "psi_gap_L2", "psi_gap_L2_transformed",
                  "f_inf", "lin_residual", "phi_bound_ok", "f_bound_ok"});
    bool all_ok = true;
    for (const auto& r : sw.records) {
      all_ok = all_ok && r.ok;
      csv.row({fmt(r.eps), r.ok ? "1" : "0", std::to_string(r.iterations), fmt(r.norm_Phi_inf), fmt(r.norm_Phi_L2),
               fmt(r.norm_dPhi_L2), fmt(r.norm_d2Phi_L2), fmt(r.norm_trace_L2), fmt(r.u_gap_W1inf),
               fmt(r.u_gap_unstable_W1inf), fmt(r.psi_gap_L2), fmt(r.psi_gap_L2_transformed), fmt(r.f_inf),
               fmt(r.lin_residual), r.phi_bound_ok ? "1" : "0", r.f_bound_ok ? "1" : "0"});
      if (!r.ok) err << "eps = " << r.eps << " failed: " << r.error << '\n';
    }

    json rates;
    bool contracts_ok = true;
    try {
      const RateReport rep = fit_rates(sw.records);
      contracts_ok = rep.all_passed();
      json entries = json::array();
      for (const auto& e : rep.entries) {
        json je{{"quantity", e.quantity}, {"status", e.status}};
        if (e.exponent) je["exponent"] = *e.exponent;
        if (e.threshold) je["threshold"] = *e.threshold;
        if (e.status == "fitted") {
          je["slope"] = e.slope;
          je["intercept"] = e.intercept;
          je["eps_used"] = e.eps_used;
        } else {
          je["reason"] = e.reason;
        }
        if (e.exponent) je["k_sup"] = e.k_sup;
        je["passed"] = e.passed;
        entries.push_back(je);
      }
      rates["fits"] = entries;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::InsufficientData) throw;
      rates["fits"] = json::array();
      rates["skipped"] = e.what();
    }
    rates["lambda"] = sw.lambda;
    rates["all_contracts_passed"] = contracts_ok;
    bool bounds_ok = true;
    for (const auto& r : sw.records) bounds_ok = bounds_ok && (!r.ok || (r.phi_bound_ok && r.f_bound_ok));
    rates["bound_certificates_passed"] = bounds_ok;

    OutputSet out;
    out.add("sweep.csv", csv.text());
    out.add("rates.json", json_text(rates, man));
    if (plots) out.add("plot_sweep.py", plot_script());
    man.wall_clock_seconds = seconds_since(t0);
    out.write(out_dir, man);

    if (!all_ok) return int{exit_nonconvergence};
    if (!contracts_ok) return int{exit_rate_contract};
    return int{exit_ok};
  });
}

// ---------------------------------------------------------------------------
// bound

struct BoundOptions {
  std::optional<double> r0;
  std::optional<double> eps;
  bool uniform = false;
  bool optimize = false;
};

inline int cmd_bound(const BoundOptions& opt, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  return guarded(err, [&] {
    if (opt.eps.has_value() == opt.uniform) fail(ErrorCode::BadParameter, "exactly one of --eps and --uniform is required");
    if (!opt.r0 && !opt.optimize) fail(ErrorCode::BadParameter, "--r0 is required unless --optimize is given");
    json j;
    if (opt.uniform) j["uniform"] = true;
    else j["eps"] = *opt.eps;
    if (opt.r0) {
      j["r0"] = *opt.r0;
      j["lambda0"] = opt.uniform ? lambda0_bound_uniform(*opt.r0) : lambda0_bound(*opt.r0, *opt.eps);
    }
    if (opt.optimize) {
      if (opt.eps) lambda0_bound(1.0, *opt.eps);  // validates eps
      const Lambda0Optimum best = optimize_lambda0(opt.uniform ? std::nullopt : opt.eps);
      j["optimum"] = {{"r0", best.r0}, {"lambda0", best.lambda0}};
    }
    out << j.dump(2) << '\n';
    return int{exit_ok};
  });
}

}  // namespace memsolve::cli
