#pragma once

#include <CLI11.hpp>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "hapto/errors.hpp"
#include "hapto/io.hpp"
#include "hapto/mms.hpp"
#include "hapto/monitors.hpp"
#include "hapto/picard.hpp"
#include "hapto/time_integration.hpp"
#include "hapto/transform.hpp"

// Command-line front end. Exit codes:
//   0  success
//   1  configuration error: bad document, parameters, initial data or usage
//   2  runtime fault: integration, fixed-point or output failure
//   3  hard monitor violation with --strict-monitors

namespace hapto {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitFault = 2;
inline constexpr int kExitMonitor = 3;

namespace detail {

/// Setup failures (before any time stepping) are configuration errors.
class SetupError : public Error {
 public:
  explicit SetupError(const std::string& what) : Error(what) {}
};

struct Prepared {
  SimulationConfig cfg;
  State initial;
};

/// `picard`: the fixed-point solver will run, so its compatibility condition
/// on the initial data is checked here.
inline Prepared prepare(const std::string& path, const ConfigOverrides& overrides, std::ostream& out,
                        bool picard = false) {
  try {
    SimulationConfig cfg = load_config(path, overrides);
    InitialCondition ic = build_initial(cfg.initial, cfg.grid());
    if (ic.clipped_cells > 0) {
      out << "initial data: clipped " << ic.clipped_cells << " cell(s) to keep c^D + c^S + v <= 1\n";
    }
    // Surface a degenerate bound set (mu_s = 0) before running.
    (void)compute_bounds(ic.state, cfg.params, cfg.grid());
    if (picard || cfg.solver == Solver::Picard) {
      require_compatible(to_transformed(ic.state, cfg.params), cfg.picard.compat_tol);
    }
    return {std::move(cfg), std::move(ic.state)};
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw SetupError(e.what());
  }
}

inline void print_report(std::ostream& out, const MonitorReport& r) {
  out << "  t = " << r.time << ": |cd|_1 = " << r.l1_cd << ", |cs|_1 = " << r.l1_cs << ", |m|_1 = " << r.l1_m
      << ", v in [" << r.min_v << ", " << r.max_v << "]";
  for (std::size_t c = 0; c < kCheckCount; ++c) {
    if (r.checks[c].status != CheckStatus::Pass) out << ", " << kCheckNames[c] << " " << to_string(r.checks[c].status);
  }
  out << '\n';
}

inline void run_picard_with_monitors(const Prepared& pr, SnapshotWriter* snaps, MonitorCsvWriter* mon,
                                     std::ostream& out) {
  const auto& cfg = pr.cfg;
  const auto& p = cfg.params;
  const BoundSet bounds = compute_bounds(pr.initial, p, cfg.grid());
  std::size_t hard = 0;
  std::size_t soft = 0;
  std::optional<MonitorReport> last;
  auto observe = [&](const State& s) {
    const State orig = to_original(s, p);
    if (snaps != nullptr) snaps->write(orig);
    MonitorReport rep = check(orig, bounds, cfg.run.monitor_tol_rel);
    if (mon != nullptr) mon->write(rep);
    hard += rep.count(CheckStatus::HardViolation);
    soft += rep.count(CheckStatus::SoftViolation);
    last = rep;
    if (cfg.run.strict_monitors && rep.has_hard_violation()) {
      std::string failed;
      for (std::size_t c = 0; c < kCheckCount; ++c) {
        if (rep.checks[c].status == CheckStatus::HardViolation) failed += std::string(failed.empty() ? "" : ", ") + kCheckNames[c];
      }
      throw MonitorViolation("hard monitor violation (" + failed + ")", s.time);
    }
  };
  observe(pr.initial);
  const PicardResult res = advance_picard(pr.initial, p, cfg.picard, cfg.run.t_end, observe);
  double worst = 0.0;
  std::size_t iterations = 0;
  for (const auto& t : res.traces) {
    worst = std::max(worst, t.max_contraction_ratio());
    iterations += t.iterations;
  }
  out << "picard: " << res.traces.size() << " window(s), " << iterations << " iteration(s), "
      << res.window_halvings << " halving(s), max contraction ratio " << worst << '\n';
  out << "monitors: " << soft << " soft, " << hard << " hard violation(s)\n";
  if (last) print_report(out, *last);
}

inline int simulate(const std::string& path, const ConfigOverrides& ov, std::ostream& out) {
  const Prepared pr = prepare(path, ov, out);
  const auto& cfg = pr.cfg;
  const std::filesystem::path dir = cfg.output.directory;
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory (" + ec.message() + ")", dir.string());
  {
    std::ofstream echo(dir / "config.yaml", std::ios::binary);
    if (!echo) throw IoError("cannot create file", (dir / "config.yaml").string());
    echo << serialize_config(cfg);
  }
  std::unique_ptr<SnapshotWriter> snaps;
  if (cfg.output.csv || cfg.output.pgm) snaps = std::make_unique<SnapshotWriter>(dir, cfg.output.csv, cfg.output.pgm);
  MonitorCsvWriter mon(dir / "monitors.csv");

  out << "simulate: " << cfg.nx << "x" << cfg.ny << ", t_end = " << cfg.run.t_end << ", solver " << to_string(cfg.solver)
      << ", formulation " << to_string(cfg.run.formulation) << '\n';
  if (cfg.solver == Solver::Picard) {
    run_picard_with_monitors(pr, snaps.get(), &mon, out);
  } else {
    const auto& p = cfg.params;
    RunSinks sinks;
    if (snaps) sinks.snapshot = [&](const State& s) { snaps->write(to_original(s, p)); };
    sinks.monitor = [&](const MonitorReport& r) { mon.write(r); };
    const RunResult res = run(pr.initial, p, cfg.run, sinks);
    std::size_t clamps = 0;
    for (auto c : res.clamps) clamps += c;
    out << "direct: " << res.steps << " step(s), dt in [" << res.min_dt << ", " << res.max_dt << "], " << clamps
        << " roundoff clamp(s)\n";
    out << "monitors: " << res.soft_violations << " soft, " << res.hard_violations << " hard violation(s)\n";
    if (res.last_report) print_report(out, *res.last_report);
  }
  out << "output written to " << dir.string() << '\n';
  return kExitOk;
}

inline int validate(const std::string& path, const ConfigOverrides& ov, std::ostream& out) {
  const Prepared pr = prepare(path, ov, out);
  const BoundSet b = compute_bounds(pr.initial, pr.cfg.params, pr.cfg.grid());
  out << "configuration ok: " << pr.cfg.nx << "x" << pr.cfg.ny << ", t_end = " << pr.cfg.run.t_end << ", solver "
      << to_string(pr.cfg.solver) << '\n';
  out << "L1 bounds: cd " << b.cd_l1_bound << ", cs " << b.cs_l1_bound << " (cs_max " << b.cs_max << "), m "
      << b.m_l1_bound << '\n';
  if (!validate_params(pr.cfg.params).empty()) out << "warning: parameters outside the proven regime\n";
  return kExitOk;
}

inline int compare_solvers(const std::string& path, const ConfigOverrides& ov, std::ostream& out) {
  const Prepared pr = prepare(path, ov, out, true);
  const auto& cfg = pr.cfg;
  const auto& p = cfg.params;
  RunConfig rc = cfg.run;
  rc.strict_monitors = false;
  const RunResult direct = run(pr.initial, p, rc);
  const PicardResult picard = advance_picard(pr.initial, p, cfg.picard, cfg.run.t_end);
  const State a = to_original(direct.final_state, p);
  const State b = to_original(picard.final_state, p);
  const std::array<double, 4> d = {sup_distance(a.dcc, b.dcc), sup_distance(a.csc, b.csc),
                                   sup_distance(a.ecm, b.ecm), sup_distance(a.mmp, b.mmp)};
  const double worst = *std::max_element(d.begin(), d.end());
  const double h = std::max(cfg.grid().hx(), cfg.grid().hy());
  const double tol = 10.0 * (h * h + direct.max_dt);
  double ratio = 0.0;
  for (const auto& t : picard.traces) ratio = std::max(ratio, t.max_contraction_ratio());
  out << "compare-solvers at t = " << cfg.run.t_end << " (direct: " << to_string(rc.formulation) << ", "
      << direct.steps << " steps; picard: " << picard.traces.size() << " window(s))\n";
  for (std::size_t f = 0; f < 4; ++f) out << "  sup |" << kFieldNames[f] << "| difference: " << d[f] << '\n';
  out << "max difference " << worst << ", tolerance 10(h^2+dt) = " << tol << (worst <= tol ? " (within)" : " (exceeded)")
      << '\n';
  out << "max contraction ratio " << ratio << '\n';
  return kExitOk;
}

inline std::vector<int> parse_levels(const std::string& text) {
  std::vector<int> levels;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const int n = std::stoi(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      levels.push_back(n);
    } catch (const std::exception&) {
      throw SetupError("levels must be a comma-separated list of grid sizes, got '" + text + "'");
    }
  }
  return levels;
}

inline int mms(const std::string& name, const std::string& levels_text, const std::optional<std::string>& output,
               std::ostream& out) {
  ManufacturedCase mc;
  std::vector<int> levels;
  try {
    mc = manufactured_case(name);
    levels = parse_levels(levels_text);
    if (levels.size() < 3) throw SetupError("at least three refinement levels are needed");
    for (std::size_t k = 1; k < levels.size(); ++k) {
      if (levels[k] != 2 * levels[k - 1]) throw SetupError("refinement levels must double, e.g. 32,64,128");
    }
    if (levels.front() < 3) throw SetupError("grid sizes must be at least 3");
  } catch (const SetupError&) {
    throw;
  } catch (const Error& e) {
    throw SetupError(e.what());
  }
  const ConvergenceTable table = run_convergence(mc, levels, mc.params);
  write_convergence_csv(table, out);
  out << "case " << name << ": minimum fitted order " << table.min_combined_order() << " (predicted "
      << mc.predicted_order << ")\n";
  if (output) {
    std::error_code ec;
    std::filesystem::create_directories(*output, ec);
    if (ec) throw IoError("cannot create output directory (" + ec.message() + ")", *output);
    const auto file = std::filesystem::path(*output) / ("mms_" + name + ".csv");
    std::ofstream os(file, std::ios::binary);
    if (!os) throw IoError("cannot create file", file.string());
    write_convergence_csv(table, os);
  }
  return kExitOk;
}

}  // namespace detail

/// Runs the command line `args` (without the program name). Never throws.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Two-population haptotaxis invasion simulator", "haptosim"};
  app.require_subcommand(1);

  std::string config_path;
  std::string solver;
  bool strict = false;
  bool allow_unproven = false;
  std::optional<std::string> output;
  std::optional<std::uint64_t> seed;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("config", config_path, "configuration file (YAML)")->required();
    sub->add_option("--solver", solver, "direct or picard")->check(CLI::IsMember({"direct", "picard"}));
    sub->add_flag("--strict-monitors", strict, "exit with code 3 on a hard monitor violation");
    sub->add_flag("--allow-unproven", allow_unproven, "accept parameters with mu < chi * mu_v");
    sub->add_option("--output", output, "output directory");
    sub->add_option("--seed", seed, "seed for randomised initial data");
  };
  auto* simulate = app.add_subcommand("simulate", "run the configured simulation");
  add_common(simulate);
  auto* validate = app.add_subcommand("validate", "parse and check a configuration");
  add_common(validate);
  auto* compare = app.add_subcommand("compare-solvers", "run the direct and fixed-point solvers and compare");
  add_common(compare);
  auto* mms = app.add_subcommand("mms", "manufactured-solution convergence study");
  std::string mms_case;
  std::string levels;
  mms->add_option("case", mms_case, "equilibrium, diffusion or full")->required();
  mms->add_option("levels", levels, "comma-separated grid sizes, e.g. 32,64,128")->required();
  mms->add_option("--output", output, "directory for the convergence CSV");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitConfig;
  }

  ConfigOverrides ov;
  if (!solver.empty()) ov.solver = solver == "picard" ? Solver::Picard : Solver::Direct;
  ov.strict_monitors = strict;
  ov.allow_unproven = allow_unproven;
  ov.output_directory = output;
  ov.seed = seed;

  try {
    if (simulate->parsed()) return detail::simulate(config_path, ov, out);
    if (validate->parsed()) return detail::validate(config_path, ov, out);
    if (compare->parsed()) return detail::compare_solvers(config_path, ov, out);
    return detail::mms(mms_case, levels, output, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const detail::SetupError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const MonitorViolation& e) {
    err << "error: " << e.what() << '\n';
    return kExitMonitor;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFault;
  }
}

}  // namespace hapto
