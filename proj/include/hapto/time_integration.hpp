#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hapto/errors.hpp"
#include "hapto/grid.hpp"
#include "hapto/model.hpp"
#include "hapto/monitors.hpp"
#include "hapto/spatial_ops.hpp"
#include "hapto/transform.hpp"

namespace hapto {

inline constexpr double kDivisionGuard = 1e-30;
/// Stability-limited steps below this are reported as stiffness faults.
inline constexpr double kMinTimeStep = 1e-14;

struct RunConfig {
  double t_end = 0.1;
  double cfl_safety = 0.9;  ///< sigma in (0, 1]
  double dt_max = 1e-2;
  Formulation formulation = Formulation::Original;
  std::size_t snapshot_every = 0;  ///< 0: initial and final snapshots only
  std::size_t monitor_every = 10;  ///< 0: initial and final checks only
  bool strict_monitors = false;
  double monitor_tol_rel = 0.01;

  void validate() const {
    if (!(t_end > 0.0)) throw ModelError("t_end must be > 0");
    if (!(cfl_safety > 0.0 && cfl_safety <= 1.0)) throw ModelError("cfl_safety must lie in (0, 1]");
    if (!(dt_max > 0.0)) throw ModelError("dt_max must be > 0");
    if (!(monitor_tol_rel >= 0.0)) throw ModelError("monitor_tol_rel must be >= 0");
  }

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Field order used by per-field report arrays.
enum class FieldId : std::size_t { Dcc, Csc, Ecm, Mmp };
inline constexpr std::array<const char*, 4> kFieldNames = {"cd", "cs", "v", "m"};

struct StepReport {
  double dt = 0.0;
  std::array<double, 4> min{};  ///< post-step extrema
  std::array<double, 4> max{};
  std::array<double, 4> pre_clamp_min{};
  std::array<double, 4> pre_clamp_max{};
  std::array<std::size_t, 4> clamps{};  ///< cells nudged back within the slack
  double wall_seconds = 0.0;
};

/// Additive source terms for one cell.
struct Sources {
  double dcc = 0.0;
  double csc = 0.0;
  double ecm = 0.0;
  double mmp = 0.0;
};
/// Fills per-cell sources (row-major) at time t; called once at the start of
/// every step.
using Forcing = std::function<void(double t, std::span<Sources> out)>;

/// Crude upper bound on the local reaction Lipschitz rate.
inline double reaction_rate_bound(const State& s, const ModelParameters& p) {
  double sup_cd = 0.0;
  double sup_cs = 0.0;
  double growth = std::max(p.mu_d, p.mu_s);
  if (s.formulation == Formulation::Original) {
    sup_cd = s.dcc.sup_norm();
    sup_cs = s.csc.sup_norm();
  } else {
    for (std::size_t k = 0; k < s.dcc.size(); ++k) {
      sup_cd = std::max(sup_cd, std::abs(s.dcc[k] * std::exp(p.chi_d * s.ecm[k])));
      sup_cs = std::max(sup_cs, std::abs(s.csc[k] * std::exp(p.chi_s * s.ecm[k])));
    }
    growth = std::max({growth, p.chi_d * p.mu_v, p.chi_s * p.mu_v});
  }
  // The trailing 1 is the MMP decay rate.
  return p.mu_max + growth * (1.0 + sup_cd + sup_cs + 1.0) + s.mmp.sup_norm() + 1.0;
}

namespace detail {

inline double stability_rate(const Field& v, const ModelParameters& p, Formulation f, double reaction_rate) {
  return max_transport_rate(v, p.chi_d, p.chi_s, f) + reaction_rate;
}

}  // namespace detail

/// Largest step for which the explicit transport-reaction update keeps every
/// cell coefficient nonnegative, scaled by cfl_safety and capped by dt_max.
inline double cfl_dt(const State& state, const ModelParameters& p, const RunConfig& cfg) {
  const double rate = detail::stability_rate(state.ecm, p, state.formulation, reaction_rate_bound(state, p));
  return cfg.cfl_safety * std::min(1.0 / (rate + kDivisionGuard), cfg.dt_max);
}

/// Exact solution over dt of v' = v (alpha - beta v) with
/// alpha = mu_v (1 - cd - cs) - m and beta = mu_v frozen.
///
/// Written in increment form so that v = 0 and v = alpha / beta are
/// reproduced exactly.
inline double integrate_v_pointwise(double v, double cd, double cs, double m, double mu_v, double dt) {
  const double alpha = mu_v * (1.0 - cd - cs) - m;
  const double beta = mu_v;
  const double x = alpha * dt;
  const double phi = x == 0.0 ? dt : std::expm1(x) / alpha;  // (e^{alpha dt} - 1) / alpha
  return v + v * phi * (alpha - beta * v) / (1.0 + beta * v * phi);
}

namespace detail {

inline void clamp_field(Field& f, FieldId id, bool upper, StepReport& rep) {
  const auto k = static_cast<std::size_t>(id);
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  double lo_after = lo;
  double hi_after = hi;
  std::size_t clamps = 0;
  for (double& x : f.values()) {
    lo = std::min(lo, x);
    hi = std::max(hi, x);
    if (x < 0.0 && x > -kPositivitySlack) {
      x = 0.0;
      ++clamps;
    } else if (upper && x > 1.0 && x < 1.0 + kPositivitySlack) {
      x = 1.0;
      ++clamps;
    }
    lo_after = std::min(lo_after, x);
    hi_after = std::max(hi_after, x);
  }
  rep.pre_clamp_min[k] = lo;
  rep.pre_clamp_max[k] = hi;
  rep.clamps[k] = clamps;
  rep.min[k] = lo_after;
  rep.max[k] = hi_after;
}

}  // namespace detail

/// One operator-split step: exact logistic v update on frozen coefficients,
/// then forward Euler for the cell populations and MMPs, then clamping of
/// roundoff-level excursions. The step never exceeds max_dt.
inline std::pair<State, StepReport> step(const State& state, const ModelParameters& p, const RunConfig& cfg,
                                         double max_dt = std::numeric_limits<double>::infinity(),
                                         const Forcing* forcing = nullptr) {
  const auto wall_start = std::chrono::steady_clock::now();
  const bool original = state.formulation == Formulation::Original;
  if (forcing != nullptr && !original) {
    throw StructuralError("source forcing is only supported in the original formulation");
  }
  const Grid2D& g = state.grid();
  const std::size_t n = g.cells();
  const std::size_t index = state.step + 1;

  // Cell densities at the old time level.
  std::optional<CellFields> converted;
  if (!original) converted = from_transformed(state.dcc, state.csc, state.ecm, p);
  const Field& cd = original ? state.dcc : converted->dcc;
  const Field& cs = original ? state.csc : converted->csc;

  const double reaction_rate = reaction_rate_bound(state, p);
  double dt = cfg.cfl_safety * std::min(1.0 / (detail::stability_rate(state.ecm, p, state.formulation, reaction_rate) +
                                                kDivisionGuard),
                                       cfg.dt_max);
  if (!(dt >= kMinTimeStep)) {
    throw StiffnessFault("stability-limited time step " + format_number(dt) + " underflows", index, state.time);
  }
  dt = std::min(dt, max_dt);

  std::vector<Sources> sources;
  if (forcing != nullptr) {
    sources.resize(n);
    (*forcing)(state.time, sources);
  }

  // (ii) ECM. The transport coefficients depend on the updated v, so the
  // step is shortened if the new v demands it.
  Field v_new(g);
  for (int attempt = 0; attempt < 8; ++attempt) {
    for (std::size_t k = 0; k < n; ++k) {
      v_new[k] = integrate_v_pointwise(state.ecm[k], cd[k], cs[k], state.mmp[k], p.mu_v, dt);
      if (forcing != nullptr) v_new[k] += dt * sources[k].ecm;
    }
    const double rate = detail::stability_rate(v_new, p, state.formulation, reaction_rate);
    if (dt * rate <= 1.0) break;
    dt = std::min(dt, cfg.cfl_safety / rate);
    if (cfg.cfl_safety == 1.0) dt *= 0.999;
  }

  // (iii) cells and MMPs. The new fields first hold the transport terms.
  Field d_new(g);
  Field s_new(g);
  Field m_new(g);
  laplacian_neumann(state.mmp, m_new.values());
  if (original) {
    cell_transport(state.dcc, v_new, p.chi_d, d_new.values());
    cell_transport(state.csc, v_new, p.chi_s, s_new.values());
    for (std::size_t k = 0; k < n; ++k) {
      const Reaction r = reaction_rhs(p, cd[k], cs[k], v_new[k], state.mmp[k]);
      const Sources src = forcing != nullptr ? sources[k] : Sources{};
      d_new[k] = cd[k] + dt * (d_new[k] + r.dcc + src.dcc);
      s_new[k] = cs[k] + dt * (s_new[k] + r.csc + src.csc);
      m_new[k] = state.mmp[k] + dt * (m_new[k] + r.mmp + src.mmp);
    }
  } else {
    transformed_diffusion(state.dcc, v_new, p.chi_d, d_new.values());
    transformed_diffusion(state.csc, v_new, p.chi_s, s_new.values());
    for (std::size_t k = 0; k < n; ++k) {
      const double ad = state.dcc[k];
      const double as = state.csc[k];
      const double v = v_new[k];
      const double m = state.mmp[k];
      const double wd = std::exp(p.chi_d * v);
      const double ws_ = std::exp(p.chi_s * v);
      const double rho = 1.0 - ws_ * as - wd * ad - v;
      const double emt = p.emt_at(wd * ad, ws_ * as, v, m);
      d_new[k] = ad + dt * (d_new[k] + p.chi_d * ad * v * m - emt * ad +
                            (p.mu_d - p.chi_d * p.mu_v * v) * ad * rho);
      // mu_EMT c^D e^{-chi_S v} expressed through a^D
      s_new[k] = as + dt * (s_new[k] + p.chi_s * as * v * m + emt * ad * (wd / ws_) +
                            (p.mu_s - p.chi_s * p.mu_v * v) * as * rho);
      m_new[k] = m + dt * (m_new[k] + cd[k] + cs[k] - m);
    }
  }

  // (iv) clamp roundoff-level excursions.
  StepReport rep;
  rep.dt = dt;
  detail::clamp_field(d_new, FieldId::Dcc, false, rep);
  detail::clamp_field(s_new, FieldId::Csc, false, rep);
  detail::clamp_field(v_new, FieldId::Ecm, true, rep);
  detail::clamp_field(m_new, FieldId::Mmp, false, rep);

  State out(state.formulation, std::move(d_new), std::move(s_new), std::move(v_new), std::move(m_new),
            state.time + dt);
  out.step = index;
  if (!out.all_finite()) {
    const char* bad = !out.dcc.all_finite()   ? "cd"
                      : !out.csc.all_finite() ? "cs"
                      : !out.ecm.all_finite() ? "v"
                                              : "m";
    throw IntegrationFault(std::string("non-finite value in field ") + bad, index, state.time);
  }
  rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
  return {std::move(out), rep};
}

/// Output callbacks injected by the caller. Empty callbacks are skipped.
struct RunSinks {
  std::function<void(const State&)> snapshot;
  std::function<void(const MonitorReport&)> monitor;
  std::function<void(const StepReport&)> step;
};

struct RunResult {
  State final_state;
  std::size_t steps = 0;
  std::array<std::size_t, 4> clamps{};
  std::array<double, 4> worst_pre_clamp_min{};
  double min_dt = std::numeric_limits<double>::infinity();
  double max_dt = 0.0;
  std::size_t soft_violations = 0;
  std::size_t hard_violations = 0;
  std::optional<BoundSet> bounds{};
  std::optional<MonitorReport> last_report{};
};

/// Advances `initial` to cfg.t_end in cfg.formulation, landing exactly on
/// t_end. Monitors run when a monitor sink is given or strict mode is on.
inline RunResult run(const State& initial, const ModelParameters& p, const RunConfig& cfg, const RunSinks& sinks = {},
                     const Forcing* forcing = nullptr) {
  cfg.validate();
  State s = to_formulation(initial, cfg.formulation, p);
  RunResult result{.final_state = s};
  result.worst_pre_clamp_min.fill(std::numeric_limits<double>::infinity());

  const bool monitoring = static_cast<bool>(sinks.monitor) || cfg.strict_monitors;
  if (monitoring) result.bounds = compute_bounds(to_original(s, p), p, s.grid());

  auto monitor = [&](const State& st) {
    if (!monitoring) return;
    MonitorReport rep = check(st, *result.bounds, cfg.monitor_tol_rel, p);
    result.soft_violations += rep.count(CheckStatus::SoftViolation);
    result.hard_violations += rep.count(CheckStatus::HardViolation);
    if (sinks.monitor) sinks.monitor(rep);
    result.last_report = rep;
    if (cfg.strict_monitors && rep.has_hard_violation()) {
      std::string failed;
      for (std::size_t c = 0; c < kCheckCount; ++c) {
        if (rep.checks[c].status == CheckStatus::HardViolation) {
          failed += failed.empty() ? "" : ", ";
          failed += kCheckNames[c];
        }
      }
      throw MonitorViolation("hard monitor violation (" + failed + ")", st.time);
    }
  };
  auto snapshot = [&](const State& st) {
    if (sinks.snapshot) sinks.snapshot(st);
  };

  snapshot(s);
  monitor(s);
  const double t_end = cfg.t_end;
  while (s.time < t_end) {
    const double remaining = t_end - s.time;
    auto [next, rep] = step(s, p, cfg, remaining, forcing);
    const bool last = rep.dt >= remaining;
    if (last) next.time = t_end;
    s = std::move(next);

    ++result.steps;
    result.min_dt = std::min(result.min_dt, rep.dt);
    result.max_dt = std::max(result.max_dt, rep.dt);
    for (std::size_t k = 0; k < 4; ++k) {
      result.clamps[k] += rep.clamps[k];
      result.worst_pre_clamp_min[k] = std::min(result.worst_pre_clamp_min[k], rep.pre_clamp_min[k]);
    }
    if (sinks.step) sinks.step(rep);

    if (last) break;
    if (cfg.snapshot_every > 0 && result.steps % cfg.snapshot_every == 0) snapshot(s);
    if (cfg.monitor_every > 0 && result.steps % cfg.monitor_every == 0) monitor(s);
  }
  snapshot(s);
  monitor(s);
  result.final_state = std::move(s);
  return result;
}

}  // namespace hapto
