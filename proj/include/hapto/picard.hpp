#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "hapto/errors.hpp"
#include "hapto/grid.hpp"
#include "hapto/model.hpp"
#include "hapto/spatial_ops.hpp"
#include "hapto/time_integration.hpp"
#include "hapto/transform.hpp"

// Fixed-point window solver for the transformed system. Each application of
// the map solves, in order, the linear MMP problem, the linear ECM ODE and the
// two linear parabolic problems for a^D and a^S with the previous iterate
// frozen in the coefficients. Iterating to a fixed point reproduces the
// nonlinear solution on the window.

namespace hapto {

struct PicardConfig {
  double window = 0.02;
  double tol = 1e-8;  ///< sup-norm tolerance on successive (a^D, a^S, v) trajectories
  std::size_t max_iter = 50;
  double inner_dt_factor = 1.0;  ///< inner step = CFL step / factor
  double cfl_safety = 0.9;
  double dt_max = 1e-2;
  /// Largest admissible relative normal derivative of the initial data at the wall.
  double compat_tol = 0.05;

  void validate() const {
    if (!(window > 0.0)) throw ModelError("picard window must be > 0");
    if (!(tol > 0.0)) throw ModelError("picard tol must be > 0");
    if (max_iter < 1) throw ModelError("picard max_iter must be >= 1");
    if (!(inner_dt_factor >= 1.0)) throw ModelError("picard inner_dt_factor must be >= 1");
    if (!(cfl_safety > 0.0 && cfl_safety <= 1.0)) throw ModelError("picard cfl_safety must lie in (0, 1]");
    if (!(dt_max > 0.0)) throw ModelError("picard dt_max must be > 0");
    if (!(compat_tol > 0.0)) throw ModelError("picard compat_tol must be > 0");
  }

  friend bool operator==(const PicardConfig&, const PicardConfig&) = default;
};

struct PicardTrace {
  double window_start = 0.0;
  double window_length = 0.0;
  double inner_dt = 0.0;
  std::size_t inner_steps = 0;
  std::size_t iterations = 0;
  std::vector<double> differences;         ///< sup-norm distance of successive iterates
  std::vector<double> contraction_ratios;  ///< differences[k] / differences[k-1]
  double min_value = std::numeric_limits<double>::infinity();  ///< over a^D, a^S, m, v of all iterates
  double max_v = -std::numeric_limits<double>::infinity();

  double max_contraction_ratio() const {
    double r = 0.0;
    for (double x : contraction_ratios) r = std::max(r, x);
    return r;
  }
};

class ConvergenceFault : public Error {
 public:
  ConvergenceFault(const std::string& what, PicardTrace trace) : Error(what), trace_(std::move(trace)) {}

  const PicardTrace& trace() const noexcept { return trace_; }
  double window_start() const noexcept { return trace_.window_start; }

 private:
  PicardTrace trace_;
};

/// Successive differences grew three times in a row; a shorter window is needed.
class NonContractionFault : public ConvergenceFault {
 public:
  using ConvergenceFault::ConvergenceFault;
};

/// Transformed states at uniformly spaced inner time levels of one window.
struct Trajectory {
  double dt = 0.0;
  std::vector<State> levels;

  const State& initial() const { return levels.front(); }
  const State& end() const { return levels.back(); }
  std::size_t steps() const { return levels.size() - 1; }
};

inline Trajectory constant_extension(const State& initial, double dt, std::size_t steps) {
  if (initial.formulation != Formulation::Transformed) {
    throw StructuralError("picard trajectories hold transformed states");
  }
  Trajectory t{dt, {}};
  t.levels.reserve(steps + 1);
  for (std::size_t n = 0; n <= steps; ++n) {
    t.levels.push_back(initial);
    t.levels.back().time = initial.time + static_cast<double>(n) * dt;
  }
  return t;
}

/// Sup-norm distance over all levels of the (a^D, a^S, v) components.
inline double trajectory_distance(const Trajectory& a, const Trajectory& b) {
  if (a.levels.size() != b.levels.size()) throw StructuralError("trajectories differ in length");
  double d = 0.0;
  for (std::size_t n = 0; n < a.levels.size(); ++n) {
    d = std::max({d, sup_distance(a.levels[n].dcc, b.levels[n].dcc), sup_distance(a.levels[n].csc, b.levels[n].csc),
                  sup_distance(a.levels[n].ecm, b.levels[n].ecm)});
  }
  return d;
}

/// Largest |normal derivative| of u at the wall, estimated by a quadratic
/// through the first three cell centres, relative to ||u||_inf / min(lx, ly).
inline double compatibility_defect(const Field& u) {
  const Grid2D& g = u.grid();
  const double scale = u.sup_norm();
  if (scale == 0.0) return 0.0;
  auto wall = [](double u0, double u1, double u2, double h) { return std::abs(-2.0 * u0 + 3.0 * u1 - u2) / h; };
  const int nx = g.nx();
  const int ny = g.ny();
  double worst = 0.0;
  for (int j = 0; j < ny; ++j) {
    worst = std::max(worst, wall(u(0, j), u(1, j), u(2, j), g.hx()));
    worst = std::max(worst, wall(u(nx - 1, j), u(nx - 2, j), u(nx - 3, j), g.hx()));
  }
  for (int i = 0; i < nx; ++i) {
    worst = std::max(worst, wall(u(i, 0), u(i, 1), u(i, 2), g.hy()));
    worst = std::max(worst, wall(u(i, ny - 1), u(i, ny - 2), u(i, ny - 3), g.hy()));
  }
  return worst * std::min(g.lx(), g.ly()) / scale;
}

/// Throws ModelError when any field of s has a compatibility defect above tol.
inline void require_compatible(const State& s, double tol) {
  for (const Field* f : {&s.dcc, &s.csc, &s.ecm, &s.mmp}) {
    const double defect = compatibility_defect(*f);
    if (defect > tol) {
      throw ModelError("initial data violates the zero normal derivative compatibility condition (relative defect " +
                       format_number(defect) + ")");
    }
  }
}

namespace detail {

inline void clamp_slack(Field& f, bool upper) {
  for (double& x : f.values()) {
    if (x < 0.0 && x > -kPositivitySlack) x = 0.0;
    if (upper && x > 1.0 && x < 1.0 + kPositivitySlack) x = 1.0;
  }
}

}  // namespace detail

/// One application of the fixed-point map to `iterate`. Level 0 of the
/// iterate supplies the initial data.
inline Trajectory apply_F(const Trajectory& iterate, const ModelParameters& p, const PicardConfig& /*cfg*/) {
  const State& init = iterate.initial();
  const Grid2D& g = init.grid();
  const std::size_t n_cells = g.cells();
  const double dt = iterate.dt;
  const std::size_t index = init.step;

  Trajectory out{dt, {}};
  out.levels.reserve(iterate.levels.size());
  out.levels.push_back(init);

  Field lap_m(g);
  Field diff_d(g);
  Field diff_s(g);
  for (std::size_t n = 0; n < iterate.steps(); ++n) {
    const State& w = iterate.levels[n];
    const State& cur = out.levels.back();
    Field m(g);
    Field v(g);
    Field ad(g);
    Field as(g);

    laplacian_neumann(cur.mmp, lap_m.values());
    transformed_diffusion(cur.dcc, cur.ecm, p.chi_d, diff_d.values());
    transformed_diffusion(cur.csc, cur.ecm, p.chi_s, diff_s.values());
    for (std::size_t k = 0; k < n_cells; ++k) {
      const double wd = std::exp(p.chi_d * w.ecm[k]);
      const double ws = std::exp(p.chi_s * w.ecm[k]);
      const double cd_w = w.dcc[k] * wd;
      const double cs_w = w.csc[k] * ws;
      const double rho = 1.0 - cs_w - cd_w - w.ecm[k];
      const double m_cur = cur.mmp[k];
      const double emt = p.emt_at(cd_w, cs_w, w.ecm[k], m_cur);

      // linear MMP problem driven by the iterate's cell densities
      m[k] = m_cur + dt * (lap_m[k] - m_cur + cd_w + cs_w);
      // linear ECM ODE with frozen m and rho: exact exponential factor
      v[k] = cur.ecm[k] * std::exp(dt * (-m_cur + p.mu_v * rho));
      // linear problems for a^D then a^S
      const double growth_d = (p.mu_d - p.chi_d * p.mu_v * w.ecm[k]) * rho;
      const double growth_s = (p.mu_s - p.chi_s * p.mu_v * w.ecm[k]) * rho;
      ad[k] = cur.dcc[k] + dt * (diff_d[k] - (emt - growth_d) * cur.dcc[k] + p.chi_d * w.dcc[k] * w.ecm[k] * m_cur);
      as[k] = cur.csc[k] + dt * (diff_s[k] + growth_s * cur.csc[k] + p.chi_s * w.csc[k] * w.ecm[k] * m_cur +
                                 emt * cur.dcc[k] * (wd / ws));
    }
    detail::clamp_slack(m, false);
    detail::clamp_slack(v, true);
    detail::clamp_slack(ad, false);
    detail::clamp_slack(as, false);
    State next(Formulation::Transformed, std::move(ad), std::move(as), std::move(v), std::move(m),
               iterate.levels[n + 1].time);
    next.step = index;
    if (!next.all_finite()) {
      throw IntegrationFault("non-finite value in fixed-point map", index + n + 1, cur.time);
    }
    out.levels.push_back(std::move(next));
  }
  return out;
}

struct WindowResult {
  State end;
  PicardTrace trace;
  Trajectory trajectory;
};

/// Iterates the map from the constant-in-time extension of `initial` until
/// successive trajectories differ by less than cfg.tol.
inline WindowResult solve_window(const State& initial_any, const ModelParameters& p, const PicardConfig& cfg) {
  cfg.validate();
  const State initial = to_transformed(initial_any, p);
  require_compatible(initial, cfg.compat_tol);

  RunConfig rc;
  rc.cfl_safety = cfg.cfl_safety;
  rc.dt_max = cfg.dt_max;
  const double base_dt = cfl_dt(initial, p, rc) / cfg.inner_dt_factor;
  if (!(base_dt >= kMinTimeStep)) {
    throw StiffnessFault("inner picard step underflows", initial.step, initial.time);
  }
  const auto steps = static_cast<std::size_t>(std::max(1.0, std::ceil(cfg.window / base_dt - 1e-9)));
  const double dt = cfg.window / static_cast<double>(steps);

  PicardTrace trace;
  trace.window_start = initial.time;
  trace.window_length = cfg.window;
  trace.inner_dt = dt;
  trace.inner_steps = steps;

  Trajectory w = constant_extension(initial, dt, steps);
  std::size_t growth_streak = 0;
  for (std::size_t it = 1; it <= cfg.max_iter; ++it) {
    Trajectory next = apply_F(w, p, cfg);
    const double diff = trajectory_distance(next, w);
    if (!trace.differences.empty()) {
      const double prev = trace.differences.back();
      trace.contraction_ratios.push_back(prev > 0.0 ? diff / prev : 0.0);
      growth_streak = diff > prev ? growth_streak + 1 : 0;
    }
    trace.differences.push_back(diff);
    trace.iterations = it;
    for (const State& s : next.levels) {
      trace.min_value = std::min({trace.min_value, s.dcc.min(), s.csc.min(), s.mmp.min(), s.ecm.min()});
      trace.max_v = std::max(trace.max_v, s.ecm.max());
    }
    w = std::move(next);
    if (diff < cfg.tol) {
      State end = w.end();
      end.time = initial.time + cfg.window;
      end.step = initial.step + steps;
      return {std::move(end), std::move(trace), std::move(w)};
    }
    if (growth_streak >= 3) {
      throw NonContractionFault("fixed-point iterates diverge; use a shorter window", std::move(trace));
    }
  }
  throw ConvergenceFault("fixed-point iteration did not reach tol within max_iter", std::move(trace));
}

struct PicardResult {
  State final_state;
  std::vector<PicardTrace> traces;
  std::size_t window_halvings = 0;
};

/// Chains windows from initial.time to t_end, shortening the last one to land
/// exactly. A non-contracting window is retried at half length.
inline PicardResult advance_picard(const State& initial, const ModelParameters& p, const PicardConfig& cfg,
                                   double t_end, const std::function<void(const State&)>& on_window = {}) {
  cfg.validate();
  State s = to_transformed(initial, p);
  PicardResult result{s, {}, 0};
  double window = cfg.window;
  const double min_window = cfg.window / 1024.0;
  while (s.time < t_end) {
    const double remaining = t_end - s.time;
    const bool last = remaining <= window * (1.0 + 1e-12);
    PicardConfig wc = cfg;
    wc.window = last ? remaining : window;
    try {
      WindowResult wr = solve_window(s, p, wc);
      s = std::move(wr.end);
      if (last) s.time = t_end;
      result.traces.push_back(std::move(wr.trace));
    } catch (const NonContractionFault& f) {
      window *= 0.5;
      ++result.window_halvings;
      if (window < min_window) throw;
      continue;
    }
    if (on_window) on_window(s);
    if (last) break;
  }
  result.final_state = std::move(s);
  return result;
}

}  // namespace hapto
