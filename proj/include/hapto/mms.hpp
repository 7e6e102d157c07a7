#pragma once

#include <array>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <ostream>
#include <string>
#include <vector>

#include "hapto/errors.hpp"
#include "hapto/grid.hpp"
#include "hapto/model.hpp"
#include "hapto/monitors.hpp"
#include "hapto/time_integration.hpp"

// Manufactured solutions: closed-form fields with vanishing normal
// derivatives on the rectangle, plus the source terms that make them exact
// solutions of the forced system.

namespace hapto {

/// offset + (base + amplitude cos(px pi x / lx) cos(py pi y / ly)) e^{-decay t}
struct CosineMode {
  double offset = 0.0;
  double base = 0.0;
  double amplitude = 0.0;
  int px = 1;
  int py = 1;
  double decay = 0.0;

  struct Jet {
    double value, dt, dx, dy, laplacian;
  };

  Jet eval(double x, double y, double t, double lx, double ly) const {
    const double kx = px * std::numbers::pi / lx;
    const double ky = py * std::numbers::pi / ly;
    const double cx = std::cos(kx * x);
    const double cy = std::cos(ky * y);
    const double decay_t = std::exp(-decay * t);
    const double shape = base + amplitude * cx * cy;
    return Jet{
        offset + shape * decay_t,
        -decay * shape * decay_t,
        -amplitude * kx * std::sin(kx * x) * cy * decay_t,
        -amplitude * ky * cx * std::sin(ky * y) * decay_t,
        -amplitude * (kx * kx + ky * ky) * cx * cy * decay_t,
    };
  }

  double value(double x, double y, double t, double lx, double ly) const { return eval(x, y, t, lx, ly).value; }
};

struct ManufacturedCase {
  std::string name;
  double lx = 1.0;
  double ly = 1.0;
  CosineMode cd, cs, v, m;
  ModelParameters params;
  double horizon = 0.1;
  /// Fitted-order prediction of the scheme for this case.
  double predicted_order = 2.0;

  State exact_state(const Grid2D& g, double t) const {
    auto sample = [&](const CosineMode& mode) {
      return Field::sample(g, [&](double x, double y) { return mode.value(x, y, t, lx, ly); });
    };
    State s(Formulation::Original, sample(cd), sample(cs), sample(v), sample(m), t);
    return s;
  }
};

/// Pure-ECM equilibrium: all sources vanish.
inline ManufacturedCase equilibrium_case() {
  ManufacturedCase c;
  c.name = "equilibrium";
  c.v.offset = 1.0;
  c.predicted_order = std::numeric_limits<double>::quiet_NaN();
  return c;
}

/// No haptotaxis, no proliferation, no EMT: the cell equations reduce to
/// forced heat equations.
inline ManufacturedCase diffusion_case() {
  ManufacturedCase c;
  c.name = "diffusion";
  c.params.chi_d = 0.0;
  c.params.chi_s = 0.0;
  c.params.mu_d = 0.0;
  c.params.mu_s = 0.0;
  c.params.mu_v = 0.0;
  c.params.mu_max = 0.0;
  c.params.emt = EmtRateSpec::constant(0.0, 0.0);
  c.cd = {0.2, 0.4, 0.3, 1, 1, 1.0};
  c.cs = {0.1, 0.1, 0.05, 2, 1, 0.5};
  c.v = {0.5, 0.0, 0.2, 1, 2, 0.5};
  c.m = {0.1, 0.1, 0.1, 1, 1, 1.0};
  c.predicted_order = 2.0;
  return c;
}

/// Every term active, with a steep ECM gradient so that the upwinded
/// haptotactic flux dominates the truncation error.
inline ManufacturedCase full_case() {
  ManufacturedCase c;
  c.name = "full";
  c.params.chi_d = 1.0;
  c.params.chi_s = 2.0;
  c.params.mu_d = 1.0;
  c.params.mu_s = 1.0;
  c.params.mu_v = 0.5;
  c.params.mu_max = 0.2;
  c.params.emt = EmtRateSpec::saturating(0.5);
  c.cd = {0.3, 0.0, 0.2, 1, 1, 0.0};
  c.cs = {0.1, 0.05, 0.05, 1, 1, 1.0};
  c.v = {0.5, 0.0, 0.4, 1, 1, 0.5};
  c.m = {0.2, 0.1, 0.1, 1, 2, 1.0};
  c.predicted_order = 1.0;
  return c;
}

inline ManufacturedCase manufactured_case(const std::string& name) {
  if (name == "equilibrium") return equilibrium_case();
  if (name == "diffusion") return diffusion_case();
  if (name == "full") return full_case();
  throw ModelError("unknown manufactured case '" + name + "' (expected equilibrium, diffusion or full)");
}

namespace detail {

inline Sources sources_from_jets(const ModelParameters& p, const CosineMode::Jet& cd, const CosineMode::Jet& cs,
                                 const CosineMode::Jet& v, const CosineMode::Jet& m) {
  const double rho = rho_dev_c(cd.value, cs.value, v.value);
  const double emt = p.emt_at(cd.value, cs.value, v.value, m.value);
  // div(c grad v) = grad c . grad v + c lap v
  const double div_d = cd.dx * v.dx + cd.dy * v.dy + cd.value * v.laplacian;
  const double div_s = cs.dx * v.dx + cs.dy * v.dy + cs.value * v.laplacian;
  return Sources{
      cd.dt - cd.laplacian + p.chi_d * div_d + emt * cd.value - p.mu_d * cd.value * rho,
      cs.dt - cs.laplacian + p.chi_s * div_s - emt * cd.value - p.mu_s * cs.value * rho,
      v.dt + m.value * v.value - p.mu_v * v.value * rho,
      m.dt - m.laplacian - cd.value - cs.value + m.value,
  };
}

/// Per-cell spatial factors of one mode; only the decay factor depends on t.
class CachedMode {
 public:
  CachedMode(const CosineMode& mode, const Grid2D& g, double lx, double ly) : mode_(mode) {
    const double kx = mode.px * std::numbers::pi / lx;
    const double ky = mode.py * std::numbers::pi / ly;
    for (int j = 0; j < g.ny(); ++j) {
      for (int i = 0; i < g.nx(); ++i) {
        const double x = g.x_center(i);
        const double y = g.y_center(j);
        const double cx = std::cos(kx * x);
        const double cy = std::cos(ky * y);
        shape_.push_back(mode.base + mode.amplitude * cx * cy);
        dx_.push_back(-mode.amplitude * kx * std::sin(kx * x) * cy);
        dy_.push_back(-mode.amplitude * ky * cx * std::sin(ky * y));
        lap_.push_back(-mode.amplitude * (kx * kx + ky * ky) * cx * cy);
      }
    }
  }

  CosineMode::Jet at(std::size_t k, double decay_t) const {
    return {mode_.offset + shape_[k] * decay_t, -mode_.decay * shape_[k] * decay_t, dx_[k] * decay_t,
            dy_[k] * decay_t, lap_[k] * decay_t};
  }
  double decay_factor(double t) const { return std::exp(-mode_.decay * t); }

 private:
  CosineMode mode_;
  std::vector<double> shape_, dx_, dy_, lap_;
};

}  // namespace detail

/// Residuals of the exact fields under the unforced equations.
inline Sources manufactured_sources(const ManufacturedCase& mc, const ModelParameters& p, double x, double y,
                                    double t) {
  return detail::sources_from_jets(p, mc.cd.eval(x, y, t, mc.lx, mc.ly), mc.cs.eval(x, y, t, mc.lx, mc.ly),
                                   mc.v.eval(x, y, t, mc.lx, mc.ly), mc.m.eval(x, y, t, mc.lx, mc.ly));
}

/// Forcing for the stepper on grid g; equal to manufactured_sources at every
/// cell centre, with the spatial factors precomputed.
inline Forcing manufactured_forcing(const ManufacturedCase& mc, const ModelParameters& p, const Grid2D& g) {
  std::array<detail::CachedMode, 4> modes = {detail::CachedMode(mc.cd, g, mc.lx, mc.ly),
                                             detail::CachedMode(mc.cs, g, mc.lx, mc.ly),
                                             detail::CachedMode(mc.v, g, mc.lx, mc.ly),
                                             detail::CachedMode(mc.m, g, mc.lx, mc.ly)};
  return [modes = std::move(modes), p](double t, std::span<Sources> out) {
    std::array<double, 4> decay{};
    for (std::size_t f = 0; f < 4; ++f) decay[f] = modes[f].decay_factor(t);
    for (std::size_t k = 0; k < out.size(); ++k) {
      out[k] = detail::sources_from_jets(p, modes[0].at(k, decay[0]), modes[1].at(k, decay[1]),
                                         modes[2].at(k, decay[2]), modes[3].at(k, decay[3]));
    }
  };
}

struct ConvergenceRow {
  int n = 0;  ///< cells per axis
  double h = 0.0;
  double dt = 0.0;  ///< largest step taken
  std::array<double, 4> err_linf{};
  std::array<double, 4> err_l1{};

  double err_linf_max() const {
    double e = 0.0;
    for (double x : err_linf) e = std::max(e, x);
    return e;
  }
};

/// log2(coarse / fine); NaN when both errors vanish.
inline double fitted_order(double coarse, double fine) {
  if (coarse == 0.0 && fine == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return std::log2(coarse / fine);
}

struct ConvergenceTable {
  std::string case_name;
  std::vector<ConvergenceRow> rows;

  /// Order of field f between rows k-1 and k (k >= 1), from the L-infinity error.
  double order(std::size_t k, std::size_t f) const {
    return fitted_order(rows[k - 1].err_linf[f], rows[k].err_linf[f]);
  }
  /// Order of the largest per-field L-infinity error between rows k-1 and k.
  double combined_order(std::size_t k) const {
    return fitted_order(rows[k - 1].err_linf_max(), rows[k].err_linf_max());
  }
  double min_combined_order() const {
    double o = std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k < rows.size(); ++k) o = std::min(o, combined_order(k));
    return o;
  }
};

class MmsFault : public Error {
 public:
  MmsFault(const std::string& what, int level) : Error("refinement n=" + std::to_string(level) + ": " + what), level_(level) {}

  int level() const noexcept { return level_; }

 private:
  int level_;
};

/// Runs the forced system to the case horizon on each n x n grid and measures
/// errors against the closed form. Sizes must double.
inline ConvergenceTable run_convergence(const ManufacturedCase& mc, const std::vector<int>& refinements,
                                        const ModelParameters& p, RunConfig cfg = {}) {
  if (refinements.size() < 3) throw ModelError("convergence study needs at least 3 refinements");
  for (std::size_t k = 1; k < refinements.size(); ++k) {
    if (refinements[k] != 2 * refinements[k - 1]) throw ModelError("refinements must double in resolution");
  }
  cfg.t_end = mc.horizon;
  cfg.formulation = Formulation::Original;
  cfg.strict_monitors = false;

  ConvergenceTable table;
  table.case_name = mc.name;
  for (int n : refinements) {
    try {
      const Grid2D g(n, n, mc.lx, mc.ly);
      const Forcing forcing = manufactured_forcing(mc, p, g);
      const RunResult r = run(mc.exact_state(g, 0.0), p, cfg, {}, &forcing);
      const State exact = mc.exact_state(g, mc.horizon);
      ConvergenceRow row;
      row.n = n;
      row.h = g.hx();
      row.dt = r.max_dt;
      const std::array<const Field*, 4> num = {&r.final_state.dcc, &r.final_state.csc, &r.final_state.ecm,
                                               &r.final_state.mmp};
      const std::array<const Field*, 4> ref = {&exact.dcc, &exact.csc, &exact.ecm, &exact.mmp};
      for (std::size_t f = 0; f < 4; ++f) {
        double linf = 0.0;
        double sum = 0.0;
        for (std::size_t k = 0; k < g.cells(); ++k) {
          const double e = std::abs((*num[f])[k] - (*ref[f])[k]);
          linf = std::max(linf, e);
          sum += e;
        }
        row.err_linf[f] = linf;
        row.err_l1[f] = g.cell_area() * sum;
      }
      table.rows.push_back(row);
    } catch (const MmsFault&) {
      throw;
    } catch (const Error& e) {
      throw MmsFault(e.what(), n);
    }
  }
  return table;
}

/// CSV with one row per refinement; order columns are empty on the first row.
inline void write_convergence_csv(const ConvergenceTable& t, std::ostream& os) {
  os << "h,dt";
  for (const char* f : kFieldNames) os << ",err_linf_" << f << ",err_l1_" << f;
  for (const char* f : kFieldNames) os << ",order_" << f;
  os << '\n';
  os << std::setprecision(17) << std::scientific;
  for (std::size_t k = 0; k < t.rows.size(); ++k) {
    const auto& r = t.rows[k];
    os << r.h << ',' << r.dt;
    for (std::size_t f = 0; f < 4; ++f) os << ',' << r.err_linf[f] << ',' << r.err_l1[f];
    for (std::size_t f = 0; f < 4; ++f) {
      os << ',';
      if (k > 0) os << t.order(k, f);
    }
    os << '\n';
  }
}

}  // namespace hapto
