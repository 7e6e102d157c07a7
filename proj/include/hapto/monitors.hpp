#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <string>

#include "hapto/grid.hpp"
#include "hapto/model.hpp"
#include "hapto/spatial_ops.hpp"
#include "hapto/transform.hpp"

namespace hapto {

/// hx * hy * sum |f|, summed row-major.
inline double l1_norm(const Field& f) {
  double sum = 0.0;
  for (double x : f.values()) sum += std::abs(x);
  return f.grid().cell_area() * sum;
}

/// Upper bound on ||c^S||_1 driven by the EMT influx: the positive root of
/// mu_M * D - mu_S * L (L / |Omega| - 1) with D = max(||c^D_0||_1, |Omega|).
inline double cs_max_bound(double omega_area, double mu_max, double mu_s, double cd_l1_bound) {
  if (!(mu_s > 0.0)) {
    throw ModelError("L1 bound for stem-like cells requires mu_s > 0");
  }
  return 0.5 * omega_area * (1.0 + std::sqrt(1.0 + 4.0 * mu_max / (mu_s * omega_area) * cd_l1_bound));
}

/// Time-uniform L1 bounds determined by the initial data and parameters.
struct BoundSet {
  double cd_l1_bound;
  double cs_l1_bound;
  double m_l1_bound;
  double cs_max;
  double omega_area;
};

inline BoundSet compute_bounds(const State& initial, const ModelParameters& p, const Grid2D& grid) {
  if (initial.formulation != Formulation::Original) {
    throw StructuralError("compute_bounds expects the original formulation");
  }
  if (!(initial.grid() == grid)) {
    throw StructuralError("compute_bounds: state and grid disagree");
  }
  BoundSet b{};
  b.omega_area = grid.area();
  b.cd_l1_bound = std::max(l1_norm(initial.dcc), b.omega_area);
  b.cs_max = cs_max_bound(b.omega_area, p.mu_max, p.mu_s, b.cd_l1_bound);
  b.cs_l1_bound = std::max(l1_norm(initial.csc), b.cs_max);
  b.m_l1_bound = std::max(l1_norm(initial.mmp), b.cd_l1_bound + b.cs_l1_bound);
  return b;
}

enum class CheckStatus { Pass, SoftViolation, HardViolation };

inline const char* to_string(CheckStatus s) {
  switch (s) {
    case CheckStatus::Pass:
      return "pass";
    case CheckStatus::SoftViolation:
      return "soft";
    case CheckStatus::HardViolation:
      return "hard";
  }
  return "?";
}

enum class Check : std::size_t { L1Dcc, L1Csc, L1Mmp, MinDcc, MinCsc, MinMmp, EcmRange };
inline constexpr std::size_t kCheckCount = 7;
inline constexpr std::array<const char*, kCheckCount> kCheckNames = {
    "l1_cd", "l1_cs", "l1_m", "min_cd", "min_cs", "min_m", "v_range"};

struct CheckResult {
  CheckStatus status = CheckStatus::Pass;
  /// Signed distance to the bound itself (not to the tolerance band);
  /// negative means the bound is exceeded.
  double margin = 0.0;
};

struct MonitorReport {
  double time = 0.0;
  std::array<CheckResult, kCheckCount> checks{};

  double l1_cd = 0.0, l1_cs = 0.0, l1_m = 0.0;
  double min_cd = 0.0, min_cs = 0.0, min_m = 0.0;
  double min_v = 0.0, max_v = 0.0;
  double sup_cd = 0.0, sup_cs = 0.0, sup_m = 0.0;
  /// ||grad v||_{L^4}; recorded only, no bound attached.
  double grad_v_l4 = 0.0;

  const CheckResult& operator[](Check c) const { return checks[static_cast<std::size_t>(c)]; }

  std::size_t count(CheckStatus s) const {
    std::size_t n = 0;
    for (const auto& c : checks) n += c.status == s ? 1 : 0;
    return n;
  }
  bool has_hard_violation() const { return count(CheckStatus::HardViolation) > 0; }
};

namespace detail {

/// Pass within `tolerance` of the bound, soft within twice that, hard beyond.
inline CheckResult classify(double margin, double tolerance) {
  CheckResult r;
  r.margin = margin;
  if (margin >= -tolerance) {
    r.status = CheckStatus::Pass;
  } else if (margin >= -2.0 * tolerance) {
    r.status = CheckStatus::SoftViolation;
  } else {
    r.status = CheckStatus::HardViolation;
  }
  return r;
}

struct FieldSummary {
  double abs_sum = 0.0;  // row-major, same order as l1_norm
  double min = std::numeric_limits<double>::infinity();
  double max = -std::numeric_limits<double>::infinity();
  double sup = 0.0;
};

inline FieldSummary summarize(const Field& f) {
  FieldSummary s;
  for (double x : f.values()) {
    s.abs_sum += std::abs(x);
    s.min = std::min(s.min, x);
    s.max = std::max(s.max, x);
  }
  s.sup = std::max(std::abs(s.min), std::abs(s.max));
  return s;
}

/// (hx hy sum |grad v|^4)^(1/4) with the gradient_central stencil.
inline double gradient_l4(const Field& v) {
  const Grid2D& g = v.grid();
  const int nx = g.nx();
  const int ny = g.ny();
  auto slope = [](double lo, double hi, double span) { return (hi - lo) / span; };
  double sum = 0.0;
  for (int j = 0; j < ny; ++j) {
    const int jl = j == 0 ? 0 : j - 1;
    const int jh = j == ny - 1 ? j : j + 1;
    const double sy = (jh - jl) * g.hy();
    for (int i = 0; i < nx; ++i) {
      const int il = i == 0 ? 0 : i - 1;
      const int ih = i == nx - 1 ? i : i + 1;
      const double gx = slope(v(il, j), v(ih, j), (ih - il) * g.hx());
      const double gy = slope(v(i, jl), v(i, jh), sy);
      const double g2 = gx * gx + gy * gy;
      sum += g2 * g2;
    }
  }
  return std::pow(g.cell_area() * sum, 0.25);
}

}  // namespace detail

/// Evaluates the L1 bounds and the sign/range invariants on a state in the
/// original formulation.
inline MonitorReport check(const State& state, const BoundSet& bounds, double tol_rel) {
  if (state.formulation != Formulation::Original) {
    throw StructuralError("monitors evaluate the original formulation; convert first");
  }
  MonitorReport r;
  r.time = state.time;
  const double area = state.grid().cell_area();
  const auto cd = detail::summarize(state.dcc);
  const auto cs = detail::summarize(state.csc);
  const auto m = detail::summarize(state.mmp);
  const auto v = detail::summarize(state.ecm);
  r.l1_cd = area * cd.abs_sum;
  r.l1_cs = area * cs.abs_sum;
  r.l1_m = area * m.abs_sum;
  r.min_cd = cd.min;
  r.min_cs = cs.min;
  r.min_m = m.min;
  r.min_v = v.min;
  r.max_v = v.max;
  r.sup_cd = cd.sup;
  r.sup_cs = cs.sup;
  r.sup_m = m.sup;
  r.grad_v_l4 = detail::gradient_l4(state.ecm);

  auto set = [&](Check c, CheckResult res) { r.checks[static_cast<std::size_t>(c)] = res; };
  set(Check::L1Dcc, detail::classify(bounds.cd_l1_bound - r.l1_cd, tol_rel * bounds.cd_l1_bound));
  set(Check::L1Csc, detail::classify(bounds.cs_l1_bound - r.l1_cs, tol_rel * bounds.cs_l1_bound));
  set(Check::L1Mmp, detail::classify(bounds.m_l1_bound - r.l1_m, tol_rel * bounds.m_l1_bound));
  set(Check::MinDcc, detail::classify(r.min_cd, kPositivitySlack));
  set(Check::MinCsc, detail::classify(r.min_cs, kPositivitySlack));
  set(Check::MinMmp, detail::classify(r.min_m, kPositivitySlack));
  set(Check::EcmRange, detail::classify(std::min(r.min_v, 1.0 - r.max_v), kPositivitySlack));
  return r;
}

/// Converts a transformed state before checking.
inline MonitorReport check(const State& state, const BoundSet& bounds, double tol_rel, const ModelParameters& p) {
  if (state.formulation == Formulation::Original) return check(state, bounds, tol_rel);
  return check(to_original(state, p), bounds, tol_rel);
}

}  // namespace hapto
