#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <sstream>
#include <string>
#include <vector>

#include "hapto/errors.hpp"
#include "hapto/grid.hpp"

namespace hapto {

/// Slack on sign and range invariants absorbing stencil roundoff.
inline constexpr double kPositivitySlack = 1e-12;

enum class EmtKind { Constant, Saturating };

/// EMT rate mu_EMT(c^D, c^S, v, m). Both built-ins are bounded by mu_max
/// and globally Lipschitz.
class EmtRateSpec {
 public:
  /// Constant(0).
  EmtRateSpec() = default;

  static EmtRateSpec constant(double value, double mu_max) {
    if (!(value >= 0.0) || !(value <= mu_max)) {
      std::ostringstream os;
      os << "constant EMT rate " << value << " outside [0, mu_max=" << mu_max << "]";
      throw ModelError(os.str());
    }
    return EmtRateSpec(EmtKind::Constant, value);
  }

  /// mu_max * cd+ / (scale + cd+)
  static EmtRateSpec saturating(double scale) {
    if (!(scale > 0.0) || !std::isfinite(scale)) {
      throw ModelError("saturating EMT scale must be positive and finite");
    }
    return EmtRateSpec(EmtKind::Saturating, scale);
  }

  EmtKind kind() const noexcept { return kind_; }
  /// The constant value or the saturation scale, depending on kind().
  double parameter() const noexcept { return parameter_; }

  friend bool operator==(const EmtRateSpec&, const EmtRateSpec&) = default;

 private:
  EmtRateSpec(EmtKind kind, double parameter) : kind_(kind), parameter_(parameter) {}

  EmtKind kind_ = EmtKind::Constant;
  double parameter_ = 0.0;
};

inline double emt_rate(const EmtRateSpec& spec, double cd, double /*cs*/, double /*v*/, double /*m*/,
                       double mu_max) {
  switch (spec.kind()) {
    case EmtKind::Constant:
      return std::clamp(spec.parameter(), 0.0, mu_max);
    case EmtKind::Saturating: {
      const double cd_pos = std::max(cd, 0.0);
      return mu_max * cd_pos / (spec.parameter() + cd_pos);
    }
  }
  return 0.0;
}

/// Scaled model coefficients. Defaults are the shipped reference case.
struct ModelParameters {
  double chi_d = 0.5;   ///< haptotactic sensitivity of differentiated cells
  double chi_s = 1.0;   ///< haptotactic sensitivity of stem-like cells
  double mu_d = 0.5;    ///< DCC proliferation rate
  double mu_s = 0.5;    ///< CSC proliferation rate
  double mu_v = 0.5;    ///< ECM remodelling rate
  double mu_max = 0.1;  ///< upper bound of the EMT rate
  EmtRateSpec emt = EmtRateSpec::saturating(0.5);

  double emt_at(double cd, double cs, double v, double m) const { return emt_rate(emt, cd, cs, v, m, mu_max); }

  friend bool operator==(const ModelParameters&, const ModelParameters&) = default;
};

struct ParameterViolation {
  std::string constraint;  ///< e.g. "mu_d >= chi_d*mu_v"
  double lhs;
  double rhs;
  std::string message;
  bool growth_condition = false;  ///< true for mu >= chi*mu_v, false for sign constraints
};

/// Checks sign constraints and the growth-dominates-remodelling condition
/// mu_d >= chi_d * mu_v, mu_s >= chi_s * mu_v. An empty result means accepted.
inline std::vector<ParameterViolation> validate_params(const ModelParameters& p) {
  std::vector<ParameterViolation> out;
  auto format = [](double x) {
    std::ostringstream os;
    os << x;
    return os.str();
  };
  auto sign = [&](const char* name, double value) {
    if (!(value >= 0.0)) {
      out.push_back({std::string(name) + " >= 0", value, 0.0, std::string(name) + " ≥ 0 fails: " + format(value) + " < 0",
                     false});
    }
  };
  sign("chi_d", p.chi_d);
  sign("chi_s", p.chi_s);
  sign("mu_d", p.mu_d);
  sign("mu_s", p.mu_s);
  sign("mu_v", p.mu_v);
  sign("mu_max", p.mu_max);

  auto growth = [&](const char* mu_name, double mu, const char* chi_name, double chi) {
    const double rhs = chi * p.mu_v;
    if (!(mu >= rhs)) {
      out.push_back({std::string(mu_name) + " >= " + chi_name + "*mu_v", mu, rhs,
                     std::string(mu_name) + " ≥ " + chi_name + "·mu_v fails: " + format(mu) + " < " +
                         format(rhs),
                     true});
    }
  };
  growth("mu_d", p.mu_d, "chi_d", p.chi_d);
  growth("mu_s", p.mu_s, "chi_s", p.chi_s);
  return out;
}

/// Deviation of the total density from its equilibrium value 1.
inline double rho_dev_c(double cd, double cs, double v) { return 1.0 - cs - cd - v; }

struct Reaction {
  double dcc;
  double csc;
  double ecm;
  double mmp;
};

/// Non-transport right-hand side of the four evolution equations.
inline Reaction reaction_rhs(const ModelParameters& p, double cd, double cs, double v, double m) {
  const double rho = rho_dev_c(cd, cs, v);
  const double exchange = p.emt_at(cd, cs, v, m) * cd;
  return Reaction{
      -exchange + p.mu_d * cd * rho,
      exchange + p.mu_s * cs * rho,
      -m * v + p.mu_v * v * rho,
      cd + cs - m,
  };
}

/// Which variables a State's cell fields hold: c = (c^D, c^S) or the
/// exponentially weighted a = c e^{-chi v}.
enum class Formulation { Original, Transformed };

inline const char* to_string(Formulation f) { return f == Formulation::Original ? "original" : "transformed"; }

/// The quadruple (cells D, cells S, ECM, MMP) at one time.
struct State {
  Formulation formulation = Formulation::Original;
  Field dcc;  ///< c^D, or a^D when transformed
  Field csc;  ///< c^S, or a^S when transformed
  Field ecm;  ///< v
  Field mmp;  ///< m
  double time = 0.0;
  std::size_t step = 0;

  State(Formulation f, Field d, Field s, Field v, Field m, double t = 0.0)
      : formulation(f), dcc(std::move(d)), csc(std::move(s)), ecm(std::move(v)), mmp(std::move(m)), time(t) {
    require_same_grid(dcc, csc, "State");
    require_same_grid(dcc, ecm, "State");
    require_same_grid(dcc, mmp, "State");
  }

  /// Spatially constant state.
  static State uniform(const Grid2D& g, double cd, double cs, double v, double m) {
    return State(Formulation::Original, Field(g, cd), Field(g, cs), Field(g, v), Field(g, m));
  }

  const Grid2D& grid() const noexcept { return dcc.grid(); }

  bool all_finite() const { return dcc.all_finite() && csc.all_finite() && ecm.all_finite() && mmp.all_finite(); }

  /// Sign and range invariants: cells, MMP >= -eps; v in [-eps, 1 + eps].
  bool satisfies_invariants(double eps = kPositivitySlack) const {
    return dcc.min() >= -eps && csc.min() >= -eps && mmp.min() >= -eps && ecm.min() >= -eps &&
           ecm.max() <= 1.0 + eps;
  }
};

}  // namespace hapto
