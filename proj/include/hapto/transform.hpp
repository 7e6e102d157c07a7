#pragma once

#include <cmath>
#include <utility>

#include "hapto/grid.hpp"
#include "hapto/model.hpp"

namespace hapto {

/// The two cell-population fields of one formulation.
struct CellFields {
  Field dcc;
  Field csc;
};

namespace detail {

inline CellFields reweight(const Field& d, const Field& s, const Field& v, double chi_d, double chi_s,
                           double sign, const char* context) {
  require_same_grid(d, s, context);
  require_same_grid(d, v, context);
  Field out_d(d.grid());
  Field out_s(d.grid());
  for (std::size_t k = 0; k < d.size(); ++k) {
    out_d[k] = d[k] * std::exp(sign * chi_d * v[k]);
    out_s[k] = s[k] * std::exp(sign * chi_s * v[k]);
  }
  return {std::move(out_d), std::move(out_s)};
}

}  // namespace detail

/// a^D = c^D e^{-chi_D v}, a^S = c^S e^{-chi_S v}.
inline CellFields to_transformed(const Field& cd, const Field& cs, const Field& v, const ModelParameters& p) {
  return detail::reweight(cd, cs, v, p.chi_d, p.chi_s, -1.0, "to_transformed");
}

/// c^D = a^D e^{chi_D v}, c^S = a^S e^{chi_S v}.
inline CellFields from_transformed(const Field& ad, const Field& as, const Field& v, const ModelParameters& p) {
  return detail::reweight(ad, as, v, p.chi_d, p.chi_s, 1.0, "from_transformed");
}

/// Total-density deviation expressed in transformed variables.
inline double rho_dev_a(double ad, double as, double v, const ModelParameters& p) {
  return 1.0 - std::exp(p.chi_s * v) * as - std::exp(p.chi_d * v) * ad - v;
}

inline State to_transformed(const State& s, const ModelParameters& p) {
  if (s.formulation == Formulation::Transformed) return s;
  auto [ad, as] = to_transformed(s.dcc, s.csc, s.ecm, p);
  State out(Formulation::Transformed, std::move(ad), std::move(as), s.ecm, s.mmp, s.time);
  out.step = s.step;
  return out;
}

inline State to_original(const State& s, const ModelParameters& p) {
  if (s.formulation == Formulation::Original) return s;
  auto [cd, cs] = from_transformed(s.dcc, s.csc, s.ecm, p);
  State out(Formulation::Original, std::move(cd), std::move(cs), s.ecm, s.mmp, s.time);
  out.step = s.step;
  return out;
}

inline State to_formulation(const State& s, Formulation f, const ModelParameters& p) {
  return f == Formulation::Original ? to_original(s, p) : to_transformed(s, p);
}

}  // namespace hapto
