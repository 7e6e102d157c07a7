#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <utility>
#include <vector>

#include "hapto/grid.hpp"
#include "hapto/model.hpp"

// Finite-volume operators on the cell-centred grid. Every operator is a sum
// of face fluxes; boundary faces carry zero flux, which realises the
// homogeneous Neumann / zero total flux conditions.

namespace hapto {

namespace detail {

/// Visits every interior face once, x-faces first, each row west to east.
/// flux(p, q, inv_h2) returns the flux into cell p across the face it shares
/// with q, its east or north neighbour; q receives the negation.
template <class Flux>
void accumulate_faces(const Grid2D& g, std::span<double> out, Flux&& flux) {
  std::fill(out.begin(), out.end(), 0.0);
  const int nx = g.nx();
  const int ny = g.ny();
  const double ihx2 = 1.0 / (g.hx() * g.hx());
  const double ihy2 = 1.0 / (g.hy() * g.hy());
  const auto stride = static_cast<std::size_t>(nx);
  for (int j = 0; j < ny; ++j) {
    const std::size_t row = static_cast<std::size_t>(j) * stride;
    for (int i = 0; i + 1 < nx; ++i) {
      const std::size_t p = row + static_cast<std::size_t>(i);
      const double f = flux(p, p + 1, ihx2);
      out[p] += f;
      out[p + 1] -= f;
    }
  }
  for (int j = 0; j + 1 < ny; ++j) {
    const std::size_t row = static_cast<std::size_t>(j) * stride;
    for (int i = 0; i < nx; ++i) {
      const std::size_t p = row + static_cast<std::size_t>(i);
      const double f = flux(p, p + stride, ihy2);
      out[p] += f;
      out[p + stride] -= f;
    }
  }
}

}  // namespace detail

/// Five-point Laplacian with mirrored ghost cells (zero normal flux).
inline void laplacian_neumann(const Field& u, std::span<double> out) {
  const auto vals = u.values();
  detail::accumulate_faces(u.grid(), out,
                           [vals](std::size_t p, std::size_t q, double ih2) { return (vals[q] - vals[p]) * ih2; });
}

inline Field laplacian_neumann(const Field& u) {
  Field out(u.grid());
  laplacian_neumann(u, out.values());
  return out;
}

/// Discrete -chi div(c grad v) with first-order upwinding: the face flux
/// chi * c_up * (v_q - v_p) / h takes c from the cell the flux leaves.
inline void haptotaxis_div(const Field& c, const Field& v, double chi, std::span<double> out) {
  require_same_grid(c, v, "haptotaxis_div");
  const auto cv = c.values();
  const auto vv = v.values();
  detail::accumulate_faces(c.grid(), out, [cv, vv, chi](std::size_t p, std::size_t q, double ih2) {
    const double dv = vv[q] - vv[p];
    const double upwind = dv > 0.0 ? cv[p] : cv[q];
    return -chi * dv * upwind * ih2;
  });
}

inline Field haptotaxis_div(const Field& c, const Field& v, double chi) {
  Field out(c.grid());
  haptotaxis_div(c, v, chi, out.values());
  return out;
}

/// Combined cell transport div(grad c) - chi div(c grad v): the Neumann
/// Laplacian plus upwinded haptotaxis, accumulated in one pass over faces.
inline void cell_transport(const Field& c, const Field& v, double chi, std::span<double> out) {
  require_same_grid(c, v, "cell_transport");
  const auto cv = c.values();
  const auto vv = v.values();
  detail::accumulate_faces(c.grid(), out, [cv, vv, chi](std::size_t p, std::size_t q, double ih2) {
    const double dv = vv[q] - vv[p];
    const double upwind = dv > 0.0 ? cv[p] : cv[q];
    return (cv[q] - cv[p] - chi * dv * upwind) * ih2;
  });
}

namespace detail {

inline std::vector<double> half_weights(const Field& v, double chi) {
  std::vector<double> w(v.size());
  for (std::size_t k = 0; k < w.size(); ++k) w[k] = std::exp(0.5 * chi * v[k]);
  return w;
}

}  // namespace detail

/// Flux stage of the transformed operator: div(e^{chi v} grad a) with face
/// weight e^{chi (v_p + v_q) / 2}. Conservative.
inline void transformed_diffusion_flux(const Field& a, const Field& v, double chi, std::span<double> out) {
  require_same_grid(a, v, "transformed_diffusion");
  const auto av = a.values();
  const std::vector<double> w = detail::half_weights(v, chi);
  detail::accumulate_faces(a.grid(), out, [av, &w](std::size_t p, std::size_t q, double ih2) {
    return w[p] * w[q] * (av[q] - av[p]) * ih2;
  });
}

inline Field transformed_diffusion_flux(const Field& a, const Field& v, double chi) {
  Field out(a.grid());
  transformed_diffusion_flux(a, v, chi, out.values());
  return out;
}

/// e^{-chi v} div(e^{chi v} grad a). With chi = 0 this is bitwise the
/// Neumann Laplacian.
inline void transformed_diffusion(const Field& a, const Field& v, double chi, std::span<double> out) {
  require_same_grid(a, v, "transformed_diffusion");
  const auto av = a.values();
  const std::vector<double> w = detail::half_weights(v, chi);
  detail::accumulate_faces(a.grid(), out, [av, &w](std::size_t p, std::size_t q, double ih2) {
    return w[p] * w[q] * (av[q] - av[p]) * ih2;
  });
  for (std::size_t k = 0; k < out.size(); ++k) out[k] /= w[k] * w[k];
}

inline Field transformed_diffusion(const Field& a, const Field& v, double chi) {
  Field out(a.grid());
  transformed_diffusion(a, v, chi, out.values());
  return out;
}

/// Centred differences in the interior, first-order one-sided at boundary cells.
inline std::pair<Field, Field> gradient_central(const Field& u) {
  const Grid2D& g = u.grid();
  const int nx = g.nx();
  const int ny = g.ny();
  Field gx(g);
  Field gy(g);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      if (i == 0) {
        gx(i, j) = (u(1, j) - u(0, j)) / g.hx();
      } else if (i == nx - 1) {
        gx(i, j) = (u(i, j) - u(i - 1, j)) / g.hx();
      } else {
        gx(i, j) = (u(i + 1, j) - u(i - 1, j)) / (2.0 * g.hx());
      }
      if (j == 0) {
        gy(i, j) = (u(i, 1) - u(i, 0)) / g.hy();
      } else if (j == ny - 1) {
        gy(i, j) = (u(i, j) - u(i, j - 1)) / g.hy();
      } else {
        gy(i, j) = (u(i, j + 1) - u(i, j - 1)) / (2.0 * g.hy());
      }
    }
  }
  return {std::move(gx), std::move(gy)};
}

/// Largest per-cell outflow rate of the explicit transport operators for the
/// given formulation, i.e. the coefficient a forward-Euler step removes from
/// the cell's own value. Covers both cell populations and the MMP diffusion.
inline double max_transport_rate(const Field& v, double chi_d, double chi_s, Formulation f) {
  const Grid2D& g = v.grid();
  const int nx = g.nx();
  const int ny = g.ny();
  const double ihx2 = 1.0 / (g.hx() * g.hx());
  const double ihy2 = 1.0 / (g.hy() * g.hy());
  const auto stride = static_cast<std::size_t>(nx);
  double worst = 0.0;
  if (f == Formulation::Original) {
    // chi >= 0, so the larger sensitivity dominates.
    const double chi = std::max({chi_d, chi_s, 0.0});
    const auto vv = v.values();
    for (int j = 0; j < ny; ++j) {
      for (int i = 0; i < nx; ++i) {
        const std::size_t p = g.index(i, j);
        double diff = 0.0;
        double uphill = 0.0;
        auto visit = [&](std::size_t q, double ih2) {
          diff += ih2;
          uphill += std::max(vv[q] - vv[p], 0.0) * ih2;
        };
        if (i > 0) visit(p - 1, ihx2);
        if (i + 1 < nx) visit(p + 1, ihx2);
        if (j > 0) visit(p - stride, ihy2);
        if (j + 1 < ny) visit(p + stride, ihy2);
        worst = std::max(worst, diff + chi * uphill);
      }
    }
    return worst;
  }
  // e^{chi (v_q - v_p) / 2} = w_q / w_p with w = e^{chi v / 2}.
  const std::vector<double> wd = detail::half_weights(v, chi_d);
  const std::vector<double> ws = detail::half_weights(v, chi_s);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const std::size_t p = g.index(i, j);
      double diff = 0.0;
      double sd = 0.0;
      double ss = 0.0;
      auto visit = [&](std::size_t q, double ih2) {
        diff += ih2;
        sd += wd[q] * ih2;
        ss += ws[q] * ih2;
      };
      if (i > 0) visit(p - 1, ihx2);
      if (i + 1 < nx) visit(p + 1, ihx2);
      if (j > 0) visit(p - stride, ihy2);
      if (j + 1 < ny) visit(p + stride, ihy2);
      worst = std::max({worst, diff, sd / wd[p], ss / ws[p]});
    }
  }
  return worst;
}

}  // namespace hapto
