#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "hapto/errors.hpp"

namespace hapto {

/// Uniform cell-centred grid on the rectangle [0, lx] x [0, ly].
///
/// Cells are stored row-major: index = j * nx + i, with row j = 0 the
/// southernmost row. Cell (i, j) is centred at ((i + 1/2) hx, (j + 1/2) hy).
class Grid2D {
 public:
  Grid2D(int nx, int ny, double lx, double ly) : nx_(nx), ny_(ny), lx_(lx), ly_(ly) {
    if (nx < 3 || ny < 3) {
      throw StructuralError("grid needs nx >= 3 and ny >= 3, got " + std::to_string(nx) + "x" +
                            std::to_string(ny));
    }
    if (!(lx > 0.0) || !(ly > 0.0) || !std::isfinite(lx) || !std::isfinite(ly)) {
      throw StructuralError("grid side lengths must be positive and finite");
    }
  }

  int nx() const noexcept { return nx_; }
  int ny() const noexcept { return ny_; }
  double lx() const noexcept { return lx_; }
  double ly() const noexcept { return ly_; }
  double hx() const noexcept { return lx_ / nx_; }
  double hy() const noexcept { return ly_ / ny_; }
  double h_min() const noexcept { return std::min(hx(), hy()); }
  double cell_area() const noexcept { return hx() * hy(); }
  /// |Omega|
  double area() const noexcept { return lx_ * ly_; }
  std::size_t cells() const noexcept { return static_cast<std::size_t>(nx_) * static_cast<std::size_t>(ny_); }

  std::size_t index(int i, int j) const noexcept {
    return static_cast<std::size_t>(j) * static_cast<std::size_t>(nx_) + static_cast<std::size_t>(i);
  }
  double x_center(int i) const noexcept { return (i + 0.5) * hx(); }
  double y_center(int j) const noexcept { return (j + 0.5) * hy(); }

  friend bool operator==(const Grid2D&, const Grid2D&) = default;

 private:
  int nx_;
  int ny_;
  double lx_;
  double ly_;
};

/// One scalar unknown sampled at the cell centres of a grid.
class Field {
 public:
  explicit Field(const Grid2D& grid, double fill = 0.0) : grid_(grid), values_(grid.cells(), fill) {}

  Field(const Grid2D& grid, std::vector<double> values) : grid_(grid), values_(std::move(values)) {
    if (values_.size() != grid_.cells()) {
      throw StructuralError("field has " + std::to_string(values_.size()) + " values, grid has " +
                            std::to_string(grid_.cells()) + " cells");
    }
  }

  /// Samples f(x, y) at every cell centre.
  template <class Fn>
  static Field sample(const Grid2D& grid, Fn&& f) {
    Field out(grid);
    for (int j = 0; j < grid.ny(); ++j) {
      for (int i = 0; i < grid.nx(); ++i) {
        out(i, j) = f(grid.x_center(i), grid.y_center(j));
      }
    }
    return out;
  }

  const Grid2D& grid() const noexcept { return grid_; }
  std::size_t size() const noexcept { return values_.size(); }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }

  double& operator[](std::size_t k) noexcept { return values_[k]; }
  double operator[](std::size_t k) const noexcept { return values_[k]; }
  double& operator()(int i, int j) noexcept { return values_[grid_.index(i, j)]; }
  double operator()(int i, int j) const noexcept { return values_[grid_.index(i, j)]; }

  double min() const { return *std::min_element(values_.begin(), values_.end()); }
  double max() const { return *std::max_element(values_.begin(), values_.end()); }
  double sup_norm() const {
    double s = 0.0;
    for (double x : values_) s = std::max(s, std::abs(x));
    return s;
  }
  bool all_finite() const {
    return std::all_of(values_.begin(), values_.end(), [](double x) { return std::isfinite(x); });
  }

  friend bool operator==(const Field&, const Field&) = default;

 private:
  Grid2D grid_;
  std::vector<double> values_;
};

inline void require_same_grid(const Field& a, const Field& b, const char* context) {
  if (!(a.grid() == b.grid())) {
    throw StructuralError(std::string(context) + ": fields live on different grids");
  }
}

/// Largest pointwise |a - b|.
inline double sup_distance(const Field& a, const Field& b) {
  require_same_grid(a, b, "sup_distance");
  double d = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) d = std::max(d, std::abs(a[k] - b[k]));
  return d;
}

}  // namespace hapto
