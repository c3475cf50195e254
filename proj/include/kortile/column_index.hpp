// SPDX-License-Identifier: MIT
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "kortile/common.hpp"
#include "kortile/heisenberg.hpp"

namespace kortile {

/// Columns over the horizontal plane. Inside the column centred at a the
/// vertical coordinate is replaced by w = x2 - 2 (a_y x - a_x y), which
/// undoes the shear of left translations by points near a, so the local box
/// of a ball (|p1 components| <= R, |p2| <= R^2) occupies a short w-interval.
/// The outermost columns extend to infinity.
class ColumnGrid {
public:
  ColumnGrid() = default;
  ColumnGrid(double x0, double x1, double y0, double y1, int nx, int ny) : x0_(x0), y0_(y0), nx_(nx), ny_(ny) {
    require(nx >= 1 && ny >= 1 && x1 > x0 && y1 > y0, "invalid column grid");
    hx_ = (x1 - x0) / nx;
    hy_ = (y1 - y0) / ny;
  }

  /// Grid sized for balls of typical radius `r` over the given horizontal range.
  static ColumnGrid fit(double x0, double x1, double y0, double y1, double r, int max_columns) {
    const double cell = std::max(r, 1e-9);
    int nx = std::clamp(static_cast<int>(std::ceil((x1 - x0) / cell)), 1, 1024);
    int ny = std::clamp(static_cast<int>(std::ceil((y1 - y0) / cell)), 1, 1024);
    while (nx * ny > std::max(1, max_columns)) {
      if (nx >= ny)
        nx = std::max(1, nx / 2);
      else
        ny = std::max(1, ny / 2);
    }
    return {x0, std::max(x1, x0 + 1e-9), y0, std::max(y1, y0 + 1e-9), nx, ny};
  }

  [[nodiscard]] int columns() const { return nx_ * ny_; }

  [[nodiscard]] int col_x(double x) const { return std::clamp(static_cast<int>(std::floor((x - x0_) / hx_)), 0, nx_ - 1); }
  [[nodiscard]] int col_y(double y) const { return std::clamp(static_cast<int>(std::floor((y - y0_) / hy_)), 0, ny_ - 1); }
  [[nodiscard]] int flat(int ix, int iy) const { return ix * ny_ + iy; }
  [[nodiscard]] int column_of(const HPoint& z) const { return flat(col_x(z.x1()), col_y(z.y1())); }

  [[nodiscard]] double w_of(const HPoint& z, int ix, int iy) const {
    const double ax = x0_ + (ix + 0.5) * hx_, ay = y0_ + (iy + 0.5) * hy_;
    return z.x2() - 2.0 * (ay * z.x1() - ax * z.y1());
  }
  [[nodiscard]] double w_of(const HPoint& z) const { return w_of(z, col_x(z.x1()), col_y(z.y1())); }

  /// Range of w over the part of the local box of b lying in column (ix, iy).
  [[nodiscard]] std::optional<std::pair<double, double>> interval(const KoranyiBall& b, int ix, int iy) const {
    const double inf = std::numeric_limits<double>::infinity();
    const double R = b.radius, cx = b.center.x1(), cy = b.center.y1();
    const double rx0 = ix == 0 ? -inf : x0_ + ix * hx_, rx1 = ix == nx_ - 1 ? inf : x0_ + (ix + 1) * hx_;
    const double ry0 = iy == 0 ? -inf : y0_ + iy * hy_, ry1 = iy == ny_ - 1 ? inf : y0_ + (iy + 1) * hy_;
    const double px0 = std::max(-R, rx0 - cx), px1 = std::min(R, rx1 - cx);
    const double py0 = std::max(-R, ry0 - cy), py1 = std::min(R, ry1 - cy);
    if (px0 > px1 || py0 > py1) return std::nullopt;
    const double ax = x0_ + (ix + 0.5) * hx_, ay = y0_ + (iy + 0.5) * hy_;
    const double wc = b.center.x2() - 2.0 * (ay * cx - ax * cy);
    // w - wc = p2 + 2 ((cy - ay) px - (cx - ax) py), linear in (px, py).
    const double gx = 2.0 * (cy - ay), gy = -2.0 * (cx - ax);
    const double lo = std::min(gx * px0, gx * px1) + std::min(gy * py0, gy * py1);
    const double hi = std::max(gx * px0, gx * px1) + std::max(gy * py0, gy * py1);
    const double pad = 1e-12 * (1.0 + std::abs(wc) + std::abs(lo) + std::abs(hi) + R * R);
    return std::pair{wc - R * R + lo - pad, wc + R * R + hi + pad};
  }

  /// Calls fn(ix, iy, lo, hi) for every column meeting the local box of b.
  template <class Fn>
  void for_columns(const KoranyiBall& b, Fn&& fn) const {
    const int ix0 = col_x(b.center.x1() - b.radius), ix1 = col_x(b.center.x1() + b.radius);
    const int iy0 = col_y(b.center.y1() - b.radius), iy1 = col_y(b.center.y1() + b.radius);
    for (int ix = ix0; ix <= ix1; ++ix)
      for (int iy = iy0; iy <= iy1; ++iy)
        if (const auto iv = interval(b, ix, iy)) fn(ix, iy, iv->first, iv->second);
  }

private:
  double x0_ = 0.0, y0_ = 0.0, hx_ = 1.0, hy_ = 1.0;
  int nx_ = 1, ny_ = 1;
};

/// Dynamic index of balls (through their local boxes) in sheared columns.
class HeisIndex {
public:
  HeisIndex() = default;
  explicit HeisIndex(ColumnGrid grid) : grid_(grid), cols_(static_cast<std::size_t>(grid.columns())) {}

  static HeisIndex build(const std::vector<KoranyiBall>& balls) {
    require(!balls.empty(), "cannot index an empty set");
    double x0 = balls[0].center.x1(), x1 = x0, y0 = balls[0].center.y1(), y1 = y0;
    std::vector<double> radii;
    for (const auto& b : balls) {
      x0 = std::min(x0, b.center.x1());
      x1 = std::max(x1, b.center.x1());
      y0 = std::min(y0, b.center.y1());
      y1 = std::max(y1, b.center.y1());
      radii.push_back(b.radius);
    }
    std::nth_element(radii.begin(), radii.begin() + static_cast<std::ptrdiff_t>(radii.size() / 2), radii.end());
    const double r = radii[radii.size() / 2];
    HeisIndex idx(ColumnGrid::fit(x0 - r, x1 + r, y0 - r, y1 + r, r, static_cast<int>(std::max<std::size_t>(64, 8 * balls.size()))));
    for (std::size_t i = 0; i < balls.size(); ++i) idx.insert(static_cast<int>(i), balls[i]);
    return idx;
  }

  [[nodiscard]] const ColumnGrid& grid() const { return grid_; }

  void insert(int id, const KoranyiBall& b) {
    grid_.for_columns(b, [&](int ix, int iy, double lo, double hi) { cols_[static_cast<std::size_t>(grid_.flat(ix, iy))].push_back({id, lo, hi}); });
    if (static_cast<std::size_t>(id) >= stamp_.size()) stamp_.resize(static_cast<std::size_t>(id) + 1, 0);
  }

  void erase(int id, const KoranyiBall& b) {
    grid_.for_columns(b, [&](int ix, int iy, double, double) {
      auto& col = cols_[static_cast<std::size_t>(grid_.flat(ix, iy))];
      for (std::size_t k = 0; k < col.size(); ++k)
        if (col[k].id == id) {
          col[k] = col.back();
          col.pop_back();
          break;
        }
    });
  }

  /// Calls fn(id) for every ball whose local box may contain z.
  template <class Fn>
  void visit_point(const HPoint& z, Fn&& fn) const {
    const int ix = grid_.col_x(z.x1()), iy = grid_.col_y(z.y1());
    const double w = grid_.w_of(z, ix, iy);
    for (const auto& e : cols_[static_cast<std::size_t>(grid_.flat(ix, iy))])
      if (e.lo <= w && w <= e.hi) fn(e.id);
  }

  /// Distinct ids of balls whose local boxes may meet the local box of b.
  void collect_overlapping(const KoranyiBall& b, std::vector<int>& out) const {
    ++epoch_;
    grid_.for_columns(b, [&](int ix, int iy, double lo, double hi) {
      for (const auto& e : cols_[static_cast<std::size_t>(grid_.flat(ix, iy))]) {
        if (e.hi < lo || e.lo > hi) continue;
        auto& s = stamp_[static_cast<std::size_t>(e.id)];
        if (s == epoch_) continue;
        s = epoch_;
        out.push_back(e.id);
      }
    });
  }

private:
  struct Entry {
    int id;
    double lo, hi;
  };
  ColumnGrid grid_;
  std::vector<std::vector<Entry>> cols_;
  mutable std::vector<unsigned> stamp_;
  mutable unsigned epoch_ = 0;
};

/// Static points bucketed by column and sorted by the sheared coordinate.
class PointColumns {
public:
  PointColumns() = default;
  PointColumns(ColumnGrid grid, const std::vector<HPoint>& pts) : grid_(grid), cols_(static_cast<std::size_t>(grid.columns())) {
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const int ix = grid_.col_x(pts[i].x1()), iy = grid_.col_y(pts[i].y1());
      cols_[static_cast<std::size_t>(grid_.flat(ix, iy))].push_back({grid_.w_of(pts[i], ix, iy), static_cast<int>(i)});
    }
    for (auto& c : cols_) std::sort(c.begin(), c.end());
  }

  /// Calls fn(id) for every point that may lie in the local box of b. Each
  /// point is visited at most once.
  template <class Fn>
  void visit_ball(const KoranyiBall& b, Fn&& fn) const {
    grid_.for_columns(b, [&](int ix, int iy, double lo, double hi) {
      const auto& col = cols_[static_cast<std::size_t>(grid_.flat(ix, iy))];
      auto it = std::lower_bound(col.begin(), col.end(), std::pair<double, int>{lo, -1});
      for (; it != col.end() && it->first <= hi; ++it) fn(it->second);
    });
  }

private:
  ColumnGrid grid_;
  std::vector<std::vector<std::pair<double, int>>> cols_;
};

}  // namespace kortile
