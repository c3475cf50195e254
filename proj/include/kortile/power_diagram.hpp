// SPDX-License-Identifier: MIT
#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <vector>

#include "kortile/column_index.hpp"
#include "kortile/common.hpp"
#include "kortile/heisenberg.hpp"
#include "kortile/integration.hpp"
#include "kortile/siegel.hpp"

namespace kortile {

struct Disk {
  std::array<double, 2> center{};
  double radius = 0.0;

  Disk() = default;
  Disk(std::array<double, 2> c, double r) : center(c), radius(r) { require(r >= 0.0, "disk radius must be non-negative"); }
};

inline double pow_euclid(const std::array<double, 2>& z, const Disk& D) {
  const double dx = z[0] - D.center[0], dy = z[1] - D.center[1];
  return dx * dx + dy * dy - D.radius * D.radius;
}

/// Index of the strict minimiser of pow(z, .); none on ties.
inline std::optional<std::size_t> euclid_cell_classify(const std::array<double, 2>& z, const std::vector<Disk>& disks) {
  require(!disks.empty(), "need at least one disk");
  std::optional<std::size_t> best;
  double bv = 0.0;
  bool tie = false;
  for (std::size_t i = 0; i < disks.size(); ++i) {
    const double v = pow_euclid(z, disks[i]);
    if (!best || v < bv) {
      best = i;
      bv = v;
      tie = false;
    } else if (v == bv) {
      tie = true;
    }
  }
  if (tie) return std::nullopt;
  return best;
}

/// Horizontal power of z with respect to K: |p1|^2 - sqrt(R^4 - p2^2) inside
/// the slab |p2| <= R^2 and +infinity outside, p = c^-1 . z.
inline ExtendedReal hpow(const HPoint& z, const KoranyiBall& K) {
  const HPoint p = group_mul(group_inv(K.center), z);
  const double R2 = K.radius * K.radius;
  if (std::abs(p.x2()) > R2) return ExtendedReal::infinity();
  return ExtendedReal(std::norm(p.z1()) - std::sqrt(std::max(0.0, R2 * R2 - p.x2() * p.x2())));
}

/// The bounding box of the local box c . ([-R,R]^2 x [-R^2,R^2]), which
/// contains the ball and the support of (-hpow)^+.
inline AxisBox local_box_aabb(const KoranyiBall& b) {
  const double R = b.radius;
  const auto c = b.center.coords();
  const double h2 = R * R + 2.0 * (std::abs(c[0]) + std::abs(c[1])) * R;
  return {{c[0] - R, c[1] - R, c[2] - h2}, {c[0] + R, c[1] + R, c[2] + h2}};
}

inline bool in_local_box(const KoranyiBall& b, const HPoint& z) {
  const HPoint p = group_mul(group_inv(b.center), z);
  const double R = b.radius;
  return std::abs(p.x1()) <= R && std::abs(p.y1()) <= R && std::abs(p.x2()) <= R * R;
}

/// Uniform grid over axis-aligned boxes; supports insert and erase, and
/// returns candidate ids whose box may contain a query point.
class BallIndex {
public:
  BallIndex() = default;

  BallIndex(const AxisBox& domain, std::array<int, 3> dims) : domain_(domain), dims_(dims) {
    for (int i = 0; i < 3; ++i) {
      require(dims[i] >= 1, "grid dimensions must be positive");
      require(domain.hi[i] > domain.lo[i], "index domain must have positive extent");
      inv_cell_[i] = dims[i] / (domain.hi[i] - domain.lo[i]);
    }
    cells_.assign(static_cast<std::size_t>(dims[0]) * dims[1] * dims[2], {});
  }

  /// Index sized for the given boxes, about `per_cell` boxes per cell.
  static BallIndex build(const std::vector<AxisBox>& boxes, double per_cell = 2.0) {
    require(!boxes.empty(), "cannot index an empty set");
    AxisBox dom = boxes.front();
    double mean_extent[3] = {0, 0, 0};
    for (const auto& b : boxes)
      for (int i = 0; i < 3; ++i) {
        dom.lo[i] = std::min(dom.lo[i], b.lo[i]);
        dom.hi[i] = std::max(dom.hi[i], b.hi[i]);
        mean_extent[i] += (b.hi[i] - b.lo[i]) / boxes.size();
      }
    std::array<int, 3> dims{};
    for (int i = 0; i < 3; ++i) {
      const double pad = 1e-9 * std::max(1.0, dom.hi[i] - dom.lo[i]);
      dom.lo[i] -= pad;
      dom.hi[i] += pad;
      const double cell = std::max(mean_extent[i] / std::cbrt(per_cell), (dom.hi[i] - dom.lo[i]) / 128.0);
      dims[i] = std::clamp(static_cast<int>(std::ceil((dom.hi[i] - dom.lo[i]) / cell)), 1, 128);
    }
    const double cap = std::max(4096.0, 16.0 * static_cast<double>(boxes.size()));
    while (static_cast<double>(dims[0]) * dims[1] * dims[2] > cap) {
      int* big = &*std::max_element(dims.begin(), dims.end());
      *big = std::max(1, *big / 2);
    }
    BallIndex idx(dom, dims);
    for (std::size_t i = 0; i < boxes.size(); ++i) idx.insert(static_cast<int>(i), boxes[i]);
    return idx;
  }

  void insert(int id, const AxisBox& b) {
    for_cells(b, [&](std::vector<int>& cell) { cell.push_back(id); });
  }

  void erase(int id, const AxisBox& b) {
    for_cells(b, [&](std::vector<int>& cell) {
      for (std::size_t k = 0; k < cell.size(); ++k)
        if (cell[k] == id) {
          cell[k] = cell.back();
          cell.pop_back();
          break;
        }
    });
  }

  /// Ids whose box overlaps the cell of p (superset of boxes containing p).
  [[nodiscard]] const std::vector<int>& candidates(const std::array<double, 3>& p) const {
    static const std::vector<int> empty;
    std::array<int, 3> c{};
    for (int i = 0; i < 3; ++i) {
      if (p[i] < domain_.lo[i] || p[i] > domain_.hi[i]) return empty;
      c[i] = std::min(dims_[i] - 1, static_cast<int>((p[i] - domain_.lo[i]) * inv_cell_[i]));
    }
    return cells_[flat(c)];
  }

  /// Distinct ids whose cells meet the box b.
  [[nodiscard]] std::vector<int> overlapping(const AxisBox& b) const {
    std::vector<int> out;
    visit(b, [&](int id) { out.push_back(id); });
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  /// Calls fn(id) for every entry of every cell meeting b; an id stored in
  /// several cells is visited once per cell.
  template <class Fn>
  void visit(const AxisBox& b, Fn&& fn) const {
    const_cast<BallIndex*>(this)->for_cells(b, [&](const std::vector<int>& cell) {
      for (int id : cell) fn(id);
    });
  }

  [[nodiscard]] const AxisBox& domain() const { return domain_; }

private:
  [[nodiscard]] std::size_t flat(const std::array<int, 3>& c) const {
    return (static_cast<std::size_t>(c[0]) * dims_[1] + c[1]) * dims_[2] + c[2];
  }

  template <class Fn>
  void for_cells(const AxisBox& b, Fn&& fn) {
    std::array<int, 3> lo{}, hi{};
    for (int i = 0; i < 3; ++i) {
      const double a = (b.lo[i] - domain_.lo[i]) * inv_cell_[i];
      const double z = (b.hi[i] - domain_.lo[i]) * inv_cell_[i];
      lo[i] = std::clamp(static_cast<int>(std::floor(a)), 0, dims_[i] - 1);
      hi[i] = std::clamp(static_cast<int>(std::floor(z)), 0, dims_[i] - 1);
    }
    for (int x = lo[0]; x <= hi[0]; ++x)
      for (int y = lo[1]; y <= hi[1]; ++y)
        for (int z = lo[2]; z <= hi[2]; ++z) fn(cells_[flat({x, y, z})]);
  }

  AxisBox domain_{};
  std::array<int, 3> dims_{1, 1, 1};
  std::array<double, 3> inv_cell_{1, 1, 1};
  std::vector<std::vector<int>> cells_;
};

/// A finite family of Koranyi balls partitioned by strict hpow-minimisation.
class HPowerDiagram {
public:
  explicit HPowerDiagram(std::vector<KoranyiBall> balls) : balls_(std::move(balls)) {
    require(!balls_.empty(), "a power diagram needs at least one ball");
    index_ = HeisIndex::build(balls_);
  }

  [[nodiscard]] const std::vector<KoranyiBall>& balls() const { return balls_; }
  [[nodiscard]] const HeisIndex& index() const { return index_; }

private:
  std::vector<KoranyiBall> balls_;
  HeisIndex index_;
};

/// The cell containing z, or none outside the union of balls and on ties.
inline std::optional<std::size_t> hcell_classify(const HPoint& z, const HPowerDiagram& diag) {
  std::optional<std::size_t> best;
  ExtendedReal bv = ExtendedReal::infinity();
  bool tie = false;
  bool in_union = false;
  diag.index().visit_point(z, [&](int id) {
    const auto& K = diag.balls()[static_cast<std::size_t>(id)];
    if (K.contains(z)) in_union = true;
    const ExtendedReal v = hpow(z, K);
    if (!v.is_finite()) return;
    if (!best || v < bv) {
      best = static_cast<std::size_t>(id);
      bv = v;
      tie = false;
    } else if (v == bv) {
      tie = true;
    }
  });
  if (!in_union || tie) return std::nullopt;
  return best;
}

/// max_K (-hpow(z, K))^+, the integrand of the gap functional.
inline double gap_integrand(const HPoint& z, const HPowerDiagram& diag) {
  double best = 0.0;
  diag.index().visit_point(z, [&](int id) {
    const ExtendedReal v = hpow(z, diag.balls()[static_cast<std::size_t>(id)]);
    if (v.is_finite()) best = std::max(best, -v.value());
  });
  return best;
}

/// Integral over the union of max_K(-hpow(., K)), equal to the 4-volume of the
/// union of the corresponding cuts. Samples the union of local boxes with
/// multiplicity weighting.
inline Estimate gap_functional(const HPowerDiagram& diag, const IntegrationSpec& spec) {
  spec.validate(10'000);
  const auto& balls = diag.balls();
  std::vector<double> vol(balls.size());
  for (std::size_t i = 0; i < balls.size(); ++i) {
    const double R2 = balls[i].radius * balls[i].radius;
    vol[i] = 8.0 * R2 * R2;
  }
  const auto value = [&](const HPoint& z) {
    int mult = 0;
    double best = 0.0;
    diag.index().visit_point(z, [&](int id) {
      const auto& K = balls[static_cast<std::size_t>(id)];
      if (!in_local_box(K, z)) return;
      ++mult;
      const ExtendedReal v = hpow(z, K);
      if (v.is_finite()) best = std::max(best, -v.value());
    });
    return mult == 0 ? 0.0 : best / mult;
  };
  const auto local = [&](std::size_t i, double u, double v, double w) {
    const double R = balls[i].radius;
    return group_mul(balls[i].center, HPoint(R * u, R * v, R * R * w));
  };

  if (spec.method == IntegrationMethod::grid) {
    const int g = *spec.grid_resolution;
    CompensatedSum acc;
    for (std::size_t i = 0; i < balls.size(); ++i) {
      if (vol[i] == 0.0) continue;
      CompensatedSum box;
      for (int a = 0; a < g; ++a)
        for (int b = 0; b < g; ++b)
          for (int c = 0; c < g; ++c)
            box += value(local(i, 2.0 * (a + 0.5) / g - 1.0, 2.0 * (b + 0.5) / g - 1.0, 2.0 * (c + 0.5) / g - 1.0));
      acc += vol[i] * box.value() / (static_cast<double>(g) * g * g);
    }
    return {acc.value(), 0.0};
  }
  return detail::union_of_boxes_mc(
      vol, spec,
      [&](std::size_t i, Rng& rng) { return local(i, rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)); },
      value);
}

struct VolumeConsistency {
  Estimate v4;
  Estimate v3;
  [[nodiscard]] bool agrees(double sigmas = 3.0) const {
    return std::abs(v4.value - v3.value) <= sigmas * std::hypot(v4.std_error, v3.std_error);
  }
};

inline std::vector<KoranyiBall> project_cuts(const std::vector<Cut>& cuts) {
  std::vector<KoranyiBall> balls;
  balls.reserve(cuts.size());
  for (const auto& c : cuts) balls.push_back(cut_projection(SiegelDomain(1.0), c));
  return balls;
}

/// The 4-volume of the union of cuts and the 3-d gap functional of their
/// projections, estimated independently (the 3-d run uses a derived seed).
inline VolumeConsistency union_volume_consistency(const std::vector<Cut>& cuts, const IntegrationSpec& spec) {
  const FPolyhedron P(SiegelDomain(1.0), cuts);
  VolumeConsistency r;
  r.v4 = gap_volume_mc(P, spec);
  r.v3 = gap_functional(HPowerDiagram(project_cuts(cuts)), spec.with_seed(derive_seed(spec.seed, 0x3d)));
  return r;
}

struct DoublingReport {
  bool holds = false;
  Estimate base;
  Estimate grown;
  double bound_factor = 1.0;
};

/// Checks vol(union C(w, (1+t) delta)) <= (1+t)^3 vol(union C(w, delta)).
inline DoublingReport doubling_check(const std::vector<Cut>& cuts, double t, const IntegrationSpec& spec) {
  require(t >= 0.0 && t <= 16.0, "t must lie in [0, 16]");
  require(!cuts.empty(), "doubling_check needs at least one cut");
  std::vector<Cut> grown;
  for (const auto& c : cuts) grown.emplace_back(c.source, (1.0 + t) * c.size);
  DoublingReport r;
  r.bound_factor = (1.0 + t) * (1.0 + t) * (1.0 + t);
  r.base = gap_functional(HPowerDiagram(project_cuts(cuts)), spec);
  if (t == 0.0) {
    r.grown = r.base;
  } else {
    r.grown = gap_functional(HPowerDiagram(project_cuts(grown)), spec.with_seed(derive_seed(spec.seed, 0xd0)));
  }
  const double slack = 3.0 * std::hypot(r.grown.std_error, r.bound_factor * r.base.std_error);
  r.holds = r.grown.value <= r.bound_factor * r.base.value + slack;
  return r;
}

}  // namespace kortile
