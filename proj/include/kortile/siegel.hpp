// SPDX-License-Identifier: MIT
#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include "kortile/common.hpp"
#include "kortile/heisenberg.hpp"
#include "kortile/integration.hpp"

namespace kortile {

/// A point (z1, z2) of C^2.
using C2 = std::array<cplx, 2>;

struct SiegelDomain {
  double lambda = 1.0;

  SiegelDomain() = default;
  explicit SiegelDomain(double l) : lambda(l) { require(std::isfinite(l) && l > 0.0, "lambda must be positive"); }
};

/// Boundary point of S_lambda, stored by its projection (w1, u2).
struct BoundaryPoint {
  cplx w1{0.0, 0.0};
  double u2 = 0.0;

  BoundaryPoint() = default;
  BoundaryPoint(cplx w, double u) : w1(w), u2(u) {}
  explicit BoundaryPoint(const HPoint& p) : w1(p.z1()), u2(p.x2()) {}

  [[nodiscard]] C2 lift(const SiegelDomain& dom) const { return {w1, cplx(u2, dom.lambda * std::norm(w1))}; }
  [[nodiscard]] HPoint projection() const { return {w1, u2}; }
};

struct Cut {
  BoundaryPoint source;
  double size = 1.0;

  Cut() = default;
  Cut(BoundaryPoint w, double d) : source(w), size(d) { require(std::isfinite(d) && d > 0.0, "cut size must be positive"); }
};

struct FPolyhedron {
  SiegelDomain domain;
  std::vector<Cut> cuts;

  FPolyhedron() = default;
  FPolyhedron(SiegelDomain d, std::vector<Cut> c) : domain(d), cuts(std::move(c)) {
    require(!cuts.empty(), "an f-polyhedron needs at least one cut");
  }

  [[nodiscard]] double max_size() const {
    double m = 0.0;
    for (const auto& c : cuts) m = std::max(m, c.size);
    return m;
  }
};

inline double rho_lambda(const SiegelDomain& dom, const C2& z) { return dom.lambda * std::norm(z[0]) - z[1].imag(); }

inline cplx f_siegel(const SiegelDomain& dom, const C2& z, const BoundaryPoint& w) {
  const C2 wl = w.lift(dom);
  const double l = dom.lambda;
  return l * (z[1] - std::conj(wl[1])) - cplx(0.0, 2.0 * l * l) * z[0] * std::conj(wl[0]);
}

inline bool fpolyhedron_contains(const FPolyhedron& P, const C2& z) {
  if (rho_lambda(P.domain, z) >= 0.0) return false;
  for (const auto& c : P.cuts)
    if (std::abs(f_siegel(P.domain, z, c.source)) <= c.size) return false;
  return true;
}

/// (z1, z2) -> (lambda z1, lambda z2); carries S_lambda onto S_1.
inline C2 xi_map(const SiegelDomain& dom, const C2& z) { return {dom.lambda * z[0], dom.lambda * z[1]}; }

inline BoundaryPoint xi_map(const SiegelDomain& dom, const BoundaryPoint& w) {
  return {dom.lambda * w.w1, dom.lambda * w.u2};
}

inline KoranyiBall cut_projection(const SiegelDomain& dom, const Cut& cut) {
  require(dom.lambda == 1.0, "cut_projection requires lambda = 1; conjugate by xi_map first");
  return {cut.source.projection(), std::sqrt(cut.size)};
}

inline double cut_volume_closed(double delta) {
  require(delta > 0.0, "cut size must be positive");
  return 2.0 * std::numbers::pi / 3.0 * delta * delta * delta;
}

inline double koranyi_ball_volume_closed(double rad) {
  require(rad >= 0.0, "radius must be non-negative");
  return std::numbers::pi * std::numbers::pi / 2.0 * rad * rad * rad * rad;
}

/// Cauchy-Leray map of rho^lambda at the lifted boundary point.
inline cplx cauchy_leray_siegel(const SiegelDomain& dom, const C2& z, const BoundaryPoint& w) {
  const C2 wl = w.lift(dom);
  return dom.lambda * std::conj(wl[0]) * (z[0] - wl[0]) + cplx(0.0, 0.5) * (z[1] - wl[1]);
}

namespace detail {

/// Cut-adapted coordinates at lambda = 1: p = w'^-1 . z' and h = y2 - |z1|^2.
/// In them |f_S(z, w)|^2 = p2^2 + (h + |p1|^2)^2, so the cut lies in the box
/// |Re p1|, |Im p1| <= sqrt(delta), |p2| <= delta, 0 <= h <= delta.
struct CutFrame {
  HPoint p;
  double h;
};

inline C2 from_cut_frame(const BoundaryPoint& w, const HPoint& p, double h) {
  const HPoint z = group_mul(w.projection(), p);
  return {z.z1(), cplx(z.x2(), std::norm(z.z1()) + h)};
}

inline CutFrame to_cut_frame(const BoundaryPoint& w, const C2& z) {
  const HPoint p = group_mul(group_inv(w.projection()), HPoint(z[0], z[1].real()));
  return {p, z[1].imag() - std::norm(z[0])};
}

inline bool in_cut_box(const Cut& c, const CutFrame& f) {
  const double s = std::sqrt(c.size);
  return std::abs(f.p.x1()) <= s && std::abs(f.p.y1()) <= s && std::abs(f.p.x2()) <= c.size && f.h >= 0.0 && f.h <= c.size;
}

/// Union of sets given by local boxes: picks box i with probability V_i / V,
/// a uniform point in it, and weights membership by 1 / multiplicity.
template <class Draw, class Eval>
Estimate union_of_boxes_mc(const std::vector<double>& box_volume, const IntegrationSpec& spec, Draw&& draw, Eval&& eval) {
  std::vector<double> cdf(box_volume.size());
  CompensatedSum tot;
  for (std::size_t i = 0; i < box_volume.size(); ++i) {
    tot += box_volume[i];
    cdf[i] = tot.value();
  }
  const double V = tot.value();
  require(V > 0.0, "union of boxes has zero volume");
  return monte_carlo_mean(spec.samples, spec.seed, spec.threads, [&](Rng& rng) {
    const double t = rng.uniform() * V;
    std::size_t i = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), t) - cdf.begin());
    if (i >= cdf.size()) i = cdf.size() - 1;
    return V * eval(draw(i, rng));
  });
}

}  // namespace detail

/// Monte-Carlo estimate of vol(S_lambda cap union C_j), the volume removed by
/// the cuts. lambda != 1 is reduced to lambda = 1 by xi_map (Jacobian lambda^4).
inline Estimate gap_volume_mc(const FPolyhedron& P, const IntegrationSpec& spec) {
  require(!P.cuts.empty(), "gap_volume_mc needs at least one cut");
  spec.validate(10'000);
  const double l = P.domain.lambda;
  std::vector<Cut> cuts;
  cuts.reserve(P.cuts.size());
  for (const auto& c : P.cuts) cuts.emplace_back(xi_map(P.domain, c.source), c.size);

  std::vector<double> vol(cuts.size());
  for (std::size_t i = 0; i < cuts.size(); ++i) vol[i] = 8.0 * cuts[i].size * cuts[i].size * cuts[i].size;

  const auto value = [&](const C2& z) {
    int mult = 0;
    bool inside = false;
    for (const auto& c : cuts) {
      const auto f = detail::to_cut_frame(c.source, z);
      if (!detail::in_cut_box(c, f)) continue;
      ++mult;
      if (!inside && f.h > 0.0) {
        const double a = f.h + std::norm(f.p.z1());
        inside = f.p.x2() * f.p.x2() + a * a <= c.size * c.size;
      }
    }
    return inside ? 1.0 / mult : 0.0;
  };

  Estimate e;
  if (spec.method == IntegrationMethod::grid) {
    // Midpoint rule on a g^4 grid in every cut box, weighted by multiplicity.
    const int g = *spec.grid_resolution;
    CompensatedSum acc;
    for (std::size_t i = 0; i < cuts.size(); ++i) {
      const double d = cuts[i].size, s = std::sqrt(d);
      CompensatedSum box;
      for (int a = 0; a < g; ++a)
        for (int b = 0; b < g; ++b)
          for (int c = 0; c < g; ++c)
            for (int e2 = 0; e2 < g; ++e2) {
              const HPoint p(s * (2.0 * (a + 0.5) / g - 1.0), s * (2.0 * (b + 0.5) / g - 1.0), d * (2.0 * (c + 0.5) / g - 1.0));
              box += value(detail::from_cut_frame(cuts[i].source, p, d * (e2 + 0.5) / g));
            }
      acc += vol[i] * box.value() / std::pow(static_cast<double>(g), 4);
    }
    e = {acc.value(), 0.0};
  } else {
    e = detail::union_of_boxes_mc(
        vol, spec,
        [&](std::size_t i, Rng& rng) {
          const double d = cuts[i].size, s = std::sqrt(d);
          const HPoint p(rng.uniform(-s, s), rng.uniform(-s, s), rng.uniform(-d, d));
          return detail::from_cut_frame(cuts[i].source, p, rng.uniform(0.0, d));
        },
        value);
  }
  const double jac = 1.0 / (l * l * l * l);
  return {e.value * jac, e.std_error * jac};
}

/// Monte-Carlo 3-volume of a Koranyi ball from its local bounding box.
inline Estimate koranyi_ball_volume_mc(double rad, const IntegrationSpec& spec) {
  require(rad > 0.0, "radius must be positive");
  spec.validate(10'000);
  const double R2 = rad * rad, V = 8.0 * R2 * R2;
  return monte_carlo_mean(spec.samples, spec.seed, spec.threads, [&](Rng& rng) {
    const HPoint p(rng.uniform(-rad, rad), rng.uniform(-rad, rad), rng.uniform(-R2, R2));
    return gauge4(p) <= R2 * R2 ? V : 0.0;
  });
}

}  // namespace kortile
