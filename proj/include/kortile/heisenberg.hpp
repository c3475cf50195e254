// SPDX-License-Identifier: MIT
#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "kortile/common.hpp"

namespace kortile {

/// A point (z1, x2) of the first Heisenberg group C x R.
class HPoint {
public:
  constexpr HPoint() = default;
  HPoint(cplx z1, double x2) : z1_(z1), x2_(x2) {
    require(std::isfinite(z1.real()) && std::isfinite(z1.imag()) && std::isfinite(x2),
            "HPoint components must be finite");
  }
  HPoint(double x1, double y1, double x2) : HPoint(cplx(x1, y1), x2) {}

  [[nodiscard]] cplx z1() const noexcept { return z1_; }
  [[nodiscard]] double x1() const noexcept { return z1_.real(); }
  [[nodiscard]] double y1() const noexcept { return z1_.imag(); }
  [[nodiscard]] double x2() const noexcept { return x2_; }
  [[nodiscard]] std::array<double, 3> coords() const noexcept { return {x1(), y1(), x2_}; }

  friend bool operator==(const HPoint&, const HPoint&) = default;

private:
  cplx z1_{0.0, 0.0};
  double x2_ = 0.0;
};

inline HPoint group_mul(const HPoint& a, const HPoint& b) {
  return {a.z1() + b.z1(), a.x2() + b.x2() + 2.0 * std::imag(a.z1() * std::conj(b.z1()))};
}

inline HPoint group_inv(const HPoint& a) { return {-a.z1(), -a.x2()}; }

/// |z1|^4 + x2^2, the fourth power of the gauge.
inline double gauge4(const HPoint& a) {
  const double s = std::norm(a.z1());
  return s * s + a.x2() * a.x2();
}

inline double gauge(const HPoint& a) { return std::sqrt(std::sqrt(gauge4(a))); }

/// Left-invariant Koranyi distance.
inline double dist(const HPoint& a, const HPoint& b) { return gauge(group_mul(group_inv(b), a)); }

inline HPoint dilate(double xi, const HPoint& a) {
  require(xi > 0.0, "dilation factor must be positive");
  return {xi * a.z1(), xi * xi * a.x2()};
}

/// Dilation centred at w: w . dil_xi(w^-1 . a).
inline HPoint dilate_about(const HPoint& w, double xi, const HPoint& a) {
  return group_mul(w, dilate(xi, group_mul(group_inv(w), a)));
}

struct KoranyiBall {
  HPoint center;
  double radius = 0.0;

  KoranyiBall() = default;
  KoranyiBall(HPoint c, double r) : center(c), radius(r) {
    require(std::isfinite(r) && r >= 0.0, "Koranyi radius must be finite and non-negative");
  }

  [[nodiscard]] bool contains(const HPoint& a) const { return gauge4(group_mul(group_inv(center), a)) <= radius * radius * radius * radius; }
};

/// Left translate anchor . I^side of the box I^r = [0,r]^2 x [0,r^2].
struct HBox {
  HPoint anchor;
  double side = 1.0;

  HBox() = default;
  HBox(HPoint a, double s) : anchor(a), side(s) { require(std::isfinite(s) && s > 0.0, "box side must be positive"); }
};

struct AxisBox {
  std::array<double, 3> lo{};
  std::array<double, 3> hi{};

  [[nodiscard]] double volume() const { return (hi[0] - lo[0]) * (hi[1] - lo[1]) * (hi[2] - lo[2]); }
  [[nodiscard]] bool contains(const std::array<double, 3>& p) const {
    for (int i = 0; i < 3; ++i)
      if (p[i] < lo[i] || p[i] > hi[i]) return false;
    return true;
  }
};

/// Local (untranslated) coordinates of I^r, or of its double I^hat^r when `hat`.
inline AxisBox box_local_extent(double r, bool hat) {
  if (!hat) return {{0.0, 0.0, 0.0}, {r, r, r * r}};
  return {{-r / 2, -r / 2, -1.5 * r * r}, {1.5 * r, 1.5 * r, 2.5 * r * r}};
}

inline bool box_membership(const HBox& box, bool hat, const HPoint& a) {
  return box_local_extent(box.side, hat).contains(group_mul(group_inv(box.anchor), a).coords());
}

struct LatticeIndex {
  int p = 0;
  int q = 0;
  int r = 0;
  friend bool operator==(const LatticeIndex&, const LatticeIndex&) = default;
};

inline bool in_sigma_k(const LatticeIndex& i, int k) {
  return i.p >= 0 && i.q >= 0 && i.p <= k - 1 && i.q <= k - 1 && i.r >= -2 * i.q && i.r <= k * k - 1 + 2 * i.p;
}

inline long long sigma_k_count(int k) {
  require(k >= 1, "k must be positive");
  const long long K = k;
  return K * K * K * K + 2 * K * K * K - 2 * K * K;
}

inline std::vector<LatticeIndex> sigma_k_indices(int k) {
  require(k >= 1, "k must be positive");
  std::vector<LatticeIndex> out;
  out.reserve(static_cast<std::size_t>(sigma_k_count(k)));
  for (int p = 0; p < k; ++p)
    for (int q = 0; q < k; ++q)
      for (int r = -2 * q; r <= k * k - 1 + 2 * p; ++r) out.push_back({p, q, r});
  return out;
}

inline HPoint lattice_point(const LatticeIndex& i, int k) {
  const double kk = k;
  return {cplx(i.p / kk, i.q / kk), i.r / (kk * kk)};
}

/// The points v_pqr, (p,q,r) in Sigma_k. The tiles v_pqr . I^{1/k} cover I^1.
inline std::vector<HPoint> sigma_k_lattice(int k) {
  std::vector<HPoint> out;
  for (const auto& i : sigma_k_indices(k)) out.push_back(lattice_point(i, k));
  return out;
}

/// Euclidean bounding box of a Koranyi ball.
///
/// In local coordinates p = c^-1 . z the ball is |p1|^4 + p2^2 <= R^4 and
/// x2 = c2 + p2 + 2 Im(c1 conj(p1)). Maximising over the ball gives half-width
/// max_s sqrt(R^4 - s^4) + 2|c1| s, solved for u = s^2 from
/// u^3 + a^2 u^2 - a^2 R^4 = 0 with a = |c1|.
inline AxisBox ball_aabb(const KoranyiBall& b) {
  const double R = b.radius;
  const double a = std::abs(b.center.z1());
  double half2 = R * R;
  if (a > 0.0 && R > 0.0) {
    const double R4 = R * R * R * R;
    double lo = 0.0, hi = R * R;
    for (int it = 0; it < 200 && hi - lo > 1e-17 * R * R; ++it) {
      const double u = 0.5 * (lo + hi);
      if (u * u * u + a * a * u * u - a * a * R4 < 0.0)
        lo = u;
      else
        hi = u;
    }
    const double u = 0.5 * (lo + hi);
    const double s = std::sqrt(u);
    half2 = std::sqrt(std::max(0.0, R4 - u * u)) + 2.0 * a * s;
    half2 *= 1.0 + 1e-12;
  }
  const auto c = b.center.coords();
  return {{c[0] - R, c[1] - R, c[2] - half2}, {c[0] + R, c[1] + R, c[2] + half2}};
}

}  // namespace kortile
