// SPDX-License-Identifier: MIT
#include <gtest/gtest.h>

#include <cmath>

#include "kortile/heisenberg.hpp"

using namespace kortile;

namespace {

HPoint random_point(Rng& rng, double scale = 10.0) {
  return {rng.uniform(-scale, scale), rng.uniform(-scale, scale), rng.uniform(-scale, scale)};
}

// Group law written out in real coordinates, independent of std::complex.
HPoint mul_real(const HPoint& a, const HPoint& b) {
  return {a.x1() + b.x1(), a.y1() + b.y1(), a.x2() + b.x2() + 2.0 * (a.y1() * b.x1() - a.x1() * b.y1())};
}

void expect_near(const HPoint& a, const HPoint& b, double tol = 1e-12) {
  EXPECT_NEAR(a.x1(), b.x1(), tol);
  EXPECT_NEAR(a.y1(), b.y1(), tol);
  EXPECT_NEAR(a.x2(), b.x2(), tol);
}

}  // namespace

TEST(HPoint, RejectsNonFinite) {
  EXPECT_THROW(HPoint(std::nan(""), 0.0, 0.0), ValidationError);
  EXPECT_THROW(HPoint(0.0, 0.0, INFINITY), ValidationError);
}

TEST(GroupLaw, Examples) {
  const HPoint w(0.3, -0.7, 2.0);
  expect_near(group_mul(HPoint(), w), w);
  expect_near(group_mul(HPoint(1, 0, 0), HPoint(0, 1, 0)), HPoint(1, 1, -2));
  expect_near(group_inv(HPoint(1, 1, 3)), HPoint(-1, -1, -3));
}

TEST(GroupLaw, MatchesRealCoordinateFormula) {
  Rng rng(11);
  for (int i = 0; i < 1000; ++i) {
    const HPoint a = random_point(rng), b = random_point(rng);
    expect_near(group_mul(a, b), mul_real(a, b), 1e-11);
  }
}

TEST(GroupLaw, AssociativeWithInverses) {
  Rng rng(12);
  for (int i = 0; i < 1000; ++i) {
    const HPoint a = random_point(rng), b = random_point(rng), c = random_point(rng);
    expect_near(group_mul(group_mul(a, b), c), group_mul(a, group_mul(b, c)), 1e-12 * 400);
    expect_near(group_mul(a, group_inv(a)), HPoint());
    expect_near(group_inv(group_inv(a)), a);
  }
}

TEST(Gauge, Examples) {
  EXPECT_EQ(gauge(HPoint()), 0.0);
  EXPECT_DOUBLE_EQ(gauge(HPoint(1, 0, 0)), 1.0);
  EXPECT_DOUBLE_EQ(gauge(HPoint(0, 0, 4)), 2.0);
  EXPECT_DOUBLE_EQ(dist(HPoint(1, 0, 0), HPoint()), 1.0);
}

TEST(Gauge, SymmetricHomogeneousAndLeftInvariant) {
  Rng rng(13);
  for (int i = 0; i < 1000; ++i) {
    const HPoint a = random_point(rng), b = random_point(rng), c = random_point(rng);
    EXPECT_TRUE(close_rel(gauge(group_inv(a)), gauge(a)));
    const double xi = rng.uniform(0.1, 5.0);
    EXPECT_TRUE(close_rel(gauge(dilate(xi, a)), xi * gauge(a)));
    EXPECT_NEAR(dist(group_mul(c, a), group_mul(c, b)), dist(a, b), 1e-11 * (1 + dist(a, b)));
    EXPECT_EQ(dist(a, a), 0.0);
  }
}

TEST(Gauge, TriangleInequality) {
  Rng rng(14);
  for (int i = 0; i < 2000; ++i) {
    const HPoint a = random_point(rng, 2), b = random_point(rng, 2), c = random_point(rng, 2);
    EXPECT_LE(dist(a, c), dist(a, b) + dist(b, c) + 1e-12);
  }
}

TEST(Dilation, ExamplesAndHomomorphism) {
  expect_near(dilate(2.0, HPoint(1, 0, 1)), HPoint(2, 0, 4));
  EXPECT_THROW(dilate(0.0, HPoint()), ValidationError);
  EXPECT_THROW(dilate_about(HPoint(), -1.0, HPoint()), ValidationError);
  Rng rng(15);
  for (int i = 0; i < 1000; ++i) {
    const HPoint a = random_point(rng), b = random_point(rng), w = random_point(rng);
    const double xi = rng.uniform(0.1, 3.0);
    expect_near(dilate(xi, group_mul(a, b)), group_mul(dilate(xi, a), dilate(xi, b)), 1e-9);
    expect_near(dilate_about(w, 1.0, a), a, 1e-11);
    expect_near(dilate_about(w, xi, w), w, 1e-11);
  }
}

TEST(Dilation, CentredDilationScalesSpheres) {
  Rng rng(16);
  for (int i = 0; i < 1000; ++i) {
    const HPoint w = random_point(rng, 2);
    const double delta = rng.uniform(0.1, 2.0), xi = rng.uniform(0.2, 4.0);
    // A point on the sphere of radius delta about w.
    const double t = rng.uniform(-1.0, 1.0), th = rng.uniform(0.0, 6.283185307179586);
    const double s = delta * std::sqrt(std::sqrt(1.0 - t * t));
    const HPoint a = group_mul(w, HPoint(s * std::cos(th), s * std::sin(th), delta * delta * t));
    EXPECT_NEAR(dist(a, w), delta, 1e-12 * 10);
    EXPECT_NEAR(dist(dilate_about(w, xi, a), w), xi * delta, 1e-11);
  }
}

TEST(Boxes, Membership) {
  const HBox unit(HPoint(), 1.0);
  EXPECT_TRUE(box_membership(unit, false, HPoint(0.5, 0.5, 0.5)));
  EXPECT_FALSE(box_membership(unit, false, HPoint(1.5, 0, 0)));
  EXPECT_TRUE(box_membership(unit, false, unit.anchor));
  for (double x : {0.0, 1.0})
    for (double y : {0.0, 1.0})
      for (double z : {0.0, 1.0}) EXPECT_TRUE(box_membership(unit, true, HPoint(x, y, z)));
  const HBox shifted(HPoint(1, 2, 3), 0.5);
  EXPECT_TRUE(box_membership(shifted, false, shifted.anchor));
  EXPECT_TRUE(box_membership(shifted, false, group_mul(shifted.anchor, HPoint(0.25, 0.1, 0.2))));
}

TEST(SigmaK, Counts) {
  EXPECT_EQ(sigma_k_lattice(1).size(), 1u);
  EXPECT_EQ(sigma_k_lattice(2).size(), 24u);
  EXPECT_EQ(sigma_k_lattice(3).size(), 117u);
  for (int k = 1; k <= 12; ++k) {
    // Count by brute force over a bounding range of integer triples.
    long long n = 0;
    for (int p = -1; p <= k; ++p)
      for (int q = -1; q <= k; ++q)
        for (int r = -3 * k; r <= k * k + 3 * k; ++r) n += in_sigma_k({p, q, r}, k);
    EXPECT_EQ(n, sigma_k_count(k));
    EXPECT_EQ(static_cast<long long>(sigma_k_indices(k).size()), n);
  }
  EXPECT_THROW(sigma_k_lattice(0), ValidationError);
}

TEST(SigmaK, TilesCoverUnitBoxAndStayInDouble) {
  for (int k = 1; k <= 3; ++k) {
    const auto v = sigma_k_lattice(k);
    const HBox unit(HPoint(), 1.0);
    Rng rng(100 + k);
    for (int i = 0; i < 100000; ++i) {
      const HPoint a(rng.uniform(), rng.uniform(), rng.uniform());
      bool hit = false;
      for (const auto& c : v)
        if (box_membership(HBox(c, 1.0 / k), false, a)) {
          hit = true;
          break;
        }
      ASSERT_TRUE(hit) << "k=" << k;
      const auto& c = v[rng.index(v.size())];
      const HPoint t = group_mul(c, HPoint(rng.uniform() / k, rng.uniform() / k, rng.uniform() / (k * k)));
      ASSERT_TRUE(box_membership(unit, true, t)) << "k=" << k;
    }
  }
}

TEST(BallAabb, EnclosesSampledBalls) {
  Rng rng(17);
  for (int i = 0; i < 200; ++i) {
    const KoranyiBall b(random_point(rng, 2), rng.uniform(0.05, 1.5));
    const AxisBox box = ball_aabb(b);
    double reach = -1e9;
    for (int j = 0; j < 2000; ++j) {
      const double t = rng.uniform(-1.0, 1.0), th = rng.uniform(0.0, 6.283185307179586);
      const double s = b.radius * std::sqrt(std::sqrt(1.0 - t * t));
      const HPoint a = group_mul(b.center, HPoint(s * std::cos(th), s * std::sin(th), b.radius * b.radius * t));
      EXPECT_TRUE(box.contains(a.coords()));
      reach = std::max(reach, a.x2());
    }
    // Tightness: some sphere point gets close to the top face.
    EXPECT_GT(reach, box.hi[2] - 0.05 * (box.hi[2] - box.lo[2]));
  }
}
