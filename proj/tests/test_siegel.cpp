// SPDX-License-Identifier: MIT
#include <gtest/gtest.h>

#include <numbers>

#include "kortile/siegel.hpp"

using namespace kortile;

namespace {

constexpr double kPi = std::numbers::pi;

IntegrationSpec mc(std::uint64_t n, std::uint64_t seed) {
  IntegrationSpec s;
  s.samples = n;
  s.seed = seed;
  return s;
}

C2 random_closure_point(Rng& rng, const SiegelDomain& dom) {
  const cplx z1(rng.uniform(-2, 2), rng.uniform(-2, 2));
  return {z1, cplx(rng.uniform(-3, 3), dom.lambda * std::norm(z1) + rng.uniform(0, 3))};
}

// Rejection oracle in plain C^2 coordinates: a Euclidean box around the cut,
// membership by evaluating f and rho directly.
Estimate cut_volume_oracle(const SiegelDomain& dom, const Cut& c, std::uint64_t n, std::uint64_t seed) {
  const C2 w = c.source.lift(dom);
  const double l = dom.lambda;
  const double s = std::sqrt(c.size) / l;
  const double a = std::abs(w[0]) + 1.5 * s;
  const double hx = c.size / l + 2 * l * std::abs(w[0]) * a + 0.1;
  const double y_lo = 0.0, y_hi = l * a * a + c.size / l + 0.1;
  const double V = 4 * s * s * 2 * hx * (y_hi - y_lo) * 2.25;
  return monte_carlo_mean(n, seed, 1, [&](Rng& rng) {
    const C2 z{w[0] + cplx(rng.uniform(-1.5 * s, 1.5 * s), rng.uniform(-1.5 * s, 1.5 * s)),
               cplx(w[1].real() + rng.uniform(-hx, hx), rng.uniform(y_lo, y_hi))};
    return (rho_lambda(dom, z) < 0 && std::abs(f_siegel(dom, z, c.source)) <= c.size) ? V : 0.0;
  });
}

}  // namespace

TEST(Siegel, RhoExamples) {
  const SiegelDomain s1(1.0), s2(2.0);
  EXPECT_DOUBLE_EQ(rho_lambda(s1, {cplx(0), cplx(0, 1)}), -1.0);
  EXPECT_DOUBLE_EQ(rho_lambda(s1, {cplx(1), cplx(0, 1)}), 0.0);
  EXPECT_DOUBLE_EQ(rho_lambda(s2, {cplx(1), cplx(0)}), 2.0);
  EXPECT_THROW(SiegelDomain(0.0), ValidationError);
  EXPECT_THROW(Cut(BoundaryPoint(), 0.0), ValidationError);
}

TEST(Siegel, LiftIsOnBoundary) {
  Rng rng(1);
  for (double l : {0.5, 1.0, 3.0}) {
    const SiegelDomain dom(l);
    for (int i = 0; i < 100; ++i) {
      const BoundaryPoint w(cplx(rng.uniform(-3, 3), rng.uniform(-3, 3)), rng.uniform(-3, 3));
      EXPECT_NEAR(rho_lambda(dom, w.lift(dom)), 0.0, 1e-12 * 30);
    }
  }
}

TEST(Siegel, PeakingFunctionExamples) {
  const SiegelDomain dom(1.0);
  const BoundaryPoint w0;
  const cplx f = f_siegel(dom, {cplx(0), cplx(0.7, 1.3)}, w0);
  EXPECT_NEAR(f.real(), 0.7, 1e-15);
  EXPECT_NEAR(f.imag(), 1.3, 1e-15);
}

TEST(Siegel, PeaksOnlyAtSource) {
  Rng rng(2);
  for (double l : {0.5, 1.0, 2.0}) {
    const SiegelDomain dom(l);
    for (int i = 0; i < 100; ++i) {
      const BoundaryPoint w(cplx(rng.uniform(-1, 1), rng.uniform(-1, 1)), rng.uniform(-1, 1));
      EXPECT_LT(std::abs(f_siegel(dom, w.lift(dom), w)), 1e-12);
      for (int j = 0; j < 1000; ++j) {
        const C2 z = random_closure_point(rng, dom);
        EXPECT_GT(std::abs(f_siegel(dom, z, w)), 0.0);
      }
    }
  }
}

TEST(Siegel, XiMapConjugation) {
  Rng rng(3);
  const SiegelDomain dom(2.0), one(1.0);
  const C2 img = xi_map(dom, C2{cplx(1), cplx(0, 1)});
  EXPECT_EQ(img[0], cplx(2));
  EXPECT_EQ(img[1], cplx(0, 2));
  for (int i = 0; i < 1000; ++i) {
    const double l = rng.uniform(0.2, 4.0);
    const SiegelDomain d(l);
    const BoundaryPoint w(cplx(rng.uniform(-1, 1), rng.uniform(-1, 1)), rng.uniform(-1, 1));
    const C2 z = random_closure_point(rng, d);
    const cplx a = f_siegel(d, z, w), b = f_siegel(one, xi_map(d, z), xi_map(d, w));
    EXPECT_LT(std::abs(a - b), 1e-12 * (1 + std::abs(a)) * 10);
    EXPECT_NEAR(rho_lambda(one, xi_map(d, w).lift(one)), 0.0, 1e-12 * 10);
  }
}

TEST(Siegel, CauchyLerayIdentity) {
  const SiegelDomain dom(1.0);
  const cplx l = cauchy_leray_siegel(dom, {cplx(0), cplx(1)}, BoundaryPoint());
  EXPECT_NEAR(l.real(), 0.0, 1e-15);
  EXPECT_NEAR(l.imag(), 0.5, 1e-15);
  Rng rng(4);
  for (int i = 0; i < 1000; ++i) {
    const SiegelDomain d(rng.uniform(0.2, 4.0));
    const BoundaryPoint w(cplx(rng.uniform(-2, 2), rng.uniform(-2, 2)), rng.uniform(-2, 2));
    const C2 z = random_closure_point(rng, d);
    const cplx f = f_siegel(d, z, w), c = cauchy_leray_siegel(d, z, w);
    EXPECT_LT(std::abs(f + cplx(0, 2 * d.lambda) * c), 1e-12 * (1 + std::abs(f)) * 100);
    EXPECT_LT(std::abs(cauchy_leray_siegel(d, w.lift(d), w)), 1e-12);
  }
}

TEST(Siegel, CutProjectionMatchesPeakingSublevel) {
  const SiegelDomain dom(1.0);
  EXPECT_DOUBLE_EQ(cut_projection(dom, Cut(BoundaryPoint(), 4.0)).radius, 2.0);
  EXPECT_THROW(cut_projection(SiegelDomain(2.0), Cut(BoundaryPoint(), 1.0)), ValidationError);
  Rng rng(5);
  for (double delta : {0.25, 1.0, 4.0}) {
    for (int i = 0; i < 10000; ++i) {
      const BoundaryPoint w(cplx(rng.uniform(-1, 1), rng.uniform(-1, 1)), rng.uniform(-1, 1));
      const double s = 2 * std::sqrt(delta);
      const BoundaryPoint z(w.w1 + cplx(rng.uniform(-s, s), rng.uniform(-s, s)), w.u2 + rng.uniform(-2 * delta, 2 * delta) * 3);
      const double fz = std::abs(f_siegel(dom, z.lift(dom), w));
      const double dz = dist(z.projection(), w.projection());
      // On the boundary |f| equals the squared Koranyi distance.
      EXPECT_NEAR(fz, dz * dz, 1e-11 * (1 + fz));
      const KoranyiBall b = cut_projection(dom, Cut(w, delta));
      if (std::abs(fz - delta) > 1e-9) { EXPECT_EQ(fz <= delta, b.contains(z.projection())); }
    }
  }
}

TEST(Siegel, ClosedFormVolumes) {
  EXPECT_NEAR(cut_volume_closed(1.0), 2.0943951023931953, 1e-15);
  EXPECT_NEAR(cut_volume_closed(2.0), 16 * kPi / 3, 1e-14);
  EXPECT_NEAR(koranyi_ball_volume_closed(1.0), 4.934802200544679, 1e-15);
  EXPECT_EQ(koranyi_ball_volume_closed(0.0), 0.0);
  EXPECT_THROW(cut_volume_closed(0.0), ValidationError);
}

TEST(Siegel, IndependentOracleAgreesWithClosedForm) {
  const SiegelDomain dom(1.0);
  const Cut c(BoundaryPoint(cplx(0.3, -0.2), 0.4), 1.0);
  const Estimate e = cut_volume_oracle(dom, c, 2'000'000, 6);
  EXPECT_NEAR(e.value, cut_volume_closed(1.0), 4 * e.std_error);
}

TEST(Siegel, GapVolumeSingleCut) {
  for (double delta : {0.5, 1.0, 2.0}) {
    const FPolyhedron P(SiegelDomain(1.0), {Cut(BoundaryPoint(cplx(0.1, 0.7), -0.3), delta)});
    const Estimate e = gap_volume_mc(P, mc(400'000, 7));
    EXPECT_NEAR(e.value, cut_volume_closed(delta), 3 * e.std_error) << delta;
  }
}

TEST(Siegel, GapVolumeUnionRules) {
  const Cut a(BoundaryPoint(), 1.0);
  const Cut far(BoundaryPoint(HPoint(0, 0, 100)), 1.0);  // Koranyi distance 10.
  EXPECT_NEAR(dist(far.source.projection(), a.source.projection()), 10.0, 1e-12);
  Estimate e = gap_volume_mc(FPolyhedron(SiegelDomain(1.0), {a, far}), mc(400'000, 8));
  EXPECT_NEAR(e.value, 2 * cut_volume_closed(1.0), 3 * e.std_error);
  e = gap_volume_mc(FPolyhedron(SiegelDomain(1.0), {a, a}), mc(400'000, 9));
  EXPECT_NEAR(e.value, cut_volume_closed(1.0), 3 * e.std_error);
  EXPECT_THROW(FPolyhedron(SiegelDomain(1.0), {}), ValidationError);
  EXPECT_THROW(gap_volume_mc(FPolyhedron(SiegelDomain(1.0), {a}), mc(100, 1)), ValidationError);
}

TEST(Siegel, OverlappingUnionMatchesOracle) {
  const SiegelDomain dom(1.0);
  const Cut a(BoundaryPoint(), 1.0), b(BoundaryPoint(HPoint(0.6, 0.2, 0.3)), 0.7);
  const Estimate e = gap_volume_mc(FPolyhedron(dom, {a, b}), mc(1'000'000, 10));
  // Oracle: plain rejection over one box containing both cuts.
  const double V = 2.5 * 2.1 * 6.5 * 4.5;
  const Estimate o = monte_carlo_mean(2'000'000, 11, 1, [&](Rng& rng) {
    const C2 z{cplx(rng.uniform(-1, 1.5), rng.uniform(-1, 1.1)), cplx(rng.uniform(-3, 3.5), rng.uniform(0, 4.5))};
    if (rho_lambda(dom, z) >= 0) return 0.0;
    return (std::abs(f_siegel(dom, z, a.source)) <= a.size || std::abs(f_siegel(dom, z, b.source)) <= b.size) ? V : 0.0;
  });
  EXPECT_NEAR(e.value, o.value, 3 * std::hypot(e.std_error, o.std_error));
  EXPECT_LT(e.value, cut_volume_closed(1.0) + cut_volume_closed(0.7));
}

TEST(Siegel, XiConjugatedVolumes) {
  for (double l : {0.5, 2.0}) {
    const SiegelDomain dom(l);
    const Cut c(BoundaryPoint(cplx(0.2, 0.1), 0.5), 0.8);
    const Estimate e = gap_volume_mc(FPolyhedron(dom, {c}), mc(400'000, 12));
    EXPECT_NEAR(e.value, cut_volume_closed(0.8) / std::pow(l, 4), 3 * e.std_error);
    const Estimate o = cut_volume_oracle(dom, c, 2'000'000, 13);
    EXPECT_NEAR(e.value, o.value, 3 * std::hypot(e.std_error, o.std_error));
  }
}

TEST(Siegel, GridMethodConverges) {
  IntegrationSpec g;
  g.method = IntegrationMethod::grid;
  g.grid_resolution = 24;
  const Estimate e = gap_volume_mc(FPolyhedron(SiegelDomain(1.0), {Cut(BoundaryPoint(), 1.0)}), g);
  EXPECT_NEAR(e.value, cut_volume_closed(1.0), 0.02);
}

TEST(Siegel, KoranyiBallVolumeMc) {
  const Estimate e = koranyi_ball_volume_mc(1.0, mc(1'000'000, 14));
  EXPECT_NEAR(e.value, koranyi_ball_volume_closed(1.0), 3 * e.std_error);
  EXPECT_LT(std::abs(e.value / koranyi_ball_volume_closed(1.0) - 1), 0.01);
}

TEST(Siegel, MonteCarloIsThreadCountIndependent) {
  const FPolyhedron P(SiegelDomain(1.0), {Cut(BoundaryPoint(), 1.0), Cut(BoundaryPoint(HPoint(0.5, 0, 0)), 0.5)});
  IntegrationSpec a = mc(300'000, 15), b = a;
  b.threads = 3;
  const Estimate ea = gap_volume_mc(P, a), eb = gap_volume_mc(P, b);
  EXPECT_EQ(ea.value, eb.value);
  EXPECT_EQ(ea.std_error, eb.std_error);
}

TEST(IntegrationSpecJson, RoundTrip) {
  IntegrationSpec s;
  s.method = IntegrationMethod::grid;
  s.grid_resolution = 7;
  s.samples = 1234;
  s.seed = 99;
  const nlohmann::json j = s;
  const auto t = j.get<IntegrationSpec>();
  EXPECT_EQ(t.method, IntegrationMethod::grid);
  EXPECT_EQ(*t.grid_resolution, 7);
  EXPECT_EQ(t.samples, 1234u);
  EXPECT_EQ(t.seed, 99u);
  EXPECT_THROW((nlohmann::json{{"method", "magic"}}.get<IntegrationSpec>()), ValidationError);
}
