// SPDX-License-Identifier: MIT
#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "kortile/tilings.hpp"

using namespace kortile;

namespace {

OptimizerConfig small_config() {
  OptimizerConfig c;
  c.budget = 3000;
  c.coverage_points = 20'000;
  c.verify_points = 50'000;
  c.gap_samples = 200'000;
  return c;
}

std::vector<KoranyiBall> random_balls(Rng& rng, int n, double rmin, double rmax) {
  std::vector<KoranyiBall> out;
  for (int i = 0; i < n; ++i)
    out.emplace_back(HPoint(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)), rng.uniform(rmin, rmax));
  return out;
}

}  // namespace

TEST(PkTest, CutCountMatchesSigmaFormula) {
  for (int k = 1; k <= 8; ++k) {
    const long long expect = 1LL * k * k * k * k + 2LL * k * k * k - 2LL * k * k;
    EXPECT_EQ(static_cast<long long>(build_pk(k).cuts.size()), expect) << k;
  }
}

TEST(PkTest, AllCutsShareTheScaledSize) {
  for (int k : {1, 2, 5}) {
    const auto P = build_pk(k);
    for (const auto& c : P.cuts) EXPECT_DOUBLE_EQ(c.size, std::sqrt(2.5) / (k * k));
  }
}

TEST(PkTest, UpperBoundValues) {
  EXPECT_NEAR(lkor_upper_bound(), 8.2788, 5e-5);
  EXPECT_NEAR(lkor_lower_bound(), 0.00026, 5e-6);
  EXPECT_NEAR(upper_bound_closed(1), lkor_upper_bound(), 1e-15);
  EXPECT_NEAR(upper_bound_closed(2), 3.1046, 5e-5);
  EXPECT_NEAR(upper_bound_closed(4), 0.7115, 5e-5);
}

TEST(PkTest, BallsReachTheirTileCornersExactly) {
  // Each tile v . I^{1/k} lies in the projected ball, with the far corners on
  // the sphere: gauge^4 = 1/4 + 9/4 in units of k^-4.
  for (int k : {1, 2, 3}) {
    const auto balls = pk_configuration(k).balls;
    const auto lat = sigma_k_lattice(k);
    ASSERT_EQ(balls.size(), lat.size());
    const double kk = k;
    for (std::size_t i = 0; i < lat.size(); i += 7) {
      double worst = 0.0;
      for (double a : {0.0, 1.0})
        for (double b : {0.0, 1.0})
          for (double c : {0.0, 1.0}) {
            const HPoint corner = group_mul(lat[i], HPoint(a / kk, b / kk, c / (kk * kk)));
            worst = std::max(worst, gauge4(group_mul(group_inv(balls[i].center), corner)));
          }
      EXPECT_NEAR(worst * std::pow(kk, 4), 2.5, 1e-9);
      EXPECT_NEAR(std::pow(balls[i].radius * kk, 4), 2.5, 1e-12);
    }
  }
}

TEST(PkTest, LatticeConfigurationsCoverTheBox) {
  for (int k : {1, 2, 3}) {
    auto cfg = pk_configuration(k);
    for (auto& b : cfg.balls) b.radius *= 1.0 + 1e-9;
    EXPECT_TRUE(coverage_verify(cfg, 20'000).covered) << k;
  }
}

TEST(PkTest, LatticeGapBelowClosedBound) {
  IntegrationSpec s;
  s.samples = 200'000;
  s.seed = 11;
  for (int k : {2, 3}) {
    const auto e = config_gap(pk_configuration(k), s);
    EXPECT_LE(e.value, upper_bound_closed(k) + 3 * e.std_error) << k;
    EXPECT_GT(e.value, 0.0);
  }
}

TEST(WienerTest, SimpleExamples) {
  const std::vector<KoranyiBall> far{KoranyiBall(HPoint(0, 0, 0), 1.0), KoranyiBall(HPoint(10, 0, 0), 0.5)};
  EXPECT_EQ(wiener_subcover(far).size(), 2u);
  const std::vector<KoranyiBall> nested{KoranyiBall(HPoint(0, 0, 0), 0.2), KoranyiBall(HPoint(0.1, 0, 0), 1.0)};
  const auto kept = wiener_subcover(nested);
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_EQ(kept[0], 1u);
}

TEST(WienerTest, KeptBallsDisjointAndTripledCover) {
  Rng rng(21);
  const auto balls = random_balls(rng, 60, 0.05, 0.4);
  const auto kept = wiener_subcover(balls);
  for (std::size_t a = 0; a < kept.size(); ++a)
    for (std::size_t b = a + 1; b < kept.size(); ++b)
      EXPECT_GT(dist(balls[kept[a]].center, balls[kept[b]].center), balls[kept[a]].radius + balls[kept[b]].radius);
  for (int t = 0; t < 20'000; ++t) {
    const auto& b = balls[rng.index(balls.size())];
    // A point of b, found by rejection in its bounding box.
    const AxisBox box = ball_aabb(b);
    HPoint z;
    do {
      z = HPoint(rng.uniform(box.lo[0], box.hi[0]), rng.uniform(box.lo[1], box.hi[1]), rng.uniform(box.lo[2], box.hi[2]));
    } while (!b.contains(z));
    bool hit = false;
    for (std::size_t i : kept) hit = hit || dist(z, balls[i].center) <= 3.0 * balls[i].radius * (1 + 1e-12);
    ASSERT_TRUE(hit);
  }
}

TEST(CoverageTest, Examples) {
  BallConfiguration one;
  one.balls = {KoranyiBall(HPoint(0.5, 0.5, 0.5), 1.3)};
  EXPECT_TRUE(coverage_verify(one, 10'000).covered);
  BallConfiguration tiny;
  tiny.balls = {KoranyiBall(HPoint(0.5, 0.5, 0.5), 0.3)};
  const auto rep = coverage_verify(tiny, 10'000);
  EXPECT_FALSE(rep.covered);
  EXPECT_LT(rep.worst_margin, 0.0);
  EXPECT_EQ(rep.samples, 10'008u);
  EXPECT_THROW(coverage_verify(one, 100), ValidationError);
}

TEST(LowerBoundTest, LatticeAndSingleBall) {
  auto cfg = pk_configuration(2);
  for (auto& b : cfg.balls) b.radius *= 1.0 + 1e-9;
  const auto rep = lower_bound_check(cfg, 20'000);
  EXPECT_TRUE(rep.holds);
  EXPECT_NEAR(rep.sum, 3.75, 1e-6);
  BallConfiguration tiny;
  tiny.balls = {KoranyiBall(HPoint(0.5, 0.5, 0.5), 0.3)};
  EXPECT_THROW(lower_bound_check(tiny, 20'000), ValidationError);
}

TEST(PowerMeanTest, Inequality) {
  EXPECT_TRUE(power_mean_check({1.0, 1.0, 1.0}, 3));
  EXPECT_TRUE(power_mean_check({0.1, 2.0, 5.0}, 3));
  Rng rng(5);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> v;
    for (int i = 0; i < 10; ++i) v.push_back(rng.uniform(0.01, 3.0));
    EXPECT_TRUE(power_mean_check(v, 1.0 + rng.uniform(0.1, 4.0)));
  }
  EXPECT_THROW(power_mean_check({}, 3), ValidationError);
  EXPECT_THROW(power_mean_check({1.0, -1.0}, 3), ValidationError);
}

TEST(SubdivideTest, IdentityAndCounts) {
  const auto cfg = pk_configuration(1);
  const auto same = subdivide_scale(cfg, 1);
  ASSERT_EQ(same.balls.size(), 1u);
  EXPECT_EQ(same.balls[0].center, cfg.balls[0].center);
  const auto two = subdivide_scale(cfg, 2);
  ASSERT_EQ(two.balls.size(), 24u);
  for (const auto& b : two.balls) EXPECT_DOUBLE_EQ(b.radius, cfg.balls[0].radius / 2);
  // Subdividing P_1 reproduces P_2.
  const auto pk2 = pk_configuration(2);
  for (std::size_t i = 0; i < 24; ++i) {
    const auto d = two.balls[i].center.coords(), e = pk2.balls[i].center.coords();
    for (int a = 0; a < 3; ++a) EXPECT_NEAR(d[a], e[a], 1e-14);
  }
}

TEST(SubdivideTest, GapScalesWithCount) {
  Rng rng(8);
  BallConfiguration cfg;
  cfg.balls = {KoranyiBall(HPoint(0.5, 0.5, 0.5), 0.9), KoranyiBall(HPoint(0.2, 0.7, 0.1), 0.5)};
  IntegrationSpec s;
  s.samples = 400'000;
  s.seed = 4;
  const auto g1 = config_gap(cfg, s);
  const auto g2 = config_gap(subdivide_scale(cfg, 2), s.with_seed(5));
  // Copies overlap, so the subdivided gap can only fall below the additive value.
  EXPECT_LE(g2.value, 24.0 / 64.0 * g1.value + 3 * std::hypot(g2.std_error, 24.0 / 64.0 * g1.std_error));
}

TEST(ConfigJsonTest, RoundTrip) {
  const auto cfg = pk_configuration(2);
  const auto j = config_to_json(cfg);
  ASSERT_TRUE(j.is_array());
  const auto back = config_from_json(nlohmann::json::parse(j.dump()));
  ASSERT_EQ(back.balls.size(), cfg.balls.size());
  for (std::size_t i = 0; i < cfg.balls.size(); ++i) {
    EXPECT_EQ(back.balls[i].center, cfg.balls[i].center);
    EXPECT_EQ(back.balls[i].radius, cfg.balls[i].radius);
  }
  EXPECT_THROW(config_from_json(nlohmann::json::object()), ValidationError);
  EXPECT_THROW(config_from_json(nlohmann::json::parse(R"([{"center":[0,0],"radius":1}])")), ValidationError);
}

TEST(UnitSampleTest, MatchesWeightedMoments) {
  // E[X^2] under the weight (-hpow)^+ on the unit local box is 1/5.
  Rng rng(3);
  CompensatedSum s2, h;
  const int N = 400'000;
  for (int i = 0; i < N; ++i) {
    const auto u = detail::draw_unit_sample(rng);
    s2 += u.x2 * u.x2;
    h += u.hpow;
    ASSERT_LE(u.hpow, 0.0);
    ASSERT_NEAR(u.hpow, std::norm(cplx(u.x1, u.y1)) - std::sqrt(1 - u.x2 * u.x2), 1e-12);
  }
  EXPECT_NEAR(s2.value() / N, 0.2, 3e-3);
}

TEST(OptimizerTest, SingleBallFeasibleAndBelowLattice) {
  const auto r = estimate_vn(1, 9, small_config());
  EXPECT_TRUE(r.coverage.covered);
  ASSERT_EQ(r.config.balls.size(), 1u);
  EXPECT_TRUE(lower_bound_check(r.config, small_config().verify_points, r.verify_seed).holds);
  EXPECT_LT(r.record.sqrt_n_gap, lkor_upper_bound());
  EXPECT_GT(r.record.sqrt_n_gap, lkor_lower_bound());
}

TEST(OptimizerTest, ImprovesOnLatticeAt24) {
  const auto r = estimate_vn(24, 10, small_config());
  EXPECT_TRUE(r.coverage.covered);
  EXPECT_LE(r.config.balls.size(), 24u);
  EXPECT_TRUE(lower_bound_check(r.config, small_config().verify_points, r.verify_seed).holds);
  IntegrationSpec s;
  s.samples = 200'000;
  const auto lattice = config_gap(pk_configuration(2), s);
  EXPECT_LT(r.record.gap, lattice.value);
  EXPECT_LT(r.objective, r.initial_objective);
}

TEST(OptimizerTest, DeterministicForFixedSeed) {
  auto c = small_config();
  c.budget = 1000;
  const auto a = estimate_vn(24, 77, c), b = estimate_vn(24, 77, c);
  EXPECT_EQ(config_to_json(a.config).dump(), config_to_json(b.config).dump());
  EXPECT_EQ(a.record.gap, b.record.gap);
}

TEST(OptimizerTest, RestartsUseThreadsDeterministically) {
  auto c = small_config();
  c.budget = 1000;
  c.restarts = 3;
  c.threads = 1;
  const auto a = estimate_vn(24, 5, c);
  c.threads = 3;
  const auto b = estimate_vn(24, 5, c);
  EXPECT_EQ(a.best_chain, b.best_chain);
  EXPECT_EQ(config_to_json(a.config).dump(), config_to_json(b.config).dump());
}

TEST(OptimizerTest, RejectsBadInput) {
  EXPECT_THROW(estimate_vn(0, 1, small_config()), ValidationError);
  auto c = small_config();
  c.restarts = 0;
  EXPECT_THROW(estimate_vn(4, 1, c), ValidationError);
  EXPECT_THROW(asymptotics_harness(1, 1, small_config()), ValidationError);
}
