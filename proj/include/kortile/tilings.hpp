// SPDX-License-Identifier: MIT
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>
#include <boost/random/sobol.hpp>
#include <nlohmann/json.hpp>

#include "kortile/common.hpp"
#include "kortile/heisenberg.hpp"
#include "kortile/integration.hpp"
#include "kortile/power_diagram.hpp"
#include "kortile/siegel.hpp"

namespace kortile {

/// Balls meant to cover `target` (by default I^1, sitting inside its double).
struct BallConfiguration {
  std::vector<KoranyiBall> balls;
  HBox target{HPoint(), 1.0};
};

inline void to_json(nlohmann::json& j, const KoranyiBall& b) {
  j = nlohmann::json{{"center", {b.center.x1(), b.center.y1(), b.center.x2()}}, {"radius", b.radius}};
}

inline void from_json(const nlohmann::json& j, KoranyiBall& b) {
  const auto& c = j.at("center");
  require(c.is_array() && c.size() == 3, "ball center must be [x1, y1, x2]");
  b = KoranyiBall(HPoint(c[0].get<double>(), c[1].get<double>(), c[2].get<double>()), j.at("radius").get<double>());
}

/// A configuration serialises as the plain list of its balls.
inline nlohmann::json config_to_json(const BallConfiguration& cfg) { return cfg.balls; }

inline BallConfiguration config_from_json(const nlohmann::json& j) {
  require(j.is_array(), "configuration must be a JSON list of balls");
  BallConfiguration cfg;
  cfg.balls = j.get<std::vector<KoranyiBall>>();
  return cfg;
}

struct AsymptoticRecord {
  long long n = 0;
  double gap = 0.0;
  double gap_stderr = 0.0;
  double sqrt_n_gap = 0.0;

  static AsymptoticRecord make(long long n, const Estimate& e) {
    return {n, e.value, e.std_error, std::sqrt(static_cast<double>(n)) * e.value};
  }
};

inline void to_json(nlohmann::json& j, const AsymptoticRecord& r) {
  j = nlohmann::json{{"n", r.n}, {"gap", r.gap}, {"stderr", r.gap_stderr}, {"sqrt_n_gap", r.sqrt_n_gap}};
}

/// 4 sqrt(2) / (pi^2 3^7) and 5 sqrt(5) pi / (3 sqrt(2)).
inline double lkor_lower_bound() { return 4.0 * std::numbers::sqrt2 / (std::numbers::pi * std::numbers::pi * 2187.0); }
inline double lkor_upper_bound() { return 5.0 * std::sqrt(5.0) * std::numbers::pi / (3.0 * std::numbers::sqrt2); }

/// Size sqrt(5) / (sqrt(2) k^2) of every cut of P_k.
inline double pk_cut_size(int k) { return std::sqrt(2.5) / (static_cast<double>(k) * k); }

/// The f_S-polyhedron P_k: one cut per tile E_pqr, sourced at the tile centre.
inline FPolyhedron build_pk(int k) {
  require(k >= 1, "k must be positive");
  const double kk = k;
  const HPoint half(1.0 / (2 * kk), 1.0 / (2 * kk), 1.0 / (2 * kk * kk));
  std::vector<Cut> cuts;
  for (const auto& v : sigma_k_lattice(k)) cuts.emplace_back(BoundaryPoint(group_mul(v, half)), pk_cut_size(k));
  return {SiegelDomain(1.0), std::move(cuts)};
}

inline BallConfiguration pk_configuration(int k) {
  BallConfiguration cfg;
  cfg.balls = project_cuts(build_pk(k).cuts);
  return cfg;
}

inline double upper_bound_closed(int k) {
  return lkor_upper_bound() * static_cast<double>(sigma_k_count(k)) / std::pow(static_cast<double>(k), 6);
}

/// Greedy Wiener selection: scan by decreasing radius and keep a ball when it
/// is disjoint from every kept ball (centre distance > sum of radii).
inline std::vector<std::size_t> wiener_subcover(const std::vector<KoranyiBall>& balls) {
  require(!balls.empty(), "wiener_subcover needs at least one ball");
  std::vector<std::size_t> order(balls.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return balls[a].radius > balls[b].radius; });
  std::vector<std::size_t> kept;
  for (std::size_t i : order) {
    bool ok = true;
    for (std::size_t j : kept)
      if (!(dist(balls[i].center, balls[j].center) > balls[i].radius + balls[j].radius)) {
        ok = false;
        break;
      }
    if (ok) kept.push_back(i);
  }
  return kept;
}

/// Deterministic low-discrepancy points in a box, with an optional random
/// Cranley-Patterson shift so that distinct seeds give independent sets.
class BoxSampler {
public:
  BoxSampler(const HBox& box, std::optional<std::uint64_t> shift_seed) : box_(box), sobol_(3) {
    if (shift_seed) {
      Rng rng(*shift_seed);
      for (auto& s : shift_) s = rng.uniform();
    }
  }

  HPoint next() {
    std::array<double, 3> u{};
    for (auto& x : u) {
      x = static_cast<double>(sobol_() >> 11) * 0x1.0p-53 + 0x1.0p-54;
      x = std::fmod(x + shift_[&x - u.data()], 1.0);
    }
    return local(u);
  }

  [[nodiscard]] HPoint local(const std::array<double, 3>& u) const {
    const double r = box_.side;
    return group_mul(box_.anchor, HPoint(r * u[0], r * u[1], r * r * u[2]));
  }

  [[nodiscard]] std::vector<HPoint> corners() const {
    std::vector<HPoint> out;
    for (double a : {0.0, 1.0})
      for (double b : {0.0, 1.0})
        for (double c : {0.0, 1.0}) out.push_back(local({a, b, c}));
    return out;
  }

private:
  HBox box_;
  boost::random::sobol sobol_;
  std::array<double, 3> shift_{};
};

struct CoverageReport {
  bool covered = false;
  std::size_t samples = 0;
  std::size_t uncovered_count = 0;
  /// min over sample points of max over balls of 1 - dist / radius.
  double worst_margin = 0.0;
  std::vector<HPoint> uncovered;
};

/// Checks that the 8 corners and `samples` shifted Sobol points of the
/// target all lie in the union of balls.
inline CoverageReport coverage_verify(const BallConfiguration& cfg, std::uint64_t samples, std::uint64_t seed = 0x5eed) {
  require(samples >= 10'000, "coverage_verify needs at least 1e4 samples");
  CoverageReport rep;
  rep.worst_margin = std::numeric_limits<double>::infinity();
  if (cfg.balls.empty()) {
    rep.uncovered_count = samples + 8;
    rep.samples = samples + 8;
    rep.worst_margin = -std::numeric_limits<double>::infinity();
    return rep;
  }
  const HeisIndex idx = HeisIndex::build(cfg.balls);
  BoxSampler sampler(cfg.target, seed);
  const auto check = [&](const HPoint& z) {
    double best = -std::numeric_limits<double>::infinity();
    idx.visit_point(z, [&](int id) {
      const auto& b = cfg.balls[static_cast<std::size_t>(id)];
      best = std::max(best, 1.0 - dist(z, b.center) / b.radius);
    });
    rep.worst_margin = std::min(rep.worst_margin, best);
    ++rep.samples;
    if (best < 0.0) {
      ++rep.uncovered_count;
      if (rep.uncovered.size() < 4096) rep.uncovered.push_back(z);
    }
  };
  for (const auto& c : sampler.corners()) check(c);
  for (std::uint64_t i = 0; i < samples; ++i) check(sampler.next());
  rep.covered = rep.uncovered_count == 0;
  return rep;
}

struct LowerBoundReport {
  bool holds = false;
  double sum = 0.0;
  double bound = 2.0 / (std::numbers::pi * std::numbers::pi);
};

/// Sum of rad^4 compared with 2/pi^2 in exact rational arithmetic on the
/// stored radii, using rational enclosures of pi.
inline LowerBoundReport lower_bound_check(const BallConfiguration& cfg, std::uint64_t coverage_samples = 100'000,
                                          std::uint64_t coverage_seed = 0x5eed) {
  using boost::multiprecision::cpp_rational;
  require(coverage_verify(cfg, coverage_samples, coverage_seed).covered, "lower_bound_check needs a covering configuration");
  cpp_rational s = 0;
  for (const auto& b : cfg.balls) {
    const cpp_rational r(b.radius);
    s += r * r * r * r;
  }
  const cpp_rational den("100000000000000000000000000000000000");
  const cpp_rational pi_lo = cpp_rational("314159265358979323846264338327950288") / den;
  const cpp_rational pi_hi = cpp_rational("314159265358979323846264338327950289") / den;
  LowerBoundReport rep;
  rep.sum = static_cast<double>(s);
  if (s >= 2 / (pi_lo * pi_lo)) {
    rep.holds = true;
  } else if (s < 2 / (pi_hi * pi_hi)) {
    rep.holds = false;
  } else {
    throw NumericError("sum of rad^4 is within 1e-35 of 2/pi^2; comparison undecided");
  }
  return rep;
}

/// ((sum r^(d+1)) / k)^(1/(d+1)) >= ((sum r^(d-1)) / k)^(1/(d-1)).
inline bool power_mean_check(const std::vector<double>& values, double d) {
  require(!values.empty(), "power_mean_check needs values");
  require(d > 1.0, "d must exceed 1");
  CompensatedSum hi, lo;
  for (double v : values) {
    require(v > 0.0 && std::isfinite(v), "values must be positive");
    hi += std::pow(v, d + 1);
    lo += std::pow(v, d - 1);
  }
  const double k = static_cast<double>(values.size());
  const double a = std::pow(hi.value() / k, 1.0 / (d + 1)), b = std::pow(lo.value() / k, 1.0 / (d - 1));
  return a >= b * (1.0 - 1e-14);
}

/// Images of cfg under z -> v . dil_{1/k}(z) for v in Sigma_k.
inline BallConfiguration subdivide_scale(const BallConfiguration& cfg, int k) {
  require(k >= 1, "k must be positive");
  BallConfiguration out;
  out.target = cfg.target;
  for (const auto& v : sigma_k_lattice(k))
    for (const auto& b : cfg.balls) out.balls.emplace_back(group_mul(v, dilate(1.0 / k, b.center)), b.radius / k);
  return out;
}

inline Estimate config_gap(const BallConfiguration& cfg, const IntegrationSpec& spec) {
  return gap_functional(HPowerDiagram(cfg.balls), spec);
}

// ---------------------------------------------------------------------------
// Optimiser

struct OptimizerConfig {
  /// Proposals per annealing chain.
  std::uint64_t budget = 100'000;
  int restarts = 1;
  /// Importance samples per ball for the annealing objective.
  int samples_per_ball = 96;
  std::uint64_t coverage_points = 100'000;
  /// Balls must contain coverage points with this relative slack.
  double coverage_margin = 2e-3;
  std::uint64_t verify_points = 200'000;
  std::uint64_t gap_samples = 1'000'000;
  /// Start and end temperatures relative to the mean per-ball objective.
  double t_start = 0.05;
  double t_end = 1e-4;
  unsigned threads = 1;
};

inline void to_json(nlohmann::json& j, const OptimizerConfig& c) {
  j = nlohmann::json{{"budget", c.budget},
                     {"restarts", c.restarts},
                     {"samples_per_ball", c.samples_per_ball},
                     {"coverage_points", c.coverage_points},
                     {"coverage_margin", c.coverage_margin},
                     {"verify_points", c.verify_points},
                     {"gap_samples", c.gap_samples},
                     {"t_start", c.t_start},
                     {"t_end", c.t_end}};
}

struct VnResult {
  BallConfiguration config;
  AsymptoticRecord record;
  double objective = 0.0;
  double initial_objective = 0.0;
  int best_chain = 0;
  std::uint64_t accepted = 0;
  std::size_t repaired = 0;
  std::size_t dropped = 0;
  /// Seed of the point set on which the covering was verified.
  std::uint64_t verify_seed = 0;
  CoverageReport coverage;
  bool inside_double = false;
};

namespace detail {

inline double cut_weight(double R) {
  const double R2 = R * R;
  return 2.0 * std::numbers::pi / 3.0 * R2 * R2 * R2;
}

/// A point of unit-radius local coordinates with density proportional to
/// (-hpow(., K(0,1)))^+. Marginally p2 is Epanechnikov; given p2 = X, the
/// squared horizontal radius u has density proportional to (s - u) on [0, s],
/// s = sqrt(1 - X^2).
struct UnitSample {
  double x1, y1, x2, hpow;
};

inline UnitSample draw_unit_sample(Rng& rng) {
  const double a = rng.uniform(-1, 1), b = rng.uniform(-1, 1), c = rng.uniform(-1, 1);
  const double X = (std::abs(c) >= std::abs(b) && std::abs(c) >= std::abs(a)) ? b : c;
  const double s = std::sqrt(std::max(0.0, 1.0 - X * X));
  const double u = s * (1.0 - std::sqrt(1.0 - rng.uniform()));
  const double r = std::sqrt(u), th = 2.0 * std::numbers::pi * rng.uniform();
  return {r * std::cos(th), r * std::sin(th), X, u - s};
}

inline AxisBox box_union(const AxisBox& a, const AxisBox& b) {
  AxisBox u;
  for (int i = 0; i < 3; ++i) {
    u.lo[i] = std::min(a.lo[i], b.lo[i]);
    u.hi[i] = std::max(a.hi[i], b.hi[i]);
  }
  return u;
}

inline double box_excess(const AxisBox& b, const AxisBox& outer) {
  double e = 0.0;
  for (int i = 0; i < 3; ++i) e = std::max({e, outer.lo[i] - b.lo[i], b.hi[i] - outer.hi[i]});
  return e;
}

/// Fixed coverage points of I^1: corners, edge points and Sobol points.
inline std::vector<HPoint> coverage_points(std::uint64_t n) {
  const HBox unit(HPoint(), 1.0);
  BoxSampler s(unit, std::nullopt);
  std::vector<HPoint> pts = s.corners();
  const int edge = 16;
  for (int e = 1; e < edge; ++e) {
    const double t = static_cast<double>(e) / edge;
    for (double a : {0.0, 1.0})
      for (double b : {0.0, 1.0}) {
        pts.push_back(s.local({t, a, b}));
        pts.push_back(s.local({a, t, b}));
        pts.push_back(s.local({a, b, t}));
      }
  }
  for (std::uint64_t i = 0; i < n; ++i) {
    HPoint p = s.next();
    // Every 8th point is pushed onto a face so the boundary is well sampled.
    if (i % 8 == 7) {
      auto c = p.coords();
      c[(i / 8) % 3] = ((i / 24) % 2) ? 1.0 : 0.0;
      p = HPoint(c[0], c[1], c[2]);
    }
    pts.push_back(p);
  }
  return pts;
}

/// Simulated annealing over ball centres and radii. The objective is an
/// importance estimate of the gap functional with common random numbers:
/// each ball owns fixed unit samples drawn from (-hpow)^+, and contributes
/// its closed-form cut volume times the fraction of its samples where it is
/// the hpow-minimiser (ties go to the lower index).
class AnnealChain {
public:
  AnnealChain(const std::vector<KoranyiBall>& init, const std::vector<HPoint>& pts, const OptimizerConfig& cfg, std::uint64_t seed)
      : cfg_(cfg), pts_(pts), rng_(seed), m_(cfg.samples_per_ball) {
    const std::size_t n = init.size();
    balls_ = init;
    outer_ = box_local_extent(1.0, true);
    inner_ = box_local_extent(1.0, false);

    Rng srng(derive_seed(seed, 0x5a));
    unit_.resize(n);
    for (auto& u : unit_) {
      u.resize(static_cast<std::size_t>(m_));
      for (auto& s : u) s = draw_unit_sample(srng);
    }

    std::vector<double> radii;
    for (const auto& b : balls_) {
      aabb_.push_back(ball_aabb(b));
      radii.push_back(b.radius);
    }
    std::nth_element(radii.begin(), radii.begin() + static_cast<std::ptrdiff_t>(n / 2), radii.end());
    const double r = radii[n / 2];
    const auto grid = ColumnGrid::fit(outer_.lo[0], outer_.hi[0], outer_.lo[1], outer_.hi[1], r, static_cast<int>(std::max<std::size_t>(64, 4 * n)));
    index_ = HeisIndex(grid);
    for (std::size_t i = 0; i < n; ++i) index_.insert(static_cast<int>(i), balls_[i]);
    points_ = PointColumns(ColumnGrid::fit(0.0, 1.0, 0.0, 1.0, r / 2, 4096), pts_);
    pstamp_.assign(pts_.size(), 0);

    count_.assign(pts_.size(), 0);
    for (std::size_t i = 0; i < n; ++i)
      points_.visit_ball(balls_[i], [&](int p) { count_[static_cast<std::size_t>(p)] += covers(balls_[i], pts_[static_cast<std::size_t>(p)]); });
    for (std::size_t p = 0; p < pts_.size(); ++p)
      if (count_[p] == 0) throw NumericError("initial configuration does not cover the target");

    pos_.resize(n);
    own_.resize(n);
    beat_.resize(n);
    win_.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) place_samples(i, balls_[i], pos_[i], own_[i]);
    for (std::size_t i = 0; i < n; ++i) win_[i] = count_beats(i, pos_[i], own_[i], beat_[i]);
    objective_ = full_objective();
    best_objective_ = objective_;
    best_ = balls_;
  }

  void run() {
    const std::size_t n = balls_.size();
    const double scale = objective_ / static_cast<double>(n);
    const double t0 = cfg_.t_start * scale, t1 = cfg_.t_end * scale;
    const std::uint64_t B = std::max<std::uint64_t>(cfg_.budget, 1);
    for (std::uint64_t step = 0; step < B; ++step) {
      const double frac = static_cast<double>(step) / static_cast<double>(B);
      const double T = t0 * std::pow(t1 / t0, frac);
      propose(T);
      if (objective_ < best_objective_) {
        best_objective_ = objective_;
        best_ = balls_;
      }
    }
  }

  [[nodiscard]] double best_objective() const { return best_objective_; }
  [[nodiscard]] const std::vector<KoranyiBall>& best() const { return best_; }
  [[nodiscard]] std::uint64_t accepted() const { return accepted_; }

private:
  [[nodiscard]] bool covers(const KoranyiBall& b, const HPoint& p) const {
    const double r = b.radius * (1.0 - cfg_.coverage_margin);
    return gauge4(group_mul(group_inv(b.center), p)) <= r * r * r * r;
  }

  void place_samples(std::size_t i, const KoranyiBall& b, std::vector<HPoint>& pos, std::vector<double>& own) const {
    pos.resize(static_cast<std::size_t>(m_));
    own.resize(static_cast<std::size_t>(m_));
    const double R = b.radius;
    for (int s = 0; s < m_; ++s) {
      const auto& u = unit_[i][static_cast<std::size_t>(s)];
      pos[static_cast<std::size_t>(s)] = group_mul(b.center, HPoint(R * u.x1, R * u.y1, R * R * u.x2));
      own[static_cast<std::size_t>(s)] = R * R * u.hpow;
    }
  }

  [[nodiscard]] static bool beats(const KoranyiBall& b, std::size_t j, const HPoint& x, double h, std::size_t i) {
    const ExtendedReal v = hpow(x, b);
    if (!v.is_finite()) return false;
    return v.value() < h || (v.value() == h && j < i);
  }

  int count_beats(std::size_t i, const std::vector<HPoint>& pos, const std::vector<double>& own, std::vector<int>& beat) const {
    beat.assign(static_cast<std::size_t>(m_), 0);
    int wins = 0;
    for (int s = 0; s < m_; ++s) {
      const auto& x = pos[static_cast<std::size_t>(s)];
      int c = 0;
      index_.visit_point(x, [&](int j) {
        if (static_cast<std::size_t>(j) == i) return;
        c += beats(balls_[static_cast<std::size_t>(j)], static_cast<std::size_t>(j), x, own[static_cast<std::size_t>(s)], i);
      });
      beat[static_cast<std::size_t>(s)] = c;
      wins += c == 0;
    }
    return wins;
  }

  [[nodiscard]] double contribution(double R, int wins) const { return cut_weight(R) * wins / m_; }

  [[nodiscard]] double full_objective() const {
    CompensatedSum s;
    for (std::size_t i = 0; i < balls_.size(); ++i) s += contribution(balls_[i].radius, win_[i]);
    return s.value();
  }

  [[nodiscard]] bool center_ok(const HPoint& c) const { return outer_.contains(c.coords()); }

  [[nodiscard]] std::size_t pick() { return rng_.index(balls_.size()); }

  void propose(double T) {
    const std::size_t j = pick();
    const KoranyiBall& old = balls_[j];
    KoranyiBall nb = old;
    const double u = rng_.uniform();
    const double R = old.radius;
    const auto logu = [&](double lo, double hi) { return lo * std::pow(hi / lo, rng_.uniform()); };
    // Centre steps are right translations by dil_R of a small random element.
    const auto step = [&](double lo, double hi) {
      const double r = std::max(R, 1e-3), s = logu(lo, hi);
      return group_mul(old.center, HPoint(s * r * rng_.normal(), s * r * rng_.normal(), s * r * r * rng_.normal()));
    };
    if (u < 0.4) {
      nb.center = step(0.003, 0.3);
    } else if (u < 0.65) {
      nb.radius = R * std::exp(logu(0.001, 0.1) * rng_.normal());
    } else if (u < 0.8) {
      nb.center = step(0.003, 0.2);
      nb.radius = R * std::exp(logu(0.001, 0.1) * rng_.normal());
    } else if (u < 0.9) {
      nb.radius = tightened_radius(j);
    } else {
      std::vector<double> radii;
      for (const auto& b : balls_) radii.push_back(b.radius);
      std::nth_element(radii.begin(), radii.begin() + static_cast<std::ptrdiff_t>(radii.size() / 2), radii.end());
      nb.center = HPoint(rng_.uniform(), rng_.uniform(), rng_.uniform());
      nb.radius = radii[radii.size() / 2] * std::exp(0.3 * rng_.normal());
    }
    if (!(nb.radius > 0.0) || !std::isfinite(nb.radius)) return;
    try_move(j, nb, T);
  }

  double tightened_radius(std::size_t j) const {
    const auto& b = balls_[j];
    double need = 0.0;
    points_.visit_ball(b, [&](int p) {
      const auto& x = pts_[static_cast<std::size_t>(p)];
      if (count_[static_cast<std::size_t>(p)] == 1 && covers(b, x)) need = std::max(need, dist(x, b.center));
    });
    return std::max(need / (1.0 - cfg_.coverage_margin) * (1.0 + 1e-9), 1e-6 * b.radius + 1e-12);
  }

  void try_move(std::size_t j, const KoranyiBall& nb, double T) {
    const KoranyiBall old = balls_[j];
    if (!center_ok(nb.center)) return;
    const AxisBox new_box = ball_aabb(nb);
    if (box_excess(new_box, outer_) > std::max(0.0, box_excess(aabb_[j], outer_)) + 1e-12) return;

    // Coverage.
    cov_delta_.clear();
    bool feasible = true;
    ++epoch_;
    const auto visit_point = [&](int p) {
      if (!feasible || pstamp_[static_cast<std::size_t>(p)] == epoch_) return;
      pstamp_[static_cast<std::size_t>(p)] = epoch_;
      const auto& x = pts_[static_cast<std::size_t>(p)];
      const int d = static_cast<int>(covers(nb, x)) - static_cast<int>(covers(old, x));
      if (d == 0) return;
      if (count_[static_cast<std::size_t>(p)] + d <= 0) feasible = false;
      cov_delta_.push_back({p, d});
    };
    points_.visit_ball(old, visit_point);
    points_.visit_ball(nb, visit_point);
    if (!feasible) return;

    // Objective change on neighbours.
    nbrs_.clear();
    index_.collect_overlapping(old, nbrs_);
    index_.collect_overlapping(nb, nbrs_);
    std::sort(nbrs_.begin(), nbrs_.end());
    nbrs_.erase(std::unique(nbrs_.begin(), nbrs_.end()), nbrs_.end());
    changes_.clear();
    double delta = 0.0;
    for (int ii : nbrs_) {
      const auto i = static_cast<std::size_t>(ii);
      if (i == j) continue;
      int wins = win_[i];
      for (int s = 0; s < m_; ++s) {
        const auto su = static_cast<std::size_t>(s);
        const auto& x = pos_[i][su];
        if (!in_local_box(old, x) && !in_local_box(nb, x)) continue;
        const int d = static_cast<int>(beats(nb, j, x, own_[i][su], i)) - static_cast<int>(beats(old, j, x, own_[i][su], i));
        if (d == 0) continue;
        const int before = beat_[i][su];
        changes_.push_back({i, su, d});
        if (before == 0 && d > 0) --wins;
        if (before + d == 0) ++wins;
      }
      delta += contribution(balls_[i].radius, wins) - contribution(balls_[i].radius, win_[i]);
    }

    // The moved ball itself.
    place_samples(j, nb, npos_, nown_);
    const int nwins = count_beats(j, npos_, nown_, nbeat_);
    delta += contribution(nb.radius, nwins) - contribution(old.radius, win_[j]);

    if (delta > 0.0 && rng_.uniform() >= std::exp(-delta / T)) return;

    // Commit.
    ++accepted_;
    for (const auto& [p, d] : cov_delta_) count_[static_cast<std::size_t>(p)] += d;
    for (const auto& c : changes_) {
      int& b = beat_[c.i][c.s];
      if (b == 0 && c.d > 0) --win_[c.i];
      b += c.d;
      if (b == 0) ++win_[c.i];
    }
    index_.erase(static_cast<int>(j), old);
    balls_[j] = nb;
    aabb_[j] = new_box;
    index_.insert(static_cast<int>(j), nb);
    pos_[j].swap(npos_);
    own_[j].swap(nown_);
    beat_[j].swap(nbeat_);
    win_[j] = nwins;
    objective_ += delta;
    if (++commits_ % 4096 == 0) objective_ = full_objective();
  }

  struct BeatChange {
    std::size_t i;
    std::size_t s;
    int d;
  };

  OptimizerConfig cfg_;
  const std::vector<HPoint>& pts_;
  Rng rng_;
  int m_;
  AxisBox outer_{}, inner_{};
  std::vector<KoranyiBall> balls_;
  std::vector<AxisBox> aabb_;
  std::vector<std::vector<UnitSample>> unit_;
  HeisIndex index_;
  PointColumns points_;
  std::vector<unsigned> pstamp_;
  unsigned epoch_ = 0;
  std::vector<int> count_;
  std::vector<std::vector<HPoint>> pos_;
  std::vector<std::vector<double>> own_;
  std::vector<std::vector<int>> beat_;
  std::vector<int> win_;
  double objective_ = 0.0;
  double best_objective_ = 0.0;
  std::vector<KoranyiBall> best_;
  std::uint64_t accepted_ = 0;
  std::uint64_t commits_ = 0;

  std::vector<std::pair<int, int>> cov_delta_;
  std::vector<int> nbrs_;
  std::vector<BeatChange> changes_;
  std::vector<HPoint> npos_;
  std::vector<double> nown_;
  std::vector<int> nbeat_;
};

/// Inflates balls until every point in `missing` is covered; each point goes
/// to the ball needing the smallest relative inflation.
inline std::size_t repair_coverage(std::vector<KoranyiBall>& balls, const std::vector<HPoint>& missing) {
  std::size_t fixes = 0;
  for (const auto& x : missing) {
    bool ok = false;
    for (const auto& b : balls) ok = ok || b.contains(x);
    if (ok) continue;
    std::size_t best = 0;
    double ratio = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < balls.size(); ++i) {
      if (balls[i].radius <= 0.0) continue;
      const double r = dist(x, balls[i].center) / balls[i].radius;
      if (r < ratio) {
        ratio = r;
        best = i;
      }
    }
    balls[best].radius = dist(x, balls[best].center) * (1.0 + 1e-9);
    ++fixes;
  }
  return fixes;
}

}  // namespace detail

/// Lattice initial configuration for n balls: the largest P_k with
/// |Sigma_k| <= n, plus repeated balls up to n, radii slightly inflated so
/// the coverage margin holds.
inline std::vector<KoranyiBall> initial_configuration(long long n, double margin) {
  int k = 1;
  while (sigma_k_count(k + 1) <= n) ++k;
  auto balls = pk_configuration(k).balls;
  const std::size_t base = balls.size();
  for (std::size_t i = 0; balls.size() < static_cast<std::size_t>(n); ++i) balls.push_back(balls[i % base]);
  for (auto& b : balls) b.radius *= (1.0 + 2.0 * margin) / (1.0 - margin);
  return balls;
}

/// Minimises the gap functional over coverings of I^1 by at most n Koranyi
/// balls kept inside the double box (balls that already stick out may not
/// stick out further). Returns the best configuration over `restarts`
/// annealing chains together with an independent Monte-Carlo gap estimate.
inline VnResult estimate_vn(long long n, std::uint64_t seed, const OptimizerConfig& cfg) {
  require(n >= 1, "n must be positive");
  require(cfg.restarts >= 1, "need at least one restart");
  require(cfg.samples_per_ball >= 1, "need at least one sample per ball");
  require(cfg.coverage_margin >= 0.0 && cfg.coverage_margin < 0.5, "coverage margin must lie in [0, 0.5)");
  const auto init = initial_configuration(n, cfg.coverage_margin);
  const auto pts = detail::coverage_points(cfg.coverage_points);

  struct ChainOut {
    double initial = 0, best = 0;
    std::vector<KoranyiBall> balls;
    std::uint64_t accepted = 0;
  };
  const auto chains = run_batches<ChainOut>(static_cast<std::size_t>(cfg.restarts), cfg.threads, [&](std::size_t c) {
    detail::AnnealChain chain(init, pts, cfg, derive_seed(seed, c));
    ChainOut o;
    o.initial = chain.best_objective();
    chain.run();
    o.best = chain.best_objective();
    o.balls = chain.best();
    o.accepted = chain.accepted();
    return o;
  });
  std::size_t bi = 0;
  for (std::size_t c = 1; c < chains.size(); ++c)
    if (chains[c].best < chains[bi].best) bi = c;

  VnResult res;
  res.best_chain = static_cast<int>(bi);
  res.objective = chains[bi].best;
  res.initial_objective = chains[bi].initial;
  res.accepted = chains[bi].accepted;
  auto balls = chains[bi].balls;

  const std::uint64_t vseed = derive_seed(seed, 0xC0FE);
  res.verify_seed = vseed;
  BallConfiguration cfgout;
  for (int round = 0; round < 32; ++round) {
    cfgout.balls = balls;
    const auto rep = coverage_verify(cfgout, cfg.verify_points, vseed);
    if (rep.covered) break;
    res.repaired += detail::repair_coverage(balls, rep.uncovered);
  }
  // Balls that hold no verification point do not help cover I and are removed.
  {
    BoxSampler s(cfgout.target, vseed);
    std::vector<char> used(balls.size(), 0);
    const HeisIndex idx = HeisIndex::build(balls);
    const auto mark = [&](const HPoint& z) {
      idx.visit_point(z, [&](int id) {
        if (balls[static_cast<std::size_t>(id)].contains(z)) used[static_cast<std::size_t>(id)] = 1;
      });
    };
    for (const auto& c : s.corners()) mark(c);
    for (std::uint64_t i = 0; i < cfg.verify_points; ++i) mark(s.next());
    std::vector<KoranyiBall> kept;
    for (std::size_t i = 0; i < balls.size(); ++i)
      if (used[i]) kept.push_back(balls[i]);
    res.dropped = balls.size() - kept.size();
    balls = kept;
  }
  cfgout.balls = balls;
  res.coverage = coverage_verify(cfgout, cfg.verify_points, vseed);
  if (!res.coverage.covered) throw NumericError("optimiser could not produce a verified covering");
  const AxisBox outer = box_local_extent(1.0, true);
  res.inside_double = std::all_of(balls.begin(), balls.end(), [&](const KoranyiBall& b) { return detail::box_excess(ball_aabb(b), outer) <= 0.0; });

  IntegrationSpec gs;
  gs.samples = cfg.gap_samples;
  gs.seed = derive_seed(seed, 0x6A9);
  gs.threads = cfg.threads;
  res.record = AsymptoticRecord::make(n, config_gap(cfgout, gs));
  res.config = std::move(cfgout);
  return res;
}

struct AsymptoticsResult {
  std::vector<AsymptoticRecord> optimized;
  std::vector<AsymptoticRecord> lattice;
  std::vector<VnResult> runs;
};

/// For k = 1..k_max: the lattice-only record of P_k and the optimised record
/// at n = |Sigma_k|.
inline AsymptoticsResult asymptotics_harness(int k_max, std::uint64_t seed, const OptimizerConfig& cfg) {
  require(k_max >= 2, "k_max must be at least 2");
  AsymptoticsResult out;
  for (int k = 1; k <= k_max; ++k) {
    const long long n = sigma_k_count(k);
    IntegrationSpec gs;
    gs.samples = cfg.gap_samples;
    gs.seed = derive_seed(seed, 0x1A7 + static_cast<std::uint64_t>(k));
    gs.threads = cfg.threads;
    out.lattice.push_back(AsymptoticRecord::make(n, config_gap(pk_configuration(k), gs)));
    out.runs.push_back(estimate_vn(n, derive_seed(seed, static_cast<std::uint64_t>(k)), cfg));
    out.optimized.push_back(out.runs.back().record);
  }
  return out;
}

}  // namespace kortile
