// SPDX-License-Identifier: MIT
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kortile/common.hpp"
#include "kortile/siegel.hpp"

namespace kortile {

enum class TrendVerdict { converging_positive, converging_zero, inconclusive };

inline std::string to_string(TrendVerdict v) {
  switch (v) {
    case TrendVerdict::converging_positive: return "converging-positive";
    case TrendVerdict::converging_zero: return "converging-zero";
    default: return "inconclusive";
  }
}

struct TrendReport {
  std::vector<long long> n_values;
  std::vector<double> statistic;
  std::vector<double> std_error;
  double slope = 0.0;
  TrendVerdict verdict = TrendVerdict::inconclusive;
};

/// Least-squares slope of log(statistic) against log(n) over the last
/// max(2, ceil(N/3)) points. |slope| <= 0.1 reads as a positive limit,
/// slope < -0.1 as decay to zero.
inline double trend_slope(const std::vector<long long>& n, const std::vector<double>& s) {
  require(n.size() == s.size(), "trend lists must have equal length");
  require(n.size() >= 2, "a trend needs at least two points");
  const std::size_t N = n.size();
  const std::size_t m = std::max<std::size_t>(2, (N + 2) / 3);
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = N - m; i < N; ++i) {
    require(n[i] > 0 && s[i] > 0.0, "trend statistics must be positive");
    const double x = std::log(static_cast<double>(n[i])), y = std::log(s[i]);
    sx += x, sy += y, sxx += x * x, sxy += x * y;
  }
  const double k = static_cast<double>(m);
  const double den = k * sxx - sx * sx;
  require(den > 0.0, "trend needs distinct n values");
  return (k * sxy - sx * sy) / den;
}

inline TrendReport make_trend(std::vector<long long> n, std::vector<double> s, std::vector<double> se = {}) {
  TrendReport r;
  r.slope = trend_slope(n, s);
  r.verdict = std::abs(r.slope) <= 0.1 ? TrendVerdict::converging_positive
              : r.slope < -0.1         ? TrendVerdict::converging_zero
                                       : TrendVerdict::inconclusive;
  r.n_values = std::move(n);
  r.statistic = std::move(s);
  r.std_error = se.empty() ? std::vector<double>(r.statistic.size(), 0.0) : std::move(se);
  return r;
}

inline void to_json(nlohmann::json& j, const TrendReport& r) {
  j = {{"n", r.n_values}, {"statistic", r.statistic}, {"std_error", r.std_error}, {"slope", r.slope}, {"verdict", to_string(r.verdict)}};
}

// ---------------------------------------------------------------------------
// Lemniscate polyhedra in the unit disc.

/// P_n = unit disc minus the closed discs of radius pi/n about the 2n-th
/// roots of unity.
inline bool lemniscate_contains(int n, cplx z) {
  if (std::abs(z) >= 1.0) return false;
  const double r = std::numbers::pi / n;
  const double step = std::numbers::pi / n;
  const double k = std::round(std::arg(z) / step);
  for (double d : {-1.0, 0.0, 1.0})
    if (std::abs(z - std::polar(1.0, (k + d) * step)) <= r) return false;
  return true;
}

inline double lemniscate_inner_radius(int n) { return 1.0 - std::numbers::pi / n; }
inline double lemniscate_outer_radius(int n) { return 1.0 - std::sqrt(3.0) * std::numbers::pi / (2.0 * n); }

struct LemniscateRow {
  int n = 0;
  double removed_area = 0.0;
  double annulus_lo = 0.0;
  double annulus_hi = 0.0;
  bool sandwich_ok = false;
  bool area_in_bracket = false;
};

/// Area of the disc minus P_n by a midpoint polar grid over one of the 2n
/// congruent sectors.
inline double lemniscate_removed_area(int n, int radial = 2000, int angular = 4000) {
  require(n >= 2, "lemniscate needs n >= 2");
  require(radial >= 1 && angular >= 1, "grid must be non-empty");
  const double sector = std::numbers::pi / n;
  const double r0 = std::max(0.0, lemniscate_inner_radius(n));
  const double dr = (1.0 - r0) / radial, dt = sector / angular;
  CompensatedSum area;
  for (int i = 0; i < radial; ++i) {
    const double r = r0 + (i + 0.5) * dr;
    long long out = 0;
    for (int j = 0; j < angular; ++j)
      if (!lemniscate_contains(n, std::polar(r, -0.5 * sector + (j + 0.5) * dt))) ++out;
    area += static_cast<double>(out) * r * dr * dt;
  }
  return 2.0 * n * area.value();
}

/// Samples the inner disc and the whole disc: every inner point lies in P_n
/// and every point of P_n lies in the outer disc.
inline bool lemniscate_sandwich(int n, int samples = 10'000, std::uint64_t seed = 1) {
  require(n >= 2 && samples >= 1, "invalid sandwich check");
  Rng rng(derive_seed(seed, static_cast<std::uint64_t>(n)));
  const double ri = lemniscate_inner_radius(n), ro = lemniscate_outer_radius(n);
  for (int s = 0; s < samples; ++s) {
    // Inner disc (area-uniform) and its boundary circle.
    if (ri > 0.0) {
      const cplx a = std::polar(ri * std::sqrt(rng.uniform()), 2 * std::numbers::pi * rng.uniform());
      const cplx c = std::polar(ri * (1.0 - 1e-12), 2 * std::numbers::pi * rng.uniform());
      if (!lemniscate_contains(n, a) || !lemniscate_contains(n, c)) return false;
    }
    const cplx z = std::polar(std::sqrt(rng.uniform()), 2 * std::numbers::pi * rng.uniform());
    if (lemniscate_contains(n, z) && !(std::abs(z) < ro)) return false;
    const cplx o = std::polar(std::max(ro, 0.0), 2 * std::numbers::pi * rng.uniform());
    if (lemniscate_contains(n, o)) return false;
  }
  return true;
}

struct LemniscateResult {
  std::vector<LemniscateRow> rows;
  TrendReport trend;
};

inline LemniscateResult lemniscate_demo(const std::vector<int>& n_list, int radial = 2000, int angular = 4000,
                                        unsigned threads = 1, std::uint64_t seed = 1) {
  require(n_list.size() >= 2, "need at least two n values");
  for (int n : n_list) require(n >= 2, "lemniscate needs n >= 2");
  LemniscateResult out;
  out.rows = run_batches<LemniscateRow>(n_list.size(), threads, [&](std::size_t i) {
    LemniscateRow r;
    r.n = n_list[i];
    r.removed_area = lemniscate_removed_area(r.n, radial, angular);
    const double ro = std::max(0.0, lemniscate_outer_radius(r.n)), ri = std::max(0.0, lemniscate_inner_radius(r.n));
    r.annulus_lo = std::numbers::pi * (1.0 - ro * ro);
    r.annulus_hi = std::numbers::pi * (1.0 - ri * ri);
    r.area_in_bracket = r.removed_area >= r.annulus_lo && r.removed_area <= r.annulus_hi;
    r.sandwich_ok = lemniscate_sandwich(r.n, 10'000, seed);
    return r;
  });
  std::vector<long long> n;
  std::vector<double> s;
  for (const auto& r : out.rows) {
    n.push_back(r.n);
    s.push_back(r.n * r.removed_area);
  }
  out.trend = make_trend(std::move(n), std::move(s));
  return out;
}

// ---------------------------------------------------------------------------
// Bidisc with f(z, w) = (1 - z1 conj w1)(1 - z2 conj w2).

inline cplx f_bidisc(const C2& z, const C2& w) { return (1.0 - z[0] * std::conj(w[0])) * (1.0 - z[1] * std::conj(w[1])); }

struct BidiscScheme {
  /// Sources (e^{i t_j}, e^{i t_j}), t_j = 2 pi j / n, all of size
  /// overlap * 4 sin(pi / (2n)).
  double overlap = 1.1;

  [[nodiscard]] double size(long long n) const { return overlap * 4.0 * std::sin(std::numbers::pi / (2.0 * static_cast<double>(n))); }
  [[nodiscard]] std::vector<C2> sources(long long n) const {
    std::vector<C2> w;
    for (long long j = 0; j < n; ++j) {
      const cplx e = std::polar(1.0, 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(n));
      w.push_back({e, e});
    }
    return w;
  }
};

inline bool bidisc_in_cuts(const C2& z, const std::vector<C2>& sources, double delta) {
  for (const auto& w : sources)
    if (std::abs(f_bidisc(z, w)) <= delta) return true;
  return false;
}

/// Checks that the cuts meet every sampled point of the topological boundary
/// (unit circle times closed disc, both ways).
inline bool bidisc_covers_boundary(long long n, const BidiscScheme& s, int samples = 20'000, std::uint64_t seed = 1) {
  const auto src = s.sources(n);
  const double d = s.size(n);
  Rng rng(seed);
  for (int i = 0; i < samples; ++i) {
    const cplx a = std::polar(1.0, 2 * std::numbers::pi * rng.uniform());
    const cplx b = std::polar(std::sqrt(rng.uniform()), 2 * std::numbers::pi * rng.uniform());
    if (!bidisc_in_cuts(C2{a, b}, src, d) || !bidisc_in_cuts(C2{b, a}, src, d)) return false;
  }
  return true;
}

/// Volume of the bidisc covered by the cuts, by uniform Monte-Carlo.
inline Estimate bidisc_gap(long long n, const BidiscScheme& s, std::uint64_t samples, std::uint64_t seed, unsigned threads = 1) {
  require(n >= 1, "need at least one cut");
  const auto src = s.sources(n);
  const double d = s.size(n);
  const double V = std::numbers::pi * std::numbers::pi;
  return monte_carlo_mean(samples, seed, threads, [&](Rng& rng) {
    const cplx z1 = std::polar(std::sqrt(rng.uniform()), 2 * std::numbers::pi * rng.uniform());
    const cplx z2 = std::polar(std::sqrt(rng.uniform()), 2 * std::numbers::pi * rng.uniform());
    return bidisc_in_cuts(C2{z1, z2}, src, d) ? V : 0.0;
  });
}

struct BidiscRow {
  int m = 0;
  long long n = 0;
  double delta = 0.0;
  Estimate gap;
  bool covers = false;
};

struct BidiscResult {
  std::vector<BidiscRow> rows;
  TrendReport trend;
};

/// For each m uses n = m^2 cuts and reports sqrt(n) * gap.
inline BidiscResult bidisc_demo(const std::vector<int>& m_list, const BidiscScheme& scheme, std::uint64_t samples,
                                std::uint64_t seed, unsigned threads = 1) {
  require(m_list.size() >= 2, "need at least two m values");
  for (int m : m_list) require(m >= 1, "m must be positive");
  BidiscResult out;
  for (std::size_t i = 0; i < m_list.size(); ++i) {
    BidiscRow r;
    r.m = m_list[i];
    r.n = static_cast<long long>(r.m) * r.m;
    r.delta = scheme.size(r.n);
    r.gap = bidisc_gap(r.n, scheme, samples, derive_seed(seed, static_cast<std::uint64_t>(r.m)), threads);
    r.covers = bidisc_covers_boundary(r.n, scheme, 20'000, derive_seed(seed, 0xB0 + static_cast<std::uint64_t>(r.m)));
    out.rows.push_back(r);
  }
  std::vector<long long> n;
  std::vector<double> s, se;
  for (const auto& r : out.rows) {
    n.push_back(r.n);
    s.push_back(std::sqrt(static_cast<double>(r.n)) * r.gap.value);
    se.push_back(std::sqrt(static_cast<double>(r.n)) * r.gap.std_error);
  }
  out.trend = make_trend(std::move(n), std::move(s), std::move(se));
  return out;
}

// ---------------------------------------------------------------------------
// Cut nesting under a relative closeness hypothesis.

using PeakingFunction = std::function<cplx(const C2&, const BoundaryPoint&)>;

struct CutNestingSpec {
  int sources = 32;
  int points_per_source = 256;
  /// Sampled points lie within this Euclidean distance of the source.
  double tau = 0.5;
  std::vector<double> deltas{0.01, 0.05, 0.1, 0.2};
  std::uint64_t seed = 1;
};

struct CutNestingReport {
  double eps = 0.0;
  double eps_hat = 1.0;
  long long samples = 0;
  /// Samples where |f - g| <= eps (|f| + |g|) holds.
  long long hypothesis_ok = 0;
  long long transcription_violations = 0;
  long long inclusion_violations = 0;
  /// Points where the hypothesis itself fails (first few).
  std::vector<std::pair<C2, BoundaryPoint>> counterexamples;
};

/// Checks |f| <= eps_hat |g|, |g| <= eps_hat |f| and the cut inclusions
/// C(w, d; g) in C(w, eps_hat d; f) in C(w, eps_hat^2 d; g), with
/// eps_hat = (1 + eps) / (1 - eps), on samples where the hypothesis holds.
inline CutNestingReport cut_nesting_check(const PeakingFunction& f, const PeakingFunction& g, double eps,
                                          const SiegelDomain& dom, const CutNestingSpec& spec) {
  require(eps >= 0.0 && eps < 1.0 / 3.0, "eps must lie in [0, 1/3)");
  require(spec.sources >= 1 && spec.points_per_source >= 1 && spec.tau > 0.0, "invalid sample spec");
  CutNestingReport rep;
  rep.eps = eps;
  rep.eps_hat = (1.0 + eps) / (1.0 - eps);
  const double eh = rep.eps_hat;
  const double tol = 1e-12;
  Rng rng(spec.seed);
  for (int s = 0; s < spec.sources; ++s) {
    const BoundaryPoint w(cplx(rng.uniform(-1, 1), rng.uniform(-1, 1)), rng.uniform(-1, 1));
    const C2 wl = w.lift(dom);
    for (int p = 0; p < spec.points_per_source; ++p) {
      C2 z;
      do {
        z = {wl[0] + cplx(rng.uniform(-spec.tau, spec.tau), rng.uniform(-spec.tau, spec.tau)),
             wl[1] + cplx(rng.uniform(-spec.tau, spec.tau), rng.uniform(-spec.tau, spec.tau))};
      } while (rho_lambda(dom, z) > 0.0);
      ++rep.samples;
      const double af = std::abs(f(z, w)), ag = std::abs(g(z, w));
      if (!(std::abs(f(z, w) - g(z, w)) <= eps * (af + ag) + tol * (af + ag))) {
        if (rep.counterexamples.size() < 8) rep.counterexamples.emplace_back(z, w);
        continue;
      }
      ++rep.hypothesis_ok;
      if (af > eh * ag * (1 + tol) || ag > eh * af * (1 + tol)) ++rep.transcription_violations;
      for (double d : spec.deltas) {
        const bool in_g = ag <= d, in_f = af <= eh * d * (1 + tol), in_g2 = ag <= eh * eh * d * (1 + tol);
        if ((in_g && !in_f) || (in_f && !in_g2)) ++rep.inclusion_violations;
      }
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Shrinking cut sizes along a sequence of polyhedra.

enum class ShrinkVerdict { shrinking, not_shrinking, inconclusive };

struct ShrinkReport {
  ShrinkVerdict verdict = ShrinkVerdict::inconclusive;
  bool strictly_decreasing = false;
  /// Pearson correlation of (delta, gap).
  double correlation = 0.0;
};

inline ShrinkReport delta_shrink_check(const std::vector<double>& deltas, const std::vector<double>& gaps) {
  require(deltas.size() == gaps.size() && deltas.size() >= 2, "need matching delta and gap sequences");
  ShrinkReport r;
  bool gaps_decrease = true;
  r.strictly_decreasing = true;
  for (std::size_t i = 1; i < deltas.size(); ++i) {
    gaps_decrease = gaps_decrease && gaps[i] < gaps[i - 1];
    r.strictly_decreasing = r.strictly_decreasing && deltas[i] < deltas[i - 1];
  }
  const double n = static_cast<double>(deltas.size());
  double md = 0, mg = 0;
  for (std::size_t i = 0; i < deltas.size(); ++i) md += deltas[i] / n, mg += gaps[i] / n;
  double sdd = 0, sgg = 0, sdg = 0;
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    sdd += (deltas[i] - md) * (deltas[i] - md);
    sgg += (gaps[i] - mg) * (gaps[i] - mg);
    sdg += (deltas[i] - md) * (gaps[i] - mg);
  }
  r.correlation = (sdd > 0 && sgg > 0) ? sdg / std::sqrt(sdd * sgg) : 0.0;
  if (!gaps_decrease)
    r.verdict = ShrinkVerdict::inconclusive;
  else
    r.verdict = deltas.back() < deltas.front() ? ShrinkVerdict::shrinking : ShrinkVerdict::not_shrinking;
  return r;
}

inline std::vector<double> polyhedra_deltas(const std::vector<FPolyhedron>& seq) {
  std::vector<double> d;
  for (const auto& P : seq) d.push_back(P.max_size());
  return d;
}

}  // namespace kortile
