// SPDX-License-Identifier: MIT
// Acceptance run: one PASS/FAIL line per criterion.
// Usage: kortile_acceptance [--expect-fail N]... [criterion...]   (default: all)
// A criterion listed with --expect-fail still prints FAIL but does not set the exit code.
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "kortile/cli.hpp"
#include "kortile/domain_maps.hpp"
#include "kortile/model_gallery.hpp"
#include "kortile/power_diagram.hpp"
#include "kortile/tilings.hpp"

using namespace kortile;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... a) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, a...);
  return buf;
}

IntegrationSpec mc(std::uint64_t samples, std::uint64_t seed) {
  IntegrationSpec s;
  s.samples = samples;
  s.seed = seed;
  return s;
}

HPoint random_point(Rng& rng, double scale) {
  return {rng.uniform(-scale, scale), rng.uniform(-scale, scale), rng.uniform(-scale, scale)};
}

std::vector<Cut> random_cuts(Rng& rng, int max_cuts) {
  std::vector<Cut> cuts;
  const int m = 1 + static_cast<int>(rng.index(static_cast<std::size_t>(max_cuts)));
  for (int j = 0; j < m; ++j) cuts.emplace_back(BoundaryPoint(random_point(rng, 0.6)), rng.uniform(0.2, 1.0));
  return cuts;
}

// Optimiser runs are shared by criteria 5 and 6.
const AsymptoticsResult& harness() {
  static const AsymptoticsResult r = asymptotics_harness(4, 2024, OptimizerConfig{});
  return r;
}

Outcome closed_form_volumes() {
  Outcome o{true, ""};
  std::uint64_t seed = 100;
  for (double d : {0.5, 1.0, 2.0}) {
    const FPolyhedron P(SiegelDomain(1.0), {Cut(BoundaryPoint(), d)});
    const Estimate cut = gap_volume_mc(P, mc(10'000'000, seed++));
    const Estimate ball = koranyi_ball_volume_mc(d, mc(10'000'000, seed++));
    for (auto [e, exact] : {std::pair{cut, cut_volume_closed(d)}, std::pair{ball, koranyi_ball_volume_closed(d)}}) {
      const double err = std::abs(e.value - exact);
      o.pass = o.pass && err <= 3 * e.std_error && err <= 0.01 * exact;
      o.detail += fmt(" %.4g/%.4g", e.value, exact);
    }
  }
  return o;
}

Outcome gap_identity() {
  Outcome o{true, ""};
  Rng rng(200);
  int ok = 0;
  double worst = 0.0;
  for (int rep = 0; rep < 10; ++rep) {
    const auto r = union_volume_consistency(random_cuts(rng, 5), mc(1'000'000, 210 + static_cast<std::uint64_t>(rep)));
    worst = std::max(worst, std::abs(r.v4.value - r.v3.value) / std::hypot(r.v4.std_error, r.v3.std_error));
    ok += r.agrees();
  }
  o.pass = ok == 10;
  o.detail = fmt(" %d/10 agree, worst %.2f sigma", ok, worst);
  return o;
}

Outcome doubling() {
  Outcome o{true, ""};
  Rng rng(300);
  int ok = 0, total = 0;
  double worst = 0.0;
  for (int rep = 0; rep < 5; ++rep) {
    const auto cuts = random_cuts(rng, 5);
    for (double t : {0.5, 1.0, 4.0, 15.0}) {
      const auto r = doubling_check(cuts, t, mc(400'000, 310 + static_cast<std::uint64_t>(total)));
      worst = std::max(worst, r.grown.value / r.base.value / r.bound_factor);
      ok += r.holds;
      ++total;
    }
  }
  o.pass = ok == total;
  o.detail = fmt(" %d/%d hold, max ratio/(1+t)^3 %.3f", ok, total, worst);
  return o;
}

Outcome tiling() {
  Outcome o{true, ""};
  for (int k = 1; k <= 8; ++k) {
    const long long expect = 1LL * k * k * k * k + 2LL * k * k * k - 2LL * k * k;
    if (static_cast<long long>(build_pk(k).cuts.size()) != expect) {
      o.pass = false;
      o.detail += fmt(" count mismatch at k=%d", k);
    }
  }
  for (int k : {2, 3, 4}) {
    const Estimate g = config_gap(pk_configuration(k), mc(2'000'000, 400 + static_cast<std::uint64_t>(k)));
    o.pass = o.pass && g.value <= upper_bound_closed(k) + 3 * g.std_error;
    o.detail += fmt(" k=%d %.4f<=%.4f", k, g.value, upper_bound_closed(k));
  }
  return o;
}

Outcome covering_lower_bound() {
  Outcome o{true, ""};
  int ok = 0;
  double min_sum = 1e300;
  for (const auto& run : harness().runs) {
    const auto r = lower_bound_check(run.config, OptimizerConfig{}.verify_points, run.verify_seed);
    ok += r.holds;
    min_sum = std::min(min_sum, r.sum);
  }
  o.pass = ok == static_cast<int>(harness().runs.size());
  o.detail = fmt(" %d/%zu hold, min sum %.4f vs %.4f", ok, harness().runs.size(), min_sum, 2 / (std::numbers::pi * std::numbers::pi));
  return o;
}

Outcome lkor_bracket() {
  Outcome o{true, ""};
  const auto& h = harness();
  const double lo = lkor_lower_bound(), hi = lkor_upper_bound();
  for (const auto* list : {&h.optimized, &h.lattice})
    for (const auto& r : *list) o.pass = o.pass && r.sqrt_n_gap >= lo && r.sqrt_n_gap <= hi;
  const auto& opt = h.optimized.back();
  const auto& lat = h.lattice.back();
  o.pass = o.pass && opt.n == 352 && opt.sqrt_n_gap < lat.sqrt_n_gap;
  for (std::size_t i = 0; i < h.optimized.size(); ++i)
    o.detail += fmt(" n=%lld opt %.3f lat %.3f", h.optimized[i].n, h.optimized[i].sqrt_n_gap, h.lattice[i].sqrt_n_gap);
  return o;
}

Outcome subdivision() {
  Outcome o{true, ""};
  OptimizerConfig oc;
  oc.budget = 5'000;
  oc.coverage_points = 20'000;
  oc.verify_points = 50'000;
  oc.gap_samples = 20'000;
  int ok = 0;
  for (int rep = 0; rep < 3; ++rep) {
    const auto cfg = estimate_vn(4 + 2 * rep, 700 + static_cast<std::uint64_t>(rep), oc).config;
    const Estimate g1 = config_gap(cfg, mc(2'000'000, 710 + static_cast<std::uint64_t>(rep)));
    const Estimate g2 = config_gap(subdivide_scale(cfg, 2), mc(2'000'000, 720 + static_cast<std::uint64_t>(rep)));
    const double want = 24.0 / 64.0 * g1.value, se = std::hypot(g2.std_error, 24.0 / 64.0 * g1.std_error);
    const bool hit = std::abs(g2.value - want) <= 3 * se;
    ok += hit;
    o.detail += fmt(" %.4f vs %.4f (%.1f sigma)", g2.value, want, std::abs(g2.value - want) / se);
  }
  o.pass = ok == 3;
  // Control: a single small ball, whose 24 copies are pairwise disjoint.
  BallConfiguration one;
  one.balls = {KoranyiBall(HPoint(0.5, 0.5, 0.5), 0.1)};
  const Estimate c1 = config_gap(one, mc(2'000'000, 730)), c2 = config_gap(subdivide_scale(one, 2), mc(2'000'000, 731));
  o.detail += fmt("; disjoint control ratio %.4f vs %.4f", c2.value / c1.value, 24.0 / 64.0);
  return o;
}

Outcome fefferman() {
  const double exact = std::pow(4.0, 2.0 / 3.0) * std::numbers::pi * std::numbers::pi;
  const QuadratureSpec q;
  const double v = fefferman_integral(domains::ball(), StarShapedBoundary{}, q);
  const double v3 = fefferman_integral(domains::ball().scaled(3.0), StarShapedBoundary{}, q);
  const double rel = std::abs(v - exact) / exact, inv = std::abs(v3 - v) / v;
  return {rel <= 1e-3 && inv <= 1e-8, fmt(" %.5f vs %.5f (rel %.2e), 3rho rel %.2e", v, exact, rel, inv)};
}

Outcome darboux() {
  const OdeSpec spec;
  const DarbouxMap D = straighten_flow(domains::normalized_model(1.0, cplx(0, 1), 0.0), 1.0);
  Eigen::Matrix3d E = Eigen::Matrix3d::Identity();
  E(1, 2) = -0.5;
  const double jac = (D.jacobian({0, 0, 0}) - E).cwiseAbs().maxCoeff();

  double ident = 0.0;
  Rng rng(900);
  for (double l : {0.5, 1.0, 2.0}) {
    const DarbouxMap M = straighten_flow(domains::siegel(l), l);
    const ThetaMap th(domains::siegel(l), C2{0.0, 0.0});
    for (int t = 0; t < 10; ++t) {
      const R3 p{rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1)};
      const auto e = M.evaluate(p);
      for (std::size_t i = 0; i < 3; ++i) ident = std::max(ident, std::abs(e.pi[i] - p[i]));
      ident = std::max(ident, std::abs(e.alpha - 1.0));
      const C2 z{cplx(rng.uniform(-0.05, 0.05), rng.uniform(-0.05, 0.05)), cplx(rng.uniform(-0.05, 0.05), rng.uniform(0.0, 0.05))};
      const C2 tz = th(z);
      ident = std::max(ident, std::max(std::abs(tz[0] - z[0]), std::abs(tz[1] - z[1])));
    }
  }
  const double ident_tol = 10 * std::max(spec.abs_tol, spec.rel_tol);

  const DarbouxMap P = straighten_flow(domains::normalized_model(1.0, cplx(0.3, 0.7), 0.4), 1.0);
  double contact = 0.0;
  for (int t = 0; t < 20; ++t) contact = std::max(contact, P.contact_residual({rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1)}));

  return {jac <= 1e-6 && ident <= ident_tol && contact < 1e-5,
          fmt(" jacobian err %.2e, identity err %.2e (tol %.0e), contact %.2e", jac, ident, ident_tol, contact)};
}

Outcome model_demos() {
  Outcome o{true, ""};
  const auto lem = lemniscate_demo({4, 8, 16, 32});
  bool sandwich = true;
  for (const auto& r : lem.rows) sandwich = sandwich && r.sandwich_ok;
  const auto bi = bidisc_demo({2, 4, 8, 16}, BidiscScheme{}, 1'000'000, 1000);
  bool covers = true;
  for (const auto& r : bi.rows) covers = covers && r.covers;
  o.pass = sandwich && covers && lem.trend.verdict == TrendVerdict::converging_positive &&
           bi.trend.verdict == TrendVerdict::converging_zero;
  o.detail = fmt(" sandwich %s, lemniscate %s (slope %.3f), bidisc %s (slope %.3f)", sandwich ? "ok" : "broken",
                 to_string(lem.trend.verdict).c_str(), lem.trend.slope, to_string(bi.trend.verdict).c_str(), bi.trend.slope);
  return o;
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    std::ifstream f(e.path(), std::ios::binary);
    out[e.path().filename().string()] = {std::istreambuf_iterator<char>(f), {}};
  }
  return out;
}

Outcome determinism() {
  const std::vector<std::vector<std::string>> cmds = {
      {"volumes", "--delta", "0.7", "--samples", "200000"},
      {"diagram", "--random", "6", "--points", "500", "--pixels", "40", "--samples", "100000"},
      {"tile", "--k", "3", "--gap", "--samples", "200000"},
      {"optimize", "--n", "6", "--budget", "2000", "--coverage-points", "20000", "--verify-points", "20000", "--samples", "50000"},
      {"fefferman", "--domain", "siegel", "--n-graph", "6", "--density-samples", "20"},
      {"darboux", "--domain", "perturbed"},
      {"demo", "lemniscate", "--n", "4,8", "--format", "csv"},
      {"demo", "bidisc", "--m", "1,2,4", "--samples", "100000"},
  };
  const fs::path root = fs::temp_directory_path() / "kortile_acceptance_determinism";
  fs::remove_all(root);
  int same = 0, files = 0;
  std::string bad;
  for (std::size_t i = 0; i < cmds.size(); ++i) {
    std::array<std::map<std::string, std::string>, 2> snaps;
    for (int run = 0; run < 2; ++run) {
      std::vector<std::string> a{"kortile"};
      a.insert(a.end(), cmds[i].begin(), cmds[i].end());
      const fs::path dir = root / fmt("%zu", i);
      fs::remove_all(dir);
      a.insert(a.end(), {"--seed", "77", "-o", dir.string()});
      if (run == 1) a.insert(a.end(), {"--threads", "2"});
      std::vector<const char*> argv;
      for (const auto& s : a) argv.push_back(s.c_str());
      std::ostringstream err;
      if (cli::dispatch(static_cast<int>(argv.size()), argv.data(), err) != 0) bad += " " + cmds[i][0] + " failed:" + err.str();
      snaps[run] = snapshot(dir);
    }
    for (const auto& [name, bytes] : snaps[0]) {
      ++files;
      const auto it = snaps[1].find(name);
      if (it != snaps[1].end() && it->second == bytes) {
        ++same;
      } else {
        bad += " " + name;
      }
    }
  }
  fs::remove_all(root);
  return {bad.empty() && same == files, fmt(" %d/%d files identical", same, files) + bad};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"closed-form volumes", closed_form_volumes},
      {"gap functional identity", gap_identity},
      {"doubling property", doubling},
      {"tiling construction", tiling},
      {"covering lower bound", covering_lower_bound},
      {"l_Kor bracketing", lkor_bracket},
      {"subdivision scaling", subdivision},
      {"Fefferman integral", fefferman},
      {"Darboux checks", darboux},
      {"model demos", model_demos},
      {"determinism", determinism},
  };
  std::set<int> chosen, expected;
  for (int i = 1; i < argc; ++i) {
    if (std::string(argv[i]) == "--expect-fail" && i + 1 < argc) {
      expected.insert(std::atoi(argv[++i]));
    } else {
      chosen.insert(std::atoi(argv[i]));
    }
  }
  int failed = 0, known = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!chosen.empty() && !chosen.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string(" exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s %2d %s:%s [%.1fs]\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first.c_str(), o.detail.c_str(), secs);
    std::fflush(stdout);
    if (!o.pass) expected.count(id) ? ++known : ++failed;
  }
  std::printf("%d criteria failed unexpectedly, %d known failures\n", failed, known);
  return failed == 0 ? 0 : 1;
}
