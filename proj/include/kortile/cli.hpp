// SPDX-License-Identifier: MIT
#pragma once

#include <cstdint>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "kortile/domain_maps.hpp"
#include "kortile/io.hpp"
#include "kortile/model_gallery.hpp"
#include "kortile/power_diagram.hpp"
#include "kortile/siegel.hpp"
#include "kortile/tilings.hpp"

namespace kortile::cli {

enum ExitCode : int { kOk = 0, kNumeric = 1, kUsage = 2 };

struct Common {
  std::uint64_t seed = 1;
  std::uint64_t samples = 1'000'000;
  std::string output_dir = "kortile-out";
  std::string format = "json";
  unsigned threads = default_thread_count();
  int grid = 0;

  void add(CLI::App& app, std::uint64_t default_samples) {
    samples = default_samples;
    app.add_option("--seed", seed, "Master seed")->capture_default_str();
    app.add_option("--samples", samples, "Monte-Carlo sample budget")->capture_default_str();
    app.add_option("--output-dir,-o", output_dir, "Directory for outputs and manifest.json")->capture_default_str();
    app.add_option("--format", format, "Table format")->check(CLI::IsMember({"json", "csv"}))->capture_default_str();
    app.add_option("--threads", threads, "Worker threads (results do not depend on it)")->check(CLI::PositiveNumber);
    app.add_option("--grid-resolution", grid, "Use a midpoint grid with this many points per axis instead of Monte-Carlo");
  }

  [[nodiscard]] IntegrationSpec spec(std::uint64_t stream = 0) const {
    IntegrationSpec s;
    s.samples = samples;
    s.seed = stream == 0 ? seed : derive_seed(seed, stream);
    s.threads = threads;
    if (grid > 0) {
      s.method = IntegrationMethod::grid;
      s.grid_resolution = grid;
    }
    return s;
  }

  void echo(nlohmann::json& cfg) const {
    cfg["seed"] = seed;
    cfg["samples"] = samples;
    cfg["format"] = format;
    cfg["output_dir"] = output_dir;
    if (grid > 0) cfg["grid_resolution"] = grid;
  }
};

inline nlohmann::json estimate_json(const Estimate& e) { return {{"value", e.value}, {"stderr", e.std_error}}; }

inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ValidationError("cannot read " + path);
  try {
    return nlohmann::json::parse(f);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("invalid JSON in " + path + ": " + e.what());
  }
}

/// Writes a record list as JSON, or as CSV when the format asks for it.
inline void emit_table(io::RunOutput& out, const Common& c, const std::string& stem, const std::vector<std::string>& header,
                       const std::vector<std::vector<double>>& rows) {
  if (c.format == "csv") {
    io::CsvTable t(header);
    for (const auto& r : rows) t.row(r);
    out.text(stem + ".csv", t.str());
  } else {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& r : rows) {
      nlohmann::json o;
      for (std::size_t i = 0; i < header.size(); ++i) o[header[i]] = r[i];
      j.push_back(o);
    }
    out.json(stem + ".json", j);
  }
}

// ---------------------------------------------------------------------------

inline int run_volumes(const Common& c, double delta) {
  io::RunOutput out(c.output_dir, "volumes");
  c.echo(out.config());
  out.config()["delta"] = delta;
  const FPolyhedron P(SiegelDomain(1.0), {Cut(BoundaryPoint(), delta)});
  const Estimate cut = gap_volume_mc(P, c.spec(1));
  const Estimate ball = koranyi_ball_volume_mc(std::sqrt(delta), c.spec(2));
  out.json("volumes.json", {{"delta", delta},
                            {"cut_volume", estimate_json(cut)},
                            {"cut_volume_closed", cut_volume_closed(delta)},
                            {"koranyi_ball_volume", estimate_json(ball)},
                            {"koranyi_ball_volume_closed", koranyi_ball_volume_closed(std::sqrt(delta))}});
  out.finish();
  return kOk;
}

inline std::vector<KoranyiBall> random_balls(int n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<KoranyiBall> b;
  for (int i = 0; i < n; ++i)
    b.emplace_back(HPoint(rng.uniform(0, 1), rng.uniform(0, 1), rng.uniform(0, 1)), rng.uniform(0.2, 0.4));
  return b;
}

inline int run_diagram(const Common& c, const std::string& balls_path, int random_n, double slice_x1, int points, int pixels) {
  io::RunOutput out(c.output_dir, "diagram");
  c.echo(out.config());
  std::vector<KoranyiBall> balls;
  if (!balls_path.empty()) {
    balls = config_from_json(read_json_file(balls_path)).balls;
    out.config()["balls"] = balls_path;
  } else {
    require(random_n >= 1, "--random needs at least one ball");
    balls = random_balls(random_n, derive_seed(c.seed, 0xBA11));
    out.config()["random"] = random_n;
  }
  require(!balls.empty(), "the diagram needs at least one ball");
  require(points >= 0 && pixels >= 2, "invalid sample counts");
  out.config()["slice_x1"] = slice_x1;
  out.config()["points"] = points;
  out.config()["pixels"] = pixels;
  const HPowerDiagram diag(balls);

  double lo[3] = {1e300, 1e300, 1e300}, hi[3] = {-1e300, -1e300, -1e300};
  for (const auto& b : balls) {
    const AxisBox a = ball_aabb(b);
    for (int i = 0; i < 3; ++i) lo[i] = std::min(lo[i], a.lo[static_cast<std::size_t>(i)]), hi[i] = std::max(hi[i], a.hi[static_cast<std::size_t>(i)]);
  }
  Rng rng(derive_seed(c.seed, 0xD1A6));
  io::CsvTable cells({"x1", "y1", "x2", "cell_index"});
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < points; ++i) {
    const HPoint z(rng.uniform(lo[0], hi[0]), rng.uniform(lo[1], hi[1]), rng.uniform(lo[2], hi[2]));
    const auto cell = hcell_classify(z, diag);
    const double idx = cell ? static_cast<double>(*cell) : -1.0;
    rows.push_back({z.x1(), z.y1(), z.x2(), idx});
  }
  for (const auto& r : rows) cells.row(r);
  out.text("cells.csv", cells.str());

  io::Svg svg(lo[1], hi[1], lo[2], hi[2]);
  const double dy = (hi[1] - lo[1]) / pixels, dx2 = (hi[2] - lo[2]) / pixels;
  for (int a = 0; a < pixels; ++a)
    for (int b = 0; b < pixels; ++b) {
      const HPoint z(slice_x1, lo[1] + (a + 0.5) * dy, lo[2] + (b + 0.5) * dx2);
      if (const auto cell = hcell_classify(z, diag)) svg.rect(lo[1] + a * dy, lo[2] + b * dx2, dy, dx2, io::Svg::color(*cell));
    }
  out.text("slice.svg", svg.str());

  const Estimate gap = gap_functional(diag, c.spec(3));
  out.json("diagram.json", {{"balls", balls.size()}, {"gap_functional", estimate_json(gap)}, {"slice_x1", slice_x1}});
  out.finish();
  return kOk;
}

inline int run_tile(const Common& c, int k, bool with_gap) {
  io::RunOutput out(c.output_dir, "tile");
  c.echo(out.config());
  out.config()["k"] = k;
  out.config()["gap"] = with_gap;
  const FPolyhedron P = build_pk(k);
  const BallConfiguration cfg = pk_configuration(k);
  out.json("pk_config.json", config_to_json(cfg));
  nlohmann::json rec{{"k", k},
                     {"cuts", P.cuts.size()},
                     {"expected_cuts", sigma_k_count(k)},
                     {"cut_size", pk_cut_size(k)},
                     {"upper_bound", upper_bound_closed(k)},
                     {"config_path", "pk_config.json"}};
  if (with_gap) {
    const Estimate g = config_gap(cfg, c.spec(1));
    rec["gap"] = g.value;
    rec["stderr"] = g.std_error;
    rec["sqrt_n_gap"] = std::sqrt(static_cast<double>(P.cuts.size())) * g.value;
  }
  out.json("tile.json", rec);
  out.finish();
  return kOk;
}

inline int run_bounds(const Common& c, int k) {
  io::RunOutput out(c.output_dir, "bounds");
  c.echo(out.config());
  out.config()["k"] = k;
  require(k >= 1, "k must be positive");
  out.json("bounds.json", {{"k", k},
                           {"n", sigma_k_count(k)},
                           {"lkor_lower", lkor_lower_bound()},
                           {"lkor_upper", lkor_upper_bound()},
                           {"upper_bound", upper_bound_closed(k)},
                           {"cut_size", pk_cut_size(k)}});
  out.finish();
  return kOk;
}

struct OptimizeFlags {
  OptimizerConfig cfg;
  void add(CLI::App& app) {
    app.add_option("--budget", cfg.budget, "Proposals per annealing chain")->capture_default_str();
    app.add_option("--restarts", cfg.restarts, "Independent annealing chains")->capture_default_str();
    app.add_option("--samples-per-ball", cfg.samples_per_ball)->capture_default_str();
    app.add_option("--coverage-points", cfg.coverage_points)->capture_default_str();
    app.add_option("--verify-points", cfg.verify_points)->capture_default_str();
    app.add_option("--margin", cfg.coverage_margin)->capture_default_str();
    app.add_option("--t-start", cfg.t_start)->capture_default_str();
    app.add_option("--t-end", cfg.t_end)->capture_default_str();
  }
};

inline nlohmann::json vn_json(const VnResult& r, const std::string& config_path) {
  nlohmann::json j = r.record;
  j["config_path"] = config_path;
  j["balls"] = r.config.balls.size();
  j["objective"] = r.objective;
  j["initial_objective"] = r.initial_objective;
  j["covered"] = r.coverage.covered;
  j["verify_seed"] = r.verify_seed;
  j["repaired"] = r.repaired;
  j["dropped"] = r.dropped;
  return j;
}

inline int run_optimize(const Common& c, long long n, OptimizerConfig cfg) {
  io::RunOutput out(c.output_dir, "optimize");
  c.echo(out.config());
  cfg.gap_samples = c.samples;
  cfg.threads = c.threads;
  out.config()["n"] = n;
  out.config()["optimizer"] = cfg;
  const VnResult r = estimate_vn(n, c.seed, cfg);
  const LowerBoundReport lb = lower_bound_check(r.config, cfg.verify_points, r.verify_seed);
  out.json("config.json", config_to_json(r.config));
  nlohmann::json rec = vn_json(r, "config.json");
  rec["sum_rad4"] = lb.sum;
  rec["covering_bound_holds"] = lb.holds;
  out.json("record.json", rec);
  out.finish();
  return kOk;
}

inline int run_asymptotics(const Common& c, int k_max, OptimizerConfig cfg) {
  io::RunOutput out(c.output_dir, "asymptotics");
  c.echo(out.config());
  cfg.gap_samples = c.samples;
  cfg.threads = c.threads;
  out.config()["k_max"] = k_max;
  out.config()["optimizer"] = cfg;
  const AsymptoticsResult res = asymptotics_harness(k_max, c.seed, cfg);
  nlohmann::json recs = nlohmann::json::array();
  std::vector<std::vector<double>> table;
  for (std::size_t i = 0; i < res.runs.size(); ++i) {
    const std::string path = "config_k" + std::to_string(i + 1) + ".json";
    out.json(path, config_to_json(res.runs[i].config));
    recs.push_back({{"k", i + 1}, {"lattice", res.lattice[i]}, {"optimized", vn_json(res.runs[i], path)}});
    const auto& L = res.lattice[i];
    const auto& O = res.optimized[i];
    table.push_back({static_cast<double>(i + 1), static_cast<double>(L.n), L.gap, L.gap_stderr, L.sqrt_n_gap, O.gap, O.gap_stderr, O.sqrt_n_gap});
  }
  out.json("asymptotics.json", {{"lkor_lower", lkor_lower_bound()}, {"lkor_upper", lkor_upper_bound()}, {"records", recs}});
  emit_table(out, c, "asymptotics_table",
             {"k", "n", "lattice_gap", "lattice_stderr", "lattice_sqrt_n_gap", "optimized_gap", "optimized_stderr", "optimized_sqrt_n_gap"},
             table);
  out.finish();
  return kOk;
}

// ---------------------------------------------------------------------------

struct DomainFlags {
  std::string domain = "ball";
  std::string json_path;
  double lambda = 1.0;
  double radius = 1.0;
  double mu_re = 0.0, mu_im = 0.0, nu = 0.0;
  double eps = 0.1;

  void add(CLI::App& app, const std::vector<std::string>& allowed) {
    app.add_option("--domain", domain, "Defining function")->check(CLI::IsMember(allowed))->capture_default_str();
    app.add_option("--json", json_path, "Custom domain file (for --domain custom-json)");
    app.add_option("--lambda", lambda, "Siegel/model parameter")->capture_default_str();
    app.add_option("--radius", radius, "Ball radius")->capture_default_str();
    app.add_option("--mu-re", mu_re)->capture_default_str();
    app.add_option("--mu-im", mu_im)->capture_default_str();
    app.add_option("--nu", nu)->capture_default_str();
    app.add_option("--eps", eps, "Perturbation size")->capture_default_str();
  }

  void echo(nlohmann::json& cfg) const {
    cfg["domain"] = domain;
    if (!json_path.empty()) cfg["json"] = json_path;
    cfg["lambda"] = lambda;
    cfg["radius"] = radius;
    cfg["mu"] = {mu_re, mu_im};
    cfg["nu"] = nu;
    cfg["eps"] = eps;
  }
};

/// Custom domains: {"polynomial": [{coef, powers}, ...], and either
/// "star_center": [x1, y1, x2, y2] or "graph_patch": {"lo": [..3], "hi": [..3]},
/// optionally "point": [x1, y1, x2, y2] for darboux}.
struct CustomDomain {
  DefiningFunction rho;
  nlohmann::json doc;
};

inline CustomDomain load_custom(const std::string& path) {
  require(!path.empty(), "--domain custom-json needs --json FILE");
  nlohmann::json j = read_json_file(path);
  require(j.is_object() && j.contains("polynomial"), "custom domain needs a \"polynomial\" entry");
  try {
    return {DefiningFunction::polynomial(j.at("polynomial").get<Polynomial4>()), j};
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("invalid polynomial: ") + e.what());
  }
}

inline R4 json_r4(const nlohmann::json& j, const char* what) {
  require(j.is_array() && j.size() == 4, std::string(what) + " must have 4 entries");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
}

inline R3 json_r3(const nlohmann::json& j, const char* what) {
  require(j.is_array() && j.size() == 3, std::string(what) + " must have 3 entries");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

inline int run_fefferman(const Common& c, const DomainFlags& d, QuadratureSpec q, int density_samples) {
  io::RunOutput out(c.output_dir, "fefferman");
  c.echo(out.config());
  d.echo(out.config());
  out.config()["quadrature"] = {{"n_eta", q.n_eta}, {"n_phi", q.n_phi}, {"n_graph", q.n_graph}};
  out.config()["density_samples"] = density_samples;

  std::optional<DefiningFunction> rho;
  std::optional<StarShapedBoundary> star;
  std::optional<GraphPatch> patch;
  if (d.domain == "ball") {
    rho = domains::ball(d.radius);
    star = StarShapedBoundary{C2{0.0, 0.0}, 2.0 * d.radius + 1.0};
  } else if (d.domain == "siegel") {
    rho = domains::siegel(d.lambda);
    patch = GraphPatch{};
  } else {
    CustomDomain cd = load_custom(d.json_path);
    rho = cd.rho;
    if (cd.doc.contains("graph_patch")) {
      patch = GraphPatch{json_r3(cd.doc["graph_patch"].at("lo"), "graph_patch.lo"), json_r3(cd.doc["graph_patch"].at("hi"), "graph_patch.hi")};
    } else {
      const R4 ctr = cd.doc.contains("star_center") ? json_r4(cd.doc["star_center"], "star_center") : R4{0, 0, 0, 0};
      star = StarShapedBoundary{to_complex(ctr), cd.doc.value("r_max", 10.0)};
    }
  }
  const double integral = star ? fefferman_integral(*rho, *star, q) : fefferman_integral(*rho, *patch, q);

  io::CsvTable t({"x1", "y1", "x2", "y2", "density"});
  Rng rng(derive_seed(c.seed, 0xFEFF));
  for (int i = 0; i < density_samples; ++i) {
    R4 x{};
    if (star) {
      R4 u{rng.normal(), rng.normal(), rng.normal(), rng.normal()};
      const double n = std::sqrt(u[0] * u[0] + u[1] * u[1] + u[2] * u[2] + u[3] * u[3]);
      for (auto& v : u) v /= n;
      const double r = radial_root(*rho, star->center, u, star->r_max);
      const R4 c0 = to_real(star->center);
      for (std::size_t k = 0; k < 4; ++k) x[k] = c0[k] + r * u[k];
    } else {
      const R3 zp{rng.uniform(patch->lo[0], patch->hi[0]), rng.uniform(patch->lo[1], patch->hi[1]), rng.uniform(patch->lo[2], patch->hi[2])};
      x = {zp[0], zp[1], zp[2], graph_height(*rho, zp)};
    }
    t.row({x[0], x[1], x[2], x[3], fefferman_density(*rho, to_complex(x))});
  }
  out.json("fefferman.json", {{"integral", integral}, {"boundary", star ? "star" : "graph_patch"}});
  out.text("density_samples.csv", t.str());
  out.finish();
  return kOk;
}

inline int run_darboux(const Common& c, const DomainFlags& d, double probe_radius, int pairs, int boxes, const OdeSpec& ode,
                       int contact_points) {
  io::RunOutput out(c.output_dir, "darboux");
  c.echo(out.config());
  d.echo(out.config());
  out.config()["probe_radius"] = probe_radius;
  out.config()["pairs"] = pairs;
  out.config()["boxes"] = boxes;
  out.config()["contact_points"] = contact_points;
  out.config()["ode"] = {{"abs_tol", ode.abs_tol}, {"rel_tol", ode.rel_tol}, {"newton_tol", ode.newton_tol}, {"newton_max", ode.newton_max}};

  std::optional<DefiningFunction> rho;
  C2 q{0.0, 0.0};
  if (d.domain == "siegel") {
    rho = domains::siegel(d.lambda);
  } else if (d.domain == "model") {
    rho = domains::normalized_model(d.lambda, cplx(d.mu_re, d.mu_im), d.nu);
  } else if (d.domain == "perturbed") {
    rho = domains::perturbed_siegel(d.eps);
  } else if (d.domain == "ball") {
    rho = domains::ball(d.radius);
    q = C2{0.0, cplx(0.0, -d.radius)};
  } else {
    CustomDomain cd = load_custom(d.json_path);
    rho = cd.rho;
    if (cd.doc.contains("point")) q = to_complex(json_r4(cd.doc["point"], "point"));
  }
  const double radius = std::max(probe_radius, 0.25);
  const ThetaMap th(*rho, q, radius, ode);
  const DarbouxMap& D = th.darboux();
  const Eigen::Matrix3d J = D.jacobian({0, 0, 0});
  Rng rng(derive_seed(c.seed, 0xDA4B));
  double worst = 0.0;
  for (int i = 0; i < contact_points; ++i) {
    const R3 p{rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1)};
    worst = std::max(worst, D.contact_residual(p));
  }
  const ThetaProbe pr = probe_theta(th, probe_radius, pairs, boxes, derive_seed(c.seed, 0x7E7A));
  nlohmann::json jac = nlohmann::json::array();
  for (int i = 0; i < 3; ++i) jac.push_back({J(i, 0), J(i, 1), J(i, 2)});
  const auto pt = [](const C2& z) { const R4 x = to_real(z); return nlohmann::json{x[0], x[1], x[2], x[3]}; };
  out.json("darboux.json", {{"lambda", th.lambda()},
                            {"M", th.frame().M},
                            {"grad_norm", th.frame().grad_norm},
                            {"jacobian_at_origin", jac},
                            {"contact_residual_max", worst},
                            {"probe",
                             {{"radius", pr.radius},
                              {"pairs", pr.pairs},
                              {"ratio", pr.ratio},
                              {"worst_z", pt(pr.worst_z)},
                              {"worst_w", pt(pr.worst_w)},
                              {"volume_ratio", {pr.volume_min, pr.volume_max}},
                              {"boundary_ratio", {pr.boundary_min, pr.boundary_max}}}}});
  out.finish();
  return kOk;
}

inline int run_demo_lemniscate(const Common& c, const std::vector<int>& n_list, bool svg_out) {
  io::RunOutput out(c.output_dir, "demo lemniscate");
  c.echo(out.config());
  out.config()["n"] = n_list;
  out.config()["svg"] = svg_out;
  const LemniscateResult res = lemniscate_demo(n_list, 2000, 4000, c.threads, c.seed);
  std::vector<std::vector<double>> table;
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : res.rows) {
    table.push_back({static_cast<double>(r.n), r.removed_area, r.n * r.removed_area, r.annulus_lo, r.annulus_hi, r.sandwich_ok ? 1.0 : 0.0,
           r.area_in_bracket ? 1.0 : 0.0});
    rows.push_back({{"n", r.n}, {"removed_area", r.removed_area}, {"annulus", {r.annulus_lo, r.annulus_hi}}, {"sandwich_ok", r.sandwich_ok},
                    {"area_in_bracket", r.area_in_bracket}});
  }
  emit_table(out, c, "lemniscate_table", {"n", "removed_area", "n_times_area", "annulus_lo", "annulus_hi", "sandwich_ok", "area_in_bracket"},
             table);
  out.json("lemniscate.json", {{"rows", rows}, {"trend", res.trend}});
  if (svg_out) {
    const int n = n_list.back();
    io::Svg s(-1.05, 1.05, -1.05, 1.05);
    s.circle(0, 0, 1, "black");
    s.circle(0, 0, std::max(0.0, lemniscate_inner_radius(n)), "#59a14f");
    s.circle(0, 0, std::max(0.0, lemniscate_outer_radius(n)), "#e15759");
    // Boundary of P_n: the inner arcs of the removed discs.
    for (int k = 0; k < 2 * n; ++k) {
      std::vector<std::pair<double, double>> arc;
      const cplx ck = std::polar(1.0, k * std::numbers::pi / n);
      for (int j = 0; j <= 200; ++j) {
        const cplx z = ck + std::polar(std::numbers::pi / n, std::arg(ck) + std::numbers::pi / 2 + std::numbers::pi * j / 200.0);
        if (std::abs(z) <= 1.0) arc.emplace_back(z.real(), z.imag());
      }
      if (arc.size() > 1) s.polyline(arc, "#4e79a7");
    }
    out.text("lemniscate.svg", s.str());
  }
  out.finish();
  return kOk;
}

inline int run_demo_bidisc(const Common& c, const std::vector<int>& m_list, double overlap) {
  io::RunOutput out(c.output_dir, "demo bidisc");
  c.echo(out.config());
  out.config()["m"] = m_list;
  out.config()["overlap"] = overlap;
  const BidiscResult res = bidisc_demo(m_list, BidiscScheme{overlap}, c.samples, c.seed, c.threads);
  std::vector<std::vector<double>> table;
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : res.rows) {
    const double s = std::sqrt(static_cast<double>(r.n));
    table.push_back({static_cast<double>(r.m), static_cast<double>(r.n), r.delta, r.gap.value, r.gap.std_error, s * r.gap.value, r.covers ? 1.0 : 0.0});
    rows.push_back({{"m", r.m}, {"n", r.n}, {"delta", r.delta}, {"gap", estimate_json(r.gap)}, {"covers", r.covers}});
  }
  emit_table(out, c, "bidisc_table", {"m", "n", "delta", "gap", "stderr", "sqrt_n_gap", "covers"}, table);
  out.json("bidisc.json", {{"rows", rows}, {"trend", res.trend}});
  out.finish();
  return kOk;
}

// ---------------------------------------------------------------------------

/// Parses argv and runs one subcommand. Returns 0 on success, 2 on usage or
/// validation errors, 1 on numeric failures.
inline int dispatch(int argc, const char* const* argv, std::ostream& err = std::cerr) {
  CLI::App app{"Heisenberg tilings, Siegel polyhedra and strongly pseudoconvex domain maps", "kortile"};
  app.require_subcommand(1);
  app.set_version_flag("--version", io::kVersion);

  Common c_vol, c_dia, c_tile, c_bnd, c_opt, c_asy, c_fef, c_dar, c_lem, c_bid;

  auto* vol = app.add_subcommand("volumes", "Monte-Carlo and closed-form volumes of a cut and a Koranyi ball");
  double delta = 1.0;
  vol->add_option("--delta", delta, "Cut size")->required()->check(CLI::PositiveNumber);
  c_vol.add(*vol, 1'000'000);

  auto* dia = app.add_subcommand("diagram", "Horizontal power diagram: classified samples, slice SVG, gap functional");
  std::string balls_path;
  int random_n = 8, points = 10'000, pixels = 200;
  double slice_x1 = 0.5;
  dia->add_option("--balls", balls_path, "JSON list of {center, radius}");
  dia->add_option("--random", random_n, "Number of random balls when --balls is absent")->capture_default_str();
  dia->add_option("--slice-x1", slice_x1, "x1 of the rendered slice")->capture_default_str();
  dia->add_option("--points", points, "Classified sample points")->capture_default_str();
  dia->add_option("--pixels", pixels, "Slice raster resolution")->capture_default_str();
  c_dia.add(*dia, 200'000);

  auto* tile = app.add_subcommand("tile", "Build the lattice polyhedron P_k");
  int k_tile = 2;
  bool tile_gap = false;
  tile->add_option("--k", k_tile)->required()->check(CLI::Range(1, 64));
  tile->add_flag("--gap", tile_gap, "Also estimate the gap");
  c_tile.add(*tile, 1'000'000);

  auto* bnd = app.add_subcommand("bounds", "Closed-form bounds for P_k and the tiling constant");
  int k_bnd = 2;
  bnd->add_option("--k", k_bnd)->required()->check(CLI::Range(1, 1'000'000));
  c_bnd.add(*bnd, 0);

  auto* opt = app.add_subcommand("optimize", "Anneal a covering of the unit box by n Koranyi balls");
  long long n_opt = 1;
  OptimizeFlags of;
  opt->add_option("--n", n_opt)->required()->check(CLI::PositiveNumber);
  of.add(*opt);
  c_opt.add(*opt, 1'000'000);

  auto* asy = app.add_subcommand("asymptotics", "Lattice and optimised sqrt(n) * gap for k = 1..k_max");
  int k_max = 4;
  OptimizeFlags af;
  asy->add_option("--k-max", k_max)->capture_default_str()->check(CLI::Range(2, 8));
  af.add(*asy);
  c_asy.add(*asy, 1'000'000);

  auto* fef = app.add_subcommand("fefferman", "Fefferman boundary measure of a domain");
  DomainFlags df;
  QuadratureSpec qs;
  int density_samples = 200;
  df.add(*fef, {"ball", "siegel", "custom-json"});
  fef->add_option("--n-eta", qs.n_eta)->capture_default_str();
  fef->add_option("--n-phi", qs.n_phi)->capture_default_str();
  fef->add_option("--n-graph", qs.n_graph)->capture_default_str();
  fef->add_option("--density-samples", density_samples)->capture_default_str();
  c_fef.add(*fef, 0);

  auto* dar = app.add_subcommand("darboux", "Contact straightening and the Levi-polynomial probe near a boundary point");
  DomainFlags dd;
  dd.domain = "perturbed";
  OdeSpec ode;
  double probe_radius = 0.1;
  int pairs = 64, boxes = 3, contact_points = 20;
  dd.add(*dar, {"siegel", "model", "perturbed", "ball", "custom-json"});
  dar->add_option("--probe-radius", probe_radius)->capture_default_str()->check(CLI::PositiveNumber);
  dar->add_option("--pairs", pairs)->capture_default_str();
  dar->add_option("--boxes", boxes)->capture_default_str();
  dar->add_option("--contact-points", contact_points)->capture_default_str();
  dar->add_option("--ode-abs-tol", ode.abs_tol)->capture_default_str();
  dar->add_option("--ode-rel-tol", ode.rel_tol)->capture_default_str();
  dar->add_option("--newton-tol", ode.newton_tol)->capture_default_str();
  dar->add_option("--newton-max", ode.newton_max)->capture_default_str();
  c_dar.add(*dar, 0);

  auto* demo = app.add_subcommand("demo", "Worked examples");
  demo->require_subcommand(1);
  auto* lem = demo->add_subcommand("lemniscate", "Lemniscate polyhedra in the unit disc");
  std::vector<int> n_list{4, 8, 16, 32};
  bool lem_svg = false;
  lem->add_option("--n", n_list)->delimiter(',')->capture_default_str();
  lem->add_flag("--svg", lem_svg, "Also draw P_n for the last n");
  c_lem.add(*lem, 0);
  auto* bid = demo->add_subcommand("bidisc", "Diagonal cut scheme on the bidisc");
  std::vector<int> m_list{2, 4, 8, 16};
  double overlap = 1.1;
  bid->add_option("--m", m_list)->delimiter(',')->capture_default_str();
  bid->add_option("--overlap", overlap)->capture_default_str()->check(CLI::PositiveNumber);
  c_bid.add(*bid, 1'000'000);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help();
    return kOk;
  } catch (const CLI::CallForVersion&) {
    std::cout << io::kVersion << "\n";
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n\n" << app.help();
    return kUsage;
  }

  try {
    if (*vol) return run_volumes(c_vol, delta);
    if (*dia) return run_diagram(c_dia, balls_path, random_n, slice_x1, points, pixels);
    if (*tile) return run_tile(c_tile, k_tile, tile_gap);
    if (*bnd) return run_bounds(c_bnd, k_bnd);
    if (*opt) return run_optimize(c_opt, n_opt, of.cfg);
    if (*asy) return run_asymptotics(c_asy, k_max, af.cfg);
    if (*fef) return run_fefferman(c_fef, df, qs, density_samples);
    if (*dar) return run_darboux(c_dar, dd, probe_radius, pairs, boxes, ode, contact_points);
    if (*lem) return run_demo_lemniscate(c_lem, n_list, lem_svg);
    if (*bid) return run_demo_bidisc(c_bid, m_list, overlap);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << "\n";
    return kNumeric;
  } catch (const std::exception& e) {
    err << "failure: " << e.what() << "\n";
    return kNumeric;
  }
  err << app.help();
  return kUsage;
}

}  // namespace kortile::cli
