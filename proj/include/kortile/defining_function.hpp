// SPDX-License-Identifier: MIT
#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/special_functions/legendre.hpp>
#include <boost/math/tools/roots.hpp>
#include <nlohmann/json.hpp>

#include "kortile/common.hpp"
#include "kortile/siegel.hpp"

namespace kortile {

/// Real coordinates (x1, y1, x2, y2) of a point of C^2.
using R4 = std::array<double, 4>;
/// Real coordinates (x1, y1, x2) of the horizontal slice.
using R3 = std::array<double, 3>;

inline R4 to_real(const C2& z) { return {z[0].real(), z[0].imag(), z[1].real(), z[1].imag()}; }
inline C2 to_complex(const R4& x) { return {cplx(x[0], x[1]), cplx(x[2], x[3])}; }

struct Monomial {
  double coef = 0.0;
  std::array<int, 4> powers{};
};

/// Real polynomial in (x1, y1, x2, y2).
class Polynomial4 {
public:
  Polynomial4() = default;
  explicit Polynomial4(std::vector<Monomial> terms) : terms_(std::move(terms)) {
    for (const auto& t : terms_) {
      require(std::isfinite(t.coef), "polynomial coefficients must be finite");
      for (int p : t.powers) require(p >= 0, "polynomial exponents must be non-negative");
    }
  }

  [[nodiscard]] const std::vector<Monomial>& terms() const { return terms_; }

  /// Mixed partial derivative with multi-index d.
  [[nodiscard]] double derivative(const R4& x, const std::array<int, 4>& d) const {
    CompensatedSum s;
    for (const auto& t : terms_) {
      double v = t.coef;
      for (int i = 0; i < 4 && v != 0.0; ++i) {
        const int p = t.powers[static_cast<std::size_t>(i)], k = d[static_cast<std::size_t>(i)];
        if (k > p) {
          v = 0.0;
          break;
        }
        for (int j = 0; j < k; ++j) v *= p - j;
        for (int j = 0; j < p - k; ++j) v *= x[static_cast<std::size_t>(i)];
      }
      s += v;
    }
    return s.value();
  }

  [[nodiscard]] double operator()(const R4& x) const { return derivative(x, {0, 0, 0, 0}); }

  [[nodiscard]] R4 gradient(const R4& x) const {
    R4 g{};
    for (int i = 0; i < 4; ++i) {
      std::array<int, 4> d{};
      d[static_cast<std::size_t>(i)] = 1;
      g[static_cast<std::size_t>(i)] = derivative(x, d);
    }
    return g;
  }

  [[nodiscard]] Eigen::Matrix4d hessian(const R4& x) const {
    Eigen::Matrix4d H;
    for (int i = 0; i < 4; ++i)
      for (int j = i; j < 4; ++j) {
        std::array<int, 4> d{};
        ++d[static_cast<std::size_t>(i)];
        ++d[static_cast<std::size_t>(j)];
        H(i, j) = H(j, i) = derivative(x, d);
      }
    return H;
  }

  Polynomial4& add(double c, std::array<int, 4> p) {
    terms_.push_back({c, p});
    return *this;
  }

private:
  std::vector<Monomial> terms_;
};

inline void to_json(nlohmann::json& j, const Polynomial4& p) {
  j = nlohmann::json::array();
  for (const auto& t : p.terms()) j.push_back({{"coef", t.coef}, {"powers", t.powers}});
}

inline void from_json(const nlohmann::json& j, Polynomial4& p) {
  require(j.is_array(), "polynomial must be a list of {coef, powers} terms");
  std::vector<Monomial> terms;
  for (const auto& t : j) {
    require(t.is_object() && t.contains("coef") && t.contains("powers"), "polynomial term needs coef and powers");
    const auto& pw = t.at("powers");
    require(pw.is_array() && pw.size() == 4, "powers must list exponents of x1, y1, x2, y2");
    Monomial m;
    m.coef = t.at("coef").get<double>();
    for (std::size_t i = 0; i < 4; ++i) m.powers[i] = pw[i].get<int>();
    terms.push_back(m);
  }
  p = Polynomial4(std::move(terms));
}

/// A real function on C^2 with first and second derivatives, either supplied
/// analytically or by central differences with step h.
class DefiningFunction {
public:
  using Value = std::function<double(const R4&)>;
  using Gradient = std::function<R4(const R4&)>;
  using Hessian = std::function<Eigen::Matrix4d(const R4&)>;

  explicit DefiningFunction(Value v, double h = 1e-4) : value_(std::move(v)), h_(h) {
    require(static_cast<bool>(value_), "defining function needs a value");
    require(h > 0.0 && h < 1.0, "finite-difference step must lie in (0, 1)");
  }
  DefiningFunction(Value v, Gradient g, Hessian H) : value_(std::move(v)), grad_(std::move(g)), hess_(std::move(H)) {
    require(value_ && grad_ && hess_, "analytic defining function needs value, gradient and Hessian");
  }

  static DefiningFunction polynomial(const Polynomial4& p) {
    return {[p](const R4& x) { return p(x); }, [p](const R4& x) { return p.gradient(x); }, [p](const R4& x) { return p.hessian(x); }};
  }

  [[nodiscard]] bool analytic() const { return static_cast<bool>(grad_); }
  [[nodiscard]] double step() const { return h_; }

  /// The same function with derivatives taken by central differences.
  [[nodiscard]] DefiningFunction finite_difference(double h = 1e-4) const { return DefiningFunction(value_, h); }

  /// c * rho for c > 0.
  [[nodiscard]] DefiningFunction scaled(double c) const {
    require(c > 0.0 && std::isfinite(c), "scale factor must be positive");
    auto v = value_;
    Value sv = [v, c](const R4& x) { return c * v(x); };
    if (!analytic()) return DefiningFunction(sv, h_);
    auto g = grad_;
    auto H = hess_;
    return {sv,
            [g, c](const R4& x) {
              R4 r = g(x);
              for (auto& e : r) e *= c;
              return r;
            },
            [H, c](const R4& x) { return Eigen::Matrix4d(c * H(x)); }};
  }

  [[nodiscard]] double value(const R4& x) const { return value_(x); }
  [[nodiscard]] double operator()(const C2& z) const { return value_(to_real(z)); }

  [[nodiscard]] R4 gradient(const R4& x) const {
    if (grad_) return grad_(x);
    R4 g{};
    for (std::size_t i = 0; i < 4; ++i) {
      R4 a = x, b = x;
      a[i] += h_;
      b[i] -= h_;
      g[i] = (value_(a) - value_(b)) / (2.0 * h_);
    }
    return g;
  }

  [[nodiscard]] Eigen::Matrix4d real_hessian(const R4& x) const {
    if (hess_) return hess_(x);
    Eigen::Matrix4d H;
    const double f0 = value_(x);
    for (std::size_t i = 0; i < 4; ++i) {
      R4 a = x, b = x;
      a[i] += h_;
      b[i] -= h_;
      H(static_cast<int>(i), static_cast<int>(i)) = (value_(a) - 2.0 * f0 + value_(b)) / (h_ * h_);
      for (std::size_t j = i + 1; j < 4; ++j) {
        R4 pp = x, pm = x, mp = x, mm = x;
        pp[i] += h_, pp[j] += h_;
        pm[i] += h_, pm[j] -= h_;
        mp[i] -= h_, mp[j] += h_;
        mm[i] -= h_, mm[j] -= h_;
        const double v = (value_(pp) - value_(pm) - value_(mp) + value_(mm)) / (4.0 * h_ * h_);
        H(static_cast<int>(i), static_cast<int>(j)) = H(static_cast<int>(j), static_cast<int>(i)) = v;
      }
    }
    return H;
  }

  /// (d rho / d z_j), j = 1, 2.
  [[nodiscard]] std::array<cplx, 2> dz(const R4& x) const {
    const R4 g = gradient(x);
    return {cplx(g[0], -g[1]) / 2.0, cplx(g[2], -g[3]) / 2.0};
  }

  /// d^2 rho / dz_j dconj(z_k).
  [[nodiscard]] Eigen::Matrix2cd complex_hessian(const R4& x) const {
    const Eigen::Matrix4d H = real_hessian(x);
    Eigen::Matrix2cd C;
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k) {
        const int xj = 2 * j, yj = 2 * j + 1, xk = 2 * k, yk = 2 * k + 1;
        C(j, k) = cplx(H(xj, xk) + H(yj, yk), H(xj, yk) - H(yj, xk)) / 4.0;
      }
    return C;
  }

  /// d^2 rho / dz_j dz_k.
  [[nodiscard]] Eigen::Matrix2cd holomorphic_hessian(const R4& x) const {
    const Eigen::Matrix4d H = real_hessian(x);
    Eigen::Matrix2cd C;
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k) {
        const int xj = 2 * j, yj = 2 * j + 1, xk = 2 * k, yk = 2 * k + 1;
        C(j, k) = cplx(H(xj, xk) - H(yj, yk), -(H(xj, yk) + H(yj, xk))) / 4.0;
      }
    return C;
  }

  /// Complex Hessian positive definite at x.
  [[nodiscard]] bool strictly_psh_at(const R4& x) const {
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> es(complex_hessian(x));
    return es.eigenvalues().minCoeff() > 0.0;
  }

private:
  Value value_;
  Gradient grad_;
  Hessian hess_;
  double h_ = 1e-4;
};

namespace domains {

/// |z|^2 - R^2.
inline Polynomial4 ball_polynomial(double R = 1.0) {
  require(R > 0.0, "ball radius must be positive");
  Polynomial4 p;
  p.add(1, {2, 0, 0, 0}).add(1, {0, 2, 0, 0}).add(1, {0, 0, 2, 0}).add(1, {0, 0, 0, 2}).add(-R * R, {0, 0, 0, 0});
  return p;
}

/// -Im z2 + lambda |z1|^2 + 2 Re(mu z1 conj(z2)) + nu |z2|^2.
inline Polynomial4 model_polynomial(double lambda, cplx mu = 0.0, double nu = 0.0) {
  require(lambda > 0.0, "lambda must be positive");
  Polynomial4 p;
  p.add(-1, {0, 0, 0, 1}).add(lambda, {2, 0, 0, 0}).add(lambda, {0, 2, 0, 0});
  // Re(mu z1 conj z2) = a (x1 x2 + y1 y2) - b (y1 x2 - x1 y2), mu = a + i b.
  const double a = mu.real(), b = mu.imag();
  if (a != 0.0) p.add(2 * a, {1, 0, 1, 0}).add(2 * a, {0, 1, 0, 1});
  if (b != 0.0) p.add(-2 * b, {0, 1, 1, 0}).add(2 * b, {1, 0, 0, 1});
  if (nu != 0.0) p.add(nu, {0, 0, 2, 0}).add(nu, {0, 0, 0, 2});
  return p;
}

inline DefiningFunction ball(double R = 1.0) { return DefiningFunction::polynomial(ball_polynomial(R)); }
inline DefiningFunction siegel(double lambda) { return DefiningFunction::polynomial(model_polynomial(lambda)); }
inline DefiningFunction normalized_model(double lambda, cplx mu, double nu) {
  return DefiningFunction::polynomial(model_polynomial(lambda, mu, nu));
}

/// rho^1 + eps (Re(z1^2) + Re(z1 conj z2) + |z1|^4): a Siegel domain with
/// holomorphic Hessian, a mixed term and a quartic term switched on.
inline DefiningFunction perturbed_siegel(double eps) {
  Polynomial4 p = model_polynomial(1.0, cplx(eps / 2.0, 0.0));
  p.add(eps, {2, 0, 0, 0}).add(-eps, {0, 2, 0, 0});
  p.add(eps, {4, 0, 0, 0}).add(2 * eps, {2, 2, 0, 0}).add(eps, {0, 4, 0, 0});
  return DefiningFunction::polynomial(p);
}

}  // namespace domains

/// sum_j rho_zj(w) (z_j - w_j) + 1/2 sum_jk rho_zjzk(w) (z_j - w_j)(z_k - w_k).
inline cplx levi_polynomial(const DefiningFunction& rho, const C2& z, const C2& w) {
  const R4 x = to_real(w);
  const auto d = rho.dz(x);
  const Eigen::Matrix2cd Q = rho.holomorphic_hessian(x);
  const cplx h[2] = {z[0] - w[0], z[1] - w[1]};
  cplx s = d[0] * h[0] + d[1] * h[1];
  for (int j = 0; j < 2; ++j)
    for (int k = 0; k < 2; ++k) s += 0.5 * Q(j, k) * h[j] * h[k];
  return s;
}

/// sum_j rho_zj(w) (z_j - w_j).
inline cplx cauchy_leray(const DefiningFunction& rho, const C2& z, const C2& w) {
  const auto d = rho.dz(to_real(w));
  return d[0] * (z[0] - w[0]) + d[1] * (z[1] - w[1]);
}

/// -det [[rho, rho_zbar_k], [rho_z_j, rho_z_j zbar_k]].
inline double m_determinant(const DefiningFunction& rho, const C2& z) {
  const R4 x = to_real(z);
  const auto d = rho.dz(x);
  const Eigen::Matrix2cd H = rho.complex_hessian(x);
  Eigen::Matrix3cd B;
  B(0, 0) = rho.value(x);
  B(0, 1) = std::conj(d[0]);
  B(0, 2) = std::conj(d[1]);
  B(1, 0) = d[0];
  B(2, 0) = d[1];
  B.block<2, 2>(1, 1) = H;
  const cplx det = -B.determinant();
  if (std::abs(det.imag()) > 1e-10 * std::max(1.0, std::abs(det.real())))
    throw NumericError("bordered Hessian determinant is not real");
  return det.real();
}

inline double grad_norm(const DefiningFunction& rho, const R4& x) {
  const R4 g = rho.gradient(x);
  return std::sqrt(g[0] * g[0] + g[1] * g[1] + g[2] * g[2] + g[3] * g[3]);
}

struct BoundaryFrame {
  C2 q{};
  R4 unit_normal{};
  double grad_norm = 0.0;
  double M = 0.0;
  double lambda_q = 0.0;
};

inline BoundaryFrame boundary_frame(const DefiningFunction& rho, const C2& q) {
  const R4 x = to_real(q);
  require(std::abs(rho.value(x)) <= 1e-10, "point is not on the boundary");
  BoundaryFrame f;
  f.q = q;
  f.grad_norm = grad_norm(rho, x);
  require(f.grad_norm > 0.0, "gradient vanishes at the boundary point");
  const R4 g = rho.gradient(x);
  for (std::size_t i = 0; i < 4; ++i) f.unit_normal[i] = g[i] / f.grad_norm;
  f.M = m_determinant(rho, q);
  f.lambda_q = 4.0 * f.M / (f.grad_norm * f.grad_norm * f.grad_norm);
  return f;
}

/// 4M / |grad rho|^3.
inline double lambda_q(const DefiningFunction& rho, const C2& q) {
  const double M = m_determinant(rho, q);
  require(M > 0.0, "M(rho) must be positive");
  const double g = grad_norm(rho, to_real(q));
  return 4.0 * M / (g * g * g);
}

/// Density of the Fefferman measure against Euclidean surface measure,
/// 4^(2/3) M^(1/3) / |grad rho|.
inline double fefferman_density(const DefiningFunction& rho, const C2& q) {
  const double M = m_determinant(rho, q);
  require(M > 0.0, "M(rho) must be positive");
  return std::cbrt(16.0) * std::cbrt(M) / grad_norm(rho, to_real(q));
}

/// Boundary that meets every ray from `center` exactly once within r_max.
struct StarShapedBoundary {
  C2 center{};
  double r_max = 10.0;
};

/// Boundary given as the graph y2 = F(x1, y1, x2) over a box.
struct GraphPatch {
  R3 lo{-1, -1, -1};
  R3 hi{1, 1, 1};
};

struct QuadratureSpec {
  /// Gauss-Legendre nodes in the Hopf angle and trapezoid nodes per circle.
  int n_eta = 48;
  int n_phi = 96;
  /// Gauss-Legendre nodes per axis for graph patches.
  int n_graph = 24;

  void validate() const { require(n_eta >= 2 && n_phi >= 4 && n_graph >= 2, "quadrature resolution too small"); }
  [[nodiscard]] QuadratureSpec refined() const { return {2 * n_eta, 2 * n_phi, 2 * n_graph}; }
};

/// Gauss-Legendre nodes and weights on [-1, 1].
inline std::vector<std::pair<double, double>> gauss_legendre(int n) {
  require(n >= 1, "need at least one node");
  std::vector<std::pair<double, double>> out;
  for (int i = 1; i <= n; ++i) {
    double x = std::cos(std::numbers::pi * (i - 0.25) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      const double dx = boost::math::legendre_p(n, x) / boost::math::legendre_p_prime(n, x);
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double dp = boost::math::legendre_p_prime(n, x);
    out.emplace_back(x, 2.0 / ((1.0 - x * x) * dp * dp));
  }
  return out;
}

/// Solves rho(x1, y1, x2, y) = 0 for y by Newton's method from `guess`.
inline double graph_height(const DefiningFunction& rho, const R3& zp, double guess = 0.0) {
  R4 x{zp[0], zp[1], zp[2], guess};
  for (int it = 0; it < 60; ++it) {
    const double f = rho.value(x);
    const double d = rho.gradient(x)[3];
    if (d == 0.0 || !std::isfinite(d)) break;
    const double step = f / d;
    x[3] -= step;
    if (std::abs(step) <= 1e-15 * (1.0 + std::abs(x[3]))) return x[3];
  }
  if (std::abs(rho.value(x)) <= 1e-13) return x[3];
  throw NumericError("graph height did not converge");
}

/// Distance along the unit direction u from `center` to the boundary.
inline double radial_root(const DefiningFunction& rho, const C2& center, const R4& u, double r_max) {
  const R4 c = to_real(center);
  const auto f = [&](double r) { return rho.value({c[0] + r * u[0], c[1] + r * u[1], c[2] + r * u[2], c[3] + r * u[3]}); };
  require(f(0.0) < 0.0, "center must lie inside the domain");
  double lo = 0.0, hi = r_max / 64.0;
  while (f(hi) < 0.0) {
    lo = hi;
    hi += r_max / 64.0;
    if (hi > r_max * (1.0 + 1e-12)) throw NumericError("no boundary crossing within r_max");
  }
  boost::uintmax_t iters = 200;
  const auto r = boost::math::tools::toms748_solve(f, lo, hi, boost::math::tools::eps_tolerance<double>(52), iters);
  return 0.5 * (r.first + r.second);
}

/// Integral of the Fefferman density over a star-shaped boundary. In Hopf
/// coordinates u = (cos eta e^{i phi1}, sin eta e^{i phi2}) the surface
/// element is r^3 |grad rho| / |grad rho . u| d sigma(u), so the integrand is
/// 4^(2/3) M^(1/3) r^3 / |grad rho . u|.
inline double fefferman_integral(const DefiningFunction& rho, const StarShapedBoundary& b, const QuadratureSpec& q) {
  q.validate();
  const auto gl = gauss_legendre(q.n_eta);
  const double dphi = 2.0 * std::numbers::pi / q.n_phi;
  const R4 c = to_real(b.center);
  CompensatedSum acc;
  for (const auto& [t, wt] : gl) {
    const double eta = std::numbers::pi / 4.0 * (t + 1.0);
    const double ce = std::cos(eta), se = std::sin(eta);
    CompensatedSum ring;
    for (int i = 0; i < q.n_phi; ++i)
      for (int j = 0; j < q.n_phi; ++j) {
        const double p1 = dphi * i, p2 = dphi * j;
        const R4 u{ce * std::cos(p1), ce * std::sin(p1), se * std::cos(p2), se * std::sin(p2)};
        const double r = radial_root(rho, b.center, u, b.r_max);
        const R4 x{c[0] + r * u[0], c[1] + r * u[1], c[2] + r * u[2], c[3] + r * u[3]};
        const R4 g = rho.gradient(x);
        const double gu = std::abs(g[0] * u[0] + g[1] * u[1] + g[2] * u[2] + g[3] * u[3]);
        if (gu == 0.0) throw NumericError("boundary is tangent to a ray; not star-shaped");
        const double M = m_determinant(rho, to_complex(x));
        if (!(M > 0.0)) throw NumericError("M(rho) is not positive on the boundary");
        ring += std::cbrt(16.0 * M) * r * r * r / gu;
      }
    acc += wt * std::numbers::pi / 4.0 * ce * se * ring.value() * dphi * dphi;
  }
  return acc.value();
}

/// Integral of the Fefferman density over the graph y2 = F(x1, y1, x2) on a
/// box; the integrand is 4^(2/3) M^(1/3) / |rho_y2|.
inline double fefferman_integral(const DefiningFunction& rho, const GraphPatch& patch, const QuadratureSpec& q) {
  q.validate();
  for (std::size_t i = 0; i < 3; ++i) require(patch.hi[i] > patch.lo[i], "graph patch must have positive extent");
  const auto gl = gauss_legendre(q.n_graph);
  R3 half{}, mid{};
  for (std::size_t i = 0; i < 3; ++i) {
    half[i] = 0.5 * (patch.hi[i] - patch.lo[i]);
    mid[i] = 0.5 * (patch.hi[i] + patch.lo[i]);
  }
  CompensatedSum acc;
  for (const auto& [a, wa] : gl)
    for (const auto& [b, wb] : gl) {
      double guess = 0.0;
      for (const auto& [c, wc] : gl) {
        const R3 zp{mid[0] + half[0] * a, mid[1] + half[1] * b, mid[2] + half[2] * c};
        guess = graph_height(rho, zp, guess);
        const R4 x{zp[0], zp[1], zp[2], guess};
        const double ry2 = rho.gradient(x)[3];
        if (ry2 == 0.0) throw NumericError("boundary is vertical over the patch");
        const double M = m_determinant(rho, to_complex(x));
        if (!(M > 0.0)) throw NumericError("M(rho) is not positive on the boundary");
        acc += wa * wb * wc * std::cbrt(16.0 * M) / std::abs(ry2);
      }
    }
  return acc.value() * half[0] * half[1] * half[2];
}

struct LeviProbe {
  double c = 0.0;
  C2 worst_z{};
  C2 worst_w{};
  int pairs = 0;
};

/// max |z - w|^2 / |p(z, w)| over pairs with w a boundary sample and z a
/// random point of the closed domain with 0 < |z - w| <= tau.
inline LeviProbe levi_lower_bound_probe(const DefiningFunction& rho, const std::vector<C2>& boundary, double tau,
                                        int pairs_per_point = 32, std::uint64_t seed = 1) {
  require(tau > 0.0, "tau must be positive");
  require(!boundary.empty(), "need boundary samples");
  require(pairs_per_point >= 1, "need at least one pair per point");
  Rng rng(seed);
  LeviProbe out;
  for (const auto& w : boundary) {
    int got = 0;
    for (int attempt = 0; got < pairs_per_point && attempt < 64 * pairs_per_point; ++attempt) {
      R4 d{rng.normal(), rng.normal(), rng.normal(), rng.normal()};
      const double n = std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2] + d[3] * d[3]);
      const double len = tau * std::pow(rng.uniform(), 0.25);
      if (n == 0.0 || len == 0.0) continue;
      const R4 x = to_real(w);
      const R4 zr{x[0] + len * d[0] / n, x[1] + len * d[1] / n, x[2] + len * d[2] / n, x[3] + len * d[3] / n};
      if (rho.value(zr) > 0.0) continue;
      const C2 z = to_complex(zr);
      const double p = std::abs(levi_polynomial(rho, z, w));
      if (p == 0.0) throw NumericError("Levi polynomial vanishes at a pair with z != w");
      const double r = len * len / p;
      ++got;
      ++out.pairs;
      if (r > out.c) {
        out.c = r;
        out.worst_z = z;
        out.worst_w = w;
      }
    }
  }
  return out;
}

}  // namespace kortile
