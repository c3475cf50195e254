// SPDX-License-Identifier: MIT
#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>
#include <boost/numeric/odeint.hpp>

#include "kortile/common.hpp"
#include "kortile/defining_function.hpp"

namespace kortile {

struct OdeSpec {
  double abs_tol = 1e-9;
  double rel_tol = 1e-9;
  double newton_tol = 1e-10;
  int newton_max = 50;
  int max_steps = 100'000;

  void validate() const {
    require(abs_tol > 0.0 && rel_tol > 0.0 && newton_tol > 0.0, "tolerances must be positive");
    require(newton_max >= 1 && max_steps >= 1, "iteration limits must be positive");
  }
};

/// Phi(w) = (w1, w2 - i sum_jk Q_jk w_j w_k) with Q the holomorphic Hessian
/// of rho at the origin.
class Convexifier {
public:
  Convexifier() : Q_(Eigen::Matrix2cd::Zero()) {}
  explicit Convexifier(const Eigen::Matrix2cd& Q) : Q_(Q) {}

  [[nodiscard]] const Eigen::Matrix2cd& Q() const { return Q_; }
  [[nodiscard]] bool is_identity() const { return Q_.isZero(0.0); }

  [[nodiscard]] cplx quad(const cplx& w1, const cplx& w2) const {
    return Q_(0, 0) * w1 * w1 + (Q_(0, 1) + Q_(1, 0)) * w1 * w2 + Q_(1, 1) * w2 * w2;
  }

  [[nodiscard]] C2 operator()(const C2& w) const { return {w[0], w[1] - cplx(0, 1) * quad(w[0], w[1])}; }

  /// d Phi2 / d w2.
  [[nodiscard]] cplx d2(const C2& w) const { return 1.0 - cplx(0, 1) * ((Q_(0, 1) + Q_(1, 0)) * w[0] + 2.0 * Q_(1, 1) * w[1]); }

  [[nodiscard]] C2 inverse(const C2& u) const {
    if (is_identity()) return u;
    cplx w2 = u[1];
    for (int it = 0; it < 60; ++it) {
      const C2 w{u[0], w2};
      const cplx g = (*this)(w)[1] - u[1];
      const cplx step = g / d2(w);
      w2 -= step;
      if (std::abs(step) <= 1e-16 * (1.0 + std::abs(w2))) return {u[0], w2};
    }
    if (std::abs((*this)(C2{u[0], w2})[1] - u[1]) <= 1e-13 * (1.0 + std::abs(u[1]))) return {u[0], w2};
    throw NumericError("inverse of the convexifying map did not converge");
  }

  /// Real 4x4 Jacobian at w.
  [[nodiscard]] Eigen::Matrix4d real_jacobian(const C2& w) const {
    Eigen::Matrix4d J = Eigen::Matrix4d::Identity();
    // Phi2 is holomorphic: its real Jacobian block for w_k is [[Re a, -Im a], [Im a, Re a]].
    const cplx a1 = -cplx(0, 1) * (2.0 * Q_(0, 0) * w[0] + (Q_(0, 1) + Q_(1, 0)) * w[1]);
    const cplx a2 = d2(w);
    J(2, 0) = a1.real(), J(2, 1) = -a1.imag(), J(3, 0) = a1.imag(), J(3, 1) = a1.real();
    J(2, 2) = a2.real(), J(2, 3) = -a2.imag(), J(3, 2) = a2.imag(), J(3, 3) = a2.real();
    return J;
  }

private:
  Eigen::Matrix2cd Q_;
};

/// Convexifying map of a defining function normalised at the origin
/// (rho(0) = 0 and grad rho(0) = (0, 0, 0, -1)).
inline Convexifier convexify(const DefiningFunction& rho) {
  const R4 o{0, 0, 0, 0};
  const R4 g = rho.gradient(o);
  require(std::abs(rho.value(o)) <= 1e-8, "convexify: origin must lie on the boundary");
  require(std::abs(g[0]) <= 1e-8 && std::abs(g[1]) <= 1e-8 && std::abs(g[2]) <= 1e-8 && std::abs(g[3] + 1.0) <= 1e-8,
          "convexify: gradient at the origin must be (0, 0, 0, -1)");
  return Convexifier(rho.holomorphic_hessian(o));
}

/// The contact straightening map Pi and multiplier alpha of a defining
/// function in convexified normal form, built from the flow of
/// v = rho_x2 d/dx1 - rho_y2 d/dy1 - rho_x1 d/dx2 on the graph of rho.
class DarbouxMap {
public:
  struct Flow {
    R3 point{};
    Eigen::Matrix3d jac = Eigen::Matrix3d::Identity();
  };
  struct Eval {
    R3 pi{};
    double alpha = 1.0;
    R3 preimage{};
    double omega1 = 0.0;
    double omega2 = 1.0;
  };

  DarbouxMap(DefiningFunction rho, double lambda, double radius, OdeSpec spec)
      : rho_(std::move(rho)), lambda_(lambda), radius_(radius), spec_(spec) {
    require(lambda > 0.0 && std::isfinite(lambda), "lambda must be positive");
    require(radius > 0.0, "neighbourhood radius must be positive");
    spec_.validate();
  }

  [[nodiscard]] double lambda() const { return lambda_; }
  [[nodiscard]] double radius() const { return radius_; }
  [[nodiscard]] const DefiningFunction& rho() const { return rho_; }

  [[nodiscard]] double graph(const R3& zp) const { return graph_height(rho_, zp, 0.0); }

  /// The pull-back of theta_rho to the slice, as coefficients of dx1, dy1, dx2.
  [[nodiscard]] R3 theta(const R3& zp) const {
    const R4 g = rho_.gradient({zp[0], zp[1], zp[2], graph(zp)});
    const double rx1 = g[0], ry1 = g[1], rx2 = g[2], ry2 = g[3];
    if (ry2 == 0.0) throw NumericError("rho_y2 vanishes on the graph");
    const double s = -1.0 / ry2;
    return {s * (ry2 * ry1 + rx1 * rx2), -s * (ry2 * rx1 - ry1 * rx2), s * (ry2 * ry2 + rx2 * rx2)};
  }

  /// theta of the model domain at p.
  [[nodiscard]] R3 model_theta(const R3& p) const { return {-2.0 * lambda_ * p[1], 2.0 * lambda_ * p[0], 1.0}; }

  [[nodiscard]] R3 field(const R3& zp) const {
    const R4 g = rho_.gradient({zp[0], zp[1], zp[2], graph(zp)});
    return {g[2], -g[3], -g[0]};
  }

  /// gamma(x0; t) and its derivative in x0, via the variational equations.
  [[nodiscard]] Flow flow(const R3& x0, double t) const {
    namespace odeint = boost::numeric::odeint;
    using State = std::array<double, 12>;
    State s{};
    for (std::size_t i = 0; i < 3; ++i) s[i] = x0[i];
    for (std::size_t i = 0; i < 3; ++i) s[3 + 4 * i] = 1.0;
    Flow out;
    if (t == 0.0) {
      out.point = x0;
      return out;
    }
    double guess = 0.0;
    const auto rhs = [&](const State& y, State& dy, double) {
      const R3 p{y[0], y[1], y[2]};
      guess = graph_height(rho_, p, guess);
      const R4 x{p[0], p[1], p[2], guess};
      const R4 g = rho_.gradient(x);
      const Eigen::Matrix4d H = rho_.real_hessian(x);
      if (g[3] == 0.0) throw NumericError("rho_y2 vanishes along the flow");
      dy[0] = g[2];
      dy[1] = -g[3];
      dy[2] = -g[0];
      // dF/dz'_j = -rho_j / rho_y2.
      double dF[3];
      for (int j = 0; j < 3; ++j) dF[j] = -g[static_cast<std::size_t>(j)] / g[3];
      const int row[3] = {2, 3, 0};
      const double sign[3] = {1.0, -1.0, -1.0};
      Eigen::Matrix3d Dv;
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) Dv(i, j) = sign[i] * (H(row[i], j) + H(row[i], 3) * dF[j]);
      for (int i = 0; i < 3; ++i)
        for (int k = 0; k < 3; ++k) {
          double v = 0.0;
          for (int j = 0; j < 3; ++j) v += Dv(i, j) * y[static_cast<std::size_t>(3 + 3 * j + k)];
          dy[static_cast<std::size_t>(3 + 3 * i + k)] = v;
        }
    };
    auto stepper = odeint::make_controlled<odeint::runge_kutta_dopri5<State>>(spec_.abs_tol, spec_.rel_tol);
    double tc = 0.0;
    double dt = t > 0 ? std::min(t, 0.01) : std::max(t, -0.01);
    int steps = 0;
    while (std::abs(t - tc) > 1e-15 * std::max(1.0, std::abs(t))) {
      if (std::abs(dt) > std::abs(t - tc)) dt = t - tc;
      stepper.try_step(rhs, s, tc, dt);
      if (++steps > spec_.max_steps) throw NumericError("flow integration exceeded the step limit");
    }
    for (std::size_t i = 0; i < 3; ++i) out.point[i] = s[i];
    for (int i = 0; i < 3; ++i)
      for (int k = 0; k < 3; ++k) out.jac(i, k) = s[static_cast<std::size_t>(3 + 3 * i + k)];
    return out;
  }

  /// Gamma(x1, y1, x2) = gamma((x1, 0, x2); y1) and its Jacobian.
  [[nodiscard]] Flow gamma(const R3& X) const {
    const Flow f = flow({X[0], 0.0, X[2]}, X[1]);
    Flow out;
    out.point = f.point;
    const R3 v = field(f.point);
    for (int i = 0; i < 3; ++i) {
      out.jac(i, 0) = f.jac(i, 0);
      out.jac(i, 1) = v[static_cast<std::size_t>(i)];
      out.jac(i, 2) = f.jac(i, 2);
    }
    return out;
  }

  /// Solves Gamma(X) = zp by damped Newton iteration.
  [[nodiscard]] std::pair<R3, Flow> gamma_inverse(const R3& zp) const {
    R3 X = zp;
    Flow G = gamma(X);
    const auto resid = [&](const Flow& g) {
      return Eigen::Vector3d(g.point[0] - zp[0], g.point[1] - zp[1], g.point[2] - zp[2]);
    };
    Eigen::Vector3d r = resid(G);
    const double scale = 1.0 + std::sqrt(zp[0] * zp[0] + zp[1] * zp[1] + zp[2] * zp[2]);
    bool converged = false;
    for (int it = 0; it < spec_.newton_max; ++it) {
      const Eigen::Vector3d delta = G.jac.partialPivLu().solve(-r);
      if (!delta.allFinite()) throw NumericError("singular Jacobian while inverting Gamma");
      double step = 1.0;
      for (int ls = 0; ls < 30; ++ls) {
        const R3 Xn{X[0] + step * delta[0], X[1] + step * delta[1], X[2] + step * delta[2]};
        const Flow Gn = gamma(Xn);
        const Eigen::Vector3d rn = resid(Gn);
        if (rn.norm() < r.norm() || rn.norm() <= 1e-15 * scale) {
          X = Xn;
          G = Gn;
          r = rn;
          break;
        }
        step *= 0.5;
      }
      if (converged) break;
      // One more step once the tolerance is met, so the solution is not left at the tolerance edge.
      if (r.norm() <= spec_.newton_tol * scale) converged = true;
      if (r.norm() <= 1e-15 * scale) break;
    }
    if (!(r.norm() <= spec_.newton_tol * scale))
      throw NumericError("Newton inversion of Gamma did not converge (residual " + std::to_string(r.norm()) + ")");
    return {X, G};
  }

  [[nodiscard]] Eval evaluate(const R3& zp) const {
    require(std::sqrt(zp[0] * zp[0] + zp[1] * zp[1] + zp[2] * zp[2]) <= radius_, "point outside the straightening neighbourhood");
    const auto [X, G] = gamma_inverse(zp);
    const R3 th = theta(zp);
    Eval e;
    e.preimage = X;
    // theta = omega1 dX1 + omega2 dX2, so (theta . dGamma) = (omega1, 0, omega2).
    e.omega1 = th[0] * G.jac(0, 0) + th[1] * G.jac(1, 0) + th[2] * G.jac(2, 0);
    e.omega2 = th[0] * G.jac(0, 2) + th[1] * G.jac(1, 2) + th[2] * G.jac(2, 2);
    if (std::abs(e.omega2) < 1e-12) throw NumericError("omega2 vanishes");
    const double Y1 = e.omega1 / e.omega2;
    e.alpha = 1.0 / e.omega2;
    e.pi = {X[0], -Y1 / (4.0 * lambda_), X[2] + X[0] * Y1 / 2.0};
    return e;
  }

  [[nodiscard]] R3 operator()(const R3& zp) const { return evaluate(zp).pi; }

  /// Central-difference Jacobian of Pi.
  [[nodiscard]] Eigen::Matrix3d jacobian(const R3& zp, double h = 1e-4) const {
    Eigen::Matrix3d J;
    for (int k = 0; k < 3; ++k) {
      R3 a = zp, b = zp;
      a[static_cast<std::size_t>(k)] += h;
      b[static_cast<std::size_t>(k)] -= h;
      const R3 pa = (*this)(a), pb = (*this)(b);
      for (int i = 0; i < 3; ++i) J(i, k) = (pa[static_cast<std::size_t>(i)] - pb[static_cast<std::size_t>(i)]) / (2.0 * h);
    }
    return J;
  }

  /// max-norm of Pi^* theta_model - alpha theta_rho at zp.
  [[nodiscard]] double contact_residual(const R3& zp, double h = 1e-4) const {
    const Eval e = evaluate(zp);
    const Eigen::Matrix3d J = jacobian(zp, h);
    const R3 tm = model_theta(e.pi), tr = theta(zp);
    double worst = 0.0;
    for (int k = 0; k < 3; ++k) {
      double pull = 0.0;
      for (int i = 0; i < 3; ++i) pull += tm[static_cast<std::size_t>(i)] * J(i, k);
      worst = std::max(worst, std::abs(pull - e.alpha * tr[static_cast<std::size_t>(k)]));
    }
    return worst;
  }

private:
  DefiningFunction rho_;
  double lambda_;
  double radius_;
  OdeSpec spec_;
};

inline DarbouxMap straighten_flow(const DefiningFunction& rho, double lambda, double radius = 0.25, const OdeSpec& spec = {}) {
  return {rho, lambda, radius, spec};
}

/// Theta = Psi o Phi o A near a boundary point q, where A is an affine
/// unitary map taking q to 0 and the outward normal to (0, -i), Phi
/// convexifies the rescaled defining function and Psi extends the contact
/// straightening map Pi off the boundary along y2.
class ThetaMap {
public:
  ThetaMap(const DefiningFunction& rho, const C2& q, double radius = 0.25, const OdeSpec& spec = {})
      : q_(q), frame_(boundary_frame(rho, q)), normalized_(normalize(rho, q, frame_, U_)), phi_(convexify(normalized_)),
        hat_(hat_function(normalized_, phi_)), lambda_(normalized_.complex_hessian({0, 0, 0, 0})(0, 0).real()),
        darboux_(hat_, lambda_, radius, spec) {
    require(lambda_ > 0.0, "Levi form must be positive at q");
  }

  [[nodiscard]] double lambda() const { return lambda_; }
  [[nodiscard]] const BoundaryFrame& frame() const { return frame_; }
  [[nodiscard]] const Eigen::Matrix2cd& unitary() const { return U_; }
  [[nodiscard]] const DefiningFunction& normalized() const { return normalized_; }
  [[nodiscard]] const Convexifier& convexifier() const { return phi_; }
  [[nodiscard]] const DarbouxMap& darboux() const { return darboux_; }

  /// A(z) = U (z - q).
  [[nodiscard]] C2 to_local(const C2& z) const {
    const Eigen::Vector2cd d(z[0] - q_[0], z[1] - q_[1]);
    const Eigen::Vector2cd u = U_ * d;
    return {u[0], u[1]};
  }
  [[nodiscard]] C2 from_local(const C2& u) const {
    const Eigen::Vector2cd d = U_.adjoint() * Eigen::Vector2cd(u[0], u[1]);
    return {q_[0] + d[0], q_[1] + d[1]};
  }

  /// Theta in local coordinates (after A).
  [[nodiscard]] C2 local(const C2& u) const {
    const C2 w = phi_(u);
    const R3 xp{w[0].real(), w[0].imag(), w[1].real()};
    const double s = w[1].imag() - darboux_.graph(xp);
    const R3 p = darboux_(xp);
    return {cplx(p[0], p[1]), cplx(p[2], lambda_ * (p[0] * p[0] + p[1] * p[1]) + s)};
  }

  [[nodiscard]] C2 operator()(const C2& z) const { return local(to_local(z)); }

  /// Real Jacobian determinant of Theta at a local point: |Phi2_w2|^2 det JPi.
  [[nodiscard]] double local_jacobian_det(const C2& u, double h = 1e-4) const {
    const C2 w = phi_(u);
    const R3 xp{w[0].real(), w[0].imag(), w[1].real()};
    return std::norm(phi_.d2(u)) * darboux_.jacobian(xp, h).determinant();
  }

private:
  static DefiningFunction normalize(const DefiningFunction& rho, const C2& q, const BoundaryFrame& f, Eigen::Matrix2cd& U) {
    const cplx n1(f.unit_normal[0], f.unit_normal[1]), n2(f.unit_normal[2], f.unit_normal[3]);
    const cplx i(0, 1);
    U << i * n2, -i * n1, -i * std::conj(n1), -i * std::conj(n2);
    // Real 4x4 matrix L of U^* (local -> original displacement).
    const Eigen::Matrix2cd V = U.adjoint();
    Eigen::Matrix4d L;
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < 2; ++c) {
        const cplx a = V(r, c);
        L(2 * r, 2 * c) = a.real(), L(2 * r, 2 * c + 1) = -a.imag();
        L(2 * r + 1, 2 * c) = a.imag(), L(2 * r + 1, 2 * c + 1) = a.real();
      }
    const R4 q0 = to_real(q);
    const double g = f.grad_norm;
    const auto map = [L, q0](const R4& u) {
      const Eigen::Vector4d x = L * Eigen::Vector4d(u[0], u[1], u[2], u[3]);
      return R4{q0[0] + x[0], q0[1] + x[1], q0[2] + x[2], q0[3] + x[3]};
    };
    DefiningFunction::Value v = [rho, map, g](const R4& u) { return rho.value(map(u)) / g; };
    if (!rho.analytic()) return DefiningFunction(v, rho.step());
    return {v,
            [rho, map, L, g](const R4& u) {
              const R4 gr = rho.gradient(map(u));
              const Eigen::Vector4d r = L.transpose() * Eigen::Vector4d(gr[0], gr[1], gr[2], gr[3]) / g;
              return R4{r[0], r[1], r[2], r[3]};
            },
            [rho, map, L, g](const R4& u) { return Eigen::Matrix4d(L.transpose() * rho.real_hessian(map(u)) * L / g); }};
  }

  static DefiningFunction hat_function(const DefiningFunction& rn, const Convexifier& phi) {
    if (phi.is_identity()) return rn;
    return DefiningFunction([rn, phi](const R4& u) { return rn.value(to_real(phi.inverse(to_complex(u)))); }, 1e-4);
  }

  C2 q_;
  Eigen::Matrix2cd U_;
  BoundaryFrame frame_;
  DefiningFunction normalized_;
  Convexifier phi_;
  DefiningFunction hat_;
  double lambda_;
  DarbouxMap darboux_;
};

/// Cauchy-Leray map of the model domain S_lambda.
inline cplx cauchy_leray_model(double lambda, const C2& z, const C2& w) {
  return lambda * std::conj(w[0]) * (z[0] - w[0]) + cplx(0, 0.5) * (z[1] - w[1]);
}

struct ThetaProbe {
  double radius = 0.0;
  int pairs = 0;
  /// max |p - l(Theta z, Theta w)| / (|p| + |l|).
  double ratio = 0.0;
  C2 worst_z{};
  C2 worst_w{};
  double volume_min = std::numeric_limits<double>::infinity(), volume_max = -std::numeric_limits<double>::infinity();
  double boundary_min = std::numeric_limits<double>::infinity(), boundary_max = -std::numeric_limits<double>::infinity();
};

/// Samples pairs near q (in local coordinates, within `radius`) and small
/// boxes, comparing the Levi polynomial of the normalised defining function
/// with the model Cauchy-Leray map after Theta, and the volume distortion.
inline ThetaProbe probe_theta(const ThetaMap& th, double radius, int pairs = 64, int boxes = 3, std::uint64_t seed = 1) {
  require(radius > 0.0 && radius <= th.darboux().radius(), "probe radius must lie within the straightening neighbourhood");
  require(pairs >= 1 && boxes >= 0, "need at least one pair");
  const DefiningFunction& rn = th.normalized();
  Rng rng(seed);
  ThetaProbe out;
  out.radius = radius;
  const auto ball3 = [&](double r) {
    for (;;) {
      const R3 p{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
      if (p[0] * p[0] + p[1] * p[1] + p[2] * p[2] <= 1.0) return R3{r * p[0], r * p[1], r * p[2]};
    }
  };
  // The Theta image is only defined where its horizontal slice stays in the
  // straightening neighbourhood; keep samples well inside it.
  const double r0 = radius / 2.0;
  for (int k = 0; k < pairs;) {
    const R3 xp = ball3(r0);
    const C2 w = to_complex({xp[0], xp[1], xp[2], graph_height(rn, xp)});
    R4 d{rng.normal(), rng.normal(), rng.normal(), rng.normal()};
    const double n = std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2] + d[3] * d[3]);
    const double len = r0 * std::pow(rng.uniform(), 0.25);
    if (n == 0.0 || len == 0.0) continue;
    const R4 wr = to_real(w);
    const R4 zr{wr[0] + len * d[0] / n, wr[1] + len * d[1] / n, wr[2] + len * d[2] / n, wr[3] + len * d[3] / n};
    if (rn.value(zr) > 0.0) continue;
    const C2 z = to_complex(zr);
    const cplx p = levi_polynomial(rn, z, w);
    const cplx l = cauchy_leray_model(th.lambda(), th.local(z), th.local(w));
    const double den = std::abs(p) + std::abs(l);
    ++k;
    ++out.pairs;
    if (den == 0.0) continue;
    const double r = std::abs(p - l) / den;
    if (r > out.ratio) {
      out.ratio = r;
      out.worst_z = th.from_local(z);
      out.worst_w = th.from_local(w);
    }
  }
  // Volume distortion on boxes of side radius/4: mean |det J Theta| over a
  // 2^4 Gauss grid (interior) and 2^3 grid (boundary slice).
  const double s = radius / 4.0;
  const double g = 0.5 / std::sqrt(3.0);
  for (int b = 0; b < boxes; ++b) {
    const R3 xp = ball3(r0 / 2.0);
    const double y0 = graph_height(rn, xp) + s;
    CompensatedSum vol;
    for (int m = 0; m < 16; ++m) {
      const R4 u{xp[0] + s * ((m & 1) ? g : -g), xp[1] + s * ((m & 2) ? g : -g), xp[2] + s * ((m & 4) ? g : -g),
                 y0 + s * ((m & 8) ? g : -g)};
      vol += std::abs(th.local_jacobian_det(to_complex(u)));
    }
    const double rv = vol.value() / 16.0;
    out.volume_min = std::min(out.volume_min, rv);
    out.volume_max = std::max(out.volume_max, rv);

    CompensatedSum bnd;
    const double h = 1e-4;
    const auto proj = [&](const R3& zp) {
      const C2 t = th.local(to_complex({zp[0], zp[1], zp[2], graph_height(rn, zp)}));
      return R3{t[0].real(), t[0].imag(), t[1].real()};
    };
    for (int m = 0; m < 8; ++m) {
      const R3 c{xp[0] + s * ((m & 1) ? g : -g), xp[1] + s * ((m & 2) ? g : -g), xp[2] + s * ((m & 4) ? g : -g)};
      Eigen::Matrix3d J;
      for (int k = 0; k < 3; ++k) {
        R3 a = c, bb = c;
        a[static_cast<std::size_t>(k)] += h;
        bb[static_cast<std::size_t>(k)] -= h;
        const R3 pa = proj(a), pb = proj(bb);
        for (int i = 0; i < 3; ++i) J(i, k) = (pa[static_cast<std::size_t>(i)] - pb[static_cast<std::size_t>(i)]) / (2 * h);
      }
      bnd += std::abs(J.determinant());
    }
    const double rb = bnd.value() / 8.0;
    out.boundary_min = std::min(out.boundary_min, rb);
    out.boundary_max = std::max(out.boundary_max, rb);
  }
  return out;
}

}  // namespace kortile
