#pragma once

#include "warpflow/chart.hpp"
#include "warpflow/error.hpp"
#include "warpflow/tensor.hpp"
#include "warpflow/warp.hpp"

#include <boost/numeric/odeint.hpp>

#include <array>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace warpflow {

/// Which coordinate patch an AmbientPoint is expressed in. The stereographic
/// patches only exist for round-sphere fibers; the polar patch (rho, theta, w)
/// exists for every fiber, w being a stereographic chart of S^{n-1}.
enum class ChartKind { StereoNorth, StereoSouth, Polar };

struct AmbientPoint {
  ChartKind chart = ChartKind::Polar;
  Vec x;  // x[0] = rho
  double rho() const { return x[0]; }
};

struct FiberSpec {
  enum class Kind { RoundSphere, DoublyWarped };
  Kind kind = Kind::RoundSphere;
  int n = 2;
  WarpFunction r;  // profile r(theta); sin for the round sphere

  static FiberSpec round_sphere(int n) { return {Kind::RoundSphere, n, WarpFunction::sin()}; }
  static FiberSpec doubly_warped(WarpFunction r, int n) { return {Kind::DoublyWarped, n, std::move(r)}; }
};

/// I x_phi M with M a round n-sphere or J x_r S^{n-1}.
class WarpedAmbient {
 public:
  WarpedAmbient(std::string name, WarpFunction warp, FiberSpec fiber, std::optional<int> k = std::nullopt)
      : name_(std::move(name)), warp_(std::move(warp)), fiber_(std::move(fiber)), k_(k) {
    const int n = fiber_.n;
    if (n < 2) fail(ErrorKind::Validation, "fiber dimension must be >= 2");
    auto core = std::make_shared<UnitSphereChart>(n - 1, false);
    const bool round = fiber_.kind == FiberSpec::Kind::RoundSphere;
    auto polar_fiber = std::make_shared<WarpedChart>(fiber_.r, core, round);
    polar_ = std::make_shared<WarpedChart>(warp_, polar_fiber);
    if (round) {
      north_ = std::make_shared<WarpedChart>(warp_, std::make_shared<UnitSphereChart>(n, false));
      south_ = std::make_shared<WarpedChart>(warp_, std::make_shared<UnitSphereChart>(n, true));
    }
  }

  const std::string& name() const { return name_; }
  const WarpFunction& warp() const { return warp_; }
  const FiberSpec& fiber() const { return fiber_; }
  int n() const { return fiber_.n; }
  int dim() const { return fiber_.n + 1; }
  std::optional<int> space_form_curvature() const { return k_; }
  bool is_round() const { return fiber_.kind == FiberSpec::Kind::RoundSphere; }

  const WarpedChart& chart(ChartKind kind) const {
    switch (kind) {
      case ChartKind::Polar: return *polar_;
      case ChartKind::StereoNorth:
        if (north_) return *north_;
        break;
      case ChartKind::StereoSouth:
        if (south_) return *south_;
        break;
    }
    fail(ErrorKind::Validation, "stereographic fiber charts require a round-sphere fiber");
  }

  AmbientPoint polar_point(double rho, double theta, const Vec& w) const {
    AmbientPoint p{ChartKind::Polar, Vec(dim())};
    p.x[0] = rho;
    p.x[1] = theta;
    p.x.tail(n() - 1) = w;
    return p;
  }

  Mat metric_at(const AmbientPoint& p) const { return chart(p.chart).metric(p.x); }
  Tensor3 christoffel_at(const AmbientPoint& p) const { return chart(p.chart).christoffel(p.x); }
  Tensor4 riemann_at(const AmbientPoint& p) const { return chart(p.chart).riemann(p.x); }

  /// Sectional curvature of the plane spanned by u, v.
  double sectional(const AmbientPoint& p, const Vec& u, const Vec& v) const {
    const Mat g = metric_at(p);
    const double area = u.dot(g * u) * v.dot(g * v) - std::pow(u.dot(g * v), 2);
    if (!(area > 0.0)) fail(ErrorKind::Degenerate, "sectional curvature of a degenerate plane");
    return riemann_at(p)(u, v, v, u) / area;
  }

  /// X = phi(rho) d/drho
  Vec conformal_field(const AmbientPoint& p) const {
    Vec X = Vec::Zero(dim());
    X[0] = warp_(p.rho());
    return X;
  }
  /// kappa with L_X g = 2 kappa g
  double conformal_factor(const AmbientPoint& p) const { return warp_.d1(p.rho()); }

 private:
  std::string name_;
  WarpFunction warp_;
  FiberSpec fiber_;
  std::optional<int> k_;
  std::shared_ptr<WarpedChart> polar_, north_, south_;
};

using AmbientPtr = std::shared_ptr<const WarpedAmbient>;

inline AmbientPtr make_space_form(int k, int n) {
  switch (k) {
    case 0: return std::make_shared<WarpedAmbient>("euclidean", WarpFunction::linear(), FiberSpec::round_sphere(n), 0);
    case -1:
      return std::make_shared<WarpedAmbient>("hyperbolic", WarpFunction::sinh(), FiberSpec::round_sphere(n), -1);
    case 1: return std::make_shared<WarpedAmbient>("sphere", WarpFunction::sin(), FiberSpec::round_sphere(n), 1);
    default: fail(ErrorKind::Validation, "space form curvature must be -1, 0 or 1");
  }
}

inline AmbientPtr make_ads_schwarzschild(double m, int n) {
  const AdsSchwarzschildTable table(m, n);
  return std::make_shared<WarpedAmbient>(table.warp().name(), table.warp(), FiberSpec::round_sphere(n));
}

inline AmbientPtr make_custom(WarpFunction warp, FiberSpec fiber) {
  const std::string name = "custom{" + warp.name() + "}";
  return std::make_shared<WarpedAmbient>(name, std::move(warp), std::move(fiber));
}

// ---------------------------------------------------------------------------
// Killing fields lifted from the fiber

/// A vector field on the ambient, given in whatever chart the point uses.
using VectorField = std::function<Vec(const AmbientPoint&)>;

struct KillingLift {
  std::string name;
  VectorField field;
  Vec operator()(const AmbientPoint& p) const { return field(p); }
};

namespace detail {
inline Vec rotation_in_chart(const Chart& c, const Vec& x, const Mat& A) {
  const Mat J = c.embed_jacobian(x);
  const Vec v = A * c.embed(x);
  return (J.transpose() * J).ldlt().solve(J.transpose() * v);
}
}  // namespace detail

/// Lift of the rotation generated by antisymmetric A acting on R^{n+1}
/// around the round fiber S^n. Defined in every chart of a round ambient.
inline KillingLift lift_fiber_rotation(const AmbientPtr& a, const Mat& A) {
  if (!a->is_round()) fail(ErrorKind::Validation, "fiber rotations need a round-sphere fiber");
  if (A.rows() != a->n() + 1 || A.cols() != a->n() + 1 || (A + A.transpose()).norm() > 1e-12)
    fail(ErrorKind::Validation, "rotation generator must be an antisymmetric (n+1)x(n+1) matrix");
  return {"fiber_rotation", [a, A](const AmbientPoint& p) {
            const auto& fiber = *a->chart(p.chart).inner();
            Vec K = Vec::Zero(a->dim());
            K.tail(a->n()) = detail::rotation_in_chart(fiber, p.x.tail(a->n()), A);
            return K;
          }};
}

/// Lift of a rotation of the core S^{n-1}, generated by antisymmetric A on R^n.
/// In the polar chart it only moves w; on a round fiber it is the rotation of
/// S^n by diag(A, 0).
inline KillingLift lift_core_rotation(const AmbientPtr& a, const Mat& A) {
  const int n = a->n();
  if (A.rows() != n || A.cols() != n || (A + A.transpose()).norm() > 1e-12)
    fail(ErrorKind::Validation, "rotation generator must be an antisymmetric n x n matrix");
  std::optional<KillingLift> round;
  if (a->is_round()) {
    Mat B = Mat::Zero(n + 1, n + 1);
    B.topLeftCorner(n, n) = A;
    round = lift_fiber_rotation(a, B);
  }
  return {"core_rotation", [a, A, n, round](const AmbientPoint& p) {
            if (p.chart != ChartKind::Polar) return (*round)(p);
            const auto& fiber = dynamic_cast<const WarpedChart&>(*a->chart(ChartKind::Polar).inner());
            Vec K = Vec::Zero(a->dim());
            K.tail(n - 1) = detail::rotation_in_chart(*fiber.inner(), p.x.tail(n - 1), A);
            return K;
          }};
}

/// Generator E_{ij} - E_{ji} of the rotation in the (i, j) plane.
inline Mat rotation_generator(int dim, int i, int j) {
  Mat A = Mat::Zero(dim, dim);
  A(i, j) = -1.0;
  A(j, i) = 1.0;
  return A;
}

// ---------------------------------------------------------------------------
// Finite-difference tensor calculus on vector fields

/// (L_V g)_{ab} = V^c d_c g_ab + g_cb d_a V^c + g_ac d_b V^c by centered differences.
inline Mat fd_lie_derivative_metric(const WarpedAmbient& a, const VectorField& V, const AmbientPoint& p,
                                    double h = 1e-5) {
  const int d = a.dim();
  const Mat g = a.metric_at(p);
  const Vec v = V(p);
  Mat dV(d, d);  // dV(c, a) = d_a V^c
  Mat out = Mat::Zero(d, d);
  for (int c = 0; c < d; ++c) {
    AmbientPoint pp = p, pm = p;
    pp.x[c] += h;
    pm.x[c] -= h;
    out += v[c] * (a.metric_at(pp) - a.metric_at(pm)) / (2.0 * h);
    dV.col(c) = (V(pp) - V(pm)) / (2.0 * h);
  }
  out += dV.transpose() * g + g * dV;
  return out;
}

/// [U, V]^a = U^b d_b V^a - V^b d_b U^a by centered differences.
inline Vec fd_lie_bracket(const VectorField& U, const VectorField& V, const AmbientPoint& p, double h = 1e-5) {
  const int d = static_cast<int>(p.x.size());
  Mat dU(d, d), dV(d, d);
  for (int b = 0; b < d; ++b) {
    AmbientPoint pp = p, pm = p;
    pp.x[b] += h;
    pm.x[b] -= h;
    dU.col(b) = (U(pp) - U(pm)) / (2.0 * h);
    dV.col(b) = (V(pp) - V(pm)) / (2.0 * h);
  }
  return dV * U(p) - dU * V(p);
}

/// Divergence of V with respect to the ambient volume form.
inline double fd_divergence(const WarpedAmbient& a, const VectorField& V, const AmbientPoint& p, double h = 1e-5) {
  const int d = a.dim();
  const Tensor3 G = a.christoffel_at(p);
  const Vec v = V(p);
  double div = 0.0;
  for (int b = 0; b < d; ++b) {
    AmbientPoint pp = p, pm = p;
    pp.x[b] += h;
    pm.x[b] -= h;
    div += (V(pp)[b] - V(pm)[b]) / (2.0 * h);
    for (int c = 0; c < d; ++c) div += G(b, b, c) * v[c];
  }
  return div;
}

// ---------------------------------------------------------------------------
// Flow of X = phi d/drho

struct FlowMapResult {
  double rho = 0.0;       // r(rho, t)
  double drho = 1.0;      // dr/drho, the only nontrivial entry of the pushforward
  double log_factor = 0;  // int_0^t phi'(r(s)) ds, so psi_t^* g = exp(2 log_factor) g
};

/// Adaptive integration of r' = phi(r), J' = phi'(r) J, L' = phi'(r).
inline FlowMapResult flow_map_numeric(const WarpFunction& phi, double rho, double t, double tol = 1e-13) {
  if (!phi.contains(rho)) fail(ErrorKind::Domain, "flow map started outside the warp interval");
  if (t == 0.0) return {rho, 1.0, 0.0};
  namespace odeint = boost::numeric::odeint;
  using State = std::array<double, 3>;
  struct Outside {};
  auto rhs = [&](const State& y, State& dy, double) {
    if (!phi.contains(y[0])) throw Outside{};
    const Jet j = phi.jet(y[0]);
    dy = {j.v, j.d1 * y[1], j.d1};
  };
  // Integrate forward in s = t * sigma, sigma in [0, 1], so one code path covers t < 0.
  const double sgn = t > 0 ? 1.0 : -1.0;
  auto srhs = [&](const State& y, State& dy, double s) {
    rhs(y, dy, s);
    for (double& v : dy) v *= sgn;
  };
  auto stepper = odeint::make_controlled(tol, tol, odeint::runge_kutta_dopri5<State>());
  State y{rho, 1.0, 0.0};
  double s = 0.0, ds = std::min(1e-3, std::abs(t));
  const double end = std::abs(t);
  while (s < end) {
    if (s + ds > end) ds = end - s;
    State trial = y;
    double st = s, dst = ds;
    odeint::controlled_step_result r;
    try {
      r = stepper.try_step(srhs, trial, st, dst);
    } catch (const Outside&) {
      ds *= 0.5;
      if (ds < 1e-12 * std::max(1.0, end)) throw EscapeError(sgn * s, "flow of X leaves the warp interval");
      continue;
    }
    if (r == odeint::success) {
      y = trial;
      s = st;
      if (!phi.contains(y[0])) throw EscapeError(sgn * s, "flow of X leaves the warp interval");
    }
    ds = dst;
    if (ds < 1e-14 * std::max(1.0, end)) fail(ErrorKind::Numerical, "flow map step size underflow");
  }
  return {y[0], y[1], y[2]};
}

/// psi_t on the rho coordinate. Closed forms on space forms; adaptive
/// integration otherwise. Fiber coordinates are unchanged.
inline FlowMapResult flow_map(const WarpedAmbient& a, double rho, double t) {
  const auto& phi = a.warp();
  if (!phi.contains(rho)) fail(ErrorKind::Domain, "flow map started outside the warp interval");
  const auto k = a.space_form_curvature();
  if (!k) return flow_map_numeric(phi, rho, t);
  double r = 0.0;
  switch (*k) {
    case 0: r = std::exp(t) * rho; break;
    case -1: {
      const double q = std::exp(t) * std::tanh(0.5 * rho);
      if (q >= 1.0) throw EscapeError(-std::log(std::tanh(0.5 * rho)), "flow of X reaches hyperbolic infinity");
      r = 2.0 * std::atanh(q);
      break;
    }
    default: r = 2.0 * std::atan(std::exp(t) * std::tan(0.5 * rho)); break;
  }
  // d r / d rho = phi(r) / phi(rho) and int phi'(r) = log(phi(r) / phi(rho)).
  const double ratio = (*k == 0) ? std::exp(t) : phi(r) / phi(rho);
  return {r, ratio, std::log(ratio)};
}

inline AmbientPoint flow_map(const WarpedAmbient& a, const AmbientPoint& p, double t) {
  AmbientPoint q = p;
  q.x[0] = flow_map(a, p.rho(), t).rho;
  return q;
}

}  // namespace warpflow
