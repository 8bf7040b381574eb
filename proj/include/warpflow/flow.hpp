#pragma once

#include "warpflow/ambient.hpp"
#include "warpflow/speed.hpp"
#include "warpflow/surface.hpp"

#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace warpflow {

// ---------------------------------------------------------------------------
// Slice ODE  rho' = -f(phi'/phi, ..., phi'/phi)

struct SliceTrajectory {
  std::vector<double> t, rho;
  std::string reason;  // completed | lower_end | upper_end | inadmissible
  double t_stop = 0;
};

struct SliceOdeOptions {
  double tol = 1e-12;
  double boundary_gap = 1e-5;  // stop this close to an end of the warp interval
};

inline double slice_speed(const WarpedAmbient& a, const SpeedFunction& f, double rho) {
  const Jet p = a.warp().jet(rho);
  return f(Vec::Constant(a.n(), p.d1 / p.v));
}

inline SliceTrajectory slice_ode_solve(const WarpedAmbient& a, const SpeedFunction& f, double rho0, double t_end,
                                       const SliceOdeOptions& opt = {}) {
  const auto& w = a.warp();
  const double lo = w.lo() + opt.boundary_gap, hi = w.hi() - opt.boundary_gap;
  auto admissible_at = [&](double r) {
    const Jet p = w.jet(r);
    return p.v > 0 && f.admissible(Vec::Constant(a.n(), p.d1 / p.v));
  };
  if (!(rho0 > lo && rho0 < hi)) fail(ErrorKind::Domain, "slice radius outside the warp interval");
  if (!admissible_at(rho0)) {
    const Jet p = w.jet(rho0);
    fail(ErrorKind::Inadmissible,
         "slice curvature " + std::to_string(p.d1 / p.v) + " outside the cone of " + f.name());
  }

  SliceTrajectory out;
  out.t.push_back(0.0);
  out.rho.push_back(rho0);
  if (t_end == 0.0) {
    out.reason = "completed";
    return out;
  }
  namespace odeint = boost::numeric::odeint;
  using State = std::array<double, 1>;
  struct Outside {};
  // Empty while inside and admissible, else the name of the violated constraint.
  auto event = [&](double r) -> std::string {
    if (r <= lo) return "lower_end";
    if (r >= hi) return "upper_end";
    if (!admissible_at(r)) return "inadmissible";
    return {};
  };
  std::string blocked;
  auto rhs = [&](const State& y, State& dy, double) {
    blocked = event(y[0]);
    if (!blocked.empty()) throw Outside{};
    dy[0] = -slice_speed(a, f, y[0]);
  };

  auto stepper = odeint::make_dense_output(opt.tol, opt.tol, odeint::runge_kutta_dopri5<State>());
  State y{rho0};
  double t = 0.0, dt = std::min(1e-4, t_end);
  stepper.initialize(y, t, dt);
  for (;;) {
    std::pair<double, double> span;
    try {
      span = stepper.do_step(rhs);
    } catch (const Outside&) {
      // A stage left the valid region; restart from the last accepted state.
      // The trajectory stops once no step, however small, stays inside.
      dt *= 0.25;
      if (dt < 1e-15 * std::max(1.0, t)) {
        out.reason = blocked;
        out.t_stop = t;
        return out;
      }
      stepper.initialize(y, t, dt);
      continue;
    }
    State ynew = stepper.current_state();
    const std::string ev = event(ynew[0]);
    if (!ev.empty() || span.second >= t_end) {
      double a0 = span.first, b0 = span.second;
      if (ev.empty()) {
        State s;
        stepper.calc_state(t_end, s);
        out.t.push_back(t_end);
        out.rho.push_back(s[0]);
        out.reason = "completed";
        out.t_stop = t_end;
        return out;
      }
      // bisect the dense output for the first time the event fires
      for (int it = 0; it < 200 && b0 - a0 > 1e-15 * std::max(1.0, b0); ++it) {
        const double m = 0.5 * (a0 + b0);
        State s;
        stepper.calc_state(m, s);
        (event(s[0]).empty() ? a0 : b0) = m;
      }
      if (a0 < t_end) {
        State s;
        stepper.calc_state(a0, s);
        out.t.push_back(a0);
        out.rho.push_back(s[0]);
        out.reason = ev;
        out.t_stop = a0;
        return out;
      }
    }
    y = ynew;
    t = span.second;
    dt = stepper.current_time_step();
    out.t.push_back(t);
    out.rho.push_back(y[0]);
  }
}

// ---------------------------------------------------------------------------
// Rotationally symmetric graph flow  (dF/dt)^perp = f nu

struct FlowDiagnostics {
  double min_lambda = 0, max_lambda = 0;
  double min_supportX = 0, max_supportX = 0;
  double min_speed = 0, max_speed = 0;
};

struct FlowState {
  double t = 0;
  RadialGraph surface;
  FlowDiagnostics diag;
};

struct StepControl {
  double cfl = 0.25;
  double dt_max = 1e-2;
  std::vector<double> snapshots;  // output times (t_end always included)
  Orientation orientation = Orientation::Inward;
};

struct GraphFlowResult {
  std::vector<FlowState> states;
  std::string reason;  // completed | inadmissible | degenerate | step_underflow
  std::string detail;
  long steps = 0;
};

namespace detail {

struct GraphRate {
  std::vector<double> ut;
  double stiffness = 0;  // bound on the diffusion coefficient of u_t in u''
  FlowDiagnostics diag;
};

inline GraphRate graph_rate(const WarpedAmbient& a, const SpeedFunction& f, const RadialGraph& g, Orientation o) {
  GraphOptions opt;
  opt.orientation = o;
  const auto nodes = graph_geometry(a, g, opt);
  GraphRate r;
  r.ut.resize(nodes.size());
  const int n = a.n();
  r.diag.min_lambda = r.diag.min_supportX = r.diag.min_speed = std::numeric_limits<double>::infinity();
  r.diag.max_lambda = r.diag.max_supportX = r.diag.max_speed = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto& nd = nodes[i];
    const Vec lam = nd.lambda(n);
    const double fv = f(lam);
    const Vec grad = f.gradient(lam);
    r.ut[i] = fv / nd.drho_nu;
    const double G = nd.phi * nd.phi + nd.up * nd.up;
    r.stiffness = std::max(r.stiffness, grad[0] / G + (n - 1) * grad[n - 1] / (nd.phi * nd.phi));
    r.diag.min_lambda = std::min(r.diag.min_lambda, lam.minCoeff());
    r.diag.max_lambda = std::max(r.diag.max_lambda, lam.maxCoeff());
    r.diag.min_supportX = std::min(r.diag.min_supportX, nd.supportX);
    r.diag.max_supportX = std::max(r.diag.max_supportX, nd.supportX);
    r.diag.min_speed = std::min(r.diag.min_speed, fv);
    r.diag.max_speed = std::max(r.diag.max_speed, fv);
  }
  return r;
}

}  // namespace detail

/// Method of lines for u_t = f / d rho(nu) with classical RK4; the step is
/// cfl * h^2 / (diffusion bound), capped by dt_max and clipped to snapshots.
inline GraphFlowResult evolve_graph(const WarpedAmbient& a, const SpeedFunction& f, const RadialGraph& g0, double t_end,
                                    StepControl ctl = {}) {
  f.check_dimension(a.n());
  if (!(ctl.cfl > 0) || !(ctl.dt_max > 0)) fail(ErrorKind::Validation, "step control must be positive");
  ctl.snapshots.push_back(t_end);
  std::sort(ctl.snapshots.begin(), ctl.snapshots.end());
  ctl.snapshots.erase(std::unique(ctl.snapshots.begin(), ctl.snapshots.end()), ctl.snapshots.end());

  GraphFlowResult res;
  RadialGraph g = g0;
  double t = 0.0;
  const double h = g.h();
  const std::size_t m = g.u.size();
  auto shifted = [&](const std::vector<double>& k, double c) {
    RadialGraph s = g;
    for (std::size_t i = 0; i < m; ++i) s.u[i] += c * k[i];
    return s;
  };
  detail::GraphRate k1;
  try {
    k1 = detail::graph_rate(a, f, g, ctl.orientation);
  } catch (const Error& e) {
    fail(e.kind(), std::string("initial graph: ") + e.what());
  }
  res.states.push_back({0.0, g, k1.diag});
  std::size_t next = 0;
  while (next < ctl.snapshots.size() && ctl.snapshots[next] <= 0.0) ++next;
  while (next < ctl.snapshots.size()) {
    const double target = ctl.snapshots[next];
    double dt = std::min(ctl.dt_max, ctl.cfl * h * h / std::max(k1.stiffness, 1e-300));
    bool lands = false;
    if (t + dt >= target - 1e-14 * std::max(1.0, target)) {
      dt = target - t;
      lands = true;
    }
    if (dt < 1e-14) {
      res.reason = "step_underflow";
      res.detail = "time step " + std::to_string(dt) + " at t = " + std::to_string(t);
      return res;
    }
    try {
      const auto k2 = detail::graph_rate(a, f, shifted(k1.ut, 0.5 * dt), ctl.orientation);
      const auto k3 = detail::graph_rate(a, f, shifted(k2.ut, 0.5 * dt), ctl.orientation);
      const auto k4 = detail::graph_rate(a, f, shifted(k3.ut, dt), ctl.orientation);
      for (std::size_t i = 0; i < m; ++i) g.u[i] += dt / 6.0 * (k1.ut[i] + 2 * k2.ut[i] + 2 * k3.ut[i] + k4.ut[i]);
      t = lands ? target : t + dt;
      k1 = detail::graph_rate(a, f, g, ctl.orientation);
    } catch (const Error& e) {
      res.reason = e.kind() == ErrorKind::Inadmissible ? "inadmissible" : "degenerate";
      res.detail = e.what();
      return res;
    }
    ++res.steps;
    if (lands) {
      res.states.push_back({t, g, k1.diag});
      ++next;
    }
  }
  res.reason = "completed";
  return res;
}

// ---------------------------------------------------------------------------
// Self-similar transport  Sigma_t = psi_{tau(t)}(Sigma_0)

struct TauFunction {
  std::function<double(double)> tau, dtau;

  /// tau(t) = c t, the normalization tau(0) = 0 with constant rate.
  static TauFunction linear(double c) {
    if (c == 0.0) fail(ErrorKind::Validation, "tau' must be nonzero");
    return {[c](double t) { return c * t; }, [c](double) { return c; }};
  }
  bool expander() const { return dtau(0.0) > 0; }
  const char* kind() const { return expander() ? "expander" : "shrinker"; }
};

inline HypersurfaceRep soliton_transport(const WarpedAmbient& a, const HypersurfaceRep& s0, const TauFunction& tau,
                                         double t) {
  const double s = tau.tau(t);
  if (const auto* sl = std::get_if<Slice>(&s0)) return Slice{flow_map(a, sl->rho0, s).rho};
  if (std::holds_alternative<Cone>(s0)) return s0;  // X is tangent to cones
  if (const auto* gr = std::get_if<RadialGraph>(&s0)) {
    RadialGraph out = *gr;
    for (double& u : out.u) u = flow_map(a, u, s).rho;
    return out;
  }
  const auto& im = std::get<Immersion>(s0);
  Immersion out = im;
  out.F = [F = im.F, amb = a, s](const Vec& u) {
    Vec x = F(u);
    x[0] = flow_map(amb, x[0], s).rho;
    return x;
  };
  if (im.dF)
    out.dF = [F = im.F, dF = im.dF, amb = a, s](const Vec& u) {
      Mat T = dF(u);
      T.row(0) *= flow_map(amb, F(u)[0], s).drho;
      return T;
    };
  out.d2F = nullptr;
  return out;
}

}  // namespace warpflow
