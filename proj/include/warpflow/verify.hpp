#pragma once

#include "warpflow/flow.hpp"
#include "warpflow/parallel.hpp"
#include "warpflow/soliton.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <random>
#include <string>
#include <vector>

namespace warpflow {

struct ResidualStudy {
  std::string quantity;
  std::vector<int> grid;
  std::vector<double> dt;        // time-stencil spacing per grid
  std::vector<double> residual;  // sup over interior nodes
  std::vector<double> orders;    // log2 ratios of consecutive residuals
  double min_order = 0;
  std::vector<double> theta, field;  // residual at the finest grid
};

inline void finish_orders(ResidualStudy& s) {
  s.orders.clear();
  for (std::size_t i = 0; i + 1 < s.residual.size(); ++i)
    s.orders.push_back(std::log2(s.residual[i] / s.residual[i + 1]) / std::log2(double(s.grid[i + 1]) / s.grid[i]));
  s.min_order = s.orders.empty() ? 0 : *std::min_element(s.orders.begin(), s.orders.end());
}

// ---------------------------------------------------------------------------
// Evolution of support functions along the graph flow

enum class SupportField { AxisRotation, Conformal };

inline const char* to_string(SupportField s) { return s == SupportField::Conformal ? "conformal" : "axis_rotation"; }

/// Right-hand side of the support evolution split by origin; the first three
/// carry the conformal factor kappa and vanish for Killing fields.
struct SupportTerms {
  double gradient_kappa = 0;  // fdot^{ij} g_ij nabla_nu kappa
  double f_kappa = 0;         // f kappa
  double h_kappa = 0;         // fdot^{ij} h_ij kappa
  double curvature = 0;       // -fdot^{ij} Rm(e_i, nu, e_j, nu) g(K, nu)
  double h2 = 0;              // fdot^{ij} (h^2)_ij g(K, nu)
  double total() const { return gradient_kappa + f_kappa + h_kappa + curvature + h2; }
  double kappa_part() const { return gradient_kappa + f_kappa + h_kappa; }
};

struct SupportOptions {
  std::vector<int> grids{128, 256, 512};
  double horizon = 0.01;     // centre of the time stencil
  double stencil = 1.0;      // time spacing = stencil * h^2
  bool simplified = false;   // space-form shortcut for the conformal field
  unsigned threads = 0;
};

namespace detail {

struct SupportSnapshot {
  std::vector<GraphNode> nodes;
  std::vector<double> q;
};

/// Radial factor q of the support function g(K, nu) = q(theta) Y(w). The
/// rotation field is evaluated through its ambient lift at the fiber point
/// where Y = omega_0 equals 1.
inline SupportSnapshot support_snapshot(const AmbientPtr& a, const RadialGraph& g, SupportField which) {
  SupportSnapshot s;
  GraphOptions opt;
  if (which == SupportField::AxisRotation) {
    opt.killing.push_back(lift_fiber_rotation(a, rotation_generator(a->n() + 1, 0, a->n())));
    opt.core_point = Vec::Zero(a->n() - 1);
    opt.core_point[0] = 1.0;
  }
  s.nodes = graph_geometry(*a, g, opt);
  for (const auto& nd : s.nodes) {
    if (which == SupportField::Conformal) s.q.push_back(nd.supportX);
    else s.q.push_back(std::abs(nd.r) < 1e-14 ? 0.0 : nd.supportK[0]);  // odd in theta at the poles
  }
  return s;
}

}  // namespace detail

/// RHS of the support evolution at one graph node with radial factor q.
inline SupportTerms support_rhs(const WarpedAmbient& a, const SpeedFunction& f, const GraphNode& nd, double q,
                                SupportField which) {
  const int n = a.n();
  const Vec lam = nd.lambda(n);
  const auto fd = f.fdot(lam);
  Vec sec = Vec::Constant(n, -nd.ddphi / nd.phi);
  if (std::abs(nd.r) > 1e-14)
    sec.tail(n - 1).setConstant(detail::orbit_sectional({nd.phi, nd.dphi, nd.ddphi}, a.fiber().r.jet(nd.theta), nd.W));
  SupportTerms t;
  t.curvature = fd.diag.dot(sec) * q;
  t.h2 = fd.trace_h2 * q;
  if (which == SupportField::Conformal) {
    const double kappa = nd.dphi;
    t.gradient_kappa = fd.trace_g * nd.ddphi * nd.nu_rho;
    t.f_kappa = f(lam) * kappa;
    t.h_kappa = fd.trace_h * kappa;
  }
  return t;
}

/// Residual of (d/dt - fdot^{ij} nabla_i nabla_j) g(K, nu) = RHS for a
/// rotational graph evolving under the flow, at N = opt.grids. The time
/// derivative is a centred difference of snapshots at horizon +- stencil h^2,
/// corrected for the tangential motion of the fixed-theta parametrization.
inline ResidualStudy verify_support_evolution(const AmbientPtr& a, const SpeedFunction& f,
                                              const std::function<double(double)>& u0, SupportField which,
                                              const SupportOptions& opt = {}) {
  if (opt.simplified && (which != SupportField::Conformal || !a->space_form_curvature()))
    fail(ErrorKind::Validation, "the simplified support equation needs the conformal field on a space form");
  if (opt.grids.size() < 3) fail(ErrorKind::Validation, "a residual study needs at least 3 grids");
  const int n = a->n();
  const double mu = which == SupportField::AxisRotation ? n - 1.0 : 0.0;
  const EndKind parity = which == SupportField::AxisRotation ? EndKind::Odd : EndKind::Even;

  ResidualStudy st;
  st.quantity = std::string("support_") + to_string(which) + (opt.simplified ? "_space_form" : "");
  st.grid = opt.grids;
  st.dt.resize(opt.grids.size());
  st.residual.resize(opt.grids.size());
  std::vector<std::vector<double>> fields(opt.grids.size());
  parallel_for(opt.grids.size(), thread_count(opt.threads), [&](std::size_t k) {
    const int N = opt.grids[k];
    const auto g0 = RadialGraph::sample(N, u0);
    const double h = g0.h();
    const double D = opt.stencil * h * h;
    if (!(opt.horizon - D > 0)) fail(ErrorKind::Validation, "horizon too short for the centred time stencil");
    StepControl ctl;
    ctl.snapshots = {opt.horizon - D, opt.horizon, opt.horizon + D};
    const auto run = evolve_graph(*a, f, g0, opt.horizon + D, ctl);
    if (run.reason != "completed") fail(ErrorKind::Numerical, "flow stopped before the horizon: " + run.detail);
    const auto& st_ = run.states;
    const auto prev = detail::support_snapshot(a, st_[1].surface, which);
    const auto mid = detail::support_snapshot(a, st_[2].surface, which);
    const auto next = detail::support_snapshot(a, st_[3].surface, which);
    const double dt = st_[3].t - st_[1].t;
    const auto Dq = fd4(mid.q, h, parity, parity);

    std::vector<double> res(N + 1, 0.0);
    double worst = 0;
    for (int i = 1; i < N; ++i) {
      const auto& nd = mid.nodes[i];
      const double q = mid.q[i], q1 = Dq.d1[i], q2 = Dq.d2[i];
      const Vec lam = nd.lambda(n);
      const Vec grad = f.gradient(lam);
      const double fv = f(lam);
      const double G = nd.phi * nd.phi + nd.up * nd.up;
      const double dG = 2 * nd.phi * nd.dphi * nd.up + 2 * nd.up * nd.upp;
      const double R = nd.phi * nd.r;
      const double dlogR = nd.dphi * nd.up / nd.phi + nd.dr / nd.r;
      const double hess = grad[0] * (q2 - dG * q1 / (2 * G)) / G +
                          grad[n - 1] * ((n - 1) * dlogR * q1 / G - mu * q / (R * R));
      const double qt = (next.q[i] - prev.q[i]) / dt + fv * nd.nu_theta * q1;
      double rhs;
      if (opt.simplified) rhs = fv * nd.dphi + f.fdot(lam).trace_h * nd.dphi + f.fdot(lam).trace_h2 * q;
      else rhs = support_rhs(*a, f, nd, q, which).total();
      res[i] = qt - hess - rhs;
      if (!std::isfinite(res[i])) fail(ErrorKind::Numerical, "non-finite support residual at node " + std::to_string(i));
      worst = std::max(worst, std::abs(res[i]));
    }
    st.dt[k] = dt;
    st.residual[k] = worst;
    fields[k] = std::move(res);
  });
  finish_orders(st);
  const int Nf = opt.grids.back();
  st.theta = RadialGraph::sample(Nf, u0).theta;
  st.field = fields.back();
  return st;
}

// ---------------------------------------------------------------------------
// Space-form identities

struct IdentityRow {
  std::string name;
  double sup_error = 0;
  bool pass = false;
};

/// phi'' + k phi = 0 and nabla_nu kappa + k g(X, nu) = 0 sampled over rho and
/// random unit normals (fixed seed).
inline std::vector<IdentityRow> verify_space_form_identities(const WarpedAmbient& a, double tol = 1e-12,
                                                             int samples = 200, unsigned seed = 1) {
  const auto k = a.space_form_curvature();
  if (!k) fail(ErrorKind::Validation, "ambient '" + a.name() + "' is not a space form");
  const auto& w = a.warp();
  const double lo = w.lo() + 0.05, hi = std::isfinite(w.hi()) ? w.hi() - 0.05 : w.lo() + 5.0;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  IdentityRow warp_row{"phi'' + k phi = 0"}, normal_row{"nabla_nu kappa + k g(X, nu) = 0"};
  for (int i = 0; i < samples; ++i) {
    const double rho = lo + (hi - lo) * i / (samples - 1);
    const Jet p = w.jet(rho);
    warp_row.sup_error = std::max(warp_row.sup_error, std::abs(p.d2 + *k * p.v));
    AmbientPoint pt{ChartKind::StereoNorth, Vec(a.dim())};
    pt.x[0] = rho;
    for (int j = 1; j < a.dim(); ++j) pt.x[j] = unif(rng);
    const Mat G = a.metric_at(pt);
    Vec nu(a.dim());
    for (int j = 0; j < a.dim(); ++j) nu[j] = gauss(rng);
    nu /= std::sqrt(nu.dot(G * nu));
    // kappa = phi'(rho) depends on rho only: nabla_nu kappa = nu^rho phi''
    const double grad = nu[0] * p.d2;
    normal_row.sup_error = std::max(normal_row.sup_error, std::abs(grad + *k * a.conformal_field(pt).dot(G * nu)));
  }
  warp_row.pass = warp_row.sup_error <= tol;
  normal_row.pass = normal_row.sup_error <= tol;
  return {warp_row, normal_row};
}

// ---------------------------------------------------------------------------
// Invariance of g(K, nu) / g(X, nu) under transport by the flow of X

struct QuotientStudy {
  std::vector<double> times;
  std::vector<double> drift;  // sup over sample points of |q_t - q_0|
  double max_drift = 0;
  double soliton_residual = std::numeric_limits<double>::quiet_NaN();
  double max_abs_quotient = 0;  // size of q_0, to show it is not trivially zero
};

namespace detail {
inline Immersion as_immersion(const WarpedAmbient& a, const HypersurfaceRep& s) {
  if (const auto* sl = std::get_if<Slice>(&s)) return slice_immersion(a, sl->rho0);
  if (const auto* g = std::get_if<RadialGraph>(&s)) {
    if (g->open_end) fail(ErrorKind::Validation, "quotient study needs a closed radial graph");
    // periodic trigonometric interpolant of the even profile
    const int N = g->N();
    std::vector<double> c(N + 1, 0.0);
    for (int m = 0; m <= N; ++m) {
      double acc = 0;
      for (int j = 0; j <= N; ++j) acc += ((j == 0 || j == N) ? 0.5 : 1.0) * g->u[j] * std::cos(m * g->theta[j]);
      c[m] = acc * 2.0 / N * ((m == 0 || m == N) ? 0.5 : 1.0);
    }
    return graph_immersion(a, [c](double t) {
      double v = 0;
      for (std::size_t m = 0; m < c.size(); ++m) v += c[m] * std::cos(m * t);
      return v;
    });
  }
  if (const auto* im = std::get_if<Immersion>(&s)) return *im;
  fail(ErrorKind::Validation, "quotient study cannot transport a cone");
}
}  // namespace detail

/// Transports spec.surface by psi_{tau' t} and compares the quotient at the
/// same parameter points. The identity only uses conformality of psi, so the
/// surface need not be a soliton; its residual is reported for reference.
inline QuotientStudy verify_quotient_invariance(const SolitonSpec& spec, const KillingLift& K,
                                                const std::vector<double>& times, const std::vector<Vec>& params) {
  spec.validate();
  const auto& a = *spec.ambient;
  const Immersion im0 = detail::as_immersion(a, spec.surface);
  const auto tau = TauFunction::linear(spec.tau_prime);
  QuotientStudy out;
  if (!std::holds_alternative<Immersion>(spec.surface)) {
    try {
      out.soliton_residual = soliton_residual(spec).sup_residual;
    } catch (const Error&) {
    }
  }
  auto quotients = [&](const Immersion& im) {
    std::vector<double> q;
    for (const auto& u : params) {
      const auto pg = immersion_geometry(a, im, u, {K});
      if (std::abs(pg.supportX) < 1e-12) fail(ErrorKind::Degenerate, "g(X, nu) vanishes: star-shapedness lost");
      q.push_back(pg.supportK[0] / pg.supportX);
      if (!std::isfinite(q.back())) fail(ErrorKind::Numerical, "non-finite support quotient");
    }
    return q;
  };
  const auto q0 = quotients(im0);
  for (double v : q0) out.max_abs_quotient = std::max(out.max_abs_quotient, std::abs(v));
  for (double t : times) {
    const auto moved = std::get<Immersion>(soliton_transport(a, im0, tau, t));
    const auto qt = quotients(moved);
    double d = 0;
    for (std::size_t i = 0; i < qt.size(); ++i) d = std::max(d, std::abs(qt[i] - q0[i]));
    out.times.push_back(t);
    out.drift.push_back(d);
    out.max_drift = std::max(out.max_drift, d);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Conformal factor of psi_t

struct ConformalCheck {
  double pullback = 0;    // (psi_t^* g)(v, v) from the differential of psi_t
  double predicted = 0;   // exp(2 int_0^t phi'(rho(psi_s)) ds) g(v, v)
  double relative_error = 0;
};

/// Compares psi_t^* g(v, v), with d psi_t from centred differences of the flow
/// map, against the exponential of the integrated conformal factor computed by
/// Gauss-Kronrod quadrature along the orbit.
inline ConformalCheck verify_conformal_factor(const WarpedAmbient& a, const AmbientPoint& p, const Vec& v, double t,
                                              double h = 1e-5) {
  const double gv = v.dot(a.metric_at(p) * v);
  if (!(gv > 0)) fail(ErrorKind::Validation, "tangent vector must be nonzero");
  AmbientPoint pp = p, pm = p;
  pp.x += h * v;
  pm.x -= h * v;
  const Vec dv = (flow_map(a, pp, t).x - flow_map(a, pm, t).x) / (2 * h);
  const AmbientPoint q = flow_map(a, p, t);
  ConformalCheck c;
  c.pullback = dv.dot(a.metric_at(q) * dv);
  double integral = 0;
  if (t != 0.0) {
    auto rate = [&](double s) { return a.warp().d1(flow_map(a, p.rho(), s).rho); };
    integral = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(rate, 0.0, t, 8, 1e-13);
  }
  c.predicted = std::exp(2 * integral) * gv;
  c.relative_error = std::abs(c.pullback - c.predicted) / c.predicted;
  return c;
}

}  // namespace warpflow
