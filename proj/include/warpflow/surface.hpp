#pragma once

#include "warpflow/ambient.hpp"
#include "warpflow/error.hpp"
#include "warpflow/stencil.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

namespace warpflow {

/// Choice of unit normal. Inward means g(nu, d/drho) < 0, the convention under
/// which slices have curvature +phi'/phi.
enum class Orientation { Inward, Outward };

inline double orientation_sign(Orientation o) { return o == Orientation::Inward ? 1.0 : -1.0; }

/// Extrinsic data at one point of a hypersurface.
struct PointGeometry {
  Mat g;                        // induced metric
  Mat h;                        // second fundamental form
  Vec lambda;                   // principal curvatures, ascending
  Vec nu;                       // unit normal, ambient chart components
  double supportX = 0;          // g(X, nu)
  std::vector<double> supportK; // g(K, nu) per requested Killing field
  double drho_nu = 0;           // d rho (nu)

  Mat shape() const { return g.ldlt().solve(h); }
  double H() const { return lambda.sum(); }
};

// ---------------------------------------------------------------------------
// Representations

struct Slice {
  double rho0;
};

struct Cone {
  double theta0;
};

/// rho = u(theta) over the fiber, rotationally symmetric about the axis
/// theta = 0, on a uniform theta grid starting at the pole. The right end is
/// either the opposite pole or an open truncation.
struct RadialGraph {
  std::vector<double> theta, u;
  bool open_end = false;

  int N() const { return static_cast<int>(theta.size()) - 1; }
  double h() const { return theta[1] - theta[0]; }

  static RadialGraph sample(int N, const std::function<double(double)>& fn, double theta_lo = 0.0,
                            double theta_hi = std::numbers::pi, bool open_end = false) {
    if (N < 6) fail(ErrorKind::Validation, "radial graph needs N >= 6");
    RadialGraph g;
    g.open_end = open_end;
    g.theta.resize(N + 1);
    g.u.resize(N + 1);
    for (int i = 0; i <= N; ++i) {
      g.theta[i] = theta_lo + (theta_hi - theta_lo) * i / N;
      g.u[i] = fn(g.theta[i]);
    }
    return g;
  }
  static RadialGraph constant(int N, double rho0) {
    return sample(N, [rho0](double) { return rho0; });
  }
};

/// Parametrized immersion u -> F(u) in one ambient chart. Derivative
/// callbacks are optional; missing ones fall back to finite differences.
struct Immersion {
  ChartKind chart = ChartKind::Polar;
  int dim = 2;
  std::function<Vec(const Vec&)> F;
  std::function<Mat(const Vec&)> dF;                // (n+1) x dim
  std::function<std::vector<Mat>(const Vec&)> d2F;  // d2F[a](i, j) = d_i d_j F^a
  /// Ambient vector v with g(nu, v) < 0 fixing the orientation; d/drho if unset.
  std::function<Vec(const Vec&)> reference;
};

using HypersurfaceRep = std::variant<Slice, Cone, RadialGraph, Immersion>;

// ---------------------------------------------------------------------------
// Slices and cones

namespace detail {
inline PointGeometry principal_frame(const Vec& lam, const Vec& nu, double supportX, double drho) {
  PointGeometry pg;
  const int n = static_cast<int>(lam.size());
  pg.g = Mat::Identity(n, n);
  pg.lambda = lam;
  std::sort(pg.lambda.data(), pg.lambda.data() + n);
  pg.h = pg.lambda.asDiagonal();
  pg.nu = nu;
  pg.supportX = supportX;
  pg.drho_nu = drho;
  return pg;
}
}  // namespace detail

/// Geometry of {rho0} x M in an orthonormal principal frame.
inline PointGeometry slice_geometry(const WarpedAmbient& a, double rho0) {
  if (!a.warp().interior(rho0)) fail(ErrorKind::Domain, "slice radius must be interior to the warp interval");
  const Jet f = a.warp().jet(rho0);
  if (!(f.v > 0.0)) fail(ErrorKind::Degenerate, "slice through a zero of the warp");
  Vec nu = Vec::Zero(a.dim());
  nu[0] = -1.0;
  return detail::principal_frame(Vec::Constant(a.n(), f.d1 / f.v), nu, -f.v, -1.0);
}

/// Geometry of the cone {theta = theta0} at radius rho, normal -d_theta/phi.
inline PointGeometry cone_geometry(const WarpedAmbient& a, double theta0, double rho) {
  const auto& r = a.fiber().r;
  if (!r.interior(theta0)) fail(ErrorKind::Domain, "cone angle must be interior to the fiber interval");
  if (!a.warp().interior(rho)) fail(ErrorKind::Domain, "cone sample radius must be interior");
  const double phi = a.warp()(rho);
  const Jet rj = r.jet(theta0);
  if (!(rj.v > 0.0)) fail(ErrorKind::Degenerate, "cone angle at a zero of the fiber profile");
  Vec lam = Vec::Constant(a.n(), rj.d1 / (rj.v * phi));
  lam[0] = 0.0;
  Vec nu = Vec::Zero(a.dim());
  nu[1] = -1.0 / phi;
  return detail::principal_frame(lam, nu, 0.0, 0.0);
}

// ---------------------------------------------------------------------------
// Rotationally symmetric radial graphs

/// Per-node data for a radial graph. lam_theta is the curvature along the
/// profile, lam_S the (n-1)-fold curvature along the orbit spheres.
struct GraphNode {
  double theta = 0, u = 0, up = 0, upp = 0;
  double phi = 0, dphi = 0, ddphi = 0;
  double r = 0, dr = 0;
  double W = 1;
  double lam_theta = 0, lam_S = 0;
  double supportX = 0, drho_nu = 0;
  double nu_rho = 0, nu_theta = 0;  // chart components of nu
  std::vector<double> supportK;

  Vec lambda(int n) const {
    Vec l = Vec::Constant(n, lam_S);
    l[0] = lam_theta;
    return l;
  }
};

struct GraphOptions {
  Orientation orientation = Orientation::Inward;
  std::vector<KillingLift> killing;  // support functions to evaluate
  Vec core_point;                    // chart point on S^{n-1} where fields are sampled; 0 if empty
};

inline EndKind graph_right_end(const WarpedAmbient& a, const RadialGraph& g) {
  if (g.open_end) return EndKind::Open;
  const auto& r = a.fiber().r;
  if (std::abs(g.theta.back() - r.hi()) > 1e-12 || std::abs(r(r.hi())) > 1e-12)
    fail(ErrorKind::Validation, "closed radial graph must end at the opposite pole");
  return EndKind::Even;
}

/// Geometry of a single node from (u, u', u''). Pole nodes (r = 0) use the
/// limit u' r'/r -> u''.
inline GraphNode graph_node(const WarpedAmbient& a, double theta, double u, double up, double upp,
                            const GraphOptions& opt = {}) {
  GraphNode nd;
  nd.theta = theta, nd.u = u, nd.up = up, nd.upp = upp;
  if (!a.warp().interior(u)) fail(ErrorKind::Domain, "graph leaves the interior of the warp interval");
  const Jet f = a.warp().jet(u);
  const Jet r = a.fiber().r.jet(theta);
  nd.phi = f.v, nd.dphi = f.d1, nd.ddphi = f.d2, nd.r = r.v, nd.dr = r.d1;
  if (!std::isfinite(up) || !std::isfinite(upp)) fail(ErrorKind::Degenerate, "non-finite graph derivatives");
  const double G = f.v * f.v + up * up;
  nd.W = std::sqrt(G) / f.v;
  const double s = orientation_sign(opt.orientation);
  nd.lam_theta = s * (f.v * f.d1 + 2.0 * up * up * f.d1 / f.v - upp) / (nd.W * G);
  const bool pole = std::abs(r.v) < 1e-14;
  const double orbit = pole ? upp : up * r.d1 / r.v;
  nd.lam_S = s * (f.d1 / f.v - orbit / (f.v * f.v)) / nd.W;
  nd.supportX = -s * f.v / nd.W;
  nd.drho_nu = -s / nd.W;
  nd.nu_rho = -s / nd.W;
  nd.nu_theta = s * up / (f.v * f.v * nd.W);
  if (!opt.killing.empty()) {
    Vec w = opt.core_point.size() ? opt.core_point : Vec::Zero(a.n() - 1);
    const AmbientPoint p = a.polar_point(u, theta, w);
    Vec nu = Vec::Zero(a.dim());
    nu[0] = nd.nu_rho;
    nu[1] = nd.nu_theta;
    // Pole nodes: the polar chart degenerates, so sample at a tiny offset.
    AmbientPoint q = p;
    if (pole) q.x[1] += (theta < 1.0 ? 1e-9 : -1e-9);
    const Mat gm = a.metric_at(q);
    for (const auto& K : opt.killing) nd.supportK.push_back(K(q).dot(gm * nu));
  }
  return nd;
}

inline std::vector<GraphNode> graph_geometry(const WarpedAmbient& a, const RadialGraph& g, const GraphOptions& opt = {}) {
  const auto right = graph_right_end(a, g);
  const auto D = fd4(g.u, g.h(), EndKind::Even, right);
  std::vector<GraphNode> out;
  out.reserve(g.u.size());
  for (int i = 0; i <= g.N(); ++i) out.push_back(graph_node(a, g.theta[i], g.u[i], D.d1[i], D.d2[i], opt));
  return out;
}

inline PointGeometry to_point_geometry(const WarpedAmbient& a, const GraphNode& nd) {
  Vec nu = Vec::Zero(a.dim());
  nu[0] = nd.nu_rho;
  nu[1] = nd.nu_theta;
  auto pg = detail::principal_frame(nd.lambda(a.n()), nu, nd.supportX, nd.drho_nu);
  pg.supportK = nd.supportK;
  return pg;
}

/// Nonzero support function at every node.
inline bool star_shaped(const std::vector<GraphNode>& nodes, double tol = 1e-12) {
  return std::all_of(nodes.begin(), nodes.end(), [tol](const GraphNode& n) { return std::abs(n.supportX) > tol; });
}

/// sup over interior nodes of |d lam_S/d theta - (R'/R)(lam_theta - lam_S)|,
/// R = phi(u) r(theta); zero in space forms by the Codazzi equation.
inline double codazzi_residual(const WarpedAmbient& a, const RadialGraph& g) {
  const auto nodes = graph_geometry(a, g);
  std::vector<double> ls;
  for (const auto& n : nodes) ls.push_back(n.lam_S);
  const auto D = fd4(ls, g.h(), EndKind::Even, graph_right_end(a, g));
  double worst = 0;
  const int last = g.open_end ? g.N() : g.N() - 1;
  for (int i = 1; i <= last; ++i) {
    const auto& n = nodes[i];
    const double logR = n.dphi * n.up / n.phi + n.dr / n.r;
    worst = std::max(worst, std::abs(D.d1[i] - logR * (n.lam_theta - n.lam_S)));
  }
  return worst;
}

inline void write_graph_csv(const RadialGraph& g, const std::string& path) {
  std::ofstream os(path);
  if (!os) fail(ErrorKind::Validation, "cannot write " + path);
  os << "theta,u\n" << std::setprecision(17);
  for (int i = 0; i <= g.N(); ++i) os << g.theta[i] << ',' << g.u[i] << '\n';
}

inline RadialGraph read_graph_csv(const std::string& path, bool open_end = false) {
  std::ifstream is(path);
  if (!is) fail(ErrorKind::Validation, "cannot read " + path);
  std::string line;
  std::getline(is, line);
  if (line.rfind("theta,u", 0) != 0) fail(ErrorKind::Validation, path + ": expected header 'theta,u'");
  RadialGraph g;
  g.open_end = open_end;
  int row = 1;
  while (std::getline(is, line)) {
    ++row;
    if (line.empty()) continue;
    std::istringstream ls(line);
    double t, u;
    char comma;
    if (!(ls >> t >> comma >> u) || comma != ',')
      fail(ErrorKind::Validation, path + ":" + std::to_string(row) + ": malformed row");
    g.theta.push_back(t);
    g.u.push_back(u);
  }
  if (g.theta.size() < 7) fail(ErrorKind::Validation, path + ": too few rows");
  const double h = g.h();
  for (std::size_t i = 1; i < g.theta.size(); ++i)
    if (std::abs(g.theta[i] - g.theta[i - 1] - h) > 1e-9 * std::max(1.0, h))
      fail(ErrorKind::Validation, path + ": theta grid must be uniform");
  return g;
}

inline void write_geometry_csv(const WarpedAmbient& a, const std::vector<GraphNode>& nodes, const std::string& path) {
  std::ofstream os(path);
  if (!os) fail(ErrorKind::Validation, "cannot write " + path);
  const int n = a.n();
  os << "theta";
  for (int i = 1; i <= n; ++i) os << ",lambda" << i;
  os << ",H,supportX";
  if (!nodes.empty())
    for (std::size_t k = 0; k < nodes[0].supportK.size(); ++k) os << ",supportK" << k + 1;
  os << '\n' << std::setprecision(17);
  for (const auto& nd : nodes) {
    Vec l = nd.lambda(n);
    std::sort(l.data(), l.data() + n);
    os << nd.theta;
    for (int i = 0; i < n; ++i) os << ',' << l[i];
    os << ',' << l.sum() << ',' << nd.supportX;
    for (double k : nd.supportK) os << ',' << k;
    os << '\n';
  }
}

// ---------------------------------------------------------------------------
// Generic immersions

namespace detail {

inline Mat tangent_map(const Immersion& im, const Vec& u, double h = 1e-5) {
  if (im.dF) return im.dF(u);
  const Vec p0 = im.F(u);
  Mat T(p0.size(), im.dim);
  for (int i = 0; i < im.dim; ++i) {
    Vec up = u, um = u;
    up[i] += h;
    um[i] -= h;
    T.col(i) = (im.F(up) - im.F(um)) / (2 * h);
  }
  return T;
}

/// Unit normal at u, oriented against the reference vector.
inline Vec immersion_normal(const WarpedAmbient& a, const Immersion& im, const Vec& u) {
  const AmbientPoint p{im.chart, im.F(u)};
  const Mat G = a.metric_at(p);
  const Mat T = tangent_map(im, u);
  const Mat gt = T.transpose() * G * T;
  Eigen::SelfAdjointEigenSolver<Mat> es(gt);
  if (!(es.eigenvalues().minCoeff() > 1e-12 * std::max(1.0, es.eigenvalues().maxCoeff())))
    fail(ErrorKind::Degenerate, "immersion tangent map is rank deficient");
  Eigen::HouseholderQR<Mat> qr(G * T);
  const Mat Q = qr.householderQ();
  Vec nu = Q.col(Q.cols() - 1);
  nu /= std::sqrt(nu.dot(G * nu));
  Vec ref;
  if (im.reference) {
    ref = im.reference(u);
  } else {
    ref = Vec::Zero(a.dim());
    ref[0] = 1.0;
  }
  const double s = nu.dot(G * ref);
  if (std::abs(s) < 1e-12) fail(ErrorKind::Degenerate, "orientation reference is tangent to the immersion");
  return s > 0 ? Vec(-nu) : nu;
}

}  // namespace detail

/// Brute-force extrinsic geometry of an immersion at parameter u. The second
/// fundamental form comes from h_ij = -g(D_i nu, d_j F) with D_i nu assembled
/// from differences of nu and the ambient connection. When a second-derivative
/// callback is supplied, h_ij = g(d_i d_j F + Gamma(d_i F, d_j F), nu) instead.
inline PointGeometry immersion_geometry(const WarpedAmbient& a, const Immersion& im, const Vec& u,
                                        const std::vector<KillingLift>& killing = {}, double h = 1e-4) {
  if (u.size() != im.dim) fail(ErrorKind::Validation, "immersion parameter has the wrong dimension");
  const AmbientPoint p{im.chart, im.F(u)};
  const Mat G = a.metric_at(p);
  const Tensor3 Gam = a.christoffel_at(p);
  const Mat T = detail::tangent_map(im, u);
  const Vec nu = detail::immersion_normal(a, im, u);
  const int n = im.dim;

  PointGeometry pg;
  pg.g = T.transpose() * G * T;
  pg.h = Mat(n, n);
  if (im.d2F) {
    const auto H2 = im.d2F(u);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        Vec acc = Gam.contract(T.col(i), T.col(j));
        for (int c = 0; c < a.dim(); ++c) acc[c] += H2[c](i, j);
        pg.h(i, j) = acc.dot(G * nu);
      }
  } else {
    for (int i = 0; i < n; ++i) {
      Vec up = u, um = u;
      up[i] += h;
      um[i] -= h;
      const Vec Dnu = (detail::immersion_normal(a, im, up) - detail::immersion_normal(a, im, um)) / (2 * h) +
                      Gam.contract(T.col(i), nu);
      for (int j = 0; j < n; ++j) pg.h(i, j) = -Dnu.dot(G * T.col(j));
    }
    pg.h = 0.5 * (pg.h + pg.h.transpose()).eval();
  }
  Eigen::GeneralizedSelfAdjointEigenSolver<Mat> es(pg.h, pg.g);
  pg.lambda = es.eigenvalues();
  pg.nu = nu;
  pg.supportX = a.conformal_field(p).dot(G * nu);
  pg.drho_nu = nu[0];
  for (const auto& K : killing) pg.supportK.push_back(K(p).dot(G * nu));
  return pg;
}

/// Immersion of a slice in the given chart (parameters are fiber coordinates).
inline Immersion slice_immersion(const WarpedAmbient& a, double rho0, ChartKind chart = ChartKind::StereoNorth) {
  Immersion im;
  im.chart = chart;
  im.dim = a.n();
  im.F = [rho0, d = a.dim()](const Vec& w) {
    Vec x(d);
    x[0] = rho0;
    x.tail(d - 1) = w;
    return x;
  };
  return im;
}

/// Immersion of the cone theta = theta0 in the polar chart, parameters (rho, w).
inline Immersion cone_immersion(const WarpedAmbient& a, double theta0) {
  Immersion im;
  im.chart = ChartKind::Polar;
  im.dim = a.n();
  const int d = a.dim();
  im.F = [theta0, d](const Vec& v) {
    Vec x(d);
    x[0] = v[0];
    x[1] = theta0;
    x.tail(d - 2) = v.tail(d - 2);
    return x;
  };
  im.reference = [d](const Vec&) {
    Vec r = Vec::Zero(d);
    r[1] = 1.0;
    return r;
  };
  return im;
}

/// Immersion of the rotational graph rho = u(theta), parameters (theta, w).
inline Immersion graph_immersion(const WarpedAmbient& a, std::function<double(double)> u) {
  Immersion im;
  im.chart = ChartKind::Polar;
  im.dim = a.n();
  const int d = a.dim();
  im.F = [u = std::move(u), d](const Vec& v) {
    Vec x(d);
    x[0] = u(v[0]);
    x.tail(d - 1) = v;
    return x;
  };
  return im;
}

}  // namespace warpflow
