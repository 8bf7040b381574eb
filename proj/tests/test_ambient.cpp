#include "warpflow/ambient.hpp"

#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <numbers>
#include <random>

using namespace warpflow;

namespace {

// Christoffel symbols from centered differences of the metric alone.
Tensor3 oracle_christoffel(const WarpedAmbient& a, const AmbientPoint& p, double h = 1e-4) {
  const int d = a.dim();
  std::vector<Mat> dg(d);
  for (int c = 0; c < d; ++c) {
    AmbientPoint pp = p, pm = p;
    pp.x[c] += h;
    pm.x[c] -= h;
    dg[c] = (a.metric_at(pp) - a.metric_at(pm)) / (2 * h);
  }
  const Mat gi = a.metric_at(p).inverse();
  Tensor3 G(d);
  for (int i = 0; i < d; ++i)
    for (int b = 0; b < d; ++b)
      for (int c = 0; c < d; ++c) {
        double s = 0;
        for (int e = 0; e < d; ++e) s += 0.5 * gi(i, e) * (dg[b](e, c) + dg[c](e, b) - dg[e](b, c));
        G(i, b, c) = s;
      }
  return G;
}

// R_{ijkl} = g_{lm} (d_i G^m_jk - d_j G^m_ik + G^m_ip G^p_jk - G^m_jp G^p_ik), all from the metric.
Tensor4 oracle_riemann(const WarpedAmbient& a, const AmbientPoint& p, double h = 1e-3) {
  const int d = a.dim();
  std::vector<Tensor3> dG;
  for (int c = 0; c < d; ++c) {
    AmbientPoint pp = p, pm = p;
    pp.x[c] += h;
    pm.x[c] -= h;
    const Tensor3 Gp = oracle_christoffel(a, pp), Gm = oracle_christoffel(a, pm);
    Tensor3 D(d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        for (int k = 0; k < d; ++k) D(i, j, k) = (Gp(i, j, k) - Gm(i, j, k)) / (2 * h);
    dG.push_back(D);
  }
  const Tensor3 G = oracle_christoffel(a, p);
  const Mat g = a.metric_at(p);
  Tensor4 R(d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k)
        for (int l = 0; l < d; ++l) {
          double s = 0;
          for (int m = 0; m < d; ++m) {
            double up = dG[i](m, j, k) - dG[j](m, i, k);
            for (int q = 0; q < d; ++q) up += G(m, i, q) * G(q, j, k) - G(m, j, q) * G(q, i, k);
            s += g(l, m) * up;
          }
          R(i, j, k, l) = s;
        }
  return R;
}

AmbientPoint random_point(const WarpedAmbient& a, std::mt19937& rng, ChartKind chart, double rlo, double rhi) {
  std::uniform_real_distribution<double> U(-1.0, 1.0), R(rlo, rhi), T(0.3, 2.8);
  AmbientPoint p{chart, Vec(a.dim())};
  p.x[0] = R(rng);
  for (int i = 1; i < a.dim(); ++i) p.x[i] = 0.8 * U(rng);
  if (chart == ChartKind::Polar) p.x[1] = T(rng);
  return p;
}

AmbientPtr doubly_warped_custom() {
  return make_custom(WarpFunction::expression("rho + rho^3/5", 0.0, 5.0),
                     FiberSpec::doubly_warped(WarpFunction::expression("sin(rho) + sin(rho)^3/4", 0.0, std::numbers::pi), 3));
}

}  // namespace

TEST(Warp, DerivativesMatchCenteredDifferences) {
  const double h = 1e-4;
  const AdsSchwarzschildTable ads(1.0, 3);
  const std::vector<std::pair<WarpFunction, std::vector<double>>> cases{
      {WarpFunction::linear(), {0.5, 1.0, 3.0}},
      {WarpFunction::sinh(), {0.5, 1.0, 3.0}},
      {WarpFunction::sin(), {0.5, 1.5, 2.5}},
      {WarpFunction::expression("cosh(rho)^2 - exp(-rho)/3", 0.0, 4.0), {0.5, 1.0, 3.0}},
      {ads.warp(), {0.5, 1.0, 3.0}},
  };
  for (const auto& [w, pts] : cases)
    for (double x : pts) {
      EXPECT_NEAR(w.d1(x), (w(x + h) - w(x - h)) / (2 * h), 1e-6 * std::max(1.0, std::abs(w.d1(x)))) << w.name();
      EXPECT_NEAR(w.d2(x), (w.d1(x + h) - w.d1(x - h)) / (2 * h), 1e-6 * std::max(1.0, std::abs(w.d2(x)))) << w.name();
    }
}

TEST(Warp, ExpressionGrammar) {
  const auto e = Expression::parse("2*rho^2 - sin(rho)/ (1 + exp(rho))");
  const double x = 0.7;
  EXPECT_NEAR(e.eval(x).v, 2 * x * x - std::sin(x) / (1 + std::exp(x)), 1e-14);
  EXPECT_NEAR(Expression::parse("2^3^2").eval(0).v, 512.0, 1e-12);
  EXPECT_NEAR(Expression::parse("-rho^2").eval(3).v, -9.0, 1e-12);
  EXPECT_NEAR(Expression::parse("2^-1").eval(0).v, 0.5, 1e-12);
  EXPECT_NEAR(Expression::parse("1.5e1 + rho").eval(1).v, 16.0, 1e-12);
  for (const char* bad : {"rho +", "tan(rho)", "(rho", "rho $ 2", "sin rho"}) {
    try {
      Expression::parse(bad);
      ADD_FAILURE() << bad;
    } catch (const Error& err) {
      EXPECT_EQ(err.kind(), ErrorKind::Validation);
    }
  }
}

TEST(SpaceForm, PresetValues) {
  const auto e = make_space_form(0, 3);
  EXPECT_DOUBLE_EQ(e->warp()(2.0), 2.0);
  EXPECT_DOUBLE_EQ(e->warp().d1(2.0), 1.0);
  EXPECT_DOUBLE_EQ(e->warp().d2(2.0), 0.0);
  EXPECT_NEAR(make_space_form(1, 3)->warp().d1(std::numbers::pi / 2), 0.0, 1e-15);
  EXPECT_THROW(make_space_form(2, 3), Error);
  for (int k : {-1, 0, 1}) {
    const auto a = make_space_form(k, 2);
    for (double r = 0.1; r < 3.0; r += 0.1) EXPECT_NEAR(a->warp().d2(r) + k * a->warp()(r), 0.0, 1e-12);
  }
}

TEST(SpaceForm, SampledSectionalCurvatureEqualsK) {
  std::mt19937 rng(7);
  std::normal_distribution<double> N;
  for (int k : {-1, 0, 1})
    for (ChartKind c : {ChartKind::StereoNorth, ChartKind::StereoSouth, ChartKind::Polar}) {
      const auto a = make_space_form(k, 3);
      for (int s = 0; s < 10; ++s) {
        const auto p = random_point(*a, rng, c, 0.3, 2.5);
        Vec u(4), v(4);
        for (int i = 0; i < 4; ++i) u[i] = N(rng), v[i] = N(rng);
        EXPECT_NEAR(a->sectional(p, u, v), k, 1e-6);
      }
    }
}

TEST(SpaceForm, CurvatureAgainstNormalEqualsMinusKMetric) {
  // Rm(e_i, nu, e_j, nu) = -k g_ij for e_i tangent and nu unit normal.
  std::mt19937 rng(11);
  std::normal_distribution<double> N;
  for (int k : {-1, 0, 1}) {
    const auto a = make_space_form(k, 2);
    const auto p = random_point(*a, rng, ChartKind::StereoNorth, 0.5, 2.0);
    const Mat g = a->metric_at(p);
    Vec nu(3);
    for (int i = 0; i < 3; ++i) nu[i] = N(rng);
    nu /= std::sqrt(nu.dot(g * nu));
    const Tensor4 R = a->riemann_at(p);
    std::vector<Vec> e;
    for (int i = 0; i < 2; ++i) {
      Vec v(3);
      for (int j = 0; j < 3; ++j) v[j] = N(rng);
      v -= nu.dot(g * v) * nu;
      e.push_back(v);
    }
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) EXPECT_NEAR(R(e[i], nu, e[j], nu), -k * e[i].dot(g * e[j]), 1e-10);
  }
}

TEST(Ambient, MetricBlocks) {
  const auto e = make_space_form(0, 2);
  AmbientPoint p{ChartKind::StereoNorth, Vec(3)};
  p.x << 3.0, 0.2, -0.4;
  const Mat g = e->metric_at(p);
  const double s = 2.0 / (1.0 + 0.04 + 0.16);
  EXPECT_NEAR(g(1, 1), 9.0 * s * s, 1e-12);
  EXPECT_NEAR(g(0, 1), 0.0, 1e-15);
  EXPECT_NEAR(g(0, 0), 1.0, 1e-15);

  const auto sph = make_space_form(1, 3);
  const Vec w = Vec::Zero(2);
  const Mat gp = sph->metric_at(sph->polar_point(1.2, std::numbers::pi / 2, w));
  EXPECT_NEAR(gp(1, 1), std::pow(std::sin(1.2), 2), 1e-14);
  EXPECT_NEAR(gp(2, 2), std::pow(std::sin(1.2), 2) * 4.0, 1e-14);  // phi^2 r^2 g_S with g_S(0) = 4 delta

  const auto h = make_space_form(-1, 2);
  try {
    h->metric_at(h->polar_point(0.0, 1.0, Vec::Zero(1)));
    ADD_FAILURE();
  } catch (const Error& err) {
    EXPECT_EQ(err.kind(), ErrorKind::Degenerate);
  }
  try {
    sph->metric_at(sph->polar_point(4.0, 1.0, Vec::Zero(2)));
    ADD_FAILURE();
  } catch (const Error& err) {
    EXPECT_EQ(err.kind(), ErrorKind::Domain);
  }
  try {
    sph->metric_at(sph->polar_point(1.0, 0.0, Vec::Zero(2)));
    ADD_FAILURE();
  } catch (const Error& err) {
    EXPECT_EQ(err.kind(), ErrorKind::Degenerate);
  }
}

TEST(Ambient, ChristoffelMatchesMetricDifferences) {
  std::mt19937 rng(3);
  const std::vector<AmbientPtr> ambients{make_space_form(-1, 3), make_space_form(1, 2), make_ads_schwarzschild(1.0, 2),
                                         doubly_warped_custom()};
  for (const auto& a : ambients)
    for (ChartKind c : {ChartKind::StereoNorth, ChartKind::Polar}) {
      if (c != ChartKind::Polar && !a->is_round()) continue;
      for (int s = 0; s < 5; ++s) {
        const auto p = random_point(*a, rng, c, 0.5, 2.5);
        const Tensor3 G = a->christoffel_at(p), O = oracle_christoffel(*a, p);
        for (int i = 0; i < a->dim(); ++i)
          for (int j = 0; j < a->dim(); ++j)
            for (int k = 0; k < a->dim(); ++k) EXPECT_NEAR(G(i, j, k), O(i, j, k), 1e-5) << a->name();
      }
    }
}

TEST(Ambient, RiemannMatchesMetricDifferences) {
  std::mt19937 rng(5);
  const std::vector<AmbientPtr> ambients{make_space_form(-1, 2), make_ads_schwarzschild(2.0, 3), doubly_warped_custom()};
  for (const auto& a : ambients)
    for (int s = 0; s < 3; ++s) {
      const auto p = random_point(*a, rng, ChartKind::Polar, 0.6, 2.0);
      const Tensor4 R = a->riemann_at(p), O = oracle_riemann(*a, p);
      const double scale = std::max(1.0, O.max_abs());
      for (int i = 0; i < a->dim(); ++i)
        for (int j = 0; j < a->dim(); ++j)
          for (int k = 0; k < a->dim(); ++k)
            for (int l = 0; l < a->dim(); ++l)
              EXPECT_NEAR(R(i, j, k, l), O(i, j, k, l), 1e-4 * scale) << a->name();
    }
}

TEST(Ambient, EuclideanIsFlat) {
  std::mt19937 rng(9);
  const auto e = make_space_form(0, 3);
  for (ChartKind c : {ChartKind::StereoSouth, ChartKind::Polar}) {
    const auto p = random_point(*e, rng, c, 0.5, 3.0);
    EXPECT_LE(e->riemann_at(p).max_abs(), 1e-8);
  }
}

TEST(AdsSchwarzschild, MassZeroIsHyperbolic) {
  for (int n : {2, 3}) {
    const auto a = make_ads_schwarzschild(0.0, n);
    for (double r = 0.1; r <= 3.0; r += 0.01) {
      const Jet j = a->warp().jet(r);
      ASSERT_NEAR(j.v, std::sinh(r), 1e-8) << r;
      ASSERT_NEAR(j.d1, std::cosh(r), 1e-8) << r;
      ASSERT_NEAR(j.d2, std::sinh(r), 1e-8) << r;
    }
  }
}

TEST(AdsSchwarzschild, SecondDerivativeFormulaAndSign) {
  const AdsSchwarzschildTable t(1.0, 2);
  EXPECT_NEAR(0.5 * t.domega(1.0), 1.5, 1e-15);
  const double q = std::sqrt(0.25 + 1.0 / 27.0);  // Cardano for s^3 + s - 1 = 0
  EXPECT_NEAR(t.s0(), std::cbrt(0.5 + q) + std::cbrt(0.5 - q), 1e-12);
  for (double m : {0.5, 1.0, 2.0})
    for (int n : {2, 3}) {
      const AdsSchwarzschildTable tab(m, n);
      const auto w = tab.warp();
      for (double r = w.lo() + 1e-3; r < w.hi(); r += 0.05) {
        const double s = w(r);
        EXPECT_GT(w.d2(r), 0.0);
        EXPECT_NEAR(w.d2(r), 0.5 * (2 * s + m * (n - 1) * std::pow(s, -n)), 1e-12 * std::max(1.0, s));
      }
      // Integrated s' squared reproduces omega(s) on the grid.
      double worst = 0;
      for (std::size_t i = 0; i < tab.grid_s().size(); i += 7) {
        const double s = tab.grid_s()[i];
        const double om = 1.0 - m * std::pow(s, 1 - n) + s * s;
        worst = std::max(worst, std::abs(std::pow(tab.grid_ds()[i], 2) - om) / std::max(1.0, om));
      }
      EXPECT_LE(worst, 1e-8);
    }
  EXPECT_THROW(make_ads_schwarzschild(-1.0, 2), Error);
  EXPECT_THROW(make_ads_schwarzschild(1.0, 2)->warp()(0.0), Error);
}

TEST(AdsSchwarzschild, NormalCurvatureTendsToMinusMetric) {
  // Rm(e, d_rho, d_rho, e) for unit horizontal e approaches -1.
  const auto a = make_ads_schwarzschild(1.0, 3);
  double prev = 1e9;
  for (double r : {2.0, 4.0, 8.0}) {
    const auto p = a->polar_point(r, 1.0, Vec::Zero(2));
    const Mat g = a->metric_at(p);
    Vec e = Vec::Zero(4), nu = Vec::Zero(4);
    e[2] = 1.0 / std::sqrt(g(2, 2));
    nu[0] = 1.0;
    const double dev = std::abs(a->riemann_at(p)(e, nu, nu, e) + 1.0);
    EXPECT_LT(dev, prev);
    prev = dev;
  }
  EXPECT_LT(prev, 1e-3);
}

TEST(Conformal, LieDerivativeAndDivergence) {
  std::mt19937 rng(13);
  for (const auto& a : {make_space_form(-1, 2), make_ads_schwarzschild(1.0, 2), doubly_warped_custom()}) {
    VectorField X = [a](const AmbientPoint& p) { return a->conformal_field(p); };
    for (int s = 0; s < 10; ++s) {
      const auto p = random_point(*a, rng, ChartKind::Polar, 0.6, 2.5);
      const Mat L = fd_lie_derivative_metric(*a, X, p);
      const double kappa = a->conformal_factor(p);
      EXPECT_LE((L - 2 * kappa * a->metric_at(p)).cwiseAbs().maxCoeff(), 1e-6);
      EXPECT_NEAR(fd_divergence(*a, X, p) / a->dim(), kappa, 1e-6);
    }
  }
}

TEST(Killing, LiftedRotationsAreKillingAndCommuteWithX) {
  std::mt19937 rng(17);
  const auto e = make_space_form(0, 2);
  const auto h = make_space_form(-1, 3);
  const auto dw = doubly_warped_custom();
  struct Case {
    AmbientPtr a;
    KillingLift K;
    ChartKind chart;
  };
  const std::vector<Case> cases{
      {e, lift_fiber_rotation(e, rotation_generator(3, 0, 2)), ChartKind::StereoNorth},
      {e, lift_fiber_rotation(e, rotation_generator(3, 0, 1)), ChartKind::Polar},
      {h, lift_fiber_rotation(h, rotation_generator(4, 1, 3)), ChartKind::StereoSouth},
      {h, lift_core_rotation(h, rotation_generator(3, 0, 2)), ChartKind::Polar},
      {h, lift_core_rotation(h, rotation_generator(3, 0, 1)), ChartKind::StereoNorth},
      {dw, lift_core_rotation(dw, rotation_generator(3, 1, 2)), ChartKind::Polar},
  };
  for (const auto& c : cases) {
    VectorField X = [a = c.a](const AmbientPoint& p) { return a->conformal_field(p); };
    VectorField K = c.K.field;
    for (int s = 0; s < 100; ++s) {
      const auto p = random_point(*c.a, rng, c.chart, 0.5, 2.5);
      const Vec k = K(p);
      EXPECT_EQ(k[0], 0.0);
      EXPECT_GT(k.norm(), 0.0);
      if (c.chart == ChartKind::Polar && c.K.name == "core_rotation") EXPECT_EQ(k[1], 0.0);
      EXPECT_LE(fd_lie_bracket(X, K, p).cwiseAbs().maxCoeff(), 1e-8);
      if (s < 10) EXPECT_LE(fd_lie_derivative_metric(*c.a, K, p).cwiseAbs().maxCoeff(), 1e-6);
    }
  }
}

TEST(FlowMap, ClosedForms) {
  const auto e = make_space_form(0, 2);
  EXPECT_NEAR(flow_map(*e, 1.0, std::log(2.0)).rho, 2.0, 1e-14);
  for (int k : {-1, 0, 1}) {
    const auto a = make_space_form(k, 2);
    EXPECT_EQ(flow_map(*a, 0.7, 0.0).rho, 0.7);
    EXPECT_EQ(flow_map_numeric(a->warp(), 0.7, 0.0).rho, 0.7);
  }
  const auto h = make_space_form(-1, 2);
  const double closed = 2 * std::atanh(std::exp(0.5) * std::tanh(0.5));
  EXPECT_NEAR(flow_map(*h, 1.0, 0.5).rho, closed, 1e-14);
  EXPECT_NEAR(flow_map_numeric(h->warp(), 1.0, 0.5).rho, closed, 1e-8);
}

TEST(FlowMap, NumericMatchesClosedFormsOnGrid) {
  const auto t0 = std::chrono::steady_clock::now();
  for (int k : {-1, 0, 1}) {
    const auto a = make_space_form(k, 2);
    for (double rho : {0.2, 0.4, 0.6, 0.8, 1.0, 1.1})
      for (double t : {-0.8, -0.5, -0.2, 0.1, 0.3, 0.5}) {
        const auto c = flow_map(*a, rho, t);
        const auto n = flow_map_numeric(a->warp(), rho, t);
        EXPECT_NEAR(n.rho, c.rho, 1e-8 * std::max(1.0, c.rho));
        EXPECT_NEAR(n.drho, c.drho, 1e-7 * std::max(1.0, c.drho));
        EXPECT_NEAR(n.log_factor, c.log_factor, 1e-7);
      }
  }
  EXPECT_LT(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(), 5.0);
}

TEST(FlowMap, Escape) {
  const auto h = make_space_form(-1, 2);
  try {
    flow_map(*h, 1.0, 2.0);
    ADD_FAILURE();
  } catch (const EscapeError& err) {
    EXPECT_NEAR(err.escape_time(), -std::log(std::tanh(0.5)), 1e-12);
  }
  const auto ads = make_ads_schwarzschild(1.0, 2);
  try {
    flow_map(*ads, 3.0, 100.0);
    ADD_FAILURE();
  } catch (const EscapeError& err) {
    EXPECT_GT(err.escape_time(), 0.0);
    EXPECT_LT(err.escape_time(), 100.0);
  }
  const auto sph = make_space_form(1, 2);
  EXPECT_LT(flow_map(*sph, 1.0, 30.0).rho, std::numbers::pi);
}

TEST(FlowMap, ConformalPullback) {
  // |d psi_t u|^2 at psi_t(p) equals exp(2 int phi') |u|^2 at p, with d psi_t
  // from centered differences of the flow map.
  std::mt19937 rng(21);
  std::normal_distribution<double> N;
  for (const auto& a : {make_space_form(-1, 2), make_space_form(1, 2), make_ads_schwarzschild(0.5, 2)}) {
    const auto p = random_point(*a, rng, ChartKind::StereoNorth, 0.6, 1.5);
    const double t = 0.3, h = 1e-5;
    Vec u(3);
    for (int i = 0; i < 3; ++i) u[i] = N(rng);
    AmbientPoint pp = p, pm = p;
    pp.x += h * u;
    pm.x -= h * u;
    const Vec du = (flow_map(*a, pp, t).x - flow_map(*a, pm, t).x) / (2 * h);
    const auto q = flow_map(*a, p, t);
    const double lhs = du.dot(a->metric_at(q) * du);
    const double rhs = std::exp(2 * flow_map_numeric(a->warp(), p.rho(), t).log_factor) * u.dot(a->metric_at(p) * u);
    EXPECT_NEAR(lhs / rhs, 1.0, 1e-6) << a->name();
  }
}
