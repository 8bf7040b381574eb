#pragma once

#include "warpflow/error.hpp"
#include "warpflow/expr.hpp"

#include <boost/math/interpolators/cubic_hermite.hpp>
#include <boost/math/tools/roots.hpp>
#include <boost/numeric/odeint.hpp>

#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace warpflow {

/// A warp factor phi on a closed interval, together with its first two
/// derivatives. Also used for the profile warp r(theta) of doubly-warped
/// fibers.
class WarpFunction {
 public:
  /// Returns (phi, phi', phi'') at a point already known to be in range.
  using JetFn = std::function<Jet(double)>;

  WarpFunction() = default;
  WarpFunction(std::string name, double lo, double hi, JetFn jet)
      : name_(std::move(name)), lo_(lo), hi_(hi), jet_(std::move(jet)) {
    if (!(lo_ < hi_)) fail(ErrorKind::Validation, "warp '" + name_ + "' has empty interval");
  }

  const std::string& name() const { return name_; }
  double lo() const { return lo_; }
  double hi() const { return hi_; }

  bool contains(double x) const { return x >= lo_ && x <= hi_; }
  bool interior(double x) const { return x > lo_ && x < hi_; }

  Jet jet(double x) const {
    if (!contains(x)) {
      std::ostringstream os;
      os << "warp '" << name_ << "' evaluated at " << x << " outside [" << lo_ << ", " << hi_ << "]";
      fail(ErrorKind::Domain, os.str());
    }
    return jet_(x);
  }
  double operator()(double x) const { return jet(x).v; }
  double d1(double x) const { return jet(x).d1; }
  double d2(double x) const { return jet(x).d2; }

  static WarpFunction linear() {
    return {"rho", 0.0, std::numeric_limits<double>::infinity(), [](double x) { return Jet{x, 1.0, 0.0}; }};
  }
  static WarpFunction sinh() {
    return {"sinh", 0.0, std::numeric_limits<double>::infinity(),
            [](double x) { return Jet{std::sinh(x), std::cosh(x), std::sinh(x)}; }};
  }
  static WarpFunction sin() {
    return {"sin", 0.0, std::numbers::pi, [](double x) { return Jet{std::sin(x), std::cos(x), -std::sin(x)}; }};
  }
  static WarpFunction expression(const std::string& text, double lo, double hi) {
    auto e = std::make_shared<const Expression>(Expression::parse(text));
    return {text, lo, hi, [e](double x) { return e->eval(x); }};
  }

 private:
  std::string name_;
  double lo_ = 0.0, hi_ = 0.0;
  JetFn jet_;
};

/// Anti-deSitter-Schwarzschild warp. The metric ds^2/omega(s) + s^2 g_S with
/// omega(s) = 1 - m s^(1-n) + s^2 becomes d rho^2 + phi(rho)^2 g_S with
/// phi = s(rho), phi' = sqrt(omega(s)), phi'' = omega'(s)/2.
///
/// s(rho) is tabulated by integrating s'' = omega'(s)/2 from the horizon
/// (s(0) = s0, s'(0) = sqrt(omega(s0))), which is smooth even where
/// sqrt(omega) is not Lipschitz. Values between nodes come from a cubic
/// Hermite interpolant whose node slopes are sqrt(omega(s_i)); derivatives
/// handed to callers are always the analytic omega expressions.
class AdsSchwarzschildTable {
 public:
  static constexpr double kHorizonOffset = 1e-8;

  AdsSchwarzschildTable(double m, int n, double rho_max = 12.0, int nodes = 10000) : m_(m), n_(n) {
    if (!(m >= 0.0)) fail(ErrorKind::Validation, "ads_schwarzschild mass must be >= 0");
    if (n < 2) fail(ErrorKind::Validation, "ads_schwarzschild requires n >= 2");
    if (nodes < 16 || !(rho_max > 0.0)) fail(ErrorKind::Validation, "ads_schwarzschild grid too small");
    s0_ = horizon(m, n);

    using State = std::array<double, 2>;
    State y{s0_, std::sqrt(std::max(0.0, omega(s0_)))};
    const double h = rho_max / (nodes - 1);
    rho_.resize(nodes);
    s_.resize(nodes);
    ds_ode_.resize(nodes);
    for (int i = 0; i < nodes; ++i) rho_[i] = i * h;
    namespace odeint = boost::numeric::odeint;
    auto rhs = [this](const State& x, State& dx, double) {
      dx[0] = x[1];
      dx[1] = 0.5 * domega(x[0]);
    };
    auto stepper = odeint::make_controlled(1e-14, 1e-13, odeint::runge_kutta_dopri5<State>());
    std::size_t k = 0;
    odeint::integrate_times(stepper, rhs, y, rho_.begin(), rho_.end(), h * 0.1, [&](const State& x, double) {
      s_[k] = x[0];
      ds_ode_[k] = x[1];
      ++k;
    });
    std::vector<double> slope(nodes);
    for (int i = 0; i < nodes; ++i) slope[i] = std::sqrt(std::max(0.0, omega(s_[i])));
    interp_ = std::make_shared<Interp>(std::vector<double>(rho_), std::vector<double>(s_), std::move(slope));

    // Lower end of the usable interval: where s = s0 + kHorizonOffset.
    const double target = s0_ + kHorizonOffset;
    double a = 0.0, b = rho_[1];
    while ((*interp_)(b) < target) b *= 2.0;
    for (int it = 0; it < 200 && b - a > 1e-16; ++it) {
      const double mid = 0.5 * (a + b);
      ((*interp_)(mid) < target ? a : b) = mid;
    }
    rho_lo_ = b;
    rho_hi_ = rho_.back();
  }

  /// Largest root of omega when m > 0, else 0.
  static double horizon(double m, int n) {
    if (m == 0.0) return 0.0;
    // omega(s) = 0  <=>  s^(n+1) + s^(n-1) = m, strictly increasing in s > 0
    auto g = [m, n](double s) { return std::pow(s, n + 1) + std::pow(s, n - 1) - m; };
    double hi = 1.0;
    while (g(hi) < 0.0) hi *= 2.0;
    boost::uintmax_t iters = 200;
    auto r = boost::math::tools::toms748_solve(g, 0.0, hi, boost::math::tools::eps_tolerance<double>(52), iters);
    return 0.5 * (r.first + r.second);
  }

  // m = 0 drops the mass terms, also at s = 0
  double omega(double s) const { return 1.0 + s * s - (m_ == 0.0 ? 0.0 : m_ * std::pow(s, 1 - n_)); }
  double domega(double s) const { return 2.0 * s + (m_ == 0.0 ? 0.0 : m_ * (n_ - 1) * std::pow(s, -n_)); }

  double mass() const { return m_; }
  int dim() const { return n_; }
  double s0() const { return s0_; }
  double rho_lo() const { return rho_lo_; }
  double rho_hi() const { return rho_hi_; }
  const std::vector<double>& grid_rho() const { return rho_; }
  const std::vector<double>& grid_s() const { return s_; }
  /// s' carried by the integrator (independent of the analytic sqrt(omega)).
  const std::vector<double>& grid_ds() const { return ds_ode_; }

  Jet jet(double rho) const {
    const double s = (*interp_)(rho);
    return {s, std::sqrt(std::max(0.0, omega(s))), 0.5 * domega(s)};
  }

  WarpFunction warp() const {
    auto self = std::make_shared<const AdsSchwarzschildTable>(*this);
    std::ostringstream os;
    os << "ads_schwarzschild{m=" << m_ << ",n=" << n_ << "}";
    return {os.str(), rho_lo_, rho_hi_, [self](double r) { return self->jet(r); }};
  }

 private:
  using Interp = boost::math::interpolators::cubic_hermite<std::vector<double>>;
  double m_;
  int n_;
  double s0_ = 0.0, rho_lo_ = 0.0, rho_hi_ = 0.0;
  std::vector<double> rho_, s_, ds_ode_;
  std::shared_ptr<const Interp> interp_;
};

}  // namespace warpflow
