// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include "warpflow/cli.hpp"
#include "warpflow/flow.hpp"
#include "warpflow/soliton.hpp"
#include "warpflow/verify.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>

using namespace warpflow;
using std::numbers::pi;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream note;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      note << "[failed: " << what << "] ";
    }
  }
};

using Clock = std::chrono::steady_clock;
// running maximum that turns NaN into +inf instead of silently skipping it
void worsen(double& worst, double v) { worst = std::isnan(v) ? std::numeric_limits<double>::infinity() : std::max(worst, v); }

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

// 1 ------------------------------------------------------------------------
void flow_map_closed_forms(Outcome& o) {
  const auto t0 = Clock::now();
  double worst = 0;
  int points = 0;
  for (int k : {-1, 0, 1}) {
    const auto a = make_space_form(k, 2);
    for (int i = 0; i < 10; ++i)
      for (int j = 0; j < 10; ++j) {
        const double rho = 0.1 + 0.1 * i;
        const double t = -1.0 + 1.5 * j / 9;
        double exact;
        if (k == 0) exact = std::exp(t) * rho;
        else if (k == -1) exact = 2 * std::atanh(std::exp(t) * std::tanh(rho / 2));
        else exact = 2 * std::atan(std::exp(t) * std::tan(rho / 2));
        const double num = flow_map_numeric(a->warp(), rho, t).rho;
        const double closed = flow_map(*a, rho, t).rho;
        worsen(worst, std::abs(num - exact));
        worsen(worst, std::abs(closed - exact));
        ++points;
      }
  }
  const double secs = since(t0);
  o.require(worst <= 1e-8, "error " + sci(worst));
  o.require(points >= 100, "grid size");
  o.require(secs < 5, "runtime");
  o.note << points << " (rho, t) points over 3 space forms, max error " << sci(worst) << ", " << secs << " s";
}

// 2 ------------------------------------------------------------------------
void slice_curvature_table(Outcome& o) {
  double worst = 0;
  for (int k : {-1, 0, 1}) {
    const auto a = make_space_form(k, 3);
    for (int i = 0; i < 50; ++i) {
      const double r = 0.05 + (k == 1 ? 3.0 : 4.0) * i / 49;
      const double expect = k == 0 ? 1 / r : (k == -1 ? std::cosh(r) / std::sinh(r) : std::cos(r) / std::sin(r));
      const auto g = slice_geometry(*a, r);
      for (int j = 0; j < g.lambda.size(); ++j) worsen(worst, std::abs(g.lambda[j] - expect) / std::max(1.0, std::abs(expect)));
    }
  }
  o.require(worst <= 1e-10, "error " + sci(worst));
  o.note << "150 slices, max error " << sci(worst);
}

// 3 ------------------------------------------------------------------------
void ads_schwarzschild_limits(Outcome& o) {
  double sinh_err = 0;
  for (int n : {2, 3}) {
    const auto a = make_ads_schwarzschild(0.0, n);
    for (int i = 0; i <= 290; ++i) {
      const double r = 0.1 + 0.01 * i;
      worsen(sinh_err, std::abs(a->warp()(r) - std::sinh(r)));
    }
  }
  // phi'' against the formula, and the formula against centred differences of the tabulated phi'
  double formula_err = 0, fd_err = 0, min_d2 = 1e300;
  for (double m : {0.5, 1.0, 2.0})
    for (int n : {2, 3}) {
      const auto a = make_ads_schwarzschild(m, n);
      const auto& w = a->warp();
      for (int i = 1; i <= 100; ++i) {
        const double r = w.lo() + (std::min(w.hi(), w.lo() + 6.0) - w.lo()) * i / 101;
        const Jet j = w.jet(r);
        const double s = j.v;
        const double expect = 0.5 * (2 * s + m * (n - 1) * std::pow(s, -n));
        worsen(formula_err, std::abs(j.d2 - expect) / expect);
        const double h = 1e-4;
        worsen(fd_err, std::abs((w.d1(r + h) - w.d1(r - h)) / (2 * h) - expect) / expect);
        min_d2 = std::isfinite(j.d2) ? std::min(min_d2, j.d2) : -1.0;
      }
    }
  o.require(sinh_err <= 1e-8, "m = 0 vs sinh " + sci(sinh_err));
  o.require(formula_err <= 1e-8, "phi'' formula " + sci(formula_err));
  o.require(fd_err <= 1e-6, "phi'' differences " + sci(fd_err));
  o.require(min_d2 > 0, "phi'' > 0");
  o.note << "m = 0 vs sinh " << sci(sinh_err) << ", phi'' relative error " << sci(formula_err)
         << " (finite differences " << sci(fd_err) << "), min phi'' " << sci(min_d2);
}

// 4 ------------------------------------------------------------------------
void slice_ode_closed_forms(Outcome& o) {
  double slowest = 0, ext_err = 0, imcf_err = 0;
  for (int n : {2, 3}) {
    const auto e = make_space_form(0, n);
    for (double rho0 : {0.5, 1.0, 2.0}) {
      auto t0 = Clock::now();
      const auto mcf = slice_ode_solve(*e, make_speed("H"), rho0, 10.0);
      worsen(slowest, since(t0));
      o.require(mcf.reason == "lower_end", "MCF reaches the origin");
      worsen(ext_err, std::abs(mcf.t_stop - rho0 * rho0 / (2 * n)));
      t0 = Clock::now();
      const auto imcf = slice_ode_solve(*e, make_speed("-1/H"), rho0, 2.0);
      worsen(slowest, since(t0));
      for (std::size_t i = 0; i < imcf.t.size(); ++i)
        worsen(imcf_err, std::abs(imcf.rho[i] - rho0 * std::exp(imcf.t[i] / n)));
    }
  }
  o.require(ext_err <= 1e-6, "extinction time");
  o.require(imcf_err <= 1e-6, "IMCF exponential");
  o.require(slowest < 1, "runtime");
  o.note << "extinction error " << sci(ext_err) << ", exponential error " << sci(imcf_err) << ", slowest " << slowest << " s";
}

// 5 ------------------------------------------------------------------------
void support_residual_orders(Outcome& o) {
  const auto t0 = Clock::now();
  const auto bump = [](double base) {
    return [base](double t) { return base + 0.05 * std::cos(2 * t) + 0.03 * std::cos(t); };
  };
  for (int k : {0, -1}) {
    const auto a = make_space_form(k, 2);
    for (auto field : {SupportField::AxisRotation, SupportField::Conformal}) {
      const auto st = verify_support_evolution(a, SpeedFunction::mean(), bump(k == 0 ? 1.0 : 0.8), field);
      o.require(st.min_order >= 1.5, a->name() + " " + st.quantity);
      o.note << a->name() << "/" << to_string(field) << " orders";
      for (double q : st.orders) o.note << " " << std::setprecision(3) << q;
      o.note << "; ";
    }
  }
  const double secs = since(t0);
  o.require(secs < 120, "runtime");
  o.note << "total " << secs << " s";
}

// 6 ------------------------------------------------------------------------
void quotient_invariance(Outcome& o) {
  struct Case {
    AmbientPtr a;
    double base, tau;
  };
  const std::vector<Case> cases{{make_space_form(0, 2), 1.0, 0.5},
                                {make_space_form(-1, 2), 0.7, 0.5},
                                {make_ads_schwarzschild(0.2, 2), 1.0, 0.2}};
  std::vector<Vec> params;
  for (double th : {0.4, 1.1, 1.9, 2.6})
    for (double w : {-0.7, 0.3}) params.push_back((Vec(2) << th, w).finished());
  std::vector<double> times;
  for (int i = 1; i <= 20; ++i) times.push_back(0.05 * i);
  for (const auto& c : cases) {
    const SolitonSpec spec{c.a, SpeedFunction::mean(), c.tau,
                           RadialGraph::sample(64, [&](double t) { return c.base + 0.05 * std::cos(2 * t) + 0.03 * std::cos(t); })};
    const auto K = lift_fiber_rotation(c.a, rotation_generator(3, 0, 2));
    const auto q = verify_quotient_invariance(spec, K, times, params);
    o.require(q.max_drift <= 1e-8, c.a->name());
    o.require(q.max_abs_quotient > 1e-3, c.a->name() + " quotient is trivial");
    o.note << c.a->name() << " drift " << sci(q.max_drift) << " (|q| up to " << sci(q.max_abs_quotient) << "); ";
  }
}

// 7 ------------------------------------------------------------------------
void shooting_uniqueness(Outcome& o) {
  auto sweep = [&](const std::string& label, const AmbientPtr& a, const std::string& speed, double tau, double lo,
                   double hi, int steps) {
    ShootingOptions opt;
    opt.a_lo = lo, opt.a_hi = hi, opt.steps = steps;
    const auto t0 = Clock::now();
    const auto r = profile_shooting_search(a, make_speed(speed), tau, opt);
    const double secs = since(t0);
    o.require(secs < 300, label + " runtime");
    o.note << label << ": " << r.shots.size() << " shots, " << r.candidates.size() << " candidates, verdict '" << r.verdict
           << "', " << secs << " s; ";
    return r;
  };
  for (const auto& a : {make_space_form(-1, 2), make_ads_schwarzschild(1.0, 2)}) {
    const auto f = make_speed("-1/H");
    const auto r = sweep(a->name() + " -1/H", a, "-1/H", slice_tau_prime(*a, f, 1.0), 0.4, 2.0, 200);
    o.require(r.shots.size() >= 200, "sweep size");
    o.require(r.regime.holds, a->name() + " regime");
    o.require(!r.candidates.empty(), a->name() + " finds the slice");
    for (const auto& c : r.candidates) o.require(c.oscillation <= 1e-4, a->name() + " non-constant candidate");
    o.require(r.uniqueness_confirmed, a->name() + " verdict");
  }
  // expanding MCF: every shot leaves the admissible region, so the sweep has no candidates to test
  for (const auto& a : {make_space_form(-1, 2), make_ads_schwarzschild(1.0, 2)}) {
    const auto r = sweep(a->name() + " H expander", a, "H", 0.5, 0.4, 2.0, 200);
    o.require(r.regime.holds, a->name() + " H regime");
    for (const auto& c : r.candidates) o.require(c.oscillation <= 1e-4, a->name() + " H non-constant candidate");
  }
  const auto c = make_custom(WarpFunction::expression("sin(rho)", 0, pi), FiberSpec::round_sphere(2));
  const auto ctl = sweep("control sin-warp H shrinker", c, "H", slice_tau_prime(*c, make_speed("H"), 1.0), 0.3, 1.5, 200);
  o.require(!ctl.regime.holds, "control regime should fail");
  o.require(!ctl.uniqueness_confirmed, "control must not confirm uniqueness");
}

// 8 ------------------------------------------------------------------------
RadialGraph hyperboloid(double theta0, double theta_end, int N) {
  const double c = 1.0 / std::tan(theta0);
  return RadialGraph::sample(
      N, [c](double t) { return 1.0 / std::sqrt(std::pow(std::cos(t), 2) - c * c * std::pow(std::sin(t), 2)); }, 0.0,
      theta_end, true);
}

void condition_checkers(Outcome& o) {
  // deg f = -1: the condition is fdot^{ij} g_ij phi''/phi with fdot^{ij} g_ij = n / H^2
  const auto f = make_speed("-1/H");
  double red_err = 0;
  bool sign_ok = true;
  for (const auto& a : {make_space_form(0, 2), make_space_form(-1, 2), make_space_form(1, 2), make_ads_schwarzschild(1.0, 2)})
    for (double rho : {0.5, 1.0, 1.4}) {
      const auto rep = check_compact_condition({a, f, slice_tau_prime(*a, f, rho), Slice{rho}});
      const Jet p = a->warp().jet(rho);
      const double H = 2 * p.d1 / p.v;
      worsen(red_err, std::abs(rep.values[0] - 2 / (H * H) * p.d2 / p.v));
      sign_ok = sign_ok && (rep.holds == (p.d2 >= 0));
    }
  o.require(red_err <= 1e-12 && sign_ok, "deg -1 reduction");
  o.note << "deg -1 reduction error " << sci(red_err) << "; ";

  double gao = 0;
  for (const auto& [w, hi] : {std::pair{WarpFunction::linear(), 20.0}, std::pair{WarpFunction::sinh(), 6.0}}) {
    const auto g = check_gao_condition(w, 1.0, 0.1, hi);
    for (double v : g.values) worsen(gao, std::abs(v));
    o.require(g.holds, "gao holds");
  }
  o.require(gao <= 1e-12, "gao equality");
  o.note << "Gao equality value " << sci(gao) << "; ";

  const auto e = make_space_form(0, 2);
  const auto g = hyperboloid(pi / 4, 0.765, 400);
  const double eps = 0.37;
  const SolitonSpec spec{e, make_speed("H"), 1.0, g, Orientation::Outward};
  const auto p = p_quantity(spec, eps);
  GraphOptions opt;
  opt.orientation = Orientation::Outward;
  double term = 0;
  const auto nodes = graph_geometry(*e, g, opt);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const Vec lam = nodes[i].lambda(2);
    worsen(term, std::abs(p.values[i] - (2 * lam.sum() - eps * (lam.squaredNorm() - 1.0))));
  }
  o.require(term <= 1e-10, "P term match");
  o.note << "P = 2H - eps(|A|^2 - tau') mismatch " << sci(term) << "; ";

  const auto ads = make_ads_schwarzschild(1.0, 2);
  bool ads_ok = true;
  for (double alpha : {0.5, 1.0, 2.0}) {
    const auto r = epsilon_auto({ads, SpeedFunction::power_h(alpha), 0.8, Slice{1.5}});
    ads_ok = ads_ok && r.ok && r.epsilon > 0;
  }
  o.require(ads_ok, "eps_auto on AdS H^alpha");
  auto shrink = spec;
  shrink.tau_prime = -1.0;
  const auto bad = epsilon_auto(shrink);
  o.require(!bad.ok, "eps_auto must fail on the shrinker");
  o.note << "eps_auto AdS " << (ads_ok ? "found" : "missing") << ", shrinker control: " << bad.reason;
}

// 9 ------------------------------------------------------------------------
void cone_geometry_oracle(Outcome& o) {
  double worst = 0;
  for (int n : {2, 3})
    for (const auto& a : {make_space_form(0, n), make_space_form(-1, n), make_space_form(1, n), make_ads_schwarzschild(1.0, n)})
      for (double th : {pi / 2, pi / 3, 2.0})
        for (double dr : {0.7, 1.3}) {
          const double rho = a->warp().lo() + dr;
          Vec v = Vec::Zero(n);
          v[0] = rho;
          if (n > 2) v[2] = 0.2;
          const auto pg = immersion_geometry(*a, cone_immersion(*a, th), v);
          Vec expect = Vec::Constant(n, std::cos(th) / std::sin(th) / a->warp()(rho));
          expect[0] = 0;
          std::sort(expect.data(), expect.data() + n);
          worsen(worst, (pg.lambda - expect).cwiseAbs().maxCoeff());
          const auto cg = cone_geometry(*a, th, rho);
          worsen(worst, (cg.lambda - expect).cwiseAbs().maxCoeff());
        }
  o.require(worst <= 1e-5, "cone curvatures");
  o.note << "max deviation from {0, cot/phi} " << sci(worst);
}

// 10 -----------------------------------------------------------------------
std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

void determinism(Outcome& o) {
  const fs::path root = fs::temp_directory_path() / "warpflow_acceptance";
  fs::remove_all(root);
  fs::create_directories(root);
  std::ofstream(root / "quotient.json") << R"({
  "task": "verify-evolution",
  "ambient": {"kind": "hyperbolic", "n": 2},
  "speed": "H",
  "tau_prime": 0.5,
  "grid_n": 64,
  "surface": {"kind": "perturbed_sphere", "rho0": 0.7, "amplitude": 0.05},
  "verify": {"identities": true, "quotient": {"points": 6}},
  "seed": 11
})";
  const std::vector<std::pair<std::string, std::string>> runs{
      {"soliton-search", WARPFLOW_SCENARIO_DIR "/cor33_ads_imcf.json"},
      {"verify-evolution", WARPFLOW_SCENARIO_DIR "/spaceform_identities.json"},
      {"verify-evolution", (root / "quotient.json").string()}};
  int k = 0;
  for (const auto& [task, file] : runs) {
    std::string bytes[2];
    for (int rep = 0; rep < 2; ++rep) {
      const fs::path out = root / (std::to_string(k) + "_" + std::to_string(rep));
      const std::string cmd = std::string(WARPFLOW_CLI_PATH) + " " + task + " --scenario " + file + " -o " + out.string() +
                              " >/dev/null 2>&1";
      const int status = std::system(cmd.c_str());
      o.require(status == 0, "run of " + file);
      bytes[rep] = slurp(out / "result.json");
    }
    o.require(!bytes[0].empty() && bytes[0] == bytes[1], "result.json differs for " + file);
    ++k;
  }
  o.note << runs.size() << " scenarios run twice, result.json compared byte for byte";
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria{
      {"flow-map closed forms", flow_map_closed_forms},
      {"slice curvature table", slice_curvature_table},
      {"AdS-Schwarzschild limits", ads_schwarzschild_limits},
      {"slice ODE closed forms", slice_ode_closed_forms},
      {"support evolution residual orders", support_residual_orders},
      {"quotient invariance", quotient_invariance},
      {"shooting uniqueness sweeps", shooting_uniqueness},
      {"condition checkers", condition_checkers},
      {"cone geometry", cone_geometry_oracle},
      {"determinism", determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    const auto t0 = Clock::now();
    try {
      criteria[i].second(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.note << "[exception: " << e.what() << "]";
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " " << i + 1 << " " << criteria[i].first << " (" << std::setprecision(3)
              << since(t0) << " s): " << o.note.str() << std::endl;
  }
  std::cout << (criteria.size() - failures) << "/" << criteria.size() << " criteria passed" << std::endl;
  return failures ? 1 : 0;
}
