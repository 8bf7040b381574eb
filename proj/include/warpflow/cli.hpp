#pragma once

#include "warpflow/flow.hpp"
#include "warpflow/soliton.hpp"
#include "warpflow/verify.hpp"

#include <json.hpp>

#include <boost/version.hpp>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <random>
#include <set>
#include <sstream>

namespace warpflow::cli {

using json = nlohmann::ordered_json;
using tree = nlohmann::json;  // map-backed: child references stay valid while siblings are added
namespace fs = std::filesystem;

inline constexpr const char* kVersion = "0.1.0";
inline const std::vector<std::string> kTasks{"simulate",       "soliton-search", "check-conditions",
                                             "verify-evolution", "decay-check",    "ambient-info"};

// ---------------------------------------------------------------------------
// Schema-checked reading. Every value read (defaults included) is mirrored
// into `resolved`, and keys nobody asked for are rejected.

class Reader {
 public:
  Reader(const json& j, std::string path, tree& resolved) : j_(j), path_(std::move(path)), out_(resolved) {
    if (!j_.is_object()) bad(path_, "expected an object");
    if (!out_.is_object()) out_ = tree::object();
  }
  Reader(const Reader&) = delete;
  ~Reader() noexcept(false) {
    if (std::uncaught_exceptions()) return;
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k)) bad(at(k), "unknown key");
  }

  bool has(const std::string& k) const { return j_.contains(k); }

  double num(const std::string& k, std::optional<double> def = {}) {
    const json* v = find(k, def.has_value());
    double x;
    if (!v) x = *def;
    else if (!v->is_number()) bad(at(k), "expected a number");
    else x = v->get<double>();
    if (!std::isfinite(x)) bad(at(k), "must be finite");
    out_[k] = x;
    return x;
  }
  double positive(const std::string& k, std::optional<double> def = {}) {
    const double x = num(k, def);
    if (!(x > 0)) bad(at(k), "must be positive");
    return x;
  }
  int integer(const std::string& k, std::optional<int> def = {}, int min = std::numeric_limits<int>::min()) {
    const json* v = find(k, def.has_value());
    int x;
    if (!v) x = *def;
    else if (!v->is_number_integer()) bad(at(k), "expected an integer");
    else x = v->get<int>();
    if (x < min) bad(at(k), "must be >= " + std::to_string(min));
    out_[k] = x;
    return x;
  }
  bool flag(const std::string& k, bool def) {
    const json* v = find(k, true);
    bool x = def;
    if (v) {
      if (!v->is_boolean()) bad(at(k), "expected true or false");
      x = v->get<bool>();
    }
    out_[k] = x;
    return x;
  }
  std::string str(const std::string& k, std::optional<std::string> def = {}, const std::vector<std::string>& allowed = {}) {
    const json* v = find(k, def.has_value());
    std::string x;
    if (!v) x = *def;
    else if (!v->is_string()) bad(at(k), "expected a string");
    else x = v->get<std::string>();
    if (!allowed.empty() && std::find(allowed.begin(), allowed.end(), x) == allowed.end()) {
      std::string list;
      for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
      bad(at(k), "must be one of: " + list);
    }
    out_[k] = x;
    return x;
  }
  std::vector<int> ints(const std::string& k, std::vector<int> def, int min) {
    const json* v = find(k, true);
    if (v) {
      if (!v->is_array()) bad(at(k), "expected an array");
      def.clear();
      for (std::size_t i = 0; i < v->size(); ++i) {
        const auto& e = (*v)[i];
        if (!e.is_number_integer()) bad(at(k) + "[" + std::to_string(i) + "]", "expected an integer");
        if (e.get<int>() < min) bad(at(k) + "[" + std::to_string(i) + "]", "must be >= " + std::to_string(min));
        def.push_back(e.get<int>());
      }
    }
    out_[k] = def;
    return def;
  }
  /// Nested object; the caller reads it through the returned Reader.
  Reader object(const std::string& k, bool required = false) {
    const json* v = find(k, !required);
    static const json empty = json::object();
    return Reader(v ? *v : empty, at(k), out_[k]);
  }
  std::string at(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }
  [[noreturn]] static void bad(const std::string& path, const std::string& msg) {
    fail(ErrorKind::Validation, (path.empty() ? "scenario" : path) + ": " + msg);
  }

 private:
  const json* find(const std::string& k, bool optional) {
    seen_.insert(k);
    if (j_.contains(k) && !j_.at(k).is_null()) return &j_.at(k);
    if (!optional) bad(at(k), "required");
    return nullptr;
  }
  const json& j_;
  std::string path_;
  tree& out_;
  std::set<std::string> seen_;
};

// ---------------------------------------------------------------------------

/// Artifacts are held in memory until the run has validated and finished;
/// commit() writes each through a temporary file and a rename.
struct Output {
  fs::path dir;
  std::vector<std::pair<std::string, std::string>> pending;

  void write(const std::string& name, std::string text) {
    for (auto& [n, t] : pending)
      if (n == name) {
        t = std::move(text);
        return;
      }
    pending.emplace_back(name, std::move(text));
  }
  std::vector<std::string> files() const {
    std::vector<std::string> v;
    for (const auto& p : pending) v.push_back(p.first);
    return v;
  }
  void commit() const {
    fs::create_directories(dir);
    for (const auto& [name, text] : pending) {
      const fs::path tmp = dir / (name + ".tmp");
      {
        std::ofstream os(tmp, std::ios::binary);
        if (!os) fail(ErrorKind::Validation, "cannot write to output directory '" + dir.string() + "'");
        os << text;
      }
      fs::rename(tmp, dir / name);
    }
  }
  void csv(const std::string& name, const std::vector<std::string>& header,
           const std::vector<std::vector<double>>& cols) {
    std::ostringstream os;
    os << std::setprecision(17);
    for (std::size_t c = 0; c < header.size(); ++c) os << (c ? "," : "") << header[c];
    os << "\n";
    const std::size_t rows = cols.empty() ? 0 : cols.front().size();
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols.size(); ++c) os << (c ? "," : "") << cols[c][r];
      os << "\n";
    }
    write(name, os.str());
  }
};

struct Context {
  AmbientPtr ambient;
  std::optional<SpeedFunction> speed;
  Orientation orientation = Orientation::Inward;
  fs::path base;  // directory of the scenario file, for relative paths
  unsigned seed = 1;
  unsigned threads = 0;
};

inline AmbientPtr read_ambient(Reader& r) {
  const auto kind = r.str("kind", {}, {"euclidean", "hyperbolic", "sphere", "ads_schwarzschild", "custom"});
  const int n = r.integer("n", 2, 2);
  if (kind == "euclidean") return make_space_form(0, n);
  if (kind == "hyperbolic") return make_space_form(-1, n);
  if (kind == "sphere") return make_space_form(1, n);
  if (kind == "ads_schwarzschild") {
    const double m = r.num("mass", 1.0);
    if (m < 0) Reader::bad(r.at("mass"), "must be >= 0");
    return make_ads_schwarzschild(m, n);
  }
  const auto phi = r.str("phi");
  const double lo = r.num("rho_lo"), hi = r.num("rho_hi");
  if (!(lo < hi)) Reader::bad(r.at("rho_hi"), "must exceed rho_lo");
  FiberSpec fiber = FiberSpec::round_sphere(n);
  if (r.has("fiber")) {
    auto fr = r.object("fiber");
    const auto fk = fr.str("kind", "round", {"round", "doubly_warped"});
    if (fk == "doubly_warped") {
      const auto rexpr = fr.str("r");
      const double th = fr.positive("theta_hi");
      fiber = FiberSpec::doubly_warped(WarpFunction::expression(rexpr, 0.0, th), n);
    }
  }
  return make_custom(WarpFunction::expression(phi, lo, hi), std::move(fiber));
}

inline HypersurfaceRep read_surface(Reader& r, const Context& ctx, int N) {
  const auto kind = r.str("kind", {}, {"slice", "graph", "cone", "perturbed_sphere", "perturbed_cone"});
  if (kind == "slice") return Slice{r.num("rho0")};
  if (kind == "cone") {
    const double th = r.num("theta0");
    if (!(th > 0 && th < std::numbers::pi)) Reader::bad(r.at("theta0"), "must lie in (0, pi)");
    return Cone{th};
  }
  if (kind == "graph") {
    fs::path p = r.str("file");
    const bool open = r.flag("open_end", false);
    if (p.is_relative()) p = ctx.base / p;
    if (!fs::exists(p)) Reader::bad(r.at("file"), "file not found: " + p.string());
    return read_graph_csv(p.string(), open);
  }
  if (kind == "perturbed_sphere") {
    const double rho0 = r.num("rho0"), amp = r.num("amplitude", 0.0);
    const int mode = r.integer("mode", 2, 0);
    return RadialGraph::sample(N, [=](double t) { return rho0 + amp * std::cos(mode * t); });
  }
  const double th = r.num("theta0");
  const double amp = r.num("amplitude", 0.0), power = r.num("power", 1.0);
  return perturbed_cone_immersion(
      ctx.ambient, th, [amp, power](double rho) { return amp * std::pow(rho, -power); },
      [](const Vec& w) { return w.size() ? 2.0 * w[0] / (1.0 + w.squaredNorm()) : 1.0; });
}

inline json surface_summary(const HypersurfaceRep& s) {
  return std::visit(
      [](const auto& x) -> json {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, Slice>) return {{"kind", "slice"}, {"rho0", x.rho0}};
        else if constexpr (std::is_same_v<T, Cone>) return {{"kind", "cone"}, {"theta0", x.theta0}};
        else if constexpr (std::is_same_v<T, RadialGraph>) return {{"kind", "graph"}, {"N", x.N()}, {"open_end", x.open_end}};
        else return {{"kind", "immersion"}};
      },
      s);
}

inline json condition_json(const ConditionReport& c) {
  return {{"name", c.name}, {"holds", c.holds}, {"min_value", c.min_value}, {"tolerance", c.tolerance}, {"detail", c.detail}};
}

inline void condition_csv(Output& out, const std::string& file, const ConditionReport& c) {
  std::vector<std::string> head{"x", "value"};
  std::vector<std::vector<double>> cols{c.x, c.values};
  for (const auto& [k, v] : c.columns) {
    head.push_back(k);
    cols.push_back(v);
  }
  out.csv(file, head, cols);
}

/// tau' as a number, or matched to a slice by {"slice_rho": value}.
inline double tau_prime(Reader& root, const Context& ctx) {
  if (root.has("tau_prime_slice")) {
    const double rho = root.num("tau_prime_slice");
    const double tp = slice_tau_prime(*ctx.ambient, *ctx.speed, rho, ctx.orientation);
    return tp;
  }
  return root.num("tau_prime");
}

// ---------------------------------------------------------------------------
// Tasks

inline json task_ambient_info(Reader& root, Context& ctx, Output& out) {
  auto s = root.object("sampling");
  const auto& w = ctx.ambient->warp();
  const double lo = s.num("rho_lo", w.lo() + 0.05);
  const double hi = s.num("rho_hi", std::isfinite(w.hi()) ? w.hi() - 0.05 : w.lo() + 3.0);
  const int count = s.integer("count", 50, 2);
  if (!(w.interior(lo) && w.interior(hi) && lo < hi)) Reader::bad(s.at("rho_hi"), "sampling range must lie inside the warp interval");
  std::vector<double> rho, phi, d1, d2, lam;
  for (int i = 0; i < count; ++i) {
    const double x = lo + (hi - lo) * i / (count - 1);
    const Jet j = w.jet(x);
    rho.push_back(x), phi.push_back(j.v), d1.push_back(j.d1), d2.push_back(j.d2);
    lam.push_back(slice_geometry(*ctx.ambient, x).lambda[0]);
  }
  out.csv("warp.csv", {"rho", "phi", "dphi", "ddphi", "slice_lambda"}, {rho, phi, d1, d2, lam});
  json r{{"ambient", ctx.ambient->name()},
         {"n", ctx.ambient->n()},
         {"warp_interval", {w.lo(), w.hi()}},
         {"round_fiber", ctx.ambient->is_round()}};
  if (auto k = ctx.ambient->space_form_curvature()) r["space_form_curvature"] = *k;
  else r["space_form_curvature"] = nullptr;
  return r;
}

inline json task_simulate(Reader& root, Context& ctx, Output& out, const HypersurfaceRep& surf) {
  auto fr = root.object("flow");
  const double t_end = fr.positive("t_end");
  StepControl ctl;
  ctl.cfl = fr.positive("cfl", ctl.cfl);
  ctl.dt_max = fr.positive("dt_max", ctl.dt_max);
  const int snaps = fr.integer("snapshots", 10, 1);
  for (int i = 1; i <= snaps; ++i) ctl.snapshots.push_back(t_end * i / snaps);
  ctl.orientation = ctx.orientation;
  const int N = root.integer("grid_n", 128, 6);
  json r{{"surface", surface_summary(surf)}};

  RadialGraph g0;
  if (const auto* sl = std::get_if<Slice>(&surf)) {
    const auto tr = slice_ode_solve(*ctx.ambient, *ctx.speed, sl->rho0, t_end);
    out.csv("slice_ode.csv", {"t", "rho"}, {tr.t, tr.rho});
    r["slice_ode"] = {{"reason", tr.reason}, {"t_stop", tr.t_stop}, {"rho_final", tr.rho.back()}};
    g0 = RadialGraph::constant(N, sl->rho0);
  } else if (const auto* g = std::get_if<RadialGraph>(&surf)) {
    g0 = *g;
  } else {
    fail(ErrorKind::Validation, "surface: simulate needs a slice or a radial graph");
  }
  const auto res = evolve_graph(*ctx.ambient, *ctx.speed, g0, t_end, ctl);
  std::vector<double> col_t, col_theta, col_u;
  json states = json::array();
  for (const auto& s : res.states) {
    for (int i = 0; i <= s.surface.N(); ++i)
      col_t.push_back(s.t), col_theta.push_back(s.surface.theta[i]), col_u.push_back(s.surface.u[i]);
    states.push_back({{"t", s.t},
                      {"min_lambda", s.diag.min_lambda},
                      {"max_lambda", s.diag.max_lambda},
                      {"min_supportX", s.diag.min_supportX},
                      {"max_supportX", s.diag.max_supportX},
                      {"min_speed", s.diag.min_speed},
                      {"max_speed", s.diag.max_speed}});
  }
  out.csv("snapshots.csv", {"t", "theta", "u"}, {col_t, col_theta, col_u});
  r["graph_flow"] = {{"reason", res.reason}, {"detail", res.detail}, {"steps", res.steps},
                     {"t_final", res.states.back().t}, {"states", states}};
  return r;
}

inline json task_soliton_search(Reader& root, Context& ctx, Output& out) {
  const double tp = tau_prime(root, ctx);
  auto sw = root.object("sweep", true);
  auto tol = root.object("tolerances");
  ShootingOptions opt;
  opt.a_lo = sw.num("a_lo");
  opt.a_hi = sw.num("a_hi");
  if (!(opt.a_lo < opt.a_hi)) Reader::bad(sw.at("a_hi"), "must exceed a_lo");
  opt.steps = sw.integer("steps", opt.steps, 2);
  opt.theta_start = sw.positive("theta_start", opt.theta_start);
  opt.end_gap = sw.positive("end_gap", opt.end_gap);
  opt.report_nodes = sw.integer("report_nodes", opt.report_nodes, 8);
  opt.tol = tol.positive("integrator", opt.tol);
  opt.match_tol = tol.positive("match", opt.match_tol);
  opt.slice_tol = tol.positive("slice", opt.slice_tol);
  opt.threads = ctx.threads;
  opt.orientation = ctx.orientation;
  const auto res = profile_shooting_search(ctx.ambient, *ctx.speed, tp, opt);

  std::vector<double> a, mm, reached, side, done;
  for (const auto& s : res.shots) {
    a.push_back(s.a), mm.push_back(s.mismatch), reached.push_back(s.theta_reached);
    side.push_back(s.side), done.push_back(s.completed ? 1 : 0);
  }
  out.csv("shots.csv", {"a", "completed", "mismatch", "theta_reached", "side"}, {a, done, mm, reached, side});
  std::vector<double> ci, ct, cu;
  json cands = json::array();
  for (std::size_t k = 0; k < res.candidates.size(); ++k) {
    const auto& c = res.candidates[k];
    for (std::size_t i = 0; i < c.theta.size(); ++i) ci.push_back(double(k)), ct.push_back(c.theta[i]), cu.push_back(c.u[i]);
    cands.push_back({{"a", c.a}, {"classification", c.classification}, {"oscillation", c.oscillation},
                     {"sup_residual", c.sup_residual}, {"mismatch", c.mismatch},
                     {"slice_relation_error", c.slice_relation_error}, {"detail", c.detail}});
  }
  out.csv("candidates.csv", {"candidate", "theta", "u"}, {ci, ct, cu});
  condition_csv(out, "regime.csv", res.regime);
  return {{"tau_prime", tp},
          {"verdict", res.verdict},
          {"uniqueness_confirmed", res.uniqueness_confirmed},
          {"only_slices", res.only_slices},
          {"shots", res.shots.size()},
          {"blowups", res.blowups},
          {"unresolved", res.unresolved},
          {"regime", condition_json(res.regime)},
          {"candidates", cands}};
}

inline json task_check_conditions(Reader& root, Context& ctx, Output& out, const HypersurfaceRep& surf) {
  const double tp = tau_prime(root, ctx);
  auto cr = root.object("conditions");
  const double tol = cr.positive("tolerance", 1e-12);
  const SolitonSpec spec{ctx.ambient, *ctx.speed, tp, surf, ctx.orientation};
  json r{{"tau_prime", tp}, {"surface", surface_summary(surf)}};

  const auto res = soliton_residual(spec);
  r["soliton_residual"] = {{"sup_residual", res.sup_residual}, {"classification", res.classification},
                           {"oscillation", res.oscillation}, {"detail", res.detail}};
  const auto compact = check_compact_condition(spec, tol);
  r["compact"] = condition_json(compact);
  condition_csv(out, "compact.csv", compact);

  if (cr.has("epsilon")) {
    const auto p = p_quantity(spec, cr.positive("epsilon"));
    r["p_quantity"] = condition_json(p);
    r["p_quantity"]["epsilon"] = cr.num("epsilon");
    condition_csv(out, "p_quantity.csv", p);
  } else if (cr.flag("epsilon_auto", true)) {
    const auto e = epsilon_auto(spec, cr.positive("tail_window", 0.1));
    r["epsilon_auto"] = {{"ok", e.ok}, {"epsilon", e.epsilon}, {"rho0", e.rho0},
                         {"violating_node", e.violating_node}, {"reason", e.reason}, {"p", condition_json(e.p)}};
    condition_csv(out, "p_quantity.csv", e.p);
  }
  if (cr.has("gao")) {
    auto gr = cr.object("gao");
    const double c = gr.num("c", 1.0);
    const double lo = gr.num("rho_lo"), hi = gr.num("rho_hi");
    const auto g = check_gao_condition(ctx.ambient->warp(), c, lo, hi, gr.integer("samples", 200, 2), tol);
    r["gao"] = condition_json(g);
    condition_csv(out, "gao.csv", g);
  }
  return r;
}

inline json study_json(const ResidualStudy& s) {
  return {{"quantity", s.quantity}, {"grids", s.grid}, {"dt", s.dt}, {"residuals", s.residual},
          {"orders", s.orders}, {"min_order", s.min_order}};
}

inline json task_verify(Reader& root, Context& ctx, Output& out, const std::optional<HypersurfaceRep>& surf) {
  auto vr = root.object("verify", true);
  json r = json::object();
  if (vr.flag("identities", false)) {
    const auto rows = verify_space_form_identities(*ctx.ambient, vr.positive("identity_tolerance", 1e-12),
                                                   vr.integer("identity_samples", 200, 2), ctx.seed);
    json table = json::array();
    bool all = true;
    for (const auto& row : rows) {
      table.push_back({{"identity", row.name}, {"sup_error", row.sup_error}, {"pass", row.pass}});
      all = all && row.pass;
    }
    r["identities"] = {{"table", table}, {"all_pass", all}};
  }
  if (vr.has("support")) {
    auto sr = vr.object("support");
    SupportOptions opt;
    const auto field = sr.str("field", "axis_rotation", {"axis_rotation", "conformal"});
    opt.grids = sr.ints("grids", opt.grids, 16);
    opt.horizon = sr.positive("horizon", opt.horizon);
    opt.stencil = sr.positive("stencil", opt.stencil);
    opt.simplified = sr.flag("simplified", false);
    opt.threads = ctx.threads;
    const double rho0 = sr.num("rho0", 1.0), amp = sr.num("amplitude", 0.05);
    const int mode = sr.integer("mode", 2, 0);
    if (!ctx.speed) Reader::bad("speed", "required for the support study");
    const auto st = verify_support_evolution(ctx.ambient, *ctx.speed,
                                             [=](double t) { return rho0 + amp * std::cos(mode * t); },
                                             field == "conformal" ? SupportField::Conformal : SupportField::AxisRotation, opt);
    r["support"] = study_json(st);
    out.csv("support_residual.csv", {"theta", "residual"}, {st.theta, st.field});
  }
  if (vr.has("quotient")) {
    auto qr = vr.object("quotient");
    if (!surf) Reader::bad("surface", "required for the quotient study");
    const int steps = qr.integer("steps", 10, 1);
    const double t1 = qr.positive("t_end", 1.0);
    std::vector<double> times;
    for (int i = 1; i <= steps; ++i) times.push_back(t1 * i / steps);
    std::mt19937_64 rng(ctx.seed);
    std::uniform_real_distribution<double> th(0.3, std::numbers::pi - 0.3), wd(-1.0, 1.0);
    std::vector<Vec> params;
    const int pts = qr.integer("points", 8, 1);
    for (int i = 0; i < pts; ++i) {
      Vec u(ctx.ambient->n());
      u[0] = th(rng);
      for (int j = 1; j < u.size(); ++j) u[j] = wd(rng);
      params.push_back(u);
    }
    if (!ctx.speed) Reader::bad("speed", "required for the quotient study");
    const SolitonSpec spec{ctx.ambient, *ctx.speed, tau_prime(root, ctx), *surf, ctx.orientation};
    const auto K = lift_fiber_rotation(ctx.ambient, rotation_generator(ctx.ambient->n() + 1, 0, ctx.ambient->n()));
    const auto q = verify_quotient_invariance(spec, K, times, params);
    r["quotient"] = {{"max_drift", q.max_drift}, {"max_abs_quotient", q.max_abs_quotient},
                     {"soliton_residual", q.soliton_residual}};
    out.csv("quotient_drift.csv", {"t", "drift"}, {q.times, q.drift});
  }
  if (r.empty()) Reader::bad("verify", "select at least one of identities, support, quotient");
  return r;
}

inline json task_decay(Reader& root, Context& ctx, Output& out, const HypersurfaceRep& surf) {
  auto dr = root.object("decay", true);
  const double lo = dr.positive("rho_lo"), hi = dr.positive("rho_hi");
  if (!(lo < hi)) Reader::bad(dr.at("rho_hi"), "must exceed rho_lo");
  const int count = dr.integer("count", 100, 2);
  const int pts = dr.integer("fiber_points", 4, 1);
  const double threshold = dr.positive("threshold", 1e-6);
  const double window = dr.positive("window", 0.1);
  const auto kk = dr.str("killing", "core_rotation", {"core_rotation", "fiber_rotation"});
  const int n = ctx.ambient->n();
  const KillingLift K = kk == "fiber_rotation"
                            ? lift_fiber_rotation(ctx.ambient, rotation_generator(n + 1, 0, n))
                            : lift_core_rotation(ctx.ambient, rotation_generator(n, 0, n - 1));
  std::vector<double> rho;
  for (int i = 0; i < count; ++i) rho.push_back(lo + (hi - lo) * i / (count - 1));
  std::mt19937_64 rng(ctx.seed);
  std::uniform_real_distribution<double> wd(-1.0, 1.0);
  std::vector<Vec> w;
  for (int i = 0; i < pts; ++i) {
    Vec v(n - 1);
    for (int j = 0; j < n - 1; ++j) v[j] = wd(rng);
    w.push_back(v);
  }
  const auto d = decay_check(*ctx.ambient, surf, K, rho, w, threshold, window);
  out.csv("decay.csv", {"rho0", "envelope", "curvature_envelope"}, {d.rho0, d.envelope, d.curvature_envelope});
  return {{"decays", d.decays}, {"last_window", d.last_window}, {"threshold", d.threshold}, {"note", d.note}};
}

// ---------------------------------------------------------------------------

inline std::string timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

inline json versions() {
  return {{"warpflow", kVersion},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION)},
          {"boost", BOOST_LIB_VERSION},
          {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." + std::to_string(NLOHMANN_JSON_VERSION_MINOR) +
                                "." + std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
          {"compiler", __VERSION__}};
}

struct RunResult {
  int exit_code = 0;
  std::string message;
  fs::path output;
};

inline int exit_code(ErrorKind k) { return k == ErrorKind::Validation ? 2 : 3; }

/// Runs one scenario. `task` overrides the scenario's task when non-empty.
inline RunResult run(json scenario, const std::string& task_override = "", const fs::path& base = fs::current_path()) {
  RunResult rr;
  tree resolved = tree::object();
  std::optional<Output> out;
  try {
    if (!task_override.empty()) scenario["task"] = task_override;
    Context ctx;
    ctx.base = base;
    json r;
    std::string task;
    {
      Reader root(scenario, "", resolved);
      task = root.str("task", {}, kTasks);
      root.str("description", "");
      ctx.seed = static_cast<unsigned>(root.integer("seed", 1, 0));
      ctx.threads = static_cast<unsigned>(root.integer("threads", 0, 0));
      out = Output{fs::path(root.str("output", "warpflow_out"))};
      {
        auto ar = root.object("ambient", true);
        ctx.ambient = read_ambient(ar);
      }
      ctx.orientation = root.str("orientation", "inward", {"inward", "outward"}) == "inward" ? Orientation::Inward
                                                                                              : Orientation::Outward;
      const bool needs_speed = task == "simulate" || task == "soliton-search" || task == "check-conditions";
      if (root.has("speed") || needs_speed) {
        ctx.speed = SpeedFunction::parse(root.str("speed"));
        ctx.speed->check_dimension(ctx.ambient->n());
      }
      const int N = root.integer("grid_n", 128, 6);
      std::optional<HypersurfaceRep> surf;
      if (root.has("surface")) {
        auto sr = root.object("surface");
        surf = read_surface(sr, ctx, N);
      }
      auto need_surface = [&]() -> const HypersurfaceRep& {
        if (!surf) Reader::bad("surface", "required for task " + task);
        return *surf;
      };
      if (task == "ambient-info") r = task_ambient_info(root, ctx, *out);
      else if (task == "simulate") r = task_simulate(root, ctx, *out, need_surface());
      else if (task == "soliton-search") r = task_soliton_search(root, ctx, *out);
      else if (task == "check-conditions") r = task_check_conditions(root, ctx, *out, need_surface());
      else if (task == "verify-evolution") r = task_verify(root, ctx, *out, surf);
      else r = task_decay(root, ctx, *out, need_surface());
      if (root.has("tau_prime") && !resolved.contains("tau_prime")) root.num("tau_prime");
      if (root.has("tau_prime_slice") && !resolved.contains("tau_prime_slice")) root.num("tau_prime_slice");
    }
    json result{{"task", task}, {"ambient", ctx.ambient->name()}, {"status", "ok"}, {"result", r}};
    if (ctx.speed) result["speed"] = ctx.speed->name();
    out->write("result.json", result.dump(2) + "\n");
    json manifest{{"created", timestamp()}, {"versions", versions()}, {"threads", thread_count(ctx.threads)},
                  {"configuration", json::parse(resolved.dump())}, {"files", out->files()}};
    manifest["files"].push_back("manifest.json");
    out->write("manifest.json", manifest.dump(2) + "\n");
    out->commit();
    rr.output = out->dir;
    rr.message = "ok";
  } catch (const Error& e) {
    rr.exit_code = exit_code(e.kind());
    rr.message = e.what();
    if (out && rr.exit_code == 3) {
      // numerical failures still leave a result explaining the reason
      try {
        json result{{"status", "error"}, {"error", to_string(e.kind())}, {"reason", e.what()}};
        Output failed{out->dir, {}};
        failed.write("result.json", result.dump(2) + "\n");
        failed.commit();
        rr.output = out->dir;
      } catch (const std::exception&) {
      }
    }
  } catch (const json::exception& e) {
    rr.exit_code = 2;
    rr.message = std::string("validation: ") + e.what();
  }
  return rr;
}

/// Loads and runs a scenario file; parse errors count as validation failures.
inline RunResult run_file(const fs::path& path, const json& overrides = json::object(), const std::string& task = "") {
  std::ifstream is(path);
  if (!is) return {2, "validation: cannot open scenario '" + path.string() + "'", {}};
  json j;
  try {
    j = json::parse(is);
  } catch (const json::parse_error& e) {
    return {2, std::string("validation: scenario is not valid JSON: ") + e.what(), {}};
  }
  if (!j.is_object()) return {2, "validation: scenario: expected an object", {}};
  j.merge_patch(overrides);
  return run(std::move(j), task, path.parent_path().empty() ? fs::current_path() : fs::absolute(path.parent_path()));
}

}  // namespace warpflow::cli
