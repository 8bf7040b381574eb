#include "warpflow/cli.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace warpflow;
using cli::json;

namespace {

struct Flags {
  std::string scenario;
  std::string output, ambient, speed, orientation;
  std::optional<int> n, grid_n, seed, threads, steps;
  std::optional<double> mass, tau_prime, tau_prime_slice, t_end, a_lo, a_hi, rho0, theta0;
};

void add_flags(CLI::App* app, Flags& f) {
  app->add_option("--scenario", f.scenario, "scenario JSON file");
  app->add_option("-o,--output", f.output, "output directory");
  app->add_option("--ambient", f.ambient, "ambient.kind")
      ->check(CLI::IsMember({"euclidean", "hyperbolic", "sphere", "ads_schwarzschild", "custom"}));
  app->add_option("--n", f.n, "ambient.n (fiber dimension)");
  app->add_option("--mass", f.mass, "ambient.mass");
  app->add_option("--speed", f.speed, "speed: H, -1/H, K, sigma:k, H^alpha:a, ratio:k:j");
  app->add_option("--orientation", f.orientation, "inward or outward");
  app->add_option("--tau-prime", f.tau_prime, "tau_prime");
  app->add_option("--tau-prime-slice", f.tau_prime_slice, "match tau_prime to the slice at this rho");
  app->add_option("--grid-n", f.grid_n, "grid_n");
  app->add_option("--t-end", f.t_end, "flow.t_end");
  app->add_option("--a-lo", f.a_lo, "sweep.a_lo");
  app->add_option("--a-hi", f.a_hi, "sweep.a_hi");
  app->add_option("--steps", f.steps, "sweep.steps");
  app->add_option("--rho0", f.rho0, "surface.rho0 (a slice unless surface.kind says otherwise)");
  app->add_option("--theta0", f.theta0, "surface.theta0 (a cone unless surface.kind says otherwise)");
  app->add_option("--seed", f.seed, "seed");
  app->add_option("--threads", f.threads, "worker threads (WARPFLOW_THREADS caps this)");
}

json overlay(const Flags& f, const json& base) {
  json o = json::object();
  if (!f.output.empty()) o["output"] = f.output;
  if (!f.ambient.empty()) o["ambient"]["kind"] = f.ambient;
  if (f.n) o["ambient"]["n"] = *f.n;
  if (f.mass) o["ambient"]["mass"] = *f.mass;
  if (!f.speed.empty()) o["speed"] = f.speed;
  if (!f.orientation.empty()) o["orientation"] = f.orientation;
  if (f.tau_prime) o["tau_prime"] = *f.tau_prime;
  if (f.tau_prime_slice) o["tau_prime_slice"] = *f.tau_prime_slice;
  if (f.grid_n) o["grid_n"] = *f.grid_n;
  if (f.t_end) o["flow"]["t_end"] = *f.t_end;
  if (f.a_lo) o["sweep"]["a_lo"] = *f.a_lo;
  if (f.a_hi) o["sweep"]["a_hi"] = *f.a_hi;
  if (f.steps) o["sweep"]["steps"] = *f.steps;
  const bool has_kind = base.contains("surface") && base["surface"].contains("kind");
  if (f.rho0) {
    o["surface"]["rho0"] = *f.rho0;
    if (!has_kind) o["surface"]["kind"] = "slice";
  }
  if (f.theta0) {
    o["surface"]["theta0"] = *f.theta0;
    if (!has_kind) o["surface"]["kind"] = "cone";
  }
  if (f.seed) o["seed"] = *f.seed;
  if (f.threads) o["threads"] = *f.threads;
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"warpflow: curvature flows and self-similar solutions in warped products"};
  app.require_subcommand(1);
  std::map<std::string, Flags> flags;
  for (const auto& name : cli::kTasks) add_flags(app.add_subcommand(name, "run the " + name + " task"), flags[name]);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  const auto* sub = app.get_subcommands().front();
  const Flags& f = flags[sub->get_name()];

  cli::RunResult r;
  if (!f.scenario.empty()) {
    json base;
    if (std::ifstream is(f.scenario); is) {
      try {
        base = json::parse(is);
      } catch (const json::exception&) {
      }
    }
    r = cli::run_file(f.scenario, overlay(f, base), sub->get_name());
  } else {
    r = cli::run(overlay(f, json::object()), sub->get_name());
  }
  if (r.exit_code == 0) std::cout << "ok: " << (r.output / "result.json").string() << "\n";
  else std::cerr << r.message << "\n";
  return r.exit_code;
}
