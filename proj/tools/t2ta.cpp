#include "CLI11.hpp"

#include <chrono>
#include <cstdint>
#include <ctime>
#include <iostream>
#include <string>
#include <vector>

#include "t2ta/experiments.hpp"

#ifndef T2TA_VERSION
#define T2TA_VERSION "0.1.0"
#endif

namespace {

std::vector<t2ta::Algorithm> parse_algorithms(const std::vector<std::string>& names) {
  std::vector<t2ta::Algorithm> out;
  out.reserve(names.size());
  for (const std::string& n : names) out.push_back(t2ta::algorithm_from_string(n));
  return out;
}

std::vector<t2ta::SpatialLikelihoodKind> parse_kinds(const std::vector<std::string>& names) {
  std::vector<t2ta::SpatialLikelihoodKind> out;
  out.reserve(names.size());
  for (const std::string& n : names) out.push_back(t2ta::kind_from_string(n));
  return out;
}

std::string iso_now() {
  const std::time_t now = std::time(nullptr);
  char buf[32];
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Writes CSV plus sidecar, reports failures, returns the process exit code.
/// Wall time and timestamps go into the sidecar only; the CSV stays
/// byte-identical across reruns of the same configuration.
int finish(t2ta::ExperimentResult result, const std::string& out_path,
           std::chrono::steady_clock::time_point t0) {
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  result.meta["version"] = T2TA_VERSION;
  result.meta["wall_time_seconds"] = wall;
  result.meta["generated_at"] = iso_now();
  result.meta["failures"] = result.failures;
  t2ta::write_result(result, out_path);
  std::cout << "rows: " << result.rows.size() << "\n"
            << "csv: " << out_path << "\n"
            << "meta: " << out_path << ".meta.json\n";
  if (!result.failures.empty()) {
    std::cerr << result.failures.size() << " run(s) failed:\n";
    for (const nlohmann::json& f : result.failures)
      std::cerr << "  scenario=" << f["scenario"].get<std::string>()
                << " seed=" << f["seed"].get<std::uint64_t>()
                << " algorithm=" << f["algorithm"].get<std::string>()
                << " error=" << f["error"].get<std::string>() << "\n";
    return 1;
  }
  return 0;
}

void print_params(const nlohmann::json& params) {
  std::cout << "params: " << params.dump() << std::endl;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-sensor track-to-track association experiments"};
  app.set_version_flag("--version", T2TA_VERSION);
  app.require_subcommand(1);

  std::string out_path = "results.csv";
  std::string scenario = "mc_small";
  std::string script_path;
  std::string comm;
  std::string dump_hypotheses;
  std::vector<std::string> algorithm_names;
  std::vector<std::string> kind_names;
  std::vector<double> p_d_values;
  std::vector<int> sweep_grid;
  double sigma = 1.0;
  double gate = 0.0;
  double d_t = 0.0;
  double mpr = -1.0;
  double loss = -1.0;
  double latency = -1.0;
  t2ta::GospaParams gospa;
  int trials = 100;
  int sweeps = 0;
  int top_k = 0;
  int oracle_cap = 10;
  int workers = 0;
  std::uint64_t seed = 1;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("-o,--out", out_path, "output CSV path (sidecar: <out>.meta.json)");
    cmd->add_option("--seed", seed, "base seed; trial t uses seed+t");
    cmd->add_option("--workers", workers, "worker threads (0: T2TA_WORKERS env, then hardware)");
    cmd->add_option("--gospa-c", gospa.c, "GOSPA cutoff");
    cmd->add_option("--gospa-p", gospa.p, "GOSPA order");
    cmd->add_option("--gospa-alpha", gospa.alpha, "GOSPA alpha (only 2 is supported)");
  };
  auto add_mc_common = [&](CLI::App* cmd) {
    cmd->add_option("--scenario", scenario, "mc_small or mc_big")
        ->check(CLI::IsMember({"mc_small", "mc_big"}));
    cmd->add_option("--sigma", sigma, "track position noise std, meters");
    cmd->add_option("--trials", trials, "Monte Carlo trials per grid point");
    cmd->add_option("--sweeps", sweeps, "SO sweeps (0: 100 small, 200 big)");
    cmd->add_option("--gate", gate, "SO gate distance (0: 6*sigma)");
    cmd->add_option("--d-t", d_t, "baseline pair threshold (0: 15, euclidean 10)");
  };

  CLI::App* mc = app.add_subcommand("mc", "single-frame Monte Carlo sweep over p_D");
  add_common(mc);
  add_mc_common(mc);
  mc->add_option("--p-d", p_d_values, "detection probabilities (default 0.1..1.0)");
  mc->add_option("--algorithms", algorithm_names,
                 "so greedy_merge greedy_no_merge sensorwise oracle");
  mc->add_option("--top-k", top_k, "top-k band size (0: 5 small, 10 big)");
  mc->add_option("--oracle-cap", oracle_cap, "max tracks for the brute-force oracle");

  CLI::App* converge = app.add_subcommand("converge", "SO convergence over the sweep budget");
  add_common(converge);
  add_mc_common(converge);
  converge->add_option("--p-d", p_d_values, "detection probability (default 0.8)");
  converge->add_option("--grid", sweep_grid, "sweep budgets (default 1 2 5 10 20 50 100 200 300 400)");
  converge->add_option("--dump-hypotheses", dump_hypotheses,
                       "write trial 0's hypothesis set to this JSON file");

  CLI::App* cp = app.add_subcommand("cp", "collective perception scenario");
  add_common(cp);
  cp->add_option("--script", script_path, "scenario script (JSON)")->required();
  cp->add_option("--comm", comm, "override comm mode")->check(CLI::IsMember({"full", "etsi"}));
  cp->add_option("--mpr", mpr, "override market penetration rate");
  cp->add_option("--loss", loss, "override CPM loss probability");
  cp->add_option("--latency", latency, "override CPM latency, seconds");
  cp->add_option("--sweeps", sweeps, "SO sweeps (default 50)");
  cp->add_option("--gate", gate, "SO gate distance (default 15)");
  cp->add_option("--d-t", d_t, "baseline pair threshold (default 20, euclidean 10)");
  cp->add_option("--algorithms", algorithm_names,
                 "so_ds so_c greedy_merge greedy_no_merge sensorwise");

  CLI::App* ablate = app.add_subcommand("ablate", "likelihood ablation grid");
  add_common(ablate);
  add_mc_common(ablate);
  ablate->add_option("--p-d", p_d_values, "detection probabilities (default 0.5 0.9)");
  ablate->add_option("--algorithms", algorithm_names, "algorithms in the grid");
  ablate->add_option("--kinds", kind_names, "proposed generalized euclidean");

  CLI::App* oracle = app.add_subcommand("oracle-check", "SO and greedy vs brute-force optimum");
  add_common(oracle);
  oracle->add_option("--instances", trials, "number of small instances (default 200)");
  oracle->add_option("--sweeps", sweeps, "SO sweeps (default 500)");
  oracle->add_option("--sigma", sigma, "track position noise std, meters");
  oracle->add_option("--d-t", d_t, "greedy pair threshold (0: 15)");
  oracle->add_option("--gate", gate, "SO gate distance (0: 6*sigma)");

  CLI11_PARSE(app, argc, argv);

  const auto t0 = std::chrono::steady_clock::now();
  try {
    t2ta::ExperimentSpec spec;
    spec.scenario = scenario;
    spec.algorithms = parse_algorithms(algorithm_names);
    spec.kinds = parse_kinds(kind_names);
    spec.p_d_values = p_d_values;
    spec.sigma = sigma;
    spec.trials = trials;
    spec.seed_base = seed;
    spec.so_sweeps = sweeps;
    spec.gate = gate;
    spec.d_t = d_t;
    spec.top_k = top_k;
    spec.oracle_cap = oracle_cap;
    spec.gospa = gospa;
    spec.sweep_grid = sweep_grid;
    spec.script_path = script_path;
    if (comm == "full") spec.comm_mode = t2ta::sim::CommMode::kFull;
    if (comm == "etsi") spec.comm_mode = t2ta::sim::CommMode::kEtsi;
    spec.mpr = mpr;
    spec.loss = loss;
    spec.latency = latency;
    spec.dump_hypotheses = dump_hypotheses;
    spec.workers = workers;
    spec.on_params = print_params;

    t2ta::ExperimentResult result;
    if (mc->parsed()) {
      result = t2ta::run_mc_experiment(spec);
    } else if (converge->parsed()) {
      if (spec.scenario == "mc_small" && converge->count("--scenario") == 0) {
        spec.scenario = "mc_big";
        if (converge->count("--sigma") == 0) spec.sigma = 2.0;
        if (converge->count("--trials") == 0) spec.trials = 50;
      }
      result = t2ta::run_convergence(spec);
    } else if (cp->parsed()) {
      result = t2ta::run_cp_experiment(spec);
    } else if (ablate->parsed()) {
      if (ablate->count("--trials") == 0) spec.trials = 50;
      result = t2ta::run_likelihood_ablation(spec);
    } else {
      if (oracle->count("--instances") == 0) spec.trials = 200;
      result = t2ta::run_oracle_check(spec);
    }
    return finish(std::move(result), out_path, t0);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
