#pragma once

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <limits>
#include <mutex>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "t2ta/baselines.hpp"
#include "t2ta/core.hpp"
#include "t2ta/frame.hpp"
#include "t2ta/gospa.hpp"
#include "t2ta/likelihood.hpp"
#include "t2ta/rng.hpp"
#include "t2ta/sim/mc.hpp"
#include "t2ta/sim/scenario.hpp"
#include "t2ta/so.hpp"

namespace t2ta {

enum class Algorithm {
  kSo,            ///< SO with the true (fixed) detection probability; MC only
  kSoC,           ///< SO with estimated-constant p_D; CP only
  kSoDs,          ///< SO with distance-based p_D; CP only
  kGreedyMerge,
  kGreedyNoMerge,
  kSensorwise,
  kOracle,        ///< brute-force exact optimum, small instances only
};

inline const char* to_string(Algorithm a) {
  switch (a) {
    case Algorithm::kSo: return "so";
    case Algorithm::kSoC: return "so_c";
    case Algorithm::kSoDs: return "so_ds";
    case Algorithm::kGreedyMerge: return "greedy_merge";
    case Algorithm::kGreedyNoMerge: return "greedy_no_merge";
    case Algorithm::kSensorwise: return "sensorwise";
    case Algorithm::kOracle: return "oracle";
  }
  return "?";
}

inline Algorithm algorithm_from_string(const std::string& s) {
  if (s == "so") return Algorithm::kSo;
  if (s == "so_c" || s == "so-c") return Algorithm::kSoC;
  if (s == "so_ds" || s == "so-ds") return Algorithm::kSoDs;
  if (s == "greedy_merge" || s == "greedy-merge") return Algorithm::kGreedyMerge;
  if (s == "greedy_no_merge" || s == "greedy-no-merge") return Algorithm::kGreedyNoMerge;
  if (s == "sensorwise") return Algorithm::kSensorwise;
  if (s == "oracle") return Algorithm::kOracle;
  throw std::invalid_argument("unknown algorithm: " + s);
}

inline SpatialLikelihoodKind kind_from_string(const std::string& s) {
  if (s == "proposed") return SpatialLikelihoodKind::kProposed;
  if (s == "generalized") return SpatialLikelihoodKind::kGeneralized;
  if (s == "euclidean") return SpatialLikelihoodKind::kEuclidean;
  throw std::invalid_argument("unknown likelihood kind: " + s);
}

/// Everything a run needs; zero/empty fields fall back to the documented
/// per-verb defaults (SO sweeps 100 small / 200 big / 50 CP, gate 6*sigma MC
/// / 15 m CP, d_t 15 MC / 20 CP / 10 euclidean, GOSPA c=10 p=1 alpha=2).
struct ExperimentSpec {
  std::string scenario = "mc_small";  ///< mc_small | mc_big (cp uses script_path)
  std::vector<Algorithm> algorithms;  ///< empty: per-verb default set
  std::vector<double> p_d_values;
  std::vector<SpatialLikelihoodKind> kinds;  ///< ablation grid; empty: all three
  double sigma = 1.0;
  int trials = 100;
  std::uint64_t seed_base = 1;
  int so_sweeps = 0;
  double gate = 0.0;
  double d_t = 0.0;
  int top_k = 0;
  int oracle_cap = 10;
  GospaParams gospa;
  std::vector<int> sweep_grid;  ///< converge: N values, default {1,2,5,10,20,50,100,200,300,400}
  std::string script_path;      ///< cp scenario script
  std::optional<sim::CommMode> comm_mode;  ///< cp: override script comm mode
  double mpr = -1.0;            ///< cp: override script MPR when >= 0
  double loss = -1.0;           ///< cp: override channel loss when >= 0
  double latency = -1.0;        ///< cp: override channel latency when >= 0
  std::string dump_hypotheses;  ///< converge: JSON dump of trial 0's hypothesis set
  int workers = 0;              ///< 0: T2TA_WORKERS env var, then hardware

  /// Called with the resolved parameter bundle before any work starts.
  std::function<void(const nlohmann::json&)> on_params;
};

/// One CSV row. Every row carries enough keys (scenario, seed, trial, frame,
/// algorithm, parameters) to regroup or regenerate any figure offline.
struct ResultRow {
  std::string scenario;
  std::uint64_t seed = 0;
  int trial = 0;
  int frame = -1;  ///< CP frame index; -1 (blank) for single-frame rows
  std::string algorithm;
  std::string likelihood;  ///< blank for ground truth / oracle-free rows
  double p_d = std::nan("");
  double sigma = std::nan("");
  std::string comm;  ///< blank outside CP
  double mpr = std::nan("");
  int sweeps = 0;  ///< SO sweep budget; 0 blank
  int n_tracks = 0;
  int n_truth = 0;
  bool has_gospa = true;
  GospaResult gospa;
  double log_lik = std::nan("");
  double rel_gospa = std::nan("");
  int top_k = 0;
  double topk_gospa_min = std::nan("");
  double topk_gospa_max = std::nan("");
  int optimal = -1;  ///< oracle-check: 1/0; -1 blank
};

struct ExperimentResult {
  std::vector<ResultRow> rows;
  nlohmann::json meta;  ///< config echo plus run statistics (volatile info lives here)

  /// One entry per algorithm invocation that threw: scenario, seed,
  /// algorithm, error. Configuration errors still throw out of the runner;
  /// this catches per-cell faults so one bad cell cannot void a long run.
  std::vector<nlohmann::json> failures;
};

// ---- CSV output ----

inline constexpr const char* kCsvHeader =
    "scenario,seed,trial,frame,algorithm,likelihood,p_d,sigma,comm,mpr,sweeps,"
    "n_tracks,n_truth,gospa,localization,n_missed,missed_cost,n_false,false_cost,"
    "log_lik,rel_gospa,top_k,topk_gospa_min,topk_gospa_max,optimal";

inline std::string csv_num(double v) {
  if (std::isnan(v)) return "";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline void write_csv(std::ostream& os, const std::vector<ResultRow>& rows) {
  os << kCsvHeader << '\n';
  for (const ResultRow& r : rows) {
    os << r.scenario << ',' << r.seed << ',' << r.trial << ','
       << (r.frame >= 0 ? std::to_string(r.frame) : "") << ',' << r.algorithm << ','
       << r.likelihood << ',' << csv_num(r.p_d) << ',' << csv_num(r.sigma) << ',' << r.comm << ','
       << csv_num(r.mpr) << ',' << (r.sweeps > 0 ? std::to_string(r.sweeps) : "") << ','
       << r.n_tracks << ',' << r.n_truth << ',';
    if (r.has_gospa) {
      os << csv_num(r.gospa.total) << ',' << csv_num(r.gospa.localization) << ','
         << r.gospa.n_missed << ',' << csv_num(r.gospa.missed_cost) << ',' << r.gospa.n_false
         << ',' << csv_num(r.gospa.false_cost) << ',';
    } else {
      os << ",,,,,,";
    }
    os << csv_num(r.log_lik) << ',' << csv_num(r.rel_gospa) << ','
       << (r.top_k > 0 ? std::to_string(r.top_k) : "") << ',' << csv_num(r.topk_gospa_min) << ','
       << csv_num(r.topk_gospa_max) << ',' << (r.optimal >= 0 ? std::to_string(r.optimal) : "")
       << '\n';
  }
}

inline void write_result(const ExperimentResult& result, const std::string& csv_path) {
  std::ofstream csv(csv_path, std::ios::binary);
  if (!csv) throw std::runtime_error("cannot write " + csv_path);
  write_csv(csv, result.rows);
  std::ofstream meta(csv_path + ".meta.json", std::ios::binary);
  meta << result.meta.dump(2) << '\n';
}

// ---- hypothesis export ----

inline nlohmann::json hypotheses_to_json(const HypothesisSet& h) {
  nlohmann::json distinct = nlohmann::json::array();
  for (const HypothesisSet::Entry& e : h.distinct())
    distinct.push_back({{"assoc", e.assoc.assignment},
                        {"log_lik", e.log_lik},
                        {"first_index", e.first_index},
                        {"visits", e.visits}});
  nlohmann::json samples = nlohmann::json::array();
  for (std::size_t i = 0; i < h.n_samples(); ++i) {
    const auto [entry, ll] = h.sample(i);
    samples.push_back({entry, ll});
  }
  return {{"distinct", std::move(distinct)}, {"samples", std::move(samples)}};
}

// ---- worker pool ----

inline int worker_count(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("T2TA_WORKERS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

/// Runs fn(0..n_tasks-1) on `workers` threads. Tasks must write only their
/// own slots; rows stay ordered by task index regardless of completion
/// order. The first task exception is rethrown after all threads join.
template <typename Fn>
inline void parallel_for(std::size_t n_tasks, int workers, Fn&& fn) {
  if (n_tasks == 0) return;
  if (workers <= 1 || n_tasks == 1) {
    for (std::size_t i = 0; i < n_tasks; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto body = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n_tasks) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  const int n = std::min<std::size_t>(static_cast<std::size_t>(workers), n_tasks);
  pool.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) pool.emplace_back(body);
  for (std::thread& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

// ---- shared helpers ----

namespace detail {

struct McDerived {
  sim::McConfig base;
  bool big = false;
  int so_sweeps = 0;
  double gate = 0.0;
  double d_t = 0.0;
  int top_k = 0;
};

inline McDerived mc_defaults(const ExperimentSpec& spec) {
  McDerived d;
  if (spec.scenario == "mc_small") {
    d.base = sim::McConfig::small_scenario(spec.sigma, 0.9, 0);
    d.big = false;
  } else if (spec.scenario == "mc_big") {
    d.base = sim::McConfig::big_scenario(spec.sigma, 0.9, 0);
    d.big = true;
  } else {
    throw std::invalid_argument("scenario must be mc_small or mc_big, got: " + spec.scenario);
  }
  d.so_sweeps = spec.so_sweeps > 0 ? spec.so_sweeps : (d.big ? 200 : 100);
  d.gate = spec.gate > 0.0 ? spec.gate : 6.0 * spec.sigma;
  d.d_t = spec.d_t;  // resolved per likelihood kind at use
  d.top_k = spec.top_k > 0 ? spec.top_k : (d.big ? 10 : 5);
  return d;
}

inline double resolve_d_t(double requested, SpatialLikelihoodKind kind, bool cp) {
  if (requested > 0.0) return requested;
  if (kind == SpatialLikelihoodKind::kEuclidean) return 10.0;
  return cp ? 20.0 : 15.0;
}

inline std::uint64_t stream_id(Algorithm a, int frame = 0) {
  return (static_cast<std::uint64_t>(frame) << 8) | static_cast<std::uint64_t>(a);
}

inline nlohmann::json failure_entry(const std::string& scenario, std::uint64_t seed,
                                    const std::string& algorithm, const char* what) {
  return {{"scenario", scenario}, {"seed", seed}, {"algorithm", algorithm}, {"error", what}};
}

/// Association produced by one algorithm on one frame. SO variants also
/// return their hypothesis set for top-k reporting.
struct AlgoOutput {
  JointAssociation assoc;
  double log_lik = std::nan("");
  std::optional<HypothesisSet> hypotheses;
};

inline AlgoOutput run_algorithm(Algorithm algo, const ScenarioFrame& frame,
                                SpatialLikelihoodKind kind, const DetectionModel& so_detection,
                                int so_sweeps, double gate, double d_t, std::uint64_t so_seed,
                                int oracle_cap) {
  AlgoOutput out;
  switch (algo) {
    case Algorithm::kSo:
    case Algorithm::kSoC:
    case Algorithm::kSoDs: {
      SoConfig cfg;
      cfg.n_sweeps = so_sweeps;
      cfg.gate = gate;
      cfg.detection = so_detection;
      cfg.kind = kind;
      cfg.seed = so_seed;
      HypothesisSet h = so_run(frame.tracks, frame.sensors, cfg);
      if (h.empty()) {
        out.assoc = JointAssociation{};
        out.log_lik = 0.0;
      } else {
        const HypothesisSet::Entry& best = h.best();
        out.assoc = best.assoc;
        out.log_lik = best.log_lik;
      }
      out.hypotheses = std::move(h);
      return out;
    }
    case Algorithm::kGreedyMerge:
    case Algorithm::kGreedyNoMerge:
      out.assoc = greedy(frame.tracks, kind, d_t, algo == Algorithm::kGreedyMerge);
      return out;
    case Algorithm::kSensorwise:
      out.assoc = sensorwise(frame.tracks, kind, d_t);
      return out;
    case Algorithm::kOracle: {
      const BruteForceResult r =
          brute_force_optimal(frame.tracks, frame.sensors, so_detection, kind, oracle_cap);
      out.assoc = r.assoc;
      out.log_lik = r.log_lik;
      return out;
    }
  }
  throw std::logic_error("unreachable");
}

}  // namespace detail

// ---- Monte Carlo experiment ----

/// For each (p_D, trial): generate a frame with seed base+trial, run every
/// requested algorithm plus the ground-truth reference, and score with
/// GOSPA. SO rows carry the top-k GOSPA band. The oracle runs only when the
/// frame is at or below the enumeration cap.
inline ExperimentResult run_mc_experiment(const ExperimentSpec& spec) {
  detail::McDerived d = detail::mc_defaults(spec);
  std::vector<Algorithm> algorithms = spec.algorithms;
  if (algorithms.empty())
    algorithms = {Algorithm::kSo, Algorithm::kGreedyMerge, Algorithm::kGreedyNoMerge,
                  Algorithm::kSensorwise};
  for (Algorithm a : algorithms)
    if (a == Algorithm::kSoC || a == Algorithm::kSoDs)
      throw std::invalid_argument("so_c/so_ds are collective-perception strategies; MC uses 'so'");
  std::vector<double> p_ds = spec.p_d_values;
  if (p_ds.empty())
    for (int i = 1; i <= 10; ++i) p_ds.push_back(0.1 * i);
  if (spec.trials < 1) throw std::invalid_argument("trials must be >= 1");
  for (double p : p_ds)
    if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("p_d values must be in (0, 1]");

  const SpatialLikelihoodKind kind = SpatialLikelihoodKind::kProposed;
  nlohmann::json meta = {
      {"verb", "mc"},
      {"scenario", spec.scenario},
      {"sigma", spec.sigma},
      {"trials", spec.trials},
      {"seed_base", spec.seed_base},
      {"p_d_values", p_ds},
      {"so_sweeps", d.so_sweeps},
      {"gate", d.gate},
      {"d_t", detail::resolve_d_t(spec.d_t, kind, false)},
      {"top_k", d.top_k},
      {"gospa", {{"c", spec.gospa.c}, {"p", spec.gospa.p}, {"alpha", spec.gospa.alpha}}}};
  if (spec.on_params) spec.on_params(meta);

  const std::size_t n_tasks = p_ds.size() * static_cast<std::size_t>(spec.trials);
  std::vector<std::vector<ResultRow>> slots(n_tasks);
  std::vector<std::vector<nlohmann::json>> fail_slots(n_tasks);

  parallel_for(n_tasks, worker_count(spec.workers), [&](std::size_t task) {
    const std::size_t pi = task / static_cast<std::size_t>(spec.trials);
    const int trial = static_cast<int>(task % static_cast<std::size_t>(spec.trials));
    const double p_d = p_ds[pi];
    sim::McConfig mc = d.base;
    mc.p_d_true = p_d;
    mc.seed = spec.seed_base + static_cast<std::uint64_t>(trial);
    const ScenarioFrame frame = sim::gen_mc_frame(mc);
    const std::vector<Eigen::Vector2d> truths = frame.truth_positions();

    auto base_row = [&](Algorithm a) {
      ResultRow r;
      r.scenario = spec.scenario;
      r.seed = mc.seed;
      r.trial = trial;
      r.algorithm = to_string(a);
      r.likelihood = to_string(kind);
      r.p_d = p_d;
      r.sigma = spec.sigma;
      r.n_tracks = static_cast<int>(frame.tracks.size());
      r.n_truth = static_cast<int>(frame.truth.size());
      return r;
    };

    std::vector<ResultRow>& rows = slots[task];
    const JointAssociation gt = ground_truth_association(frame.tracks);
    const GospaResult gt_gospa = evaluate_association(gt, frame.tracks, truths, spec.gospa);
    {
      ResultRow r = base_row(Algorithm::kSo);
      r.algorithm = "ground_truth";
      r.likelihood = "";
      r.gospa = gt_gospa;
      r.rel_gospa = 1.0;
      rows.push_back(std::move(r));
    }

    for (Algorithm a : algorithms) {
      if (a == Algorithm::kOracle &&
          static_cast<int>(frame.tracks.size()) > spec.oracle_cap)
        continue;
      try {
        const double d_t = detail::resolve_d_t(spec.d_t, kind, false);
        const detail::AlgoOutput out = detail::run_algorithm(
            a, frame, kind, DetectionModel::fixed(p_d), d.so_sweeps, d.gate, d_t,
            derive_seed(mc.seed, detail::stream_id(a, static_cast<int>(pi))), spec.oracle_cap);
        ResultRow r = base_row(a);
        r.gospa = evaluate_association(out.assoc, frame.tracks, truths, spec.gospa);
        r.log_lik = out.log_lik;
        if (gt_gospa.total > 0.0) r.rel_gospa = r.gospa.total / gt_gospa.total;
        if (out.hypotheses && !out.hypotheses->empty()) {
          r.sweeps = d.so_sweeps;
          r.top_k = d.top_k;
          double lo = std::numeric_limits<double>::infinity();
          double hi = -std::numeric_limits<double>::infinity();
          for (const HypothesisSet::Entry& e :
               out.hypotheses->top_k(static_cast<std::size_t>(d.top_k))) {
            const double g = evaluate_association(e.assoc, frame.tracks, truths, spec.gospa).total;
            lo = std::min(lo, g);
            hi = std::max(hi, g);
          }
          r.topk_gospa_min = lo;
          r.topk_gospa_max = hi;
        }
        rows.push_back(std::move(r));
      } catch (const std::exception& e) {
        fail_slots[task].push_back(
            detail::failure_entry(spec.scenario, mc.seed, to_string(a), e.what()));
      }
    }
  });

  ExperimentResult result;
  for (std::vector<ResultRow>& s : slots)
    for (ResultRow& r : s) result.rows.push_back(std::move(r));
  for (std::vector<nlohmann::json>& s : fail_slots)
    for (nlohmann::json& f : s) result.failures.push_back(std::move(f));
  meta["rows"] = result.rows.size();
  result.meta = std::move(meta);
  return result;
}

// ---- convergence study ----

/// One long SO run per trial; the best-so-far association after the first
/// N*N_T samples plays the role of a run stopped at N sweeps, so the whole
/// grid shares one sampling stream. Baselines are constant in N and appear
/// once per trial with sweeps blank.
inline ExperimentResult run_convergence(const ExperimentSpec& spec) {
  ExperimentSpec s = spec;
  if (s.scenario.empty()) s.scenario = "mc_big";
  detail::McDerived d = detail::mc_defaults(s);
  std::vector<int> grid = s.sweep_grid;
  if (grid.empty()) grid = {1, 2, 5, 10, 20, 50, 100, 200, 300, 400};
  for (int n : grid)
    if (n < 1) throw std::invalid_argument("sweep grid values must be >= 1");
  std::sort(grid.begin(), grid.end());
  const int max_n = grid.back();
  const double p_d = s.p_d_values.empty() ? 0.8 : s.p_d_values.front();
  if (s.trials < 1) throw std::invalid_argument("trials must be >= 1");
  const SpatialLikelihoodKind kind = SpatialLikelihoodKind::kProposed;
  const double d_t = detail::resolve_d_t(s.d_t, kind, false);

  nlohmann::json meta = {{"verb", "converge"}, {"scenario", s.scenario},  {"sigma", s.sigma},
                         {"p_d", p_d},         {"trials", s.trials},      {"seed_base", s.seed_base},
                         {"sweep_grid", grid}, {"gate", d.gate},          {"d_t", d_t}};
  if (s.on_params) s.on_params(meta);

  const std::size_t n_tasks = static_cast<std::size_t>(s.trials);
  std::vector<std::vector<ResultRow>> slots(n_tasks);
  std::vector<std::vector<nlohmann::json>> fail_slots(n_tasks);
  std::mutex dump_mutex;
  nlohmann::json dump;

  parallel_for(n_tasks, worker_count(s.workers), [&](std::size_t task) {
    const int trial = static_cast<int>(task);
    sim::McConfig mc = d.base;
    mc.p_d_true = p_d;
    mc.seed = s.seed_base + static_cast<std::uint64_t>(trial);
    const ScenarioFrame frame = sim::gen_mc_frame(mc);
    const std::vector<Eigen::Vector2d> truths = frame.truth_positions();
    const std::size_t n_tracks = frame.tracks.size();

    auto base_row = [&](const char* algorithm) {
      ResultRow r;
      r.scenario = s.scenario;
      r.seed = mc.seed;
      r.trial = trial;
      r.algorithm = algorithm;
      r.likelihood = to_string(kind);
      r.p_d = p_d;
      r.sigma = s.sigma;
      r.n_tracks = static_cast<int>(n_tracks);
      r.n_truth = static_cast<int>(frame.truth.size());
      return r;
    };

    std::vector<ResultRow>& rows = slots[task];
    const GospaResult gt_gospa = evaluate_association(ground_truth_association(frame.tracks),
                                                      frame.tracks, truths, s.gospa);
    {
      ResultRow r = base_row("ground_truth");
      r.likelihood = "";
      r.gospa = gt_gospa;
      r.rel_gospa = 1.0;
      rows.push_back(std::move(r));
    }
    const double gt_total = gt_gospa.total;
    auto relative = [&](double total) {
      return gt_total > 0.0 ? total / gt_total : std::nan("");
    };

    for (Algorithm a :
         {Algorithm::kGreedyMerge, Algorithm::kGreedyNoMerge, Algorithm::kSensorwise}) {
      try {
        const detail::AlgoOutput out = detail::run_algorithm(
            a, frame, kind, DetectionModel::fixed(p_d), 0, d.gate, d_t, 0, s.oracle_cap);
        ResultRow r = base_row(to_string(a));
        r.gospa = evaluate_association(out.assoc, frame.tracks, truths, s.gospa);
        r.rel_gospa = relative(r.gospa.total);
        rows.push_back(std::move(r));
      } catch (const std::exception& e) {
        fail_slots[task].push_back(
            detail::failure_entry(s.scenario, mc.seed, to_string(a), e.what()));
      }
    }

    try {
      SoConfig cfg;
      cfg.n_sweeps = max_n;
      cfg.gate = d.gate;
      cfg.detection = DetectionModel::fixed(p_d);
      cfg.kind = kind;
      cfg.seed = derive_seed(mc.seed, detail::stream_id(Algorithm::kSo));
      const HypothesisSet h = so_run(frame.tracks, frame.sensors, cfg);
      for (int n : grid) {
        ResultRow r = base_row("so");
        r.sweeps = n;
        if (h.empty()) {
          r.has_gospa = false;
          rows.push_back(std::move(r));
          continue;
        }
        const HypothesisSet::Entry& best =
            h.best_prefix(static_cast<std::size_t>(n) * n_tracks);
        r.gospa = evaluate_association(best.assoc, frame.tracks, truths, s.gospa);
        r.log_lik = best.log_lik;
        r.rel_gospa = relative(r.gospa.total);
        rows.push_back(std::move(r));
      }
      if (!s.dump_hypotheses.empty() && trial == 0) {
        std::lock_guard<std::mutex> lock(dump_mutex);
        dump = hypotheses_to_json(h);
      }
    } catch (const std::exception& e) {
      fail_slots[task].push_back(detail::failure_entry(s.scenario, mc.seed, "so", e.what()));
    }
  });

  if (!s.dump_hypotheses.empty()) {
    std::ofstream out(s.dump_hypotheses, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + s.dump_hypotheses);
    out << dump.dump() << '\n';
  }

  ExperimentResult result;
  for (std::vector<ResultRow>& rows : slots)
    for (ResultRow& r : rows) result.rows.push_back(std::move(r));
  for (std::vector<nlohmann::json>& s2 : fail_slots)
    for (nlohmann::json& f : s2) result.failures.push_back(std::move(f));
  meta["rows"] = result.rows.size();
  result.meta = std::move(meta);
  return result;
}

// ---- collective perception experiment ----

/// Runs the scripted scenario once, then associates and scores every frame
/// with each requested algorithm. Mean per-object GOSPA over frames is the
/// headline number; rows carry raw GOSPA plus n_truth so any aggregation can
/// be done offline.
inline ExperimentResult run_cp_experiment(const ExperimentSpec& spec) {
  if (spec.script_path.empty()) throw std::invalid_argument("cp runs need a scenario script");
  sim::CpScript script = sim::load_script(spec.script_path);
  if (spec.comm_mode) {
    script.comm = *spec.comm_mode == sim::CommMode::kFull ? sim::CommConfig::full()
                                                          : sim::CommConfig::etsi();
  }
  if (spec.loss >= 0.0) script.comm.loss = spec.loss;
  if (spec.latency >= 0.0) script.comm.latency = spec.latency;
  if (spec.mpr >= 0.0) script.mpr = spec.mpr;

  std::vector<Algorithm> algorithms = spec.algorithms;
  if (algorithms.empty())
    algorithms = {Algorithm::kSoDs, Algorithm::kSoC, Algorithm::kGreedyMerge,
                  Algorithm::kGreedyNoMerge, Algorithm::kSensorwise};
  for (Algorithm a : algorithms)
    if (a == Algorithm::kSo)
      throw std::invalid_argument("cp runs use so_ds or so_c (detection strategy must be chosen)");

  const SpatialLikelihoodKind kind = SpatialLikelihoodKind::kProposed;
  const int so_sweeps = spec.so_sweeps > 0 ? spec.so_sweeps : 50;
  const double gate = spec.gate > 0.0 ? spec.gate : 15.0;
  const double d_t = detail::resolve_d_t(spec.d_t, kind, true);

  nlohmann::json meta = {{"verb", "cp"},
                         {"scenario", script.name},
                         {"script", spec.script_path},
                         {"comm", sim::to_string(script.comm.mode)},
                         {"mpr", script.mpr},
                         {"loss", script.comm.loss},
                         {"latency", script.comm.latency},
                         {"seed_base", spec.seed_base},
                         {"so_sweeps", so_sweeps},
                         {"gate", gate},
                         {"d_t", d_t}};
  if (spec.on_params) spec.on_params(meta);

  const sim::CpRunResult run = sim::run_cp_scenario(script, spec.seed_base);
  const std::size_t n_frames = run.frames.size();
  std::vector<std::vector<ResultRow>> slots(n_frames);
  std::vector<std::vector<nlohmann::json>> fail_slots(n_frames);

  parallel_for(n_frames, worker_count(spec.workers), [&](std::size_t fi) {
    const ScenarioFrame& frame = run.frames[fi];
    const std::vector<Eigen::Vector2d> truths = frame.truth_positions();

    auto base_row = [&](const std::string& algorithm) {
      ResultRow r;
      r.scenario = script.name;
      r.seed = spec.seed_base;
      r.trial = 0;
      r.frame = static_cast<int>(fi);
      r.algorithm = algorithm;
      r.likelihood = to_string(kind);
      r.comm = sim::to_string(script.comm.mode);
      r.mpr = script.mpr;
      r.n_tracks = static_cast<int>(frame.tracks.size());
      r.n_truth = static_cast<int>(frame.truth.size());
      return r;
    };

    std::vector<ResultRow>& rows = slots[fi];
    const GospaResult gt_gospa = evaluate_association(ground_truth_association(frame.tracks),
                                                      frame.tracks, truths, spec.gospa);
    {
      ResultRow r = base_row("ground_truth");
      r.likelihood = "";
      r.gospa = gt_gospa;
      r.rel_gospa = 1.0;
      rows.push_back(std::move(r));
    }

    for (Algorithm a : algorithms) {
      try {
        DetectionModel model = DetectionModel::fixed(0.9);
        if (a == Algorithm::kSoC || a == Algorithm::kOracle)
          model = DetectionModel::estimated_constant(0.25);
        if (a == Algorithm::kSoDs) model = DetectionModel::distance_based();
        const detail::AlgoOutput out = detail::run_algorithm(
            a, frame, kind, model, so_sweeps, gate, d_t,
            derive_seed(spec.seed_base, detail::stream_id(a, static_cast<int>(fi))),
            spec.oracle_cap);
        ResultRow r = base_row(to_string(a));
        if (a == Algorithm::kSoC || a == Algorithm::kSoDs) r.sweeps = so_sweeps;
        r.gospa = evaluate_association(out.assoc, frame.tracks, truths, spec.gospa);
        r.log_lik = out.log_lik;
        if (gt_gospa.total > 0.0) r.rel_gospa = r.gospa.total / gt_gospa.total;
        rows.push_back(std::move(r));
      } catch (const std::exception& e) {
        fail_slots[fi].push_back(
            detail::failure_entry(script.name, spec.seed_base, to_string(a), e.what()));
      }
    }
  });

  ExperimentResult result;
  for (std::vector<ResultRow>& rows : slots)
    for (ResultRow& r : rows) result.rows.push_back(std::move(r));
  for (std::vector<nlohmann::json>& s2 : fail_slots)
    for (nlohmann::json& f : s2) result.failures.push_back(std::move(f));
  meta["frames"] = n_frames;
  meta["cpms_sent"] = run.stats.cpms_sent;
  meta["cpms_lost"] = run.stats.cpms_lost;
  meta["track_payloads"] = run.stats.track_payloads;
  meta["rows"] = result.rows.size();
  result.meta = std::move(meta);
  return result;
}

// ---- likelihood ablation ----

/// Grid over algorithms x likelihood kinds on the small MC scenario.
/// Combinations of a joint-likelihood optimizer with the euclidean pairwise
/// score are skipped; a request that leaves nothing to run is an error.
inline ExperimentResult run_likelihood_ablation(const ExperimentSpec& spec) {
  ExperimentSpec s = spec;
  if (s.scenario.empty()) s.scenario = "mc_small";
  detail::McDerived d = detail::mc_defaults(s);
  std::vector<Algorithm> algorithms = s.algorithms;
  if (algorithms.empty())
    algorithms = {Algorithm::kSo, Algorithm::kGreedyMerge, Algorithm::kGreedyNoMerge,
                  Algorithm::kSensorwise};
  std::vector<SpatialLikelihoodKind> kinds = s.kinds;
  if (kinds.empty())
    kinds = {SpatialLikelihoodKind::kProposed, SpatialLikelihoodKind::kGeneralized,
             SpatialLikelihoodKind::kEuclidean};
  std::vector<double> p_ds = s.p_d_values;
  if (p_ds.empty()) p_ds = {0.5, 0.9};

  struct Combo {
    Algorithm algo;
    SpatialLikelihoodKind kind;
  };
  std::vector<Combo> combos;
  for (Algorithm a : algorithms)
    for (SpatialLikelihoodKind k : kinds) {
      const bool joint = a == Algorithm::kSo || a == Algorithm::kSoC || a == Algorithm::kSoDs ||
                         a == Algorithm::kOracle;
      if (joint && k == SpatialLikelihoodKind::kEuclidean) continue;
      combos.push_back({a, k});
    }
  if (combos.empty())
    throw std::invalid_argument(
        "nothing to run: SO and the oracle need a density likelihood, euclidean is pairwise-only");

  nlohmann::json meta = {{"verb", "ablate"},         {"scenario", s.scenario},
                         {"sigma", s.sigma},         {"trials", s.trials},
                         {"seed_base", s.seed_base}, {"p_d_values", p_ds},
                         {"so_sweeps", d.so_sweeps}, {"gate", d.gate},
                         {"combos", combos.size()}};
  if (s.on_params) s.on_params(meta);

  const std::size_t n_tasks = p_ds.size() * static_cast<std::size_t>(s.trials);
  std::vector<std::vector<ResultRow>> slots(n_tasks);
  std::vector<std::vector<nlohmann::json>> fail_slots(n_tasks);

  parallel_for(n_tasks, worker_count(s.workers), [&](std::size_t task) {
    const std::size_t pi = task / static_cast<std::size_t>(s.trials);
    const int trial = static_cast<int>(task % static_cast<std::size_t>(s.trials));
    const double p_d = p_ds[pi];
    sim::McConfig mc = d.base;
    mc.p_d_true = p_d;
    mc.seed = s.seed_base + static_cast<std::uint64_t>(trial);
    const ScenarioFrame frame = sim::gen_mc_frame(mc);
    const std::vector<Eigen::Vector2d> truths = frame.truth_positions();
    std::vector<ResultRow>& rows = slots[task];

    const GospaResult gt_gospa = evaluate_association(ground_truth_association(frame.tracks),
                                                      frame.tracks, truths, s.gospa);
    ResultRow gt_row;
    gt_row.scenario = s.scenario;
    gt_row.seed = mc.seed;
    gt_row.trial = trial;
    gt_row.algorithm = "ground_truth";
    gt_row.p_d = p_d;
    gt_row.sigma = s.sigma;
    gt_row.n_tracks = static_cast<int>(frame.tracks.size());
    gt_row.n_truth = static_cast<int>(frame.truth.size());
    gt_row.gospa = gt_gospa;
    gt_row.rel_gospa = 1.0;
    rows.push_back(gt_row);

    for (std::size_t ci = 0; ci < combos.size(); ++ci) {
      const auto [a, k] = combos[ci];
      try {
        const double d_t = detail::resolve_d_t(s.d_t, k, false);
        const detail::AlgoOutput out = detail::run_algorithm(
            a, frame, k, DetectionModel::fixed(p_d), d.so_sweeps, d.gate, d_t,
            derive_seed(mc.seed, detail::stream_id(a, static_cast<int>(pi * 37 + ci))),
            s.oracle_cap);
        ResultRow r = gt_row;
        r.algorithm = to_string(a);
        r.likelihood = to_string(k);
        r.gospa = evaluate_association(out.assoc, frame.tracks, truths, s.gospa);
        r.log_lik = out.log_lik;
        r.rel_gospa = gt_gospa.total > 0.0 ? r.gospa.total / gt_gospa.total : std::nan("");
        if (a == Algorithm::kSo) r.sweeps = d.so_sweeps;
        r.topk_gospa_min = std::nan("");
        r.topk_gospa_max = std::nan("");
        rows.push_back(std::move(r));
      } catch (const std::exception& e) {
        fail_slots[task].push_back(
            detail::failure_entry(s.scenario, mc.seed, to_string(a), e.what()));
      }
    }
  });

  ExperimentResult result;
  for (std::vector<ResultRow>& rows : slots)
    for (ResultRow& r : rows) result.rows.push_back(std::move(r));
  for (std::vector<nlohmann::json>& s2 : fail_slots)
    for (nlohmann::json& f : s2) result.failures.push_back(std::move(f));
  meta["rows"] = result.rows.size();
  result.meta = std::move(meta);
  return result;
}

// ---- oracle agreement study ----

/// Seeded small instances (resampled until 2..max_tracks tracks) solved by
/// the brute-force oracle, SO, and greedy(merge); rows carry per-instance
/// optimality flags. Used by the oracle-check CLI verb and the acceptance
/// gate.
inline ExperimentResult run_oracle_check(const ExperimentSpec& spec) {
  const int instances = spec.trials;
  if (instances < 1) throw std::invalid_argument("need at least one instance");
  const int so_sweeps = spec.so_sweeps > 0 ? spec.so_sweeps : 500;
  const int max_tracks = 8;
  sim::McConfig base;
  base.area = 10.0;
  base.n_objects = 4;
  base.n_sensors = 3;
  base.sigma = spec.sigma;
  base.p_d_true = 0.7;
  const SpatialLikelihoodKind kind = SpatialLikelihoodKind::kProposed;
  const double d_t = detail::resolve_d_t(spec.d_t, kind, false);
  const double gate = spec.gate > 0.0 ? spec.gate : 6.0 * base.sigma;

  nlohmann::json meta = {{"verb", "oracle-check"},    {"instances", instances},
                         {"seed_base", spec.seed_base}, {"so_sweeps", so_sweeps},
                         {"sigma", base.sigma},       {"d_t", d_t},
                         {"gate", gate}};
  if (spec.on_params) spec.on_params(meta);

  const std::size_t n_tasks = static_cast<std::size_t>(instances);
  std::vector<std::vector<ResultRow>> slots(n_tasks);
  std::vector<std::vector<nlohmann::json>> fail_slots(n_tasks);
  std::vector<int> so_hits(n_tasks, 0), greedy_hits(n_tasks, 0);

  parallel_for(n_tasks, worker_count(spec.workers), [&](std::size_t task) {
    try {
      sim::McConfig mc = base;
      ScenarioFrame frame;
      std::uint64_t seed = 0;
      for (int attempt = 0;; ++attempt) {
        seed = derive_seed(spec.seed_base + task, static_cast<std::uint64_t>(attempt));
        mc.seed = seed;
        frame = sim::gen_mc_frame(mc);
        const int n = static_cast<int>(frame.tracks.size());
        if (n >= 2 && n <= max_tracks) break;
        if (attempt > 1000) throw std::runtime_error("cannot sample a small instance");
      }
      const DetectionModel model = DetectionModel::fixed(mc.p_d_true);
      const BruteForceResult oracle =
          brute_force_optimal(frame.tracks, frame.sensors, model, kind, max_tracks);

      SoConfig cfg;
      cfg.n_sweeps = so_sweeps;
      cfg.gate = gate;
      cfg.detection = model;
      cfg.kind = kind;
      cfg.seed = derive_seed(seed, detail::stream_id(Algorithm::kSo));
      const HypothesisSet h = so_run(frame.tracks, frame.sensors, cfg);
      const HypothesisSet::Entry& so_best_entry = h.best();
      const JointAssociation greedy_assoc = greedy(frame.tracks, kind, d_t, true);
      const double greedy_ll =
          log_joint_lik(greedy_assoc, frame.tracks, frame.sensors, model, kind);

      auto optimal = [&](const JointAssociation& assoc, double ll) {
        return assoc == oracle.assoc || ll >= oracle.log_lik - 1e-9;
      };
      const bool so_opt = optimal(so_best_entry.assoc, so_best_entry.log_lik);
      const bool greedy_opt = optimal(greedy_assoc, greedy_ll);
      so_hits[task] = so_opt ? 1 : 0;
      greedy_hits[task] = greedy_opt ? 1 : 0;

      auto make_row = [&](const char* algorithm, double ll, int opt) {
        ResultRow r;
        r.scenario = "oracle_small";
        r.seed = seed;
        r.trial = static_cast<int>(task);
        r.algorithm = algorithm;
        r.likelihood = to_string(kind);
        r.p_d = mc.p_d_true;
        r.sigma = mc.sigma;
        r.n_tracks = static_cast<int>(frame.tracks.size());
        r.n_truth = static_cast<int>(frame.truth.size());
        r.has_gospa = false;
        r.log_lik = ll;
        r.optimal = opt;
        return r;
      };
      std::vector<ResultRow>& rows = slots[task];
      rows.push_back(make_row("oracle", oracle.log_lik, 1));
      ResultRow so_row = make_row("so", so_best_entry.log_lik, so_opt ? 1 : 0);
      so_row.sweeps = so_sweeps;
      rows.push_back(std::move(so_row));
      rows.push_back(make_row("greedy_merge", greedy_ll, greedy_opt ? 1 : 0));
    } catch (const std::exception& e) {
      fail_slots[task].push_back(detail::failure_entry(
          "oracle_small", spec.seed_base + task, "oracle", e.what()));
    }
  });

  ExperimentResult result;
  for (std::vector<ResultRow>& rows : slots)
    for (ResultRow& r : rows) result.rows.push_back(std::move(r));
  for (std::vector<nlohmann::json>& s2 : fail_slots)
    for (nlohmann::json& f : s2) result.failures.push_back(std::move(f));
  int so_total = 0, greedy_total = 0;
  for (std::size_t i = 0; i < n_tasks; ++i) {
    so_total += so_hits[i];
    greedy_total += greedy_hits[i];
  }
  meta["so_optimal"] = so_total;
  meta["greedy_merge_optimal"] = greedy_total;
  meta["rows"] = result.rows.size();
  result.meta = std::move(meta);
  return result;
}

}  // namespace t2ta
