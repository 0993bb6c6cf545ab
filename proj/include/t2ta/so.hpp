#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "t2ta/core.hpp"
#include "t2ta/detection.hpp"
#include "t2ta/likelihood.hpp"
#include "t2ta/rng.hpp"

namespace t2ta {

struct SoConfig {
  int n_sweeps = 100;
  /// Clusters farther than this from the current track are not offered as
  /// move/merge targets. Infinity disables gating.
  double gate = std::numeric_limits<double>::infinity();
  DetectionModel detection = DetectionModel::fixed(0.9);
  SpatialLikelihoodKind kind = SpatialLikelihoodKind::kProposed;
  std::uint64_t seed = 1;
  /// Starting association; all-singletons when absent.
  std::optional<JointAssociation> init;
};

struct Action {
  enum class Kind { kRemain, kSplit, kMove, kMerge };
  Kind kind = Kind::kRemain;
  int cluster = 0;  ///< internal target cluster id for kMove/kMerge
};

/// Per-track action menu. Entries align; impossible actions carry weight
/// -inf rather than being dropped, mirroring the full action vector
/// [r, s, m_1..m_|C|, M_1..M_|C|].
struct ActionSet {
  std::vector<Action> actions;
  std::vector<double> log_weights;
};

/// Every association visited by one optimizer run, one sample per action.
/// Distinct associations are deduplicated by canonical form; per entry the
/// best log likelihood, first sample index and visit count are kept.
class HypothesisSet {
 public:
  struct Entry {
    JointAssociation assoc;
    double log_lik = kNegInf;
    std::size_t first_index = 0;
    std::size_t visits = 0;
  };

  void record(JointAssociation canonical, double log_lik) {
    auto [it, inserted] = index_.try_emplace(canonical.assignment, entries_.size());
    if (inserted) {
      entries_.push_back(Entry{std::move(canonical), log_lik, samples_.size(), 1});
    } else {
      Entry& e = entries_[it->second];
      ++e.visits;
      e.log_lik = std::max(e.log_lik, log_lik);
    }
    samples_.emplace_back(it->second, log_lik);
    if (best_ == npos || log_lik > samples_[best_].second) best_ = samples_.size() - 1;
  }

  std::size_t n_samples() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }
  const std::vector<Entry>& distinct() const { return entries_; }

  /// Association index and log likelihood of the i-th sample.
  std::pair<std::size_t, double> sample(std::size_t i) const { return samples_.at(i); }
  const Entry& entry(std::size_t idx) const { return entries_.at(idx); }

  /// Best-likelihood association; the earliest sample wins ties.
  const Entry& best() const {
    if (best_ == npos) throw std::out_of_range("hypothesis set is empty");
    return entries_[samples_[best_].first];
  }

  /// Best association among the first n samples, as if the run had stopped
  /// there. Used for convergence-over-budget studies.
  const Entry& best_prefix(std::size_t n) const {
    if (n == 0 || empty()) throw std::out_of_range("empty sample prefix");
    n = std::min(n, samples_.size());
    std::size_t arg = 0;
    for (std::size_t i = 1; i < n; ++i)
      if (samples_[i].second > samples_[arg].second) arg = i;
    return entries_[samples_[arg].first];
  }

  /// The k best distinct associations, descending log likelihood; ties by
  /// first appearance. Returns fewer when fewer exist.
  std::vector<Entry> top_k(std::size_t k) const {
    std::vector<const Entry*> ptrs;
    ptrs.reserve(entries_.size());
    for (const Entry& e : entries_) ptrs.push_back(&e);
    std::sort(ptrs.begin(), ptrs.end(), [](const Entry* a, const Entry* b) {
      if (a->log_lik != b->log_lik) return a->log_lik > b->log_lik;
      return a->first_index < b->first_index;
    });
    if (ptrs.size() > k) ptrs.resize(k);
    std::vector<Entry> out;
    out.reserve(ptrs.size());
    for (const Entry* p : ptrs) out.push_back(*p);
    return out;
  }

  std::size_t visits(const JointAssociation& canonical) const {
    auto it = index_.find(canonical.assignment);
    return it == index_.end() ? 0 : entries_[it->second].visits;
  }

 private:
  struct VecHash {
    std::size_t operator()(const std::vector<int>& v) const {
      std::uint64_t h = 0xcbf29ce484222325ULL;
      for (int x : v) {
        h ^= static_cast<std::uint64_t>(static_cast<std::uint32_t>(x));
        h *= 0x100000001b3ULL;
      }
      return static_cast<std::size_t>(h);
    }
  };
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  std::vector<Entry> entries_;
  std::vector<std::pair<std::size_t, double>> samples_;  // (entry index, log lik)
  std::unordered_map<std::vector<int>, std::size_t, VecHash> index_;
  std::size_t best_ = npos;
};

/// Mutable association state of the stochastic optimizer. Exposed so the
/// action-weight bookkeeping can be exercised directly: the log weight of
/// any possible action equals the realized change in log joint likelihood.
class SoState {
 public:
  /// Borrows `tracks` and `sensors`; both must outlive the state. Temporaries
  /// are rejected so the borrow cannot dangle.
  SoState(std::vector<Track>&&, const std::vector<SensorInfo>&, const SoConfig&) = delete;
  SoState(const std::vector<Track>&, std::vector<SensorInfo>&&, const SoConfig&) = delete;

  SoState(const std::vector<Track>& tracks, const std::vector<SensorInfo>& sensors,
          const SoConfig& config)
      : tracks_(&tracks), sensors_(&sensors), config_(config),
        stats_(FrameStats::compute(tracks, sensors)) {
    if (config.kind == SpatialLikelihoodKind::kEuclidean)
      throw std::invalid_argument("the euclidean score has no joint likelihood; use a density kind");
    const int n = static_cast<int>(tracks.size());
    std::vector<int> theta(static_cast<std::size_t>(n));
    if (config.init) {
      if (config.init->size() != tracks.size())
        throw std::invalid_argument("initial association length does not match track count");
      theta = canonicalize(*config.init).assignment;
    } else {
      for (int t = 1; t <= n; ++t) theta[static_cast<std::size_t>(t) - 1] = t;
    }
    theta_ = theta;
    next_id_ = 1;
    for (int c : theta_) next_id_ = std::max(next_id_, c + 1);
    std::map<int, std::vector<int>> members;
    for (int t = 1; t <= n; ++t) members[theta_[static_cast<std::size_t>(t) - 1]].push_back(t);
    for (auto& [id, m] : members) clusters_.emplace(id, make_stat(m));
    singleton_ll_.resize(tracks.size());
    for (int t = 1; t <= n; ++t) {
      const int m[1] = {t};
      singleton_ll_[static_cast<std::size_t>(t) - 1] = make_stat(std::vector<int>(m, m + 1)).log_lik;
    }
  }

  const std::vector<int>& theta() const { return theta_; }
  JointAssociation canonical() const { return canonicalize(theta_); }
  std::size_t n_clusters() const { return clusters_.size(); }

  /// Sum of cached cluster log likelihoods, ascending cluster id.
  double log_joint() const {
    double total = 0.0;
    for (const auto& [id, stat] : clusters_) total += stat.log_lik;
    return total;
  }

  /// Action menu for track t (1-based): remain, split, then one move and one
  /// merge per cluster in ascending id order. Gating and the sensor
  /// constraint zero out (log weight -inf) inadmissible targets.
  ActionSet action_weights(int t) const {
    const std::size_t ti = check_track(t);
    const int home_id = theta_[ti];
    const ClusterStat& home = clusters_.at(home_id);
    const double ll_home = home.log_lik;
    const double ll_single = singleton_ll_[ti];
    // Likelihood of the home cluster with t removed; an emptied cluster
    // contributes log 1 = 0.
    const double ll_rest = home.members.size() > 1 ? make_stat(without(home.members, t)).log_lik : 0.0;

    ActionSet out;
    out.actions.push_back({Action::Kind::kRemain, 0});
    out.log_weights.push_back(0.0);

    out.actions.push_back({Action::Kind::kSplit, 0});
    out.log_weights.push_back(home.members.size() > 1 ? ll_single + ll_rest - ll_home : kNegInf);

    const Eigen::Vector2d pos = (*tracks_)[ti].position();
    const int sensor = (*tracks_)[ti].sensor;
    for (const auto& [id, stat] : clusters_) {
      double move = kNegInf;
      if (id != home_id && (stat.fused_mean - pos).norm() <= config_.gate &&
          std::find(stat.sensors.begin(), stat.sensors.end(), sensor) == stat.sensors.end()) {
        move = make_stat(with(stat.members, t)).log_lik + ll_rest - stat.log_lik - ll_home;
      }
      out.actions.push_back({Action::Kind::kMove, id});
      out.log_weights.push_back(move);
    }
    for (const auto& [id, stat] : clusters_) {
      double mrg = kNegInf;
      if (id != home_id && (stat.fused_mean - pos).norm() <= config_.gate &&
          disjoint(stat.sensors, home.sensors)) {
        mrg = make_stat(unite(stat.members, home.members)).log_lik - stat.log_lik - ll_home;
      }
      out.actions.push_back({Action::Kind::kMerge, id});
      out.log_weights.push_back(mrg);
    }
    return out;
  }

  /// Applies one action for track t. The caller must pass an admissible
  /// action (finite log weight); kRemain is always admissible.
  void apply(int t, const Action& action) {
    const std::size_t ti = check_track(t);
    const int home_id = theta_[ti];
    switch (action.kind) {
      case Action::Kind::kRemain:
        return;
      case Action::Kind::kSplit: {
        shrink_home(home_id, t);
        const int fresh = next_id_++;
        clusters_.emplace(fresh, make_stat({t}));
        theta_[ti] = fresh;
        return;
      }
      case Action::Kind::kMove: {
        ClusterStat& target = clusters_.at(action.cluster);
        target = make_stat(with(target.members, t));
        shrink_home(home_id, t);
        theta_[ti] = action.cluster;
        return;
      }
      case Action::Kind::kMerge: {
        ClusterStat& target = clusters_.at(action.cluster);
        const std::vector<int> moving = clusters_.at(home_id).members;
        target = make_stat(unite(target.members, moving));
        clusters_.erase(home_id);
        for (int m : moving) theta_[static_cast<std::size_t>(m) - 1] = action.cluster;
        return;
      }
    }
  }

  /// Samples an action index proportionally to the weights; entries more
  /// than 300 orders of magnitude below the maximum are treated as zero.
  static std::size_t sample_action(const ActionSet& set, Rng& rng) {
    constexpr double kLogFloor = -690.77552789821368;  // log(1e-300)
    double mx = kNegInf;
    for (double lw : set.log_weights) mx = std::max(mx, lw);
    std::vector<double> cum(set.log_weights.size());
    double total = 0.0;
    for (std::size_t i = 0; i < set.log_weights.size(); ++i) {
      const double rel = set.log_weights[i] - mx;
      total += rel >= kLogFloor ? std::exp(rel) : 0.0;
      cum[i] = total;
    }
    const double u = rng.uniform() * total;
    for (std::size_t i = 0; i < cum.size(); ++i)
      if (u < cum[i]) return i;
    return cum.size() - 1;
  }

 private:
  std::size_t check_track(int t) const {
    if (t < 1 || static_cast<std::size_t>(t) > tracks_->size())
      throw std::invalid_argument("track id out of range");
    return static_cast<std::size_t>(t) - 1;
  }

  ClusterStat make_stat(const std::vector<int>& members) const {
    return make_cluster_stat(*tracks_, members, *sensors_, config_.detection, config_.kind, &stats_);
  }

  void shrink_home(int home_id, int t) {
    ClusterStat& home = clusters_.at(home_id);
    if (home.members.size() == 1) {
      clusters_.erase(home_id);
    } else {
      home = make_stat(without(home.members, t));
    }
  }

  static std::vector<int> without(const std::vector<int>& v, int x) {
    std::vector<int> out;
    out.reserve(v.size() - 1);
    for (int m : v)
      if (m != x) out.push_back(m);
    return out;
  }
  static std::vector<int> with(const std::vector<int>& v, int x) {
    std::vector<int> out = v;
    out.push_back(x);
    return out;
  }
  static std::vector<int> unite(const std::vector<int>& a, const std::vector<int>& b) {
    std::vector<int> out = a;
    out.insert(out.end(), b.begin(), b.end());
    return out;
  }
  static bool disjoint(const std::vector<int>& a, const std::vector<int>& b) {
    for (int x : a)
      if (std::find(b.begin(), b.end(), x) != b.end()) return false;
    return true;
  }

  const std::vector<Track>* tracks_;
  const std::vector<SensorInfo>* sensors_;
  SoConfig config_;
  FrameStats stats_;
  std::vector<int> theta_;
  std::map<int, ClusterStat> clusters_;  // ordered: deterministic action menus
  std::vector<double> singleton_ll_;
  int next_id_ = 1;
};

/// Runs stochastic-optimization association: n_sweeps passes over all
/// tracks, sampling one action per track from the likelihood-ratio weights
/// and recording every visited association. Returns n_sweeps * N_T samples.
inline HypothesisSet so_run(const std::vector<Track>& tracks,
                            const std::vector<SensorInfo>& sensors, const SoConfig& config) {
  for (const Track& t : tracks) validate(t);
  SoState state(tracks, sensors, config);
  HypothesisSet hypotheses;
  Rng rng(config.seed);
  const int n = static_cast<int>(tracks.size());
  for (int sweep = 0; sweep < config.n_sweeps; ++sweep) {
    for (int t = 1; t <= n; ++t) {
      const ActionSet menu = state.action_weights(t);
      const std::size_t pick = SoState::sample_action(menu, rng);
      state.apply(t, menu.actions[pick]);
      hypotheses.record(state.canonical(), state.log_joint());
    }
  }
  return hypotheses;
}

inline const HypothesisSet::Entry& so_best(const HypothesisSet& h) { return h.best(); }

}  // namespace t2ta
