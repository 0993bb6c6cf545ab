#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "t2ta/core.hpp"
#include "t2ta/detection.hpp"
#include "t2ta/hungarian.hpp"
#include "t2ta/likelihood.hpp"

namespace t2ta {

/// Sentinel cost marking an inadmissible pair in the greedy distance matrix.
inline constexpr double kMaxPairCost = 1e12;

/// Pairwise association cost between two tracks: the negated pairwise log
/// spatial likelihood, or the plain euclidean distance for kEuclidean.
inline double pairwise_cost(const Track& a, const Track& b, SpatialLikelihoodKind kind) {
  if (kind == SpatialLikelihoodKind::kEuclidean) return (a.position() - b.position()).norm();
  const std::vector<Track> pair = {a, b};
  const int members[2] = {1, 2};
  return -log_spatial_lik(pair, members, kind);
}

/// Greedy pairwise association (Houenou et al. 2012), optionally with the
/// cluster merging extension. Track pairs are visited in ascending cost
/// order; same-sensor pairs and pairs with cost above d_t are inadmissible.
///
/// merge = false reproduces the original: a pair whose tracks both already
/// sit in multi-track clusters is skipped. merge = true instead merges the
/// two clusters when their sensor sets are disjoint.
inline JointAssociation greedy(const std::vector<Track>& tracks, SpatialLikelihoodKind kind,
                               double d_t, bool merge, double d_m = kMaxPairCost) {
  const int n = static_cast<int>(tracks.size());
  if (n == 0) return JointAssociation{};

  // Live entries sit in the strict lower triangle (i > j); everything else
  // carries the sentinel.
  Eigen::MatrixXd d = Eigen::MatrixXd::Constant(n, n, d_m);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < i; ++j) {
      if (tracks[static_cast<std::size_t>(i)].sensor == tracks[static_cast<std::size_t>(j)].sensor) continue;
      const double c =
          pairwise_cost(tracks[static_cast<std::size_t>(i)], tracks[static_cast<std::size_t>(j)], kind);
      if (c <= d_t) d(i, j) = c;
    }

  std::vector<int> theta(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) theta[static_cast<std::size_t>(i)] = i + 1;
  auto cluster_members = [&](int cid) {
    std::vector<int> out;
    for (int t = 0; t < n; ++t)
      if (theta[static_cast<std::size_t>(t)] == cid) out.push_back(t);
    return out;
  };
  auto cluster_sensors = [&](int cid) {
    std::vector<int> out;
    for (int t = 0; t < n; ++t)
      if (theta[static_cast<std::size_t>(t)] == cid) out.push_back(tracks[static_cast<std::size_t>(t)].sensor);
    return out;
  };
  auto contains = [](const std::vector<int>& v, int x) {
    return std::find(v.begin(), v.end(), x) != v.end();
  };

  while (true) {
    int bi = -1, bj = -1;
    double best = d_m;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < i; ++j)
        if (d(i, j) < best) {
          best = d(i, j);
          bi = i;
          bj = j;
        }
    if (bi < 0) break;

    const int ci = theta[static_cast<std::size_t>(bi)];
    const int cj = theta[static_cast<std::size_t>(bj)];
    const std::vector<int> si = cluster_sensors(ci);
    const std::vector<int> sj = cluster_sensors(cj);
    if (si.size() == 1 && sj.size() == 1) {
      theta[static_cast<std::size_t>(bi)] = cj;
    } else if (si.size() == 1 && !contains(sj, tracks[static_cast<std::size_t>(bi)].sensor)) {
      theta[static_cast<std::size_t>(bi)] = cj;
    } else if (sj.size() == 1 && !contains(si, tracks[static_cast<std::size_t>(bj)].sensor)) {
      theta[static_cast<std::size_t>(bj)] = ci;
    } else if (merge && ci != cj) {
      bool disjoint = true;
      for (int s : si)
        if (contains(sj, s)) {
          disjoint = false;
          break;
        }
      if (disjoint)
        for (int t : cluster_members(ci)) theta[static_cast<std::size_t>(t)] = cj;
    }

    // Invalidation is deliberately one-sided per matrix orientation: row bi
    // against the sensor of t_j, column bj against the sensor of t_i. This
    // always covers (bi, bj) itself, so the loop terminates.
    for (int t = 0; t < n; ++t) {
      if (tracks[static_cast<std::size_t>(t)].sensor == tracks[static_cast<std::size_t>(bj)].sensor)
        d(bi, t) = d_m;
      if (tracks[static_cast<std::size_t>(t)].sensor == tracks[static_cast<std::size_t>(bi)].sensor)
        d(t, bj) = d_m;
    }
  }

  return canonicalize(theta);
}

/// Sensor-wise sequential 2-D assignment baseline. Tracks of the first
/// sensor seed singleton clusters; each following sensor (ascending id) is
/// optimally assigned against the track last added to each cluster, opening
/// a new cluster whenever the matched cost exceeds d_t or no cluster is
/// left. Quality depends on the sensor order; ties in the assignment make
/// the result order-dependent by construction.
inline JointAssociation sensorwise(const std::vector<Track>& tracks, SpatialLikelihoodKind kind,
                                   double d_t) {
  const int n = static_cast<int>(tracks.size());
  if (n == 0) return JointAssociation{};

  std::vector<int> sensor_ids;
  for (const Track& t : tracks) sensor_ids.push_back(t.sensor);
  std::sort(sensor_ids.begin(), sensor_ids.end());
  sensor_ids.erase(std::unique(sensor_ids.begin(), sensor_ids.end()), sensor_ids.end());

  std::vector<int> theta(static_cast<std::size_t>(n), 0);
  std::vector<int> last_added;  // 0-based track index representing each cluster
  int next_cluster = 1;

  for (std::size_t si = 0; si < sensor_ids.size(); ++si) {
    std::vector<int> mine;
    for (int t = 0; t < n; ++t)
      if (tracks[static_cast<std::size_t>(t)].sensor == sensor_ids[si]) mine.push_back(t);
    if (si == 0 || last_added.empty()) {
      for (int t : mine) {
        theta[static_cast<std::size_t>(t)] = next_cluster++;
        last_added.push_back(t);
      }
      continue;
    }
    Eigen::MatrixXd cost(static_cast<int>(mine.size()), static_cast<int>(last_added.size()));
    for (std::size_t r = 0; r < mine.size(); ++r)
      for (std::size_t c = 0; c < last_added.size(); ++c)
        cost(static_cast<int>(r), static_cast<int>(c)) =
            pairwise_cost(tracks[static_cast<std::size_t>(mine[r])],
                          tracks[static_cast<std::size_t>(last_added[c])], kind);
    const std::vector<int> match = hungarian(cost);
    for (std::size_t r = 0; r < mine.size(); ++r) {
      const int t = mine[r];
      const int c = match[r];
      if (c >= 0 && cost(static_cast<int>(r), c) <= d_t) {
        theta[static_cast<std::size_t>(t)] = theta[static_cast<std::size_t>(last_added[static_cast<std::size_t>(c)])];
        last_added[static_cast<std::size_t>(c)] = t;
      } else {
        theta[static_cast<std::size_t>(t)] = next_cluster++;
        last_added.push_back(t);
      }
    }
  }

  return canonicalize(theta);
}

struct BruteForceResult {
  JointAssociation assoc;
  double log_lik = kNegInf;
  std::size_t n_partitions = 0;  ///< sensor-valid partitions enumerated
};

/// Exact maximizer of the joint association likelihood by enumerating every
/// sensor-valid partition (restricted-growth recursion). Intended as a test
/// oracle; track counts above `max_tracks` raise instead of hanging, and the
/// euclidean score is rejected because it is not a joint likelihood. Ties
/// resolve to the lexicographically smallest canonical association.
inline BruteForceResult brute_force_optimal(const std::vector<Track>& tracks,
                                            const std::vector<SensorInfo>& sensors,
                                            const DetectionModel& model,
                                            SpatialLikelihoodKind kind, int max_tracks = 10) {
  if (kind == SpatialLikelihoodKind::kEuclidean)
    throw std::invalid_argument("the euclidean score has no joint likelihood; use a density kind");
  const int n = static_cast<int>(tracks.size());
  if (n == 0) return {JointAssociation{}, 0.0, 1};
  if (n > max_tracks)
    throw std::invalid_argument("brute-force enumeration capped at " + std::to_string(max_tracks) +
                                " tracks, got " + std::to_string(n));

  const FrameStats stats = FrameStats::compute(tracks, sensors);
  BruteForceResult best;
  std::vector<std::vector<int>> clusters;   // 1-based member ids
  std::vector<std::vector<int>> csensors;   // sensor ids per cluster

  auto evaluate_leaf = [&]() {
    ++best.n_partitions;
    double ll = 0.0;
    std::vector<int> theta(static_cast<std::size_t>(n), 0);
    for (std::size_t c = 0; c < clusters.size(); ++c) {
      ll += log_cluster_lik(tracks, clusters[c], sensors, model, kind, &stats);
      for (int m : clusters[c]) theta[static_cast<std::size_t>(m) - 1] = static_cast<int>(c) + 1;
    }
    if (ll > best.log_lik) {
      best.log_lik = ll;
      best.assoc = canonicalize(theta);
    } else if (ll == best.log_lik) {
      JointAssociation cand = canonicalize(theta);
      if (best.assoc.empty() || cand < best.assoc) best.assoc = std::move(cand);
    }
  };

  auto rec = [&](auto&& self, int t) -> void {
    if (t > n) {
      evaluate_leaf();
      return;
    }
    const int sensor = tracks[static_cast<std::size_t>(t) - 1].sensor;
    for (std::size_t c = 0; c < clusters.size(); ++c) {
      if (std::find(csensors[c].begin(), csensors[c].end(), sensor) != csensors[c].end()) continue;
      clusters[c].push_back(t);
      csensors[c].push_back(sensor);
      self(self, t + 1);
      clusters[c].pop_back();
      csensors[c].pop_back();
    }
    clusters.push_back({t});
    csensors.push_back({sensor});
    self(self, t + 1);
    clusters.pop_back();
    csensors.pop_back();
  };
  rec(rec, 1);
  return best;
}

}  // namespace t2ta
