#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <optional>
#include <stdexcept>
#include <vector>

namespace t2ta {

/// One sensor-local state estimate of a single object at a single time.
///
/// The state layout is position-first: state[0..1] is the 2-D position in
/// meters; further entries (velocity, yaw rate) depend on the producer and
/// are ignored by the association likelihood.
struct Track {
  int id = 0;  ///< 1-based index within the frame, fixed by arrival order
  int sensor = 0;
  Eigen::VectorXd state;
  Eigen::MatrixXd covariance;
  double timestamp = 0.0;
  std::optional<int> object_id;  ///< ground-truth label, evaluation only
  bool is_vru = false;

  Eigen::Vector2d position() const { return state.head<2>(); }
  Eigen::Matrix2d position_cov() const { return covariance.topLeftCorner<2, 2>(); }
};

/// Throws std::invalid_argument unless the covariance is square, matches the
/// state dimension, is symmetric and positive definite (Cholesky succeeds).
inline void validate(const Track& track) {
  const auto n = track.state.size();
  if (n < 2) throw std::invalid_argument("track state needs at least a 2-D position");
  if (track.covariance.rows() != n || track.covariance.cols() != n)
    throw std::invalid_argument("track covariance dimension does not match state");
  if (!track.covariance.isApprox(track.covariance.transpose(), 1e-9))
    throw std::invalid_argument("track covariance is not symmetric");
  Eigen::LLT<Eigen::MatrixXd> llt(track.covariance);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument("track covariance is not positive definite");
}

struct SensorInfo {
  int id = 0;
  Eigen::Vector2d position = Eigen::Vector2d::Zero();
  std::optional<double> range;  ///< meters; used by distance-based detection models

  bool operator==(const SensorInfo& o) const {
    return id == o.id && position == o.position && range == o.range;
  }
};

/// Joint association variable: entry t-1 is the cluster id of track t.
///
/// Cluster ids are arbitrary positive integers; the canonical form numbers
/// them 1, 2, ... in order of first appearance, which makes two associations
/// comparable as partitions.
struct JointAssociation {
  std::vector<int> assignment;

  JointAssociation() = default;
  explicit JointAssociation(std::vector<int> a) : assignment(std::move(a)) {}

  std::size_t size() const { return assignment.size(); }
  bool empty() const { return assignment.empty(); }
  int cluster_of(int track_id) const { return assignment.at(static_cast<std::size_t>(track_id) - 1); }

  bool operator==(const JointAssociation&) const = default;
  bool operator<(const JointAssociation& o) const { return assignment < o.assignment; }
};

/// A set of tracks hypothesized to share one origin. Member ids are 1-based
/// and kept sorted.
struct Cluster {
  std::vector<int> members;

  bool operator==(const Cluster&) const = default;
};

/// Renumbers cluster ids consecutively starting at 1 in order of first
/// appearance. Two inputs describing the same partition map to identical
/// outputs; an empty input yields an empty association.
inline JointAssociation canonicalize(const std::vector<int>& assignment) {
  std::vector<int> out(assignment.size());
  std::vector<std::pair<int, int>> relabel;  // (old id, new id), small linear map
  int next = 1;
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    const int c = assignment[i];
    if (c < 1) throw std::invalid_argument("cluster ids must be >= 1");
    auto it = std::find_if(relabel.begin(), relabel.end(),
                           [c](const auto& p) { return p.first == c; });
    if (it == relabel.end()) {
      relabel.emplace_back(c, next);
      out[i] = next++;
    } else {
      out[i] = it->second;
    }
  }
  return JointAssociation(std::move(out));
}

inline JointAssociation canonicalize(const JointAssociation& assoc) {
  return canonicalize(assoc.assignment);
}

inline bool is_canonical(const JointAssociation& assoc) {
  int seen = 0;
  for (int c : assoc.assignment) {
    if (c < 1 || c > seen + 1) return false;
    seen = std::max(seen, c);
  }
  return true;
}

/// Inverts a canonical association into its clusters, ordered by cluster id.
/// The clusters partition {1..N_T}.
inline std::vector<Cluster> clusters_of(const JointAssociation& assoc) {
  if (!is_canonical(assoc)) throw std::invalid_argument("association is not canonical");
  int n_clusters = 0;
  for (int c : assoc.assignment) n_clusters = std::max(n_clusters, c);
  std::vector<Cluster> out(static_cast<std::size_t>(n_clusters));
  for (std::size_t i = 0; i < assoc.assignment.size(); ++i)
    out[static_cast<std::size_t>(assoc.assignment[i]) - 1].members.push_back(static_cast<int>(i) + 1);
  return out;
}

/// Rebuilds the association vector from a cluster list covering 1..n_tracks.
inline JointAssociation association_from_clusters(const std::vector<Cluster>& clusters,
                                                  int n_tracks) {
  std::vector<int> assignment(static_cast<std::size_t>(n_tracks), 0);
  for (std::size_t c = 0; c < clusters.size(); ++c)
    for (int t : clusters[c].members) {
      if (t < 1 || t > n_tracks) throw std::invalid_argument("member id out of range");
      assignment[static_cast<std::size_t>(t) - 1] = static_cast<int>(c) + 1;
    }
  for (int c : assignment)
    if (c == 0) throw std::invalid_argument("clusters do not cover all tracks");
  return canonicalize(assignment);
}

/// True iff all member tracks originate from distinct sensors.
inline bool is_sensor_valid(const Cluster& cluster, const std::vector<Track>& tracks) {
  std::vector<int> sensors;
  sensors.reserve(cluster.members.size());
  for (int t : cluster.members) {
    if (t < 1 || static_cast<std::size_t>(t) > tracks.size())
      throw std::invalid_argument("member id out of range");
    sensors.push_back(tracks[static_cast<std::size_t>(t) - 1].sensor);
  }
  std::sort(sensors.begin(), sensors.end());
  return std::adjacent_find(sensors.begin(), sensors.end()) == sensors.end();
}

inline bool is_sensor_valid(const JointAssociation& assoc, const std::vector<Track>& tracks) {
  for (const Cluster& c : clusters_of(assoc))
    if (!is_sensor_valid(c, tracks)) return false;
  return true;
}

}  // namespace t2ta
