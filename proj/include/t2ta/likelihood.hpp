#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "t2ta/core.hpp"
#include "t2ta/detection.hpp"

namespace t2ta {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Selects the spatial term of the cluster likelihood.
///
///  - kProposed: each member is scored against the fused estimate with the
///    center uncertainty added, N(x_t; x_bar, P_bar + P_t).
///  - kGeneralized: the member covariance alone, N(x_t; x_bar, P_t).
///  - kEuclidean: negative sum of distances to the member centroid. This is a
///    pairwise score, not a density; only the pairwise baselines accept it.
enum class SpatialLikelihoodKind { kProposed, kGeneralized, kEuclidean };

inline const char* to_string(SpatialLikelihoodKind k) {
  switch (k) {
    case SpatialLikelihoodKind::kProposed: return "proposed";
    case SpatialLikelihoodKind::kGeneralized: return "generalized";
    case SpatialLikelihoodKind::kEuclidean: return "euclidean";
  }
  return "?";
}

namespace detail {

inline Eigen::Matrix2d invert_spd2(const Eigen::Matrix2d& m, const char* what) {
  const double det = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
  if (!(m(0, 0) > 0.0) || !(det > 0.0)) throw std::invalid_argument(what);
  Eigen::Matrix2d inv;
  inv << m(1, 1), -m(0, 1), -m(1, 0), m(0, 0);
  return inv / det;
}

}  // namespace detail

/// Log density of N(x; mean, cov) in two dimensions. Returns -inf when the
/// covariance is not positive definite instead of throwing, because fused
/// combinations inside likelihood ratios may degenerate and a zero likelihood
/// is the meaningful answer there.
inline double log_gauss2(const Eigen::Vector2d& x, const Eigen::Vector2d& mean,
                         const Eigen::Matrix2d& cov) {
  const double det = cov(0, 0) * cov(1, 1) - cov(0, 1) * cov(1, 0);
  if (!(cov(0, 0) > 0.0) || !(det > 0.0)) return kNegInf;
  const Eigen::Vector2d d = x - mean;
  const double maha =
      (d(0) * (cov(1, 1) * d(0) - cov(0, 1) * d(1)) + d(1) * (cov(0, 0) * d(1) - cov(1, 0) * d(0))) /
      det;
  return -std::log(2.0 * M_PI) - 0.5 * std::log(det) - 0.5 * maha;
}

/// Information-filter fusion of the member position estimates:
/// P_bar = (sum P_t^-1)^-1, x_bar = P_bar * sum P_t^-1 x_t, all on the 2-D
/// position block. A singleton returns its own (position, position covariance)
/// unchanged.
inline std::pair<Eigen::Vector2d, Eigen::Matrix2d> fuse_cluster(const std::vector<Track>& tracks,
                                                                std::span<const int> members) {
  if (members.empty()) throw std::invalid_argument("cannot fuse an empty cluster");
  for (int t : members)
    if (t < 1 || static_cast<std::size_t>(t) > tracks.size())
      throw std::invalid_argument("member id out of range");
  if (members.size() == 1) {
    const Track& t = tracks[static_cast<std::size_t>(members[0]) - 1];
    return {t.position(), t.position_cov()};
  }
  Eigen::Matrix2d info = Eigen::Matrix2d::Zero();
  Eigen::Vector2d info_state = Eigen::Vector2d::Zero();
  for (int m : members) {
    const Track& t = tracks[static_cast<std::size_t>(m) - 1];
    const Eigen::Matrix2d inv = detail::invert_spd2(t.position_cov(), "member covariance is not positive definite");
    info += inv;
    info_state += inv * t.position();
  }
  const Eigen::Matrix2d cov = detail::invert_spd2(info, "fused information matrix is singular");
  return {cov * info_state, cov};
}

inline std::pair<Eigen::Vector2d, Eigen::Matrix2d> fuse_cluster(const std::vector<Track>& tracks,
                                                                const Cluster& cluster) {
  return fuse_cluster(tracks, std::span<const int>(cluster.members));
}

/// Log of the cardinality likelihood: detecting sensors contribute p_D, all
/// others 1 - p_D, each evaluated at the fused cluster position.
/// `cluster_sensors` must hold distinct sensor ids present in `sensors`.
inline double log_cardinality_lik(const std::vector<int>& cluster_sensors,
                                  const std::vector<SensorInfo>& sensors,
                                  const Eigen::Vector2d& fused_mean, const DetectionModel& model,
                                  const FrameStats* stats = nullptr) {
  double total = 0.0;
  for (const SensorInfo& s : sensors) {
    const double p = model.prob(fused_mean, s, stats);
    const bool in_cluster =
        std::find(cluster_sensors.begin(), cluster_sensors.end(), s.id) != cluster_sensors.end();
    total += std::log(in_cluster ? p : 1.0 - p);
  }
  return total;
}

/// Log of the spatial likelihood of a cluster; see SpatialLikelihoodKind.
inline double log_spatial_lik(const std::vector<Track>& tracks, std::span<const int> members,
                              SpatialLikelihoodKind kind) {
  if (members.empty()) throw std::invalid_argument("cluster is empty");
  if (kind == SpatialLikelihoodKind::kEuclidean) {
    Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
    for (int m : members) centroid += tracks[static_cast<std::size_t>(m) - 1].position();
    centroid /= static_cast<double>(members.size());
    double total = 0.0;
    for (int m : members)
      total -= (tracks[static_cast<std::size_t>(m) - 1].position() - centroid).norm();
    return total;
  }
  const auto [mean, cov] = fuse_cluster(tracks, members);
  double total = 0.0;
  for (int m : members) {
    const Track& t = tracks[static_cast<std::size_t>(m) - 1];
    const Eigen::Matrix2d s =
        kind == SpatialLikelihoodKind::kProposed ? Eigen::Matrix2d(cov + t.position_cov()) : t.position_cov();
    total += log_gauss2(t.position(), mean, s);
  }
  return total;
}

/// Fused summary of one cluster, cached by the stochastic optimizer so a
/// membership change costs O(|C|) instead of a frame-wide recomputation.
struct ClusterStat {
  std::vector<int> members;  ///< sorted 1-based track ids
  std::vector<int> sensors;  ///< sorted sensor ids of the members
  Eigen::Vector2d fused_mean = Eigen::Vector2d::Zero();
  Eigen::Matrix2d fused_cov = Eigen::Matrix2d::Zero();
  double log_lik = 0.0;
};

/// Evaluates one cluster: sensor-validity check, fusion, cardinality and
/// spatial terms. A sensor-invalid cluster gets log likelihood -inf. For the
/// euclidean kind the cardinality term is omitted (pairwise-score mode).
inline ClusterStat make_cluster_stat(const std::vector<Track>& tracks, std::span<const int> members,
                                     const std::vector<SensorInfo>& sensors,
                                     const DetectionModel& model, SpatialLikelihoodKind kind,
                                     const FrameStats* stats = nullptr) {
  ClusterStat out;
  out.members.assign(members.begin(), members.end());
  std::sort(out.members.begin(), out.members.end());
  out.sensors.reserve(out.members.size());
  for (int m : out.members) {
    if (m < 1 || static_cast<std::size_t>(m) > tracks.size())
      throw std::invalid_argument("member id out of range");
    out.sensors.push_back(tracks[static_cast<std::size_t>(m) - 1].sensor);
  }
  std::sort(out.sensors.begin(), out.sensors.end());
  if (std::adjacent_find(out.sensors.begin(), out.sensors.end()) != out.sensors.end()) {
    out.log_lik = kNegInf;
    return out;
  }
  if (kind == SpatialLikelihoodKind::kEuclidean) {
    out.log_lik = log_spatial_lik(tracks, out.members, kind);
    return out;
  }
  const auto [mean, cov] = fuse_cluster(tracks, out.members);
  out.fused_mean = mean;
  out.fused_cov = cov;
  double spatial = 0.0;
  for (int m : out.members) {
    const Track& t = tracks[static_cast<std::size_t>(m) - 1];
    const Eigen::Matrix2d s =
        kind == SpatialLikelihoodKind::kProposed ? Eigen::Matrix2d(cov + t.position_cov()) : t.position_cov();
    spatial += log_gauss2(t.position(), mean, s);
  }
  out.log_lik = spatial + log_cardinality_lik(out.sensors, sensors, mean, model, stats);
  return out;
}

/// Log likelihood of one cluster (cardinality times spatial term); -inf when
/// two members share a sensor.
inline double log_cluster_lik(const std::vector<Track>& tracks, std::span<const int> members,
                              const std::vector<SensorInfo>& sensors, const DetectionModel& model,
                              SpatialLikelihoodKind kind, const FrameStats* stats = nullptr) {
  return make_cluster_stat(tracks, members, sensors, model, kind, stats).log_lik;
}

inline double log_cluster_lik(const std::vector<Track>& tracks, const Cluster& cluster,
                              const std::vector<SensorInfo>& sensors, const DetectionModel& model,
                              SpatialLikelihoodKind kind, const FrameStats* stats = nullptr) {
  return log_cluster_lik(tracks, std::span<const int>(cluster.members), sensors, model, kind, stats);
}

/// Log joint association likelihood: sum of cluster log likelihoods over the
/// partition induced by `assoc` (which is canonicalized first). Frame stats
/// for the estimated-constant model are computed from the full frame.
inline double log_joint_lik(const JointAssociation& assoc, const std::vector<Track>& tracks,
                            const std::vector<SensorInfo>& sensors, const DetectionModel& model,
                            SpatialLikelihoodKind kind) {
  if (assoc.size() != tracks.size())
    throw std::invalid_argument("association length does not match track count");
  const FrameStats stats = FrameStats::compute(tracks, sensors);
  double total = 0.0;
  for (const Cluster& c : clusters_of(canonicalize(assoc)))
    total += log_cluster_lik(tracks, c, sensors, model, kind, &stats);
  return total;
}

}  // namespace t2ta
