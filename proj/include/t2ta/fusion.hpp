#pragma once

#include <Eigen/Dense>

#include <span>
#include <stdexcept>
#include <vector>

#include "t2ta/core.hpp"
#include "t2ta/likelihood.hpp"

namespace t2ta {

struct FusedEstimate {
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  std::vector<int> members;
};

/// Fast covariance intersection weights after Franken and Hupper (2005),
/// generalized to N estimates. With information matrices I_i = P_i^-1 and
/// S = sum_j I_j, the closed-form weights are
///
///   w_i = (det(S) - det(S - I_i) + det(I_i))
///         / (N * det(S) + sum_j (det(I_j) - det(S - I_j)))
///
/// which are nonnegative, sum to one, and avoid the iterative determinant
/// minimization of exact covariance intersection.
inline std::vector<double> fast_ci_weights(const std::vector<Eigen::Matrix2d>& infos) {
  if (infos.empty()) throw std::invalid_argument("no estimates to weight");
  const std::size_t n = infos.size();
  if (n == 1) return {1.0};
  Eigen::Matrix2d s = Eigen::Matrix2d::Zero();
  for (const Eigen::Matrix2d& i : infos) s += i;
  const double det_s = s.determinant();
  double denom = static_cast<double>(n) * det_s;
  std::vector<double> num(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double det_i = infos[i].determinant();
    const double det_rest = (s - infos[i]).determinant();
    num[i] = det_s - det_rest + det_i;
    denom += det_i - det_rest;
  }
  if (!(denom > 0.0)) throw std::invalid_argument("degenerate information matrices");
  for (double& w : num) w /= denom;
  return num;
}

/// Covariance-intersection fusion of the member position estimates:
/// P^-1 = sum w_i P_i^-1, x = P * sum w_i P_i^-1 x_i. Unlike the naive
/// information fusion used inside the likelihood, the result stays
/// consistent under unknown cross-correlations (the fused covariance never
/// understates the naive one).
inline FusedEstimate fuse_ci(const std::vector<Track>& tracks, std::span<const int> members) {
  if (members.empty()) throw std::invalid_argument("cannot fuse an empty cluster");
  FusedEstimate out;
  out.members.assign(members.begin(), members.end());
  if (members.size() == 1) {
    const Track& t = tracks.at(static_cast<std::size_t>(members[0]) - 1);
    out.mean = t.position();
    out.cov = t.position_cov();
    return out;
  }
  std::vector<Eigen::Matrix2d> infos;
  infos.reserve(members.size());
  for (int m : members)
    infos.push_back(detail::invert_spd2(tracks.at(static_cast<std::size_t>(m) - 1).position_cov(),
                                        "member covariance is not positive definite"));
  const std::vector<double> w = fast_ci_weights(infos);
  Eigen::Matrix2d info = Eigen::Matrix2d::Zero();
  Eigen::Vector2d info_state = Eigen::Vector2d::Zero();
  for (std::size_t i = 0; i < infos.size(); ++i) {
    info += w[i] * infos[i];
    info_state += w[i] * infos[i] * tracks[static_cast<std::size_t>(members[i]) - 1].position();
  }
  out.cov = detail::invert_spd2(info, "fused information matrix is singular");
  out.mean = out.cov * info_state;
  return out;
}

/// Fuses every cluster of the association with covariance intersection,
/// in cluster-id order.
inline std::vector<FusedEstimate> fuse_association(const JointAssociation& assoc,
                                                   const std::vector<Track>& tracks) {
  if (assoc.size() != tracks.size())
    throw std::invalid_argument("association length does not match track count");
  std::vector<FusedEstimate> out;
  for (const Cluster& c : clusters_of(canonicalize(assoc)))
    out.push_back(fuse_ci(tracks, c.members));
  return out;
}

}  // namespace t2ta
