#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "t2ta/core.hpp"
#include "t2ta/fusion.hpp"
#include "t2ta/hungarian.hpp"

namespace t2ta {

struct GospaParams {
  double c = 10.0;   ///< cutoff distance, meters
  double p = 1.0;    ///< metric order
  double alpha = 2.0;
};

struct GospaResult {
  double total = 0.0;
  double localization = 0.0;  ///< (sum of matched distances^p)^(1/p)
  int n_missed = 0;
  int n_false = 0;
  double missed_cost = 0.0;  ///< n_missed * c^p / alpha
  double false_cost = 0.0;
};

/// Generalized OSPA metric (Rahmathullah et al. 2017) between point sets,
/// computed for alpha = 2 where the optimal sub-pattern assignment reduces
/// to a min-cost matching with per-pair costs min(d, c)^p. Pairs at
/// distance >= c count as one miss plus one false estimate instead.
inline GospaResult gospa(const std::vector<Eigen::Vector2d>& estimates,
                         const std::vector<Eigen::Vector2d>& truths, const GospaParams& params) {
  if (!(params.c > 0.0) || !(params.p >= 1.0))
    throw std::invalid_argument("gospa requires c > 0 and p >= 1");
  if (params.alpha != 2.0)
    throw std::invalid_argument("only alpha = 2 is supported; the capped matching is exact there");

  GospaResult r;
  const double cp = std::pow(params.c, params.p);
  const int n_t = static_cast<int>(truths.size());
  const int n_e = static_cast<int>(estimates.size());

  double loc_sum = 0.0;
  int n_matched = 0;
  if (n_t > 0 && n_e > 0) {
    Eigen::MatrixXd cost(n_t, n_e);
    for (int i = 0; i < n_t; ++i)
      for (int j = 0; j < n_e; ++j)
        cost(i, j) = std::pow(
            std::min((truths[static_cast<std::size_t>(i)] - estimates[static_cast<std::size_t>(j)]).norm(),
                     params.c),
            params.p);
    const std::vector<int> match = hungarian(cost);
    for (int i = 0; i < n_t; ++i) {
      const int j = match[static_cast<std::size_t>(i)];
      if (j < 0) continue;
      const double d =
          (truths[static_cast<std::size_t>(i)] - estimates[static_cast<std::size_t>(j)]).norm();
      if (d < params.c) {
        loc_sum += std::pow(d, params.p);
        ++n_matched;
      }
    }
  }
  r.n_missed = n_t - n_matched;
  r.n_false = n_e - n_matched;
  r.missed_cost = static_cast<double>(r.n_missed) * cp / params.alpha;
  r.false_cost = static_cast<double>(r.n_false) * cp / params.alpha;
  r.localization = std::pow(loc_sum, 1.0 / params.p);
  r.total = std::pow(loc_sum + r.missed_cost + r.false_cost, 1.0 / params.p);
  return r;
}

/// Fuses the association's clusters with covariance intersection and scores
/// the fused positions against the ground-truth positions.
inline GospaResult evaluate_association(const JointAssociation& assoc,
                                        const std::vector<Track>& tracks,
                                        const std::vector<Eigen::Vector2d>& truths,
                                        const GospaParams& params = {}) {
  std::vector<Eigen::Vector2d> fused;
  for (const FusedEstimate& f : fuse_association(assoc, tracks)) fused.push_back(f.mean);
  return gospa(fused, truths, params);
}

/// Association that groups tracks by their ground-truth object label; tracks
/// without a label become singletons.
inline JointAssociation ground_truth_association(const std::vector<Track>& tracks) {
  std::vector<int> theta(tracks.size(), 0);
  std::vector<int> labels;  // object id per already-assigned cluster
  int next = 1;
  for (std::size_t i = 0; i < tracks.size(); ++i) {
    if (!tracks[i].object_id) {
      theta[i] = next++;
      labels.push_back(std::numeric_limits<int>::min());
      continue;
    }
    int found = 0;
    for (std::size_t c = 0; c < labels.size(); ++c)
      if (labels[c] == *tracks[i].object_id) {
        found = static_cast<int>(c) + 1;
        break;
      }
    if (found == 0) {
      theta[i] = next++;
      labels.push_back(*tracks[i].object_id);
    } else {
      theta[i] = found;
    }
  }
  return canonicalize(theta);
}

}  // namespace t2ta
