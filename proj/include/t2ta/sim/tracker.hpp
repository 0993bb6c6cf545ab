#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <map>
#include <vector>

#include "t2ta/sim/ukf.hpp"

namespace t2ta::sim {

/// One sensor-local UKF track plus the bookkeeping the CPM rules need.
struct LocalTrack {
  int local_id = 0;  ///< unique per sensor only, reassigned on track rebirth
  Gaussian5 est;        ///< current (predicted-to-now) estimate
  Gaussian5 at_update;  ///< posterior at last_update; this is what a CPM carries
  double born = 0.0;
  double last_update = 0.0;
  int object_id = 0;  ///< known measurement association, simulation-internal
  bool is_vru = false;

  // Snapshot of the state as last transmitted, maintained by cpm_select.
  bool ever_sent = false;
  double last_sent = 0.0;
  Eigen::Vector2d sent_pos = Eigen::Vector2d::Zero();
  double sent_speed = 0.0;
  double sent_heading = 0.0;

  Eigen::Vector2d position() const { return est.mean.head<2>(); }
  double speed() const { return est.mean.segment<2>(2).norm(); }
  double heading() const { return std::atan2(est.mean(3), est.mean(2)); }
};

struct Measurement {
  int object_id = 0;
  Eigen::Vector2d z = Eigen::Vector2d::Zero();
  bool is_vru = false;
};

/// Local multi-object tracker of one equipped vehicle. Measurement-to-track
/// association is known by construction (the simulator labels detections),
/// so the tracker only manages the UKF lifecycle: two-point initialization,
/// predict/update, invalidation after `invalidate_after` seconds unseen, and
/// rebirth under a fresh local id on redetection.
class SensorTracker {
 public:
  SensorTracker(int sensor_id, const UkfParams& params, double invalidate_after = 0.4)
      : sensor_id_(sensor_id), params_(params), invalidate_after_(invalidate_after) {}

  int sensor_id() const { return sensor_id_; }
  const std::vector<LocalTrack>& tracks() const { return tracks_; }
  std::vector<LocalTrack>& tracks() { return tracks_; }

  /// Advances the tracker to `now` (one dt step) with this step's
  /// detections. Invalidation runs before matching, so an object unseen for
  /// more than `invalidate_after` gets a new track id even when redetected
  /// in this very step.
  void step(double now, double dt, const std::vector<Measurement>& detections) {
    std::erase_if(tracks_, [&](const LocalTrack& t) {
      return now - t.last_update > invalidate_after_ + 1e-9;
    });
    for (LocalTrack& t : tracks_) t.est = ukf_predict(t.est, dt, params_);

    for (const Measurement& m : detections) {
      LocalTrack* track = nullptr;
      for (LocalTrack& t : tracks_)
        if (t.object_id == m.object_id) {
          track = &t;
          break;
        }
      if (track != nullptr) {
        track->est = kf_update(track->est, m.z, params_);
        track->at_update = track->est;
        track->last_update = now;
        continue;
      }
      auto pending = pending_.find(m.object_id);
      if (pending != pending_.end() && now - pending->second.t <= dt + 1e-9) {
        LocalTrack t;
        t.local_id = next_local_id_++;
        t.est = init_two_point(pending->second.z, pending->second.t, m.z, now, params_);
        t.at_update = t.est;
        t.born = now;
        t.last_update = now;
        t.object_id = m.object_id;
        t.is_vru = m.is_vru;
        tracks_.push_back(std::move(t));
        pending_.erase(pending);
      } else {
        pending_[m.object_id] = PendingInit{m.z, now};
      }
    }

    std::erase_if(pending_, [&](const auto& kv) { return now - kv.second.t > dt + 1e-9; });
  }

 private:
  struct PendingInit {
    Eigen::Vector2d z;
    double t = 0.0;
  };

  int sensor_id_;
  UkfParams params_;
  double invalidate_after_;
  int next_local_id_ = 1;
  std::vector<LocalTrack> tracks_;
  std::map<int, PendingInit> pending_;  // keyed by object id
};

}  // namespace t2ta::sim
