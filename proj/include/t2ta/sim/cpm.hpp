#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <vector>

#include "t2ta/sim/tracker.hpp"

namespace t2ta::sim {

enum class CommMode { kFull, kEtsi };

inline const char* to_string(CommMode m) { return m == CommMode::kFull ? "full" : "etsi"; }

/// Thresholds of the CPM generation rules.
struct CpmRules {
  double full_update_window = 0.1;  ///< full mode: tracks updated within this
  double vru_interval = 0.5;        ///< ETSI: VRU resend due time
  double vehicle_interval = 1.0;    ///< ETSI: vehicle resend due time
  double pos_delta = 4.0;           ///< meters, significant-change rule
  double speed_delta = 0.5;         ///< m/s
  double heading_delta = 4.0 * M_PI / 180.0;  ///< radians
  double min_heading_speed = 0.1;   ///< below this speed heading change counts as 0
};

/// One track payload inside a CPM.
struct CpmTrack {
  int local_id = 0;
  Vec5 state = Vec5::Zero();
  Mat5 cov = Mat5::Identity();
  double timestamp = 0.0;
  int object_id = 0;  ///< carried for evaluation only
  bool is_vru = false;
};

/// Collective perception message: sender pose plus selected track payloads.
struct Cpm {
  int sender = 0;
  Eigen::Vector2d sender_pos = Eigen::Vector2d::Zero();
  double sensor_range = 85.0;
  double sent_time = 0.0;
  std::vector<CpmTrack> tracks;
};

inline double wrap_angle(double a) {
  while (a > M_PI) a -= 2.0 * M_PI;
  while (a < -M_PI) a += 2.0 * M_PI;
  return a;
}

/// Applies the message generation rules and returns the indices of the
/// tracks to transmit, refreshing their sent-state snapshots.
///
/// full: every track updated within the last 0.1 s.
/// etsi: never-sent tracks always; VRU tracks when unsent for > 0.5 s (one
/// included VRU pulls in all VRUs); vehicle tracks when unsent for > 1 s or
/// significantly changed since last transmission (> 4 m position, > 0.5 m/s
/// speed, > 4 deg heading; heading is undefined below 0.1 m/s and counts as
/// unchanged there).
inline std::vector<std::size_t> cpm_select(std::vector<LocalTrack>& tracks, double now,
                                           CommMode mode, const CpmRules& rules = {}) {
  std::vector<std::size_t> selected;
  if (mode == CommMode::kFull) {
    for (std::size_t i = 0; i < tracks.size(); ++i)
      if (now - tracks[i].last_update < rules.full_update_window) selected.push_back(i);
  } else {
    std::vector<bool> include(tracks.size(), false);
    bool vru_triggered = false;
    for (std::size_t i = 0; i < tracks.size(); ++i) {
      const LocalTrack& t = tracks[i];
      if (!t.ever_sent) {
        include[i] = true;
        vru_triggered = vru_triggered || t.is_vru;
        continue;
      }
      if (t.is_vru) {
        if (now - t.last_sent > rules.vru_interval) {
          include[i] = true;
          vru_triggered = true;
        }
        continue;
      }
      bool due = now - t.last_sent > rules.vehicle_interval;
      if (!due) {
        const bool moved = (t.position() - t.sent_pos).norm() > rules.pos_delta;
        const bool sped = std::abs(t.speed() - t.sent_speed) > rules.speed_delta;
        const bool turned = t.speed() >= rules.min_heading_speed &&
                            std::abs(wrap_angle(t.heading() - t.sent_heading)) > rules.heading_delta;
        due = moved || sped || turned;
      }
      include[i] = due;
    }
    if (vru_triggered)
      for (std::size_t i = 0; i < tracks.size(); ++i)
        if (tracks[i].is_vru) include[i] = true;
    for (std::size_t i = 0; i < tracks.size(); ++i)
      if (include[i]) selected.push_back(i);
  }

  for (std::size_t i : selected) {
    LocalTrack& t = tracks[i];
    t.ever_sent = true;
    t.last_sent = now;
    t.sent_pos = t.position();
    t.sent_speed = t.speed();
    t.sent_heading = t.heading();
  }
  return selected;
}

}  // namespace t2ta::sim
