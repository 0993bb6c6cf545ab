#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <stdexcept>
#include <vector>

#include "t2ta/core.hpp"

namespace t2ta {

/// Per-frame census used by the estimated-constant detection model.
struct FrameStats {
  int n_tracks = 0;
  int n_sensors = 0;
  int max_tracks_per_sensor = 0;

  static FrameStats compute(const std::vector<Track>& tracks,
                            const std::vector<SensorInfo>& sensors) {
    FrameStats s;
    s.n_tracks = static_cast<int>(tracks.size());
    s.n_sensors = static_cast<int>(sensors.size());
    for (const SensorInfo& info : sensors) {
      int n = 0;
      for (const Track& t : tracks)
        if (t.sensor == info.id) ++n;
      s.max_tracks_per_sensor = std::max(s.max_tracks_per_sensor, n);
    }
    return s;
  }
};

/// Probability that a sensor detects an object, as a function of the fused
/// cluster position. Three variants:
///
///  - fixed(p): constant, for simulation studies where p_D is known.
///  - estimated_constant(rho): rho * N_T / (N_S * max_s |T_s|), a frame-level
///    estimate when nothing else is available.
///  - distance_based(p_in, p_out, margin): p_in while the fused position lies
///    within sensing range plus margin of the sensor, p_out outside.
///
/// Every returned probability is capped at p_cap (default 0.97) so that a
/// missed detection never becomes impossible.
class DetectionModel {
 public:
  enum class Kind { kFixed, kEstimatedConstant, kDistanceBased };

  static constexpr double kDefaultCap = 0.97;

  static DetectionModel fixed(double p) {
    if (p <= 0.0 || p > 1.0) throw std::invalid_argument("detection probability must be in (0, 1]");
    DetectionModel m;
    m.kind_ = Kind::kFixed;
    m.p_ = p;
    return m;
  }

  static DetectionModel estimated_constant(double rho = 0.25) {
    if (rho <= 0.0) throw std::invalid_argument("rho must be positive");
    DetectionModel m;
    m.kind_ = Kind::kEstimatedConstant;
    m.rho_ = rho;
    return m;
  }

  static DetectionModel distance_based(double p_in = 0.97, double p_out = 0.15,
                                       double margin = 10.0, double default_range = 85.0) {
    if (p_in <= 0.0 || p_in > 1.0 || p_out <= 0.0 || p_out > 1.0)
      throw std::invalid_argument("detection probabilities must be in (0, 1]");
    DetectionModel m;
    m.kind_ = Kind::kDistanceBased;
    m.p_ = p_in;
    m.p_out_ = p_out;
    m.margin_ = margin;
    m.default_range_ = default_range;
    return m;
  }

  Kind kind() const { return kind_; }
  double cap() const { return cap_; }
  void set_cap(double cap) {
    if (cap <= 0.0 || cap >= 1.0) throw std::invalid_argument("cap must be in (0, 1)");
    cap_ = cap;
  }

  /// Detection probability of `sensor` for an object at `fused_mean`.
  /// `stats` is required by the estimated-constant variant.
  double prob(const Eigen::Vector2d& fused_mean, const SensorInfo& sensor,
              const FrameStats* stats = nullptr) const {
    switch (kind_) {
      case Kind::kFixed:
        return std::min(p_, cap_);
      case Kind::kEstimatedConstant: {
        if (stats == nullptr)
          throw std::invalid_argument("estimated-constant detection model needs frame stats");
        if (stats->n_sensors <= 0 || stats->max_tracks_per_sensor <= 0)
          throw std::invalid_argument("frame stats are degenerate");
        const double p = rho_ * static_cast<double>(stats->n_tracks) /
                         (static_cast<double>(stats->n_sensors) *
                          static_cast<double>(stats->max_tracks_per_sensor));
        return std::min(p, cap_);
      }
      case Kind::kDistanceBased: {
        const double range = sensor.range.value_or(default_range_);
        const double d = (fused_mean - sensor.position).norm();
        const double p = d < range + margin_ ? p_ : p_out_;
        return std::min(p, cap_);
      }
    }
    throw std::logic_error("unreachable");
  }

 private:
  Kind kind_ = Kind::kFixed;
  double p_ = 0.9;
  double rho_ = 0.25;
  double p_out_ = 0.15;
  double margin_ = 10.0;
  double default_range_ = 85.0;
  double cap_ = kDefaultCap;
};

}  // namespace t2ta
