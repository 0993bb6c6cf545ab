#pragma once

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "t2ta/frame.hpp"
#include "t2ta/rng.hpp"
#include "t2ta/sim/cpm.hpp"
#include "t2ta/sim/ct.hpp"
#include "t2ta/sim/rsu.hpp"
#include "t2ta/sim/tracker.hpp"

namespace t2ta::sim {

/// Piecewise-constant turn-rate segment of a scripted trajectory.
struct TrajectorySegment {
  double duration = 0.0;  ///< seconds
  double omega = 0.0;     ///< rad/s during the segment
};

struct ScriptObject {
  int id = 0;
  Eigen::Vector2d start = Eigen::Vector2d::Zero();
  double heading = 0.0;  ///< radians
  double speed = 0.0;    ///< m/s
  bool is_vru = false;
  std::optional<bool> equipped;  ///< absent: drawn Bernoulli(mpr), vehicles only
  double enter = 0.0;
  double exit = std::numeric_limits<double>::infinity();
  std::vector<TrajectorySegment> segments;  ///< straight (omega 0) after the last
};

/// Scripted collective-perception world. Objects follow coordinated-turn
/// segments; equipped vehicles sense, track, and send CPMs to one RSU.
struct CpScript {
  std::string name = "cp";
  double dt = 0.1;
  double duration = 45.0;
  double warmup = 15.0;  ///< frames are emitted from here on
  double sensor_range = 85.0;
  double mpr = 1.0;  ///< market penetration rate for objects without an explicit flag
  CommConfig comm;
  UkfParams ukf;
  std::vector<ScriptObject> objects;
};

inline CpScript script_from_json(const nlohmann::json& j) {
  CpScript s;
  s.name = j.value("name", s.name);
  s.dt = j.value("dt", s.dt);
  s.duration = j.value("duration", s.duration);
  s.warmup = j.value("warmup", s.warmup);
  s.sensor_range = j.value("sensor_range", s.sensor_range);
  s.mpr = j.value("mpr", s.mpr);
  if (j.contains("comm")) {
    const auto& jc = j.at("comm");
    const std::string mode = jc.value("mode", "etsi");
    if (mode == "full")
      s.comm = CommConfig::full();
    else if (mode == "etsi")
      s.comm = CommConfig::etsi();
    else
      throw std::invalid_argument("comm mode must be 'full' or 'etsi'");
    s.comm.loss = jc.value("loss", 0.0);
    s.comm.latency = jc.value("latency", 0.0);
    if (jc.contains("accumulation")) s.comm.accumulation = jc.at("accumulation").get<double>();
    if (jc.contains("staleness")) s.comm.staleness = jc.at("staleness").get<double>();
  }
  if (!(s.dt > 0.0) || !(s.duration > 0.0) || s.warmup < 0.0 || s.warmup >= s.duration)
    throw std::invalid_argument("need dt > 0 and 0 <= warmup < duration");
  if (!(s.comm.loss >= 0.0 && s.comm.loss <= 1.0) || s.comm.latency < 0.0)
    throw std::invalid_argument("loss must be a probability and latency nonnegative");
  for (const auto& jo : j.value("objects", nlohmann::json::array())) {
    ScriptObject o;
    o.id = jo.at("id").get<int>();
    o.start = Eigen::Vector2d(jo.at("start").at(0).get<double>(), jo.at("start").at(1).get<double>());
    o.heading = jo.value("heading_deg", 0.0) * M_PI / 180.0;
    o.speed = jo.value("speed", 0.0);
    o.is_vru = jo.value("vru", false);
    if (jo.contains("equipped")) o.equipped = jo.at("equipped").get<bool>();
    o.enter = jo.value("enter", 0.0);
    o.exit = jo.value("exit", o.exit);
    for (const auto& js : jo.value("segments", nlohmann::json::array()))
      o.segments.push_back(TrajectorySegment{js.at("duration").get<double>(),
                                             js.value("omega", 0.0)});
    if (o.is_vru && o.equipped.value_or(false))
      throw std::invalid_argument("VRUs cannot carry sensors");
    s.objects.push_back(std::move(o));
  }
  return s;
}

inline CpScript load_script(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open scenario script: " + path);
  nlohmann::json j;
  in >> j;
  return script_from_json(j);
}

struct CpRunStats {
  long cpms_sent = 0;
  long cpms_lost = 0;
  long track_payloads = 0;  ///< CPM track payloads transmitted (pre-loss)
  long frames = 0;
};

struct CpRunResult {
  std::vector<ScenarioFrame> frames;
  CpRunStats stats;
};

namespace detail {

/// Turn rate of the scripted object at scenario time `t` (relative to its
/// entry time); straight beyond the last segment.
inline double script_omega(const ScriptObject& o, double t_alive) {
  double acc = 0.0;
  for (const TrajectorySegment& seg : o.segments) {
    acc += seg.duration;
    if (t_alive < acc) return seg.omega;
  }
  return 0.0;
}

}  // namespace detail

/// Steps the scripted world at dt, runs one local tracker per equipped
/// vehicle, applies the CPM rules and the lossy channel, and collects one
/// RSU frame (with ground truth attached) per step from warmup onward.
///
/// Randomness (equipment draw, measurement noise, channel loss) comes from a
/// single stream in fixed draw order, so a (script, seed) pair reproduces
/// the frame stream exactly.
inline CpRunResult run_cp_scenario(const CpScript& script, std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0xc9));

  struct WorldObject {
    ScriptObject spec;
    ObjectState state;
    bool equipped = false;
  };
  std::vector<WorldObject> world;
  for (const ScriptObject& spec : script.objects) {
    WorldObject w;
    w.spec = spec;
    w.state.x0 = spec.start.x();
    w.state.x1 = spec.start.y();
    w.state.v0 = spec.speed * std::cos(spec.heading);
    w.state.v1 = spec.speed * std::sin(spec.heading);
    w.state.is_vru = spec.is_vru;
    w.equipped = spec.is_vru ? false : spec.equipped.value_or(rng.bernoulli(script.mpr));
    world.push_back(std::move(w));
  }

  std::map<int, SensorTracker> trackers;
  for (const WorldObject& w : world)
    if (w.equipped) trackers.emplace(w.spec.id, SensorTracker(w.spec.id, script.ukf));

  RsuBuffer rsu(script.comm, script.ukf);
  const Eigen::Matrix2d chol_r = script.ukf.meas_noise.llt().matrixL();
  CpRunResult result;

  const long n_steps = static_cast<long>(std::llround(script.duration / script.dt));
  for (long step = 0; step < n_steps; ++step) {
    const double now = static_cast<double>(step) * script.dt;

    // World motion: objects move once alive; the scripted turn-rate schedule
    // is indexed by time since entry.
    for (WorldObject& w : world) {
      if (now < w.spec.enter || now >= w.spec.exit) continue;
      w.state.omega = detail::script_omega(w.spec, now - w.spec.enter);
      // First alive step leaves the object at its scripted start.
      if (now - w.spec.enter >= script.dt - 1e-9) w.state = ct_predict(w.state, script.dt);
    }
    auto alive = [&](const WorldObject& w) {
      return now >= w.spec.enter && now < w.spec.exit;
    };

    // Sensing and local tracking, ascending vehicle id.
    for (WorldObject& w : world) {
      if (!w.equipped || !alive(w)) continue;
      std::vector<Measurement> detections;
      for (const WorldObject& other : world) {
        if (other.spec.id == w.spec.id || !alive(other)) continue;
        const Eigen::Vector2d d = other.state.position() - w.state.position();
        if (d.norm() > script.sensor_range) continue;
        // Sequenced draws: the stream order must not depend on argument
        // evaluation order.
        const double nx = rng.normal();
        const double ny = rng.normal();
        detections.push_back(Measurement{other.spec.id,
                                         other.state.position() + chol_r * Eigen::Vector2d(nx, ny),
                                         other.spec.is_vru});
      }
      trackers.at(w.spec.id).step(now, script.dt, detections);
    }

    // CPM generation: every equipped alive vehicle sends each step (the
    // minimum interval equals dt), empty messages included so the RSU knows
    // the sensor exists.
    for (WorldObject& w : world) {
      if (!w.equipped || !alive(w)) continue;
      SensorTracker& tracker = trackers.at(w.spec.id);
      const std::vector<std::size_t> chosen =
          cpm_select(tracker.tracks(), now, script.comm.mode, script.comm.rules);
      Cpm cpm;
      cpm.sender = w.spec.id;
      cpm.sender_pos = w.state.position();
      cpm.sensor_range = script.sensor_range;
      cpm.sent_time = now;
      for (std::size_t idx : chosen) {
        const LocalTrack& t = tracker.tracks()[idx];
        cpm.tracks.push_back(CpmTrack{t.local_id, t.at_update.mean, t.at_update.cov,
                                      t.last_update, t.object_id, t.is_vru});
      }
      ++result.stats.cpms_sent;
      result.stats.track_payloads += static_cast<long>(cpm.tracks.size());
      rsu.ingest(cpm, rng);
    }

    rsu.advance(now);

    if (now >= script.warmup - 1e-9) {
      ScenarioFrame frame = rsu.frame(now);
      for (const WorldObject& w : world) {
        if (!alive(w)) continue;
        frame.truth.push_back(TruthObject{w.spec.id, w.state.position(), w.spec.is_vru});
      }
      result.frames.push_back(std::move(frame));
      ++result.stats.frames;
    }
  }
  result.stats.cpms_lost = rsu.n_lost();
  return result;
}

}  // namespace t2ta::sim
