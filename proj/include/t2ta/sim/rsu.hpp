#pragma once

#include <Eigen/Dense>

#include <deque>
#include <map>
#include <utility>

#include "t2ta/frame.hpp"
#include "t2ta/rng.hpp"
#include "t2ta/sim/cpm.hpp"
#include "t2ta/sim/ukf.hpp"

namespace t2ta::sim {

/// Abstract lossy channel plus RSU-side message rules.
struct CommConfig {
  CommMode mode = CommMode::kEtsi;
  double cpm_interval = 0.1;   ///< minimum CPM period per sender
  double accumulation = 1.0;   ///< RSU window: 0.1 s full / 1 s ETSI
  double staleness = 1.0;      ///< tracks older than this are dropped
  double loss = 0.0;           ///< Bernoulli loss probability per CPM
  double latency = 0.0;        ///< fixed delivery delay, seconds
  CpmRules rules;

  static CommConfig full() {
    CommConfig c;
    c.mode = CommMode::kFull;
    c.accumulation = 0.1;
    return c;
  }
  static CommConfig etsi() { return CommConfig{}; }
};

/// RSU message store: applies channel loss and latency on ingest, keeps the
/// newest payload per (sender, local track id), and materializes
/// association-ready frames with all tracks propagated to the current time.
class RsuBuffer {
 public:
  RsuBuffer(const CommConfig& config, const UkfParams& ukf) : config_(config), ukf_(ukf) {}

  /// Channel entry point: draws the loss Bernoulli (always, to keep the
  /// random stream aligned), validates the payload, and queues the message
  /// for delivery at sent_time + latency.
  void ingest(const Cpm& cpm, Rng& rng) {
    const bool lost = rng.bernoulli(config_.loss);
    if (lost) {
      ++n_lost_;
      return;
    }
    for (const CpmTrack& t : cpm.tracks) {
      const bool finite = t.state.allFinite() && t.cov.allFinite();
      if (!finite || Eigen::LLT<Mat5>(Mat5(0.5 * (t.cov + t.cov.transpose()))).info() != Eigen::Success) {
        ++n_malformed_;
        return;  // drop the whole message
      }
    }
    in_flight_.push_back(InFlight{cpm, cpm.sent_time + config_.latency});
  }

  /// Delivers every queued message due by `now` into the store.
  void advance(double now) {
    while (!in_flight_.empty() && in_flight_.front().receive_time <= now + 1e-12) {
      deliver(in_flight_.front());
      in_flight_.pop_front();
      ++n_received_;
    }
  }

  /// Association input at `now`: one Track per stored (sender, local id)
  /// received within the accumulation window and no staler than the
  /// staleness limit, UKF-propagated to `now`. Sensors are the senders heard
  /// from within the accumulation window. Ground truth is not attached here.
  ScenarioFrame frame(double now) const {
    ScenarioFrame f;
    f.time = now;
    for (const auto& [sender, info] : senders_) {
      if (now - info.last_receive > config_.accumulation + 1e-12) continue;
      SensorInfo s;
      s.id = sender;
      s.position = info.position;
      s.range = info.range;
      f.sensors.push_back(std::move(s));
    }
    for (const auto& [key, stored] : store_) {
      if (now - stored.receive_time > config_.accumulation + 1e-12) continue;
      if (now - stored.payload.timestamp > config_.staleness + 1e-12) continue;
      Gaussian5 est{stored.payload.state, stored.payload.cov};
      const double dt = now - stored.payload.timestamp;
      if (dt > 1e-12) est = ukf_predict(est, dt, ukf_);
      Track t;
      t.id = static_cast<int>(f.tracks.size()) + 1;
      t.sensor = key.first;
      t.state = est.mean;
      t.covariance = est.cov;
      t.timestamp = now;
      t.object_id = stored.payload.object_id;
      t.is_vru = stored.payload.is_vru;
      f.tracks.push_back(std::move(t));
    }
    return f;
  }

  long n_lost() const { return n_lost_; }
  long n_received() const { return n_received_; }
  long n_malformed() const { return n_malformed_; }

 private:
  struct InFlight {
    Cpm cpm;
    double receive_time = 0.0;
  };
  struct StoredTrack {
    CpmTrack payload;
    double receive_time = 0.0;
  };
  struct SenderInfo {
    Eigen::Vector2d position = Eigen::Vector2d::Zero();
    double range = 85.0;
    double last_receive = 0.0;
  };

  void deliver(const InFlight& msg) {
    SenderInfo& sender = senders_[msg.cpm.sender];
    sender.position = msg.cpm.sender_pos;
    sender.range = msg.cpm.sensor_range;
    sender.last_receive = msg.receive_time;
    for (const CpmTrack& t : msg.cpm.tracks) {
      const std::pair<int, int> key{msg.cpm.sender, t.local_id};
      auto it = store_.find(key);
      if (it == store_.end() || t.timestamp >= it->second.payload.timestamp)
        store_[key] = StoredTrack{t, msg.receive_time};
    }
  }

  CommConfig config_;
  UkfParams ukf_;
  std::deque<InFlight> in_flight_;
  std::map<std::pair<int, int>, StoredTrack> store_;  // ordered: deterministic frames
  std::map<int, SenderInfo> senders_;
  long n_lost_ = 0;
  long n_received_ = 0;
  long n_malformed_ = 0;
};

}  // namespace t2ta::sim
