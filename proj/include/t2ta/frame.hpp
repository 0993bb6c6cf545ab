#pragma once

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "t2ta/core.hpp"

namespace t2ta {

struct TruthObject {
  int id = 0;
  Eigen::Vector2d position = Eigen::Vector2d::Zero();
  bool is_vru = false;
};

/// One timestep handed from scenario generation to association/evaluation:
/// all tracks, the sensors that produced them, and the ground truth.
struct ScenarioFrame {
  double time = 0.0;
  std::vector<Track> tracks;
  std::vector<SensorInfo> sensors;
  std::vector<TruthObject> truth;

  std::vector<Eigen::Vector2d> truth_positions() const {
    std::vector<Eigen::Vector2d> out;
    out.reserve(truth.size());
    for (const TruthObject& t : truth) out.push_back(t.position);
    return out;
  }
};

namespace detail {

inline nlohmann::json vec_to_json(const Eigen::VectorXd& v) {
  nlohmann::json a = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

inline nlohmann::json mat_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

inline Eigen::VectorXd vec_from_json(const nlohmann::json& a) {
  Eigen::VectorXd v(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) v(static_cast<Eigen::Index>(i)) = a.at(i).get<double>();
  return v;
}

inline Eigen::MatrixXd mat_from_json(const nlohmann::json& rows) {
  const std::size_t n = rows.size();
  if (n == 0) return Eigen::MatrixXd(0, 0);
  const std::size_t m = rows.at(0).size();
  Eigen::MatrixXd out(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
  for (std::size_t r = 0; r < n; ++r) {
    if (rows.at(r).size() != m) throw std::invalid_argument("ragged covariance rows");
    for (std::size_t c = 0; c < m; ++c)
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows.at(r).at(c).get<double>();
  }
  return out;
}

}  // namespace detail

inline nlohmann::json to_json(const ScenarioFrame& frame) {
  nlohmann::json j;
  j["time"] = frame.time;
  j["sensors"] = nlohmann::json::array();
  for (const SensorInfo& s : frame.sensors) {
    nlohmann::json js{{"id", s.id}, {"pos", {s.position.x(), s.position.y()}}};
    if (s.range) js["range"] = *s.range;
    j["sensors"].push_back(std::move(js));
  }
  j["tracks"] = nlohmann::json::array();
  for (const Track& t : frame.tracks) {
    nlohmann::json jt{{"id", t.id},
                      {"sensor", t.sensor},
                      {"state", detail::vec_to_json(t.state)},
                      {"cov", detail::mat_to_json(t.covariance)},
                      {"t", t.timestamp}};
    if (t.object_id) jt["object"] = *t.object_id;
    if (t.is_vru) jt["vru"] = true;
    j["tracks"].push_back(std::move(jt));
  }
  j["truth"] = nlohmann::json::array();
  for (const TruthObject& o : frame.truth) {
    nlohmann::json jo{{"id", o.id}, {"pos", {o.position.x(), o.position.y()}}};
    if (o.is_vru) jo["vru"] = true;
    j["truth"].push_back(std::move(jo));
  }
  return j;
}

inline ScenarioFrame frame_from_json(const nlohmann::json& j) {
  ScenarioFrame f;
  f.time = j.value("time", 0.0);
  for (const auto& js : j.value("sensors", nlohmann::json::array())) {
    SensorInfo s;
    s.id = js.at("id").get<int>();
    s.position = Eigen::Vector2d(js.at("pos").at(0).get<double>(), js.at("pos").at(1).get<double>());
    if (js.contains("range")) s.range = js.at("range").get<double>();
    f.sensors.push_back(std::move(s));
  }
  for (const auto& jt : j.value("tracks", nlohmann::json::array())) {
    Track t;
    t.id = jt.at("id").get<int>();
    t.sensor = jt.at("sensor").get<int>();
    t.state = detail::vec_from_json(jt.at("state"));
    t.covariance = detail::mat_from_json(jt.at("cov"));
    t.timestamp = jt.value("t", f.time);
    if (jt.contains("object")) t.object_id = jt.at("object").get<int>();
    t.is_vru = jt.value("vru", false);
    f.tracks.push_back(std::move(t));
  }
  for (std::size_t i = 0; i < f.tracks.size(); ++i)
    if (f.tracks[i].id != static_cast<int>(i) + 1)
      throw std::invalid_argument("track ids must be 1..N in frame order");
  for (const auto& jo : j.value("truth", nlohmann::json::array())) {
    TruthObject o;
    o.id = jo.at("id").get<int>();
    o.position = Eigen::Vector2d(jo.at("pos").at(0).get<double>(), jo.at("pos").at(1).get<double>());
    o.is_vru = jo.value("vru", false);
    f.truth.push_back(std::move(o));
  }
  return f;
}

/// One frame per line (JSON Lines).
inline void write_frames(std::ostream& os, const std::vector<ScenarioFrame>& frames) {
  for (const ScenarioFrame& f : frames) os << to_json(f).dump() << '\n';
}

inline std::vector<ScenarioFrame> read_frames(std::istream& is) {
  std::vector<ScenarioFrame> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    out.push_back(frame_from_json(nlohmann::json::parse(line)));
  }
  return out;
}

}  // namespace t2ta
