#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>

#include "t2ta/frame.hpp"
#include "t2ta/rng.hpp"

namespace t2ta::sim {

/// Static Monte Carlo scene: uniformly placed objects and sensors, each
/// sensor detecting each object independently with p_d_true.
struct McConfig {
  double area = 30.0;  ///< square side, meters
  int n_objects = 8;
  int n_sensors = 5;
  double sigma = 1.0;  ///< track noise std, meters
  double p_d_true = 0.9;
  std::uint64_t seed = 1;

  static McConfig small_scenario(double sigma, double p_d, std::uint64_t seed) {
    return McConfig{30.0, 8, 5, sigma, p_d, seed};
  }
  static McConfig big_scenario(double sigma, double p_d, std::uint64_t seed) {
    return McConfig{50.0, 20, 12, sigma, p_d, seed};
  }
};

/// Draws one frame: object and sensor positions uniform over the area, one
/// Bernoulli(p_d_true) detection per (sensor, object), detected tracks get
/// state = truth + N(0, sigma^2 I) and covariance sigma^2 I. Track order is
/// sensor-major, object-minor; ids 1..N_T in that order.
inline ScenarioFrame gen_mc_frame(const McConfig& config) {
  if (!(config.area > 0.0) || !(config.sigma > 0.0))
    throw std::invalid_argument("area and sigma must be positive");
  if (!(config.p_d_true >= 0.0 && config.p_d_true <= 1.0))
    throw std::invalid_argument("p_d_true must be in [0, 1]");
  if (config.n_objects < 0 || config.n_sensors < 0)
    throw std::invalid_argument("counts must be nonnegative");

  Rng rng(config.seed);
  // Draws are sequenced one coordinate at a time; packing them into a vector
  // constructor would leave the stream order to the compiler.
  auto draw_point = [&]() {
    const double x = rng.uniform(0.0, config.area);
    const double y = rng.uniform(0.0, config.area);
    return Eigen::Vector2d(x, y);
  };
  ScenarioFrame frame;
  for (int o = 0; o < config.n_objects; ++o) {
    TruthObject t;
    t.id = o + 1;
    t.position = draw_point();
    frame.truth.push_back(t);
  }
  for (int s = 0; s < config.n_sensors; ++s) {
    SensorInfo info;
    info.id = s + 1;
    info.position = draw_point();
    frame.sensors.push_back(info);
  }
  const Eigen::Matrix2d cov = config.sigma * config.sigma * Eigen::Matrix2d::Identity();
  for (int s = 0; s < config.n_sensors; ++s)
    for (int o = 0; o < config.n_objects; ++o) {
      if (!rng.bernoulli(config.p_d_true)) continue;
      Track t;
      t.id = static_cast<int>(frame.tracks.size()) + 1;
      t.sensor = s + 1;
      const double nx = rng.normal();
      const double ny = rng.normal();
      t.state = frame.truth[static_cast<std::size_t>(o)].position +
                config.sigma * Eigen::Vector2d(nx, ny);
      t.covariance = cov;
      t.object_id = o + 1;
      frame.tracks.push_back(std::move(t));
    }
  return frame;
}

}  // namespace t2ta::sim
