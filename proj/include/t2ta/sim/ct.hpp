#pragma once

#include <Eigen/Dense>

#include <cmath>

namespace t2ta::sim {

/// Below this yaw rate the coordinated-turn propagation degenerates
/// numerically and a nearly-constant-velocity step is used instead.
inline constexpr double kOmegaEps = 1e-4;

using Vec5 = Eigen::Matrix<double, 5, 1>;
using Mat5 = Eigen::Matrix<double, 5, 5>;

/// Ground-truth object state: planar position, Cartesian velocity, yaw rate.
struct ObjectState {
  double x0 = 0.0, x1 = 0.0;
  double v0 = 0.0, v1 = 0.0;
  double omega = 0.0;
  bool is_vru = false;

  Eigen::Vector2d position() const { return {x0, x1}; }
  double speed() const { return std::hypot(v0, v1); }
};

/// Closed-form coordinated-turn propagation of [x0, x1, v0, v1, omega] over
/// dt seconds; falls back to constant velocity for |omega| < kOmegaEps.
inline Vec5 ct_predict(const Vec5& x, double dt) {
  const double w = x(4);
  Vec5 out;
  if (std::abs(w) < kOmegaEps) {
    out << x(0) + x(2) * dt, x(1) + x(3) * dt, x(2), x(3), w;
    return out;
  }
  const double s = std::sin(w * dt);
  const double c = std::cos(w * dt);
  out << x(0) + (x(2) * s - x(3) * (1.0 - c)) / w,
      x(1) + (x(2) * (1.0 - c) + x(3) * s) / w,
      x(2) * c - x(3) * s,
      x(2) * s + x(3) * c,
      w;
  return out;
}

inline ObjectState ct_predict(const ObjectState& o, double dt) {
  Vec5 x;
  x << o.x0, o.x1, o.v0, o.v1, o.omega;
  const Vec5 y = ct_predict(x, dt);
  ObjectState out;
  out.x0 = y(0);
  out.x1 = y(1);
  out.v0 = y(2);
  out.v1 = y(3);
  out.omega = y(4);
  out.is_vru = o.is_vru;
  return out;
}

}  // namespace t2ta::sim
