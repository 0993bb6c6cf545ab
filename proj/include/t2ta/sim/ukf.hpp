#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

#include "t2ta/sim/ct.hpp"

namespace t2ta::sim {

struct Gaussian5 {
  Vec5 mean = Vec5::Zero();
  Mat5 cov = Mat5::Identity();
};

/// Unscented filter parameters for the 5-D coordinated-turn state.
/// The driving noise is white acceleration in x0/x1 plus a yaw-rate
/// disturbance, mapped onto the state through
///   G = [dt²/2·I₂ 0; dt·I₂ 0; 0 dt]
/// so Q(dt) = G diag(accel_std², accel_std², yaw_std²) Gᵀ.
struct UkfParams {
  double accel_std = 5.0;              ///< m/s², per axis
  double yaw_std = 0.08 * M_PI;        ///< rad/s
  Eigen::Matrix2d meas_noise = 4.0 * Eigen::Matrix2d::Identity();
  double alpha = 1.0;                  ///< sigma-point spread
  double beta = 2.0;                   ///< Gaussian prior weighting
  double kappa = -2.0;                 ///< 3 - n for n = 5
  double init_omega_std = 0.1;         ///< rad/s, yaw-rate prior at track birth
};

inline Mat5 process_noise_cov(double dt, const UkfParams& p) {
  Eigen::Matrix<double, 5, 3> g = Eigen::Matrix<double, 5, 3>::Zero();
  g(0, 0) = g(1, 1) = 0.5 * dt * dt;
  g(2, 0) = g(3, 1) = dt;
  g(4, 2) = dt;
  const Eigen::Vector3d w(p.accel_std * p.accel_std, p.accel_std * p.accel_std,
                          p.yaw_std * p.yaw_std);
  return g * w.asDiagonal() * g.transpose();
}

namespace detail {

/// Lower Cholesky factor with escalating jitter on failure: 1e-9·I, then
/// x10 per retry, three attempts total.
inline Mat5 robust_llt(Mat5 m) {
  double jitter = 1e-9;
  for (int attempt = 0; attempt < 4; ++attempt) {
    Eigen::LLT<Mat5> llt(m);
    if (llt.info() == Eigen::Success) return llt.matrixL();
    if (attempt == 3) break;
    m += jitter * Mat5::Identity();
    jitter *= 10.0;
  }
  throw std::runtime_error("sigma-point covariance is not positive definite");
}

}  // namespace detail

/// Unscented prediction (Wan-Merwe sigma points) through the coordinated
/// turn model with additive process noise Q(dt).
inline Gaussian5 ukf_predict(const Gaussian5& prior, double dt, const UkfParams& p) {
  constexpr int n = 5;
  const double lambda = p.alpha * p.alpha * (n + p.kappa) - n;
  const double scale = std::sqrt(n + lambda);
  const Mat5 l = detail::robust_llt(prior.cov);

  Eigen::Matrix<double, 5, 2 * n + 1> sigma;
  sigma.col(0) = ct_predict(prior.mean, dt);
  for (int i = 0; i < n; ++i) {
    sigma.col(1 + i) = ct_predict(Vec5(prior.mean + scale * l.col(i)), dt);
    sigma.col(1 + n + i) = ct_predict(Vec5(prior.mean - scale * l.col(i)), dt);
  }

  const double wm0 = lambda / (n + lambda);
  const double wc0 = wm0 + (1.0 - p.alpha * p.alpha + p.beta);
  const double wi = 0.5 / (n + lambda);

  Gaussian5 out;
  out.mean = wm0 * sigma.col(0);
  for (int i = 1; i < 2 * n + 1; ++i) out.mean += wi * sigma.col(i);
  out.cov = process_noise_cov(dt, p);
  {
    const Vec5 d = sigma.col(0) - out.mean;
    out.cov += wc0 * d * d.transpose();
  }
  for (int i = 1; i < 2 * n + 1; ++i) {
    const Vec5 d = sigma.col(i) - out.mean;
    out.cov += wi * d * d.transpose();
  }
  out.cov = 0.5 * (out.cov + out.cov.transpose()).eval();
  return out;
}

/// Linear position update, H = [I₂ 0], in Joseph form to keep the
/// covariance symmetric positive definite.
inline Gaussian5 kf_update(const Gaussian5& prior, const Eigen::Vector2d& z,
                           const UkfParams& p) {
  Eigen::Matrix<double, 2, 5> h = Eigen::Matrix<double, 2, 5>::Zero();
  h(0, 0) = h(1, 1) = 1.0;
  const Eigen::Matrix2d s = h * prior.cov * h.transpose() + p.meas_noise;
  const Eigen::Matrix<double, 5, 2> k = prior.cov * h.transpose() * s.inverse();
  Gaussian5 out;
  out.mean = prior.mean + k * (z - h * prior.mean);
  const Mat5 ikh = Mat5::Identity() - k * h;
  out.cov = ikh * prior.cov * ikh.transpose() + k * p.meas_noise * k.transpose();
  out.cov = 0.5 * (out.cov + out.cov.transpose()).eval();
  return out;
}

/// Track birth from two consecutive position measurements: position from the
/// newer one, velocity by differencing, yaw rate zero. The covariance
/// follows from the linear map (z1, z2) -> (z2, (z2-z1)/dt) plus the
/// yaw-rate prior.
inline Gaussian5 init_two_point(const Eigen::Vector2d& z1, double t1, const Eigen::Vector2d& z2,
                                double t2, const UkfParams& p) {
  const double dt = t2 - t1;
  if (!(dt > 0.0)) throw std::invalid_argument("measurements must be time-ordered");
  Gaussian5 out;
  out.mean << z2.x(), z2.y(), (z2.x() - z1.x()) / dt, (z2.y() - z1.y()) / dt, 0.0;
  out.cov = Mat5::Zero();
  const Eigen::Matrix2d r = p.meas_noise;
  out.cov.topLeftCorner<2, 2>() = r;
  out.cov.block<2, 2>(0, 2) = r / dt;
  out.cov.block<2, 2>(2, 0) = r / dt;
  out.cov.block<2, 2>(2, 2) = 2.0 * r / (dt * dt);
  out.cov(4, 4) = p.init_omega_std * p.init_omega_std;
  return out;
}

}  // namespace t2ta::sim
