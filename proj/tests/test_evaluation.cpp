#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "t2ta/core.hpp"
#include "t2ta/fusion.hpp"
#include "t2ta/gospa.hpp"
#include "t2ta/likelihood.hpp"
#include "t2ta/rng.hpp"
#include "t2ta/sim/mc.hpp"

namespace {

t2ta::Track make_track(int id, int sensor, double x, double y, double var = 1.0) {
  t2ta::Track t;
  t.id = id;
  t.sensor = sensor;
  t.state = Eigen::Vector2d(x, y);
  t.covariance = var * Eigen::Matrix2d::Identity();
  return t;
}

Eigen::Matrix2d random_spd(t2ta::Rng& rng) {
  Eigen::Matrix2d m;
  m << rng.normal(), rng.normal(), rng.normal(), rng.normal();
  return m * m.transpose() + 0.2 * Eigen::Matrix2d::Identity();
}

std::vector<Eigen::Vector2d> random_points(t2ta::Rng& rng, std::size_t n) {
  std::vector<Eigen::Vector2d> out;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = rng.uniform(0.0, 20.0);
    const double y = rng.uniform(0.0, 20.0);
    out.emplace_back(x, y);
  }
  return out;
}

}  // namespace

TEST(FastCiWeights, SingletonAndEqualInformation) {
  EXPECT_EQ(t2ta::fast_ci_weights({Eigen::Matrix2d::Identity()}), (std::vector<double>{1.0}));
  const auto two = t2ta::fast_ci_weights({Eigen::Matrix2d::Identity(), Eigen::Matrix2d::Identity()});
  ASSERT_EQ(two.size(), 2u);
  EXPECT_NEAR(two[0], 0.5, 1e-12);
  EXPECT_NEAR(two[1], 0.5, 1e-12);
  const auto three = t2ta::fast_ci_weights(
      {2.0 * Eigen::Matrix2d::Identity(), 2.0 * Eigen::Matrix2d::Identity(),
       2.0 * Eigen::Matrix2d::Identity()});
  for (double w : three) EXPECT_NEAR(w, 1.0 / 3.0, 1e-12);
}

TEST(FastCiWeights, FavorsTheInformativeEstimate) {
  // P1 = I, P2 = 100 I: the closed form gives w1 = 100/101.
  const auto w = t2ta::fast_ci_weights({Eigen::Matrix2d::Identity(), 0.01 * Eigen::Matrix2d::Identity()});
  EXPECT_NEAR(w[0], 0.9900990099009901, 1e-12);
  EXPECT_NEAR(w[1], 0.0099009900990099, 1e-12);
}

TEST(FastCiWeights, NonnegativeAndNormalizedOnRandomInput) {
  t2ta::Rng rng(41);
  for (int it = 0; it < 200; ++it) {
    const std::size_t n = 2 + rng.below(4);
    std::vector<Eigen::Matrix2d> infos;
    for (std::size_t i = 0; i < n; ++i) infos.push_back(random_spd(rng));
    const auto w = t2ta::fast_ci_weights(infos);
    double sum = 0.0;
    for (double wi : w) {
      EXPECT_GE(wi, -1e-12);
      sum += wi;
    }
    EXPECT_NEAR(sum, 1.0, 1e-9);
  }
}

TEST(FastCiWeights, RejectsEmptyAndDegenerateInput) {
  EXPECT_THROW(t2ta::fast_ci_weights({}), std::invalid_argument);
  EXPECT_THROW(t2ta::fast_ci_weights({Eigen::Matrix2d::Zero(), Eigen::Matrix2d::Zero()}),
               std::invalid_argument);
}

TEST(FuseCi, SingletonPassesThrough) {
  const std::vector<t2ta::Track> tracks = {make_track(1, 1, 2, 3, 1.7)};
  const int one[] = {1};
  const auto fused = t2ta::fuse_ci(tracks, std::span<const int>(one));
  EXPECT_EQ(fused.mean, Eigen::Vector2d(2, 3));
  EXPECT_TRUE(fused.cov.isApprox(1.7 * Eigen::Matrix2d::Identity()));
  EXPECT_EQ(fused.members, (std::vector<int>{1}));
}

TEST(FuseCi, EqualCovariancesKeepTheirCovariance) {
  // With equal member covariances P the CI information sum collapses back to
  // P^-1: the mean averages but the covariance does not shrink.
  const std::vector<t2ta::Track> tracks = {make_track(1, 1, 0, 0, 2.0), make_track(2, 2, 1, 0, 2.0)};
  const int pair[] = {1, 2};
  const auto fused = t2ta::fuse_ci(tracks, std::span<const int>(pair));
  EXPECT_TRUE(fused.mean.isApprox(Eigen::Vector2d(0.5, 0.0), 1e-12));
  EXPECT_TRUE(fused.cov.isApprox(2.0 * Eigen::Matrix2d::Identity(), 1e-12));
}

TEST(FuseCi, NeverUnderstatesTheNaiveFusion) {
  // CI is conservative: fused_ci_cov - naive_info_fusion_cov stays PSD.
  t2ta::Rng rng(42);
  for (int it = 0; it < 200; ++it) {
    std::vector<t2ta::Track> tracks;
    const int n = 2 + static_cast<int>(rng.below(3));
    for (int i = 1; i <= n; ++i) {
      auto t = make_track(i, i, rng.uniform(0.0, 5.0), rng.uniform(0.0, 5.0));
      t.covariance = random_spd(rng);
      tracks.push_back(t);
    }
    std::vector<int> members(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) members[static_cast<std::size_t>(i)] = i + 1;
    const auto ci = t2ta::fuse_ci(tracks, members);
    const auto naive = t2ta::fuse_cluster(tracks, members);
    const Eigen::Vector2d eig =
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(ci.cov - naive.second).eigenvalues();
    EXPECT_GE(eig.minCoeff(), -1e-9);
  }
}

TEST(FuseAssociation, FusesClustersInIdOrder) {
  const std::vector<t2ta::Track> tracks = {make_track(1, 1, 0, 0), make_track(2, 2, 10, 0),
                                           make_track(3, 2, 1, 0)};
  const auto fused = t2ta::fuse_association(t2ta::JointAssociation{{1, 2, 1}}, tracks);
  ASSERT_EQ(fused.size(), 2u);
  EXPECT_EQ(fused[0].members, (std::vector<int>{1, 3}));
  EXPECT_EQ(fused[1].members, (std::vector<int>{2}));
  EXPECT_NEAR(fused[0].mean.x(), 0.5, 1e-12);
  EXPECT_THROW(t2ta::fuse_association(t2ta::JointAssociation{{1, 2}}, tracks),
               std::invalid_argument);
}

TEST(Gospa, HandValues) {
  const t2ta::GospaParams params;
  const std::vector<Eigen::Vector2d> origin = {{0.0, 0.0}};

  const auto zero = t2ta::gospa(origin, origin, params);
  EXPECT_DOUBLE_EQ(zero.total, 0.0);
  EXPECT_DOUBLE_EQ(zero.localization, 0.0);
  EXPECT_EQ(zero.n_missed, 0);
  EXPECT_EQ(zero.n_false, 0);

  const auto miss = t2ta::gospa({}, origin, params);
  EXPECT_DOUBLE_EQ(miss.total, 5.0);
  EXPECT_EQ(miss.n_missed, 1);
  EXPECT_DOUBLE_EQ(miss.missed_cost, 5.0);
  EXPECT_EQ(miss.n_false, 0);

  const auto false_alarm = t2ta::gospa(origin, {}, params);
  EXPECT_DOUBLE_EQ(false_alarm.total, 5.0);
  EXPECT_EQ(false_alarm.n_false, 1);

  const auto shifted = t2ta::gospa({{3.0, 0.0}}, origin, params);
  EXPECT_DOUBLE_EQ(shifted.total, 3.0);
  EXPECT_DOUBLE_EQ(shifted.localization, 3.0);

  // Beyond (or at) the cutoff a pair decomposes into one miss + one false.
  const auto far = t2ta::gospa({{20.0, 0.0}}, origin, params);
  EXPECT_DOUBLE_EQ(far.total, 10.0);
  EXPECT_EQ(far.n_missed, 1);
  EXPECT_EQ(far.n_false, 1);
  const auto at_cutoff = t2ta::gospa({{10.0, 0.0}}, origin, params);
  EXPECT_DOUBLE_EQ(at_cutoff.total, 10.0);

  const auto empty = t2ta::gospa({}, {}, params);
  EXPECT_DOUBLE_EQ(empty.total, 0.0);
}

TEST(Gospa, ExtraFalseEstimateAddsExactlyHalfCutoff) {
  const t2ta::GospaParams params;  // p = 1
  const std::vector<Eigen::Vector2d> truths = {{0.0, 0.0}, {8.0, 0.0}};
  const std::vector<Eigen::Vector2d> est = {{0.5, 0.0}, {8.0, 0.5}};
  const auto base = t2ta::gospa(est, truths, params);
  auto extra = est;
  extra.emplace_back(100.0, 100.0);
  const auto more = t2ta::gospa(extra, truths, params);
  EXPECT_NEAR(more.total, base.total + 5.0, 1e-12);
  EXPECT_EQ(more.n_false, base.n_false + 1);
}

TEST(Gospa, HigherOrderCombinesInPNorm) {
  t2ta::GospaParams params;
  params.p = 2.0;
  const std::vector<Eigen::Vector2d> truths = {{0.0, 0.0}, {4.0, 0.0}};
  const std::vector<Eigen::Vector2d> est = {{1.0, 0.0}, {4.0, 3.0}};
  const auto r = t2ta::gospa(est, truths, params);
  EXPECT_NEAR(r.total, std::sqrt(10.0), 1e-12);
  EXPECT_NEAR(r.localization, std::sqrt(10.0), 1e-12);
}

TEST(Gospa, IsSymmetricInItsArguments) {
  t2ta::Rng rng(43);
  const t2ta::GospaParams params;
  for (int it = 0; it < 300; ++it) {
    const auto a = random_points(rng, rng.below(5));
    const auto b = random_points(rng, rng.below(5));
    const auto ab = t2ta::gospa(a, b, params);
    const auto ba = t2ta::gospa(b, a, params);
    EXPECT_NEAR(ab.total, ba.total, 1e-9);
    EXPECT_EQ(ab.n_missed, ba.n_false);
    EXPECT_EQ(ab.n_false, ba.n_missed);
  }
}

TEST(Gospa, SatisfiesTheTriangleInequality) {
  t2ta::Rng rng(44);
  const t2ta::GospaParams params;
  for (int it = 0; it < 1000; ++it) {
    const auto a = random_points(rng, rng.below(5));
    const auto b = random_points(rng, rng.below(5));
    const auto c = random_points(rng, rng.below(5));
    const double ac = t2ta::gospa(a, c, params).total;
    const double ab = t2ta::gospa(a, b, params).total;
    const double bc = t2ta::gospa(b, c, params).total;
    EXPECT_LE(ac, ab + bc + 1e-9);
    EXPECT_GE(ac, 0.0);
    EXPECT_NEAR(t2ta::gospa(a, a, params).total, 0.0, 1e-12);
  }
}

TEST(Gospa, ValidatesParameters) {
  const std::vector<Eigen::Vector2d> pts = {{0.0, 0.0}};
  t2ta::GospaParams bad;
  bad.alpha = 1.0;
  EXPECT_THROW(t2ta::gospa(pts, pts, bad), std::invalid_argument);
  bad = {};
  bad.c = 0.0;
  EXPECT_THROW(t2ta::gospa(pts, pts, bad), std::invalid_argument);
  bad = {};
  bad.p = 0.5;
  EXPECT_THROW(t2ta::gospa(pts, pts, bad), std::invalid_argument);
}

TEST(EvaluateAssociation, PerfectAssociationOfNoiselessTracksScoresZero) {
  // Two objects seen noiselessly by two sensors.
  std::vector<t2ta::Track> tracks = {make_track(1, 1, 0, 0), make_track(2, 1, 10, 0),
                                     make_track(3, 2, 0, 0), make_track(4, 2, 10, 0)};
  tracks[0].object_id = 1;
  tracks[1].object_id = 2;
  tracks[2].object_id = 1;
  tracks[3].object_id = 2;
  const std::vector<Eigen::Vector2d> truths = {{0.0, 0.0}, {10.0, 0.0}};
  const auto gt = t2ta::ground_truth_association(tracks);
  EXPECT_EQ(gt.assignment, (std::vector<int>{1, 2, 1, 2}));
  EXPECT_DOUBLE_EQ(t2ta::evaluate_association(gt, tracks, truths).total, 0.0);

  // Leaving every track alone instead produces one false estimate per
  // duplicate: (n_sensors - 1) * n_objects * c/2 in total.
  const auto singletons = t2ta::JointAssociation{{1, 2, 3, 4}};
  EXPECT_DOUBLE_EQ(t2ta::evaluate_association(singletons, tracks, truths).total, 10.0);
}

TEST(EvaluateAssociation, NoisyGroundTruthBeatsSingletonsOnAverage) {
  double gt_sum = 0.0;
  double single_sum = 0.0;
  int frames = 0;
  for (int seed = 1; seed <= 100; ++seed) {
    const auto frame =
        t2ta::sim::gen_mc_frame(t2ta::sim::McConfig::small_scenario(1.0, 0.9, 300 + seed));
    if (frame.tracks.empty()) continue;
    const auto truths = frame.truth_positions();
    const auto gt = t2ta::ground_truth_association(frame.tracks);
    gt_sum += t2ta::evaluate_association(gt, frame.tracks, truths).total;
    std::vector<int> ids(frame.tracks.size());
    for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<int>(i) + 1;
    single_sum +=
        t2ta::evaluate_association(t2ta::JointAssociation{ids}, frame.tracks, truths).total;
    ++frames;
  }
  ASSERT_GT(frames, 90);
  EXPECT_GT(gt_sum, 0.0);  // noisy tracks never score exactly zero
  EXPECT_LT(gt_sum / frames, single_sum / frames);
}

TEST(GroundTruthAssociation, GroupsByLabelAndIsolatesUnlabeled) {
  std::vector<t2ta::Track> tracks = {make_track(1, 1, 0, 0), make_track(2, 2, 1, 0),
                                     make_track(3, 3, 2, 0), make_track(4, 2, 3, 0)};
  tracks[0].object_id = 7;
  tracks[1].object_id = 9;
  tracks[2].object_id = 7;
  // tracks[3] stays unlabeled.
  const auto gt = t2ta::ground_truth_association(tracks);
  EXPECT_EQ(gt.assignment, (std::vector<int>{1, 2, 1, 3}));
  EXPECT_TRUE(t2ta::is_canonical(gt));

  const auto none = t2ta::ground_truth_association({make_track(1, 1, 0, 0), make_track(2, 2, 1, 0)});
  EXPECT_EQ(none.assignment, (std::vector<int>{1, 2}));
}
