// Generates one small multi-sensor frame, associates it three ways, and
// prints GOSPA against the ground truth objects.

#include <cstdio>

#include "t2ta/baselines.hpp"
#include "t2ta/gospa.hpp"
#include "t2ta/sim/mc.hpp"
#include "t2ta/so.hpp"

int main() {
  t2ta::sim::McConfig config = t2ta::sim::McConfig::small_scenario(1.0, 0.9, 7);
  const t2ta::ScenarioFrame frame = t2ta::sim::gen_mc_frame(config);
  std::printf("frame: %zu tracks from %zu sensors, %zu objects\n", frame.tracks.size(),
              frame.sensors.size(), frame.truth.size());

  t2ta::SoConfig so;
  so.n_sweeps = 100;
  so.gate = 6.0;
  so.detection = t2ta::DetectionModel::fixed(config.p_d_true);
  so.seed = 42;
  const t2ta::HypothesisSet hypotheses = t2ta::so_run(frame.tracks, frame.sensors, so);
  const t2ta::HypothesisSet::Entry& best = hypotheses.best();
  std::printf("so: %zu distinct associations sampled, best log-likelihood %.3f\n",
              hypotheses.distinct().size(), best.log_lik);

  const t2ta::JointAssociation greedy_assoc =
      t2ta::greedy(frame.tracks, t2ta::SpatialLikelihoodKind::kProposed, 15.0, true);
  const t2ta::JointAssociation sensorwise_assoc =
      t2ta::sensorwise(frame.tracks, t2ta::SpatialLikelihoodKind::kProposed, 15.0);

  const std::vector<Eigen::Vector2d> truths = frame.truth_positions();
  const t2ta::GospaParams params;
  auto score = [&](const char* name, const t2ta::JointAssociation& assoc) {
    const t2ta::GospaResult g = t2ta::evaluate_association(assoc, frame.tracks, truths, params);
    std::printf("%-11s gospa %6.3f (loc %6.3f, missed %d, false %d)\n", name, g.total,
                g.localization, g.n_missed, g.n_false);
  };
  score("so", best.assoc);
  score("greedy", greedy_assoc);
  score("sensorwise", sensorwise_assoc);
  score("truth", t2ta::ground_truth_association(frame.tracks));
  return 0;
}
