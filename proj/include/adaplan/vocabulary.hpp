#pragma once

#include <vector>

#include "adaplan/config.hpp"
#include "adaplan/trajectory.hpp"

namespace adaplan {

// Deterministic anchor set: curvature grid x target-speed-factor grid,
// rescaled to the scene's initial speed. Anchor speeds are rate-limited
// (anchor_a_long) toward a curvature-gated target so every anchor passes the
// comfort bounds; index = i_curvature * n_speed + i_speed.
struct TrajectoryVocabulary {
  std::vector<Trajectory> anchors;
  int n_curv = 0;
  int n_speed = 0;

  int size() const { return static_cast<int>(anchors.size()); }
  double curvature_of(int index, const WorldConfig& cfg) const {
    return cfg.anchor_curvatures[index / n_speed];
  }
  double speed_factor_of(int index, const WorldConfig& cfg) const {
    return cfg.anchor_speed_factors[index % n_speed];
  }
};

TrajectoryVocabulary build_vocabulary(double ego_speed, const WorldConfig& cfg);

// Argmin over anchors of summed waypoint L2 distance; ties to the
// lowest index.
int nearest_anchor(const TrajectoryVocabulary& vocab, const Trajectory& traj);

}  // namespace adaplan
