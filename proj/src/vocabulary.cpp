#include "adaplan/vocabulary.hpp"

#include <algorithm>
#include <cmath>

namespace adaplan {

namespace {

Trajectory roll_anchor(double kappa, double factor, double ego_speed, const WorldConfig& cfg) {
  double budget = factor > 1.0 ? cfg.anchor_lat_budget_over : cfg.anchor_lat_budget;
  double gate = std::abs(kappa) > 1e-12 ? std::sqrt(budget / std::abs(kappa)) : cfg.v_max;
  double target = std::min({factor * ego_speed, gate, cfg.v_max});

  Trajectory traj;
  traj.dt = cfg.traj_dt;
  double s = 0.0, v = ego_speed;
  int steps = cfg.n_sim_samples() - 1;
  int per_wp = static_cast<int>(std::round(cfg.traj_dt / cfg.sim_dt));
  int wp = 0;
  for (int i = 1; i <= steps; ++i) {
    double dv = std::clamp(target - v, -cfg.anchor_a_long * cfg.sim_dt, cfg.anchor_a_long * cfg.sim_dt);
    v = std::max(0.0, v + dv);
    s += v * cfg.sim_dt;
    if (i % per_wp == 0 && wp < kNumWaypoints) {
      if (std::abs(kappa) < 1e-12)
        traj.waypoints[wp++] = {s, 0.0};
      else
        traj.waypoints[wp++] = {std::sin(kappa * s) / kappa, (1.0 - std::cos(kappa * s)) / kappa};
    }
  }
  return traj;
}

}  // namespace

TrajectoryVocabulary build_vocabulary(double ego_speed, const WorldConfig& cfg) {
  TrajectoryVocabulary vocab;
  vocab.n_curv = static_cast<int>(cfg.anchor_curvatures.size());
  vocab.n_speed = static_cast<int>(cfg.anchor_speed_factors.size());
  vocab.anchors.reserve(vocab.n_curv * vocab.n_speed);
  for (double kappa : cfg.anchor_curvatures)
    for (double f : cfg.anchor_speed_factors)
      vocab.anchors.push_back(roll_anchor(kappa, f, ego_speed, cfg));
  return vocab;
}

int nearest_anchor(const TrajectoryVocabulary& vocab, const Trajectory& traj) {
  int best = 0;
  double best_d = 1e300;
  for (int k = 0; k < vocab.size(); ++k) {
    double d = 0.0;
    for (int i = 0; i < kNumWaypoints; ++i)
      d += (vocab.anchors[k].waypoints[i] - traj.waypoints[i]).norm();
    if (d < best_d) {
      best_d = d;
      best = k;
    }
  }
  return best;
}

}  // namespace adaplan
