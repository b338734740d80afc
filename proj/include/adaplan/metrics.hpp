#pragma once

#include <utility>
#include <vector>

#include "adaplan/config.hpp"
#include "adaplan/scene.hpp"
#include "adaplan/trajectory.hpp"

namespace adaplan {

struct PdmScore {
  int nc = 0;
  int dac = 0;
  int ttc = 0;
  int comfort = 0;
  double ep = 0.0;
  double pdms = 0.0;
};

// The exact aggregation; also used standalone by the acceptance checks.
inline double aggregate_pdms(int nc, int dac, double ep, int ttc, int comfort) {
  return nc * dac * (5.0 * ep + 5.0 * ttc + 2.0 * comfort) / 12.0;
}

// All sub-metrics sweep at sim_dt over the horizon. Collisions exclude the
// case where a stationary ego is struck from behind.
int no_at_fault_collision(const Trajectory& traj, const Scene& scene, const WorldConfig& cfg);
int drivable_area_compliance(const Trajectory& traj, const Scene& scene, const WorldConfig& cfg);
int time_to_collision(const Trajectory& traj, const Scene& scene, const WorldConfig& cfg);
int comfort(const Trajectory& traj, const Scene& scene, const WorldConfig& cfg);

// Arc-length progress relative to the expert plan, clipped to [0,1]; expert
// progress below ep_min_expert returns 1 (stationary convention).
double ego_progress(const Trajectory& traj, const Scene& scene, const WorldConfig& cfg);
double ego_progress(const Trajectory& traj, const Scene& scene, const WorldConfig& cfg,
                    double expert_progress);
double arc_progress(const Trajectory& traj, const Scene& scene);

PdmScore pdm_score(const Trajectory& traj, const Scene& scene, const WorldConfig& cfg);
PdmScore pdm_score(const Trajectory& traj, const Scene& scene, const WorldConfig& cfg,
                   double expert_progress);

// Argmax of pdm_score over candidates, ties to the lowest index.
std::pair<int, PdmScore> select_best_of_n(const std::vector<Trajectory>& candidates,
                                          const Scene& scene, const WorldConfig& cfg);

}  // namespace adaplan
