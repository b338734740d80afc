#include "adaplan/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "adaplan/world.hpp"

namespace adaplan {

namespace {

Obb ego_obb(const WorldConfig& cfg, const Trajectory& traj, double t) {
  return Obb{traj_pos_at(traj, t), traj_heading_at(traj, t), cfg.ego_length * 0.5,
             cfg.ego_width * 0.5};
}

const Pose& track_pose(const Agent& a, int i) {
  return a.future_track[std::min<size_t>(i, a.future_track.size() - 1)];
}

}  // namespace

int no_at_fault_collision(const Trajectory& traj, const Scene& scene, const WorldConfig& cfg) {
  if (scene.agents.empty()) return 1;
  int n = cfg.n_sim_samples();
  for (int i = 0; i < n; ++i) {
    double t = cfg.sim_dt * i;
    Obb ego = ego_obb(cfg, traj, t);
    double ego_speed = traj_vel_at(traj, t).norm();
    for (const Agent& a : scene.agents) {
      const Pose& p = track_pose(a, i);
      if (!obb_overlap(ego, a.footprint_at(p))) continue;
      if (ego_speed < cfg.stopped_speed) {
        // struck from behind while stationary: not at fault
        Vec2 rel = p.position - ego.center;
        Vec2 fwd = unit_from_heading(ego.heading);
        if (rel.dot(fwd) < 0.0) continue;
      }
      return 0;
    }
  }
  return 1;
}

int drivable_area_compliance(const Trajectory& traj, const Scene& scene, const WorldConfig& cfg) {
  const LaneCorridor& cor = scene.corridor;
  int n = cfg.n_sim_samples();
  for (int i = 0; i < n; ++i) {
    Obb ego = ego_obb(cfg, traj, cfg.sim_dt * i);
    for (const Vec2& corner : ego.corners()) {
      double s, lat;
      cor.project(corner, &s, &lat);
      if (std::abs(lat) > cor.half_width + 1e-9) return 0;
      if (s < cor.s_min - 1e-9 || s > cor.s_max + 1e-9) return 0;
    }
  }
  return 1;
}

int time_to_collision(const Trajectory& traj, const Scene& scene, const WorldConfig& cfg) {
  if (scene.agents.empty()) return 1;
  int n = cfg.n_sim_samples();
  int n_tau = static_cast<int>(std::round(cfg.ttc_tau / cfg.sim_dt));
  for (int i = 0; i < n; ++i) {
    double t = cfg.sim_dt * i;
    Vec2 ego_pos = traj_pos_at(traj, t);
    Vec2 ego_vel = traj_vel_at(traj, t);
    double ego_heading = traj_heading_at(traj, t);
    for (const Agent& a : scene.agents) {
      const Pose& p = track_pose(a, i);
      Vec2 agent_vel = agent_velocity_at(a, scene.corridor, t);
      for (int k = 1; k <= n_tau; ++k) {
        double tau = cfg.sim_dt * k;
        Obb ego{ego_pos + ego_vel * tau, ego_heading, cfg.ego_length * 0.5, cfg.ego_width * 0.5};
        Obb other{p.position + agent_vel * tau, p.heading, a.length * 0.5, a.width * 0.5};
        if (obb_overlap(ego, other)) return 0;
      }
    }
  }
  return 1;
}

int comfort(const Trajectory& traj, const Scene& scene, const WorldConfig& cfg) {
  TrajKinematics k = compute_kinematics(traj, scene.ego.speed);
  for (int i = 0; i < kNumWaypoints; ++i) {
    if (std::abs(k.a_long[i]) > cfg.comfort_a_long) return 0;
    if (std::abs(k.a_lat[i]) > cfg.comfort_a_lat) return 0;
  }
  for (double j : k.jerk)
    if (j > cfg.comfort_jerk) return 0;
  return 1;
}

double arc_progress(const Trajectory& traj, const Scene& scene) {
  double s, lat;
  scene.corridor.project(traj.waypoints.back(), &s, &lat);
  return s;
}

double ego_progress(const Trajectory& traj, const Scene& scene, const WorldConfig& cfg,
                    double expert_progress) {
  if (expert_progress < cfg.ep_min_expert) return 1.0;
  return std::clamp(arc_progress(traj, scene) / expert_progress, 0.0, 1.0);
}

double ego_progress(const Trajectory& traj, const Scene& scene, const WorldConfig& cfg) {
  return ego_progress(traj, scene, cfg, arc_progress(expert_plan(scene, cfg), scene));
}

PdmScore pdm_score(const Trajectory& traj, const Scene& scene, const WorldConfig& cfg,
                   double expert_progress) {
  PdmScore s;
  s.nc = no_at_fault_collision(traj, scene, cfg);
  s.dac = drivable_area_compliance(traj, scene, cfg);
  s.ttc = time_to_collision(traj, scene, cfg);
  s.comfort = comfort(traj, scene, cfg);
  s.ep = ego_progress(traj, scene, cfg, expert_progress);
  s.pdms = aggregate_pdms(s.nc, s.dac, s.ep, s.ttc, s.comfort);
  return s;
}

PdmScore pdm_score(const Trajectory& traj, const Scene& scene, const WorldConfig& cfg) {
  return pdm_score(traj, scene, cfg, arc_progress(expert_plan(scene, cfg), scene));
}

std::pair<int, PdmScore> select_best_of_n(const std::vector<Trajectory>& candidates,
                                          const Scene& scene, const WorldConfig& cfg) {
  if (candidates.empty()) throw std::runtime_error("empty-candidate-list");
  double expert_progress = arc_progress(expert_plan(scene, cfg), scene);
  int best = 0;
  PdmScore best_score = pdm_score(candidates[0], scene, cfg, expert_progress);
  for (size_t i = 1; i < candidates.size(); ++i) {
    PdmScore s = pdm_score(candidates[i], scene, cfg, expert_progress);
    if (s.pdms > best_score.pdms) {
      best = static_cast<int>(i);
      best_score = s;
    }
  }
  return {best, best_score};
}

}  // namespace adaplan
