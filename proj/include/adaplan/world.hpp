#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>

#include "adaplan/config.hpp"
#include "adaplan/scene.hpp"
#include "adaplan/trajectory.hpp"

namespace adaplan {

// Feature layout. Base features (both modes):
//   [0] 1.0 bias
//   [1] ego speed / feat_speed_norm
//   [2..4] command one-hot (forward, left, right)
//   [5..7] nearest-agent euclidean bucket one-hot (< near, [near, far), >= far or none)
//   [8..9] boundary bucket one-hot (side clearance < bound_bucket, else clear)
// Thinking mode appends exact critical-object kinematics:
//   [10] cipo1 present            [11] cipo1 arc distance / feat_dist_norm (1.0 if absent)
//   [12] cipo1 closing speed / feat_speed_norm (0.0 if absent)
//   [13] cipo2 present            [14] nearest cipo2 arc distance / feat_dist_norm (1.0 if absent)
//   [15] motion interaction present
//   [16] earliest crossing time / feat_time_norm (1.0 if absent)
//   [17] boundary side clearance clamped to [0, bound_clear_cap] / bound_clear_cap
constexpr int kFeatureBase = 10;
constexpr int kFeatureFull = 18;

LaneCorridor make_corridor(double kappa, double half_width, const WorldConfig& cfg);

// Pose/velocity of an agent at time t under its motion model.
Pose agent_pose_at(const Agent& agent, const LaneCorridor& corridor, double t);
Vec2 agent_velocity_at(const Agent& agent, const LaneCorridor& corridor, double t);
void build_future_tracks(Scene& scene, const WorldConfig& cfg);

// Deterministic scene synthesis. Same (seed, level_target, config) yields a
// bit-identical scene; throws std::runtime_error("generation-exhausted...")
// if level_target cannot be produced within 1000 attempts.
Scene generate_scene(std::uint64_t seed, std::optional<ComplexityLevel> level_target,
                     const WorldConfig& cfg);

CriticalObjects classify_critical_objects(const Scene& scene, const WorldConfig& cfg);
ComplexityLevel classify_complexity(const Scene& scene, const WorldConfig& cfg);

// Corridor-following expert: IDM longitudinal control against cipo1, yields
// to motion-interaction agents, lateral deviation identically zero.
Trajectory expert_plan(const Scene& scene, const WorldConfig& cfg);
Trajectory expert_plan(const Scene& scene, const WorldConfig& cfg, const CriticalObjects& crit);

// The pre-yield schedule (cipo1 car-following only) used to time-gate
// motion-interaction classification.
Trajectory expert_cruise_plan(const Scene& scene, const WorldConfig& cfg);

Eigen::VectorXd observe(const Scene& scene, Mode mode, const WorldConfig& cfg);
Eigen::VectorXd observe(const Scene& scene, Mode mode, const WorldConfig& cfg,
                        const CriticalObjects& crit);

// Scene record <-> line-delimited JSON (schema_version embedded). Loading
// rebuilds future tracks and the centerline from the serialized parameters.
std::string scene_to_json(const Scene& scene);
Scene scene_from_json(const std::string& line, const WorldConfig& cfg);

}  // namespace adaplan
