#pragma once

#include <utility>
#include <vector>

#include "adaplan/config.hpp"
#include "adaplan/response.hpp"
#include "adaplan/scene.hpp"
#include "adaplan/trajectory.hpp"

namespace adaplan {

struct RewardBreakdown {
  double r_traj = 0.0;
  int r_fmt = 0;
  double r_endpoint = 0.0;
  int r_adaptive = 0;
  double total = 0.0;
};

// Group statistics feeding the adaptive think reward: per-mode means of
// r_traj (0 when a mode is absent), rollout counts, threshold t, and the
// scene tag d (0 simple, 1 challenging).
struct AdaptiveRewardInputs {
  double s_think = 0.0;
  double s_nothink = 0.0;
  int c_think = 0;
  int c_nothink = 0;
  double t = 0.9;
  int d = 0;
};

// Optional component gates for the reward-design ablation. PDMS and format
// are always active; the suite degrades from full to P&F+endpoint to P&F.
struct RewardGates {
  bool endpoint = true;
  bool adaptive = true;
};

int format_reward(const Response& resp);

// L1 distance between final waypoints, strict thresholds: 1.0 (<2 m),
// 0.8 (<4), 0.6 (<6), 0.4 (<10), 0.2 (<15), else 0; absent trajectory -> 0.
double endpoint_reward(const std::optional<Trajectory>& traj, const Trajectory& expert);

// (reward_thinking, reward_nonthinking); each rollout receives its own
// mode's value. Exactly one of the pair is 1.
std::pair<int, int> adaptive_think_reward(const AdaptiveRewardInputs& in);

std::vector<RewardBreakdown> score_group(const std::vector<Response>& group, const Scene& scene,
                                         const Trajectory& expert, double t, const WorldConfig& cfg,
                                         const RewardGates& gates = RewardGates{});

}  // namespace adaplan
