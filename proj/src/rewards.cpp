#include "adaplan/rewards.hpp"

#include <cmath>

#include "adaplan/metrics.hpp"

namespace adaplan {

int format_reward(const Response& resp) {
  return resp.tags_ok && resp.trajectory.has_value() ? 1 : 0;
}

double endpoint_reward(const std::optional<Trajectory>& traj, const Trajectory& expert) {
  if (!traj) return 0.0;
  Vec2 d = traj->endpoint() - expert.endpoint();
  double l1 = std::abs(d.x) + std::abs(d.y);
  if (l1 < 2.0) return 1.0;
  if (l1 < 4.0) return 0.8;
  if (l1 < 6.0) return 0.6;
  if (l1 < 10.0) return 0.4;
  if (l1 < 15.0) return 0.2;
  return 0.0;
}

std::pair<int, int> adaptive_think_reward(const AdaptiveRewardInputs& in) {
  if (in.d == 0) {
    if (in.s_think > in.s_nothink && in.s_think > in.t && in.c_think > in.c_nothink)
      return {1, 0};  // corrected to challenging
    return {0, 1};    // maintained as simple
  }
  if (in.s_nothink > in.s_think && in.s_nothink > in.t && in.c_nothink > in.c_think)
    return {0, 1};  // corrected to simple
  return {1, 0};    // maintained as challenging
}

std::vector<RewardBreakdown> score_group(const std::vector<Response>& group, const Scene& scene,
                                         const Trajectory& expert, double t, const WorldConfig& cfg,
                                         const RewardGates& gates) {
  double expert_progress = arc_progress(expert, scene);
  std::vector<RewardBreakdown> out(group.size());

  AdaptiveRewardInputs in;
  in.t = t;
  in.d = is_challenging(scene.complexity) ? 1 : 0;
  for (size_t i = 0; i < group.size(); ++i) {
    const Response& r = group[i];
    out[i].r_fmt = format_reward(r);
    if (r.trajectory) out[i].r_traj = pdm_score(*r.trajectory, scene, cfg, expert_progress).pdms;
    out[i].r_endpoint = gates.endpoint ? endpoint_reward(r.trajectory, expert) : 0.0;
    if (r.mode == Mode::Thinking) {
      in.s_think += out[i].r_traj;
      in.c_think += 1;
    } else {
      in.s_nothink += out[i].r_traj;
      in.c_nothink += 1;
    }
  }
  if (in.c_think > 0) in.s_think /= in.c_think;
  if (in.c_nothink > 0) in.s_nothink /= in.c_nothink;

  auto [rw_think, rw_nothink] = adaptive_think_reward(in);
  for (size_t i = 0; i < group.size(); ++i) {
    if (gates.adaptive)
      out[i].r_adaptive = group[i].mode == Mode::Thinking ? rw_think : rw_nothink;
    out[i].total = out[i].r_traj + out[i].r_fmt + out[i].r_endpoint + out[i].r_adaptive;
  }
  return out;
}

}  // namespace adaplan
