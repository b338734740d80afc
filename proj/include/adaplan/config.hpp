#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace adaplan {

// Minimal INI reader: "[section]" headers, "key = value" lines, '#'/';' comments.
// Keys are returned as "section.key". Unknown keys in load_*_config are errors
// so config typos fail loudly.
std::map<std::string, std::string> parse_ini(const std::string& text);
std::map<std::string, std::string> parse_ini_file(const std::string& path);

struct WorldConfig {
  // kinematic limits and ego footprint
  double v_max = 15.0;
  double ego_length = 4.5;
  double ego_width = 2.0;

  // horizon: 8 waypoints at 0.5 s; collision/containment sweeps at 0.1 s
  double horizon = 4.0;
  double traj_dt = 0.5;
  double sim_dt = 0.1;

  // corridor: single constant-curvature lane, arc-length parameterized
  double s_min = -25.0;
  double s_max = 80.0;
  double centerline_step = 1.0;
  double turn_kappa = 0.02;
  double half_width_wide_lo = 2.4;
  double half_width_wide_hi = 3.6;
  double half_width_narrow_lo = 1.55;
  double half_width_narrow_hi = 1.95;

  // initial ego speed ranges per command
  double speed_fwd_lo = 4.0;
  double speed_fwd_hi = 11.0;
  double speed_turn_lo = 3.0;
  double speed_turn_hi = 7.0;

  // critical-object / complexity classification
  double d_bound = 1.0;
  double cipo_range = 40.0;
  double merge_range = 25.0;
  double merge_lat_vel = 0.2;
  double mi_gate = 2.0;

  // feature buckets and normalization
  double feat_speed_norm = 15.0;
  double bucket_near = 15.0;
  double bucket_far = 40.0;
  double bound_bucket = 1.25;
  double feat_dist_norm = 60.0;
  double feat_time_norm = 4.0;
  double bound_clear_cap = 3.0;

  // agent recipes
  double cruiser_s_lo = 45.0;
  double cruiser_s_hi = 70.0;
  double cruiser_f_lo = 1.0;
  double cruiser_f_hi = 1.2;
  int max_cruisers = 2;
  std::vector<double> lead_speed_factors{0.0, 0.4, 0.8};
  std::vector<double> lead_ego_speeds_fwd{8.0, 9.0};
  std::vector<double> lead_ego_speeds_turn{4.0, 6.0};
  double merger_s_lo = 10.0;
  double merger_s_hi = 24.0;
  double merger_clear_lo = 0.2;
  double merger_clear_hi = 1.2;
  double merger_f_lo = 1.0;
  double merger_f_hi = 1.2;
  double merger_vlat_lo = 0.3;
  double merger_vlat_hi = 0.8;
  double crosser_vc_lo = 1.3;
  double crosser_vc_hi = 1.7;
  double crosser_cross_t_lo = 3.0;
  double crosser_cross_t_hi = 3.6;

  // level mix for untargeted generation and dataset builds
  double mix_l1 = 0.4;
  double mix_l2 = 0.3;
  double mix_l3 = 0.3;
  double l2_narrow_prob = 0.5;
  double p_lead = 0.5;
  double p_merger = 0.25;
  double extra_cruiser_prob = 0.3;

  // expert longitudinal controller (IDM-style) and yield behavior
  double idm_a_max = 2.0;
  double idm_b = 3.0;
  double idm_s0 = 4.0;
  double idm_T = 1.5;
  double expert_jerk_limit = 4.0;
  double expert_brake_limit = 3.5;
  double expert_yield_decel = 3.4;

  // trajectory vocabulary (anchor grid)
  std::vector<double> anchor_curvatures{-0.04, -0.02, -0.008, 0.0, 0.008, 0.02, 0.04};
  std::vector<double> anchor_speed_factors{0.0, 0.4, 0.7, 1.0, 1.2};
  double anchor_a_long = 3.0;
  double anchor_lat_budget = 3.0;
  double anchor_lat_budget_over = 3.5;

  // metric thresholds
  double comfort_a_long = 4.0;
  double comfort_a_lat = 4.0;
  double comfort_jerk = 8.0;
  double ttc_tau = 1.0;
  double stopped_speed = 0.1;
  double ep_min_expert = 0.5;

  int n_waypoints() const { return static_cast<int>(horizon / traj_dt + 0.5); }
  int n_sim_samples() const { return static_cast<int>(horizon / sim_dt + 0.5) + 1; }
};

struct GrpoConfig {
  int group_size = 8;
  double clip_eps = 0.2;
  double kl_beta = 0.04;
  double lr = 0.05;
  int epochs = 12;
  int batch_scenes = 16;
  double adaptive_t = 0.9;
  std::uint64_t seed = 1;

  int n_train = 2000;
  int n_val = 500;
  int n_test = 500;

  double sft_lr = 1.5;
  int sft_epochs = 800;
  double sft_mode_weight = 1.0;

  std::string mode_policy = "adaptive";  // adaptive | always-think | never-think
  bool use_endpoint = true;
  bool use_adaptive = true;
  int best_of_n = 4;
  int val_every = 1;  // epochs between validation evals; 0 = final only
};

WorldConfig load_world_config(const std::string& path);
GrpoConfig load_grpo_config(const std::string& path);
void apply_world_overrides(WorldConfig& cfg, const std::map<std::string, std::string>& kv);
void apply_grpo_overrides(GrpoConfig& cfg, const std::map<std::string, std::string>& kv);

// Canonical key=value dump; config_hash (FNV-1a over the dump) is embedded in
// every artifact so runs can be matched to their exact configuration.
std::string dump_config(const WorldConfig& cfg);
std::string dump_config(const GrpoConfig& cfg);
std::uint64_t config_hash(const WorldConfig& world, const GrpoConfig& grpo);

}  // namespace adaplan
