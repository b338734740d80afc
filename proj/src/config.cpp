#include "adaplan/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "adaplan/rng.hpp"

namespace adaplan {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    throw std::runtime_error("config: bad numeric value for " + key + ": '" + v + "'");
  return out;
}

int to_int(const std::string& key, const std::string& v) {
  int out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    throw std::runtime_error("config: bad integer value for " + key + ": '" + v + "'");
  return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    throw std::runtime_error("config: bad integer value for " + key + ": '" + v + "'");
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::runtime_error("config: bad boolean value for " + key + ": '" + v + "'");
}

std::vector<double> to_vec(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::string item;
  std::stringstream ss(v);
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(to_double(key, item));
  }
  if (out.empty()) throw std::runtime_error("config: empty list for " + key);
  return out;
}

std::string vec_str(const std::vector<double>& v) {
  std::ostringstream ss;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) ss << ",";
    char buf[32];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v[i]);
    (void)ec;
    ss << std::string(buf, p);
  }
  return ss.str();
}

std::string num_str(double x) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  (void)ec;
  return std::string(buf, p);
}

}  // namespace

std::map<std::string, std::string> parse_ini(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::string section;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    size_t cut = line.find_first_of("#;");
    if (cut != std::string::npos) line = line.substr(0, cut);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw std::runtime_error("config: malformed section header at line " + std::to_string(lineno));
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config: expected key=value at line " + std::to_string(lineno));
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    if (key.empty()) throw std::runtime_error("config: empty key at line " + std::to_string(lineno));
    kv[section.empty() ? key : section + "." + key] = val;
  }
  return kv;
}

std::map<std::string, std::string> parse_ini_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_ini(ss.str());
}

void apply_world_overrides(WorldConfig& c, const std::map<std::string, std::string>& kv) {
  for (const auto& [key, val] : kv) {
    if (key.rfind("world.", 0) != 0) continue;
    std::string k = key.substr(6);
#define F(name) \
  if (k == #name) { c.name = to_double(k, val); continue; }
#define FI(name) \
  if (k == #name) { c.name = to_int(k, val); continue; }
#define FV(name) \
  if (k == #name) { c.name = to_vec(k, val); continue; }
    F(v_max) F(ego_length) F(ego_width) F(horizon) F(traj_dt) F(sim_dt)
    F(s_min) F(s_max) F(centerline_step) F(turn_kappa)
    F(half_width_wide_lo) F(half_width_wide_hi)
    F(half_width_narrow_lo) F(half_width_narrow_hi)
    F(speed_fwd_lo) F(speed_fwd_hi) F(speed_turn_lo) F(speed_turn_hi)
    F(d_bound) F(cipo_range) F(merge_range) F(merge_lat_vel) F(mi_gate)
    F(feat_speed_norm) F(bucket_near) F(bucket_far) F(bound_bucket)
    F(feat_dist_norm) F(feat_time_norm) F(bound_clear_cap)
    F(cruiser_s_lo) F(cruiser_s_hi) F(cruiser_f_lo) F(cruiser_f_hi)
    FI(max_cruisers) FV(lead_speed_factors) FV(lead_ego_speeds_fwd) FV(lead_ego_speeds_turn)
    F(merger_s_lo) F(merger_s_hi) F(merger_clear_lo) F(merger_clear_hi)
    F(merger_f_lo) F(merger_f_hi) F(merger_vlat_lo) F(merger_vlat_hi)
    F(crosser_vc_lo) F(crosser_vc_hi) F(crosser_cross_t_lo) F(crosser_cross_t_hi)
    F(mix_l1) F(mix_l2) F(mix_l3) F(l2_narrow_prob) F(p_lead) F(p_merger)
    F(extra_cruiser_prob)
    F(idm_a_max) F(idm_b) F(idm_s0) F(idm_T) F(expert_jerk_limit)
    F(expert_brake_limit) F(expert_yield_decel)
    FV(anchor_curvatures) FV(anchor_speed_factors)
    F(anchor_a_long) F(anchor_lat_budget) F(anchor_lat_budget_over)
    F(comfort_a_long) F(comfort_a_lat) F(comfort_jerk) F(ttc_tau)
    F(stopped_speed) F(ep_min_expert)
#undef F
#undef FI
#undef FV
    throw std::runtime_error("config: unknown key world." + k);
  }
}

void apply_grpo_overrides(GrpoConfig& c, const std::map<std::string, std::string>& kv) {
  for (const auto& [key, val] : kv) {
    if (key.rfind("grpo.", 0) != 0) continue;
    std::string k = key.substr(5);
    if (k == "group_size") { c.group_size = to_int(k, val); continue; }
    if (k == "clip_eps") { c.clip_eps = to_double(k, val); continue; }
    if (k == "kl_beta") { c.kl_beta = to_double(k, val); continue; }
    if (k == "lr") { c.lr = to_double(k, val); continue; }
    if (k == "epochs") { c.epochs = to_int(k, val); continue; }
    if (k == "batch_scenes") { c.batch_scenes = to_int(k, val); continue; }
    if (k == "adaptive_t") { c.adaptive_t = to_double(k, val); continue; }
    if (k == "seed") { c.seed = to_u64(k, val); continue; }
    if (k == "n_train") { c.n_train = to_int(k, val); continue; }
    if (k == "n_val") { c.n_val = to_int(k, val); continue; }
    if (k == "n_test") { c.n_test = to_int(k, val); continue; }
    if (k == "sft_lr") { c.sft_lr = to_double(k, val); continue; }
    if (k == "sft_epochs") { c.sft_epochs = to_int(k, val); continue; }
    if (k == "sft_mode_weight") { c.sft_mode_weight = to_double(k, val); continue; }
    if (k == "mode_policy") {
      if (val != "adaptive" && val != "always-think" && val != "never-think")
        throw std::runtime_error("config: mode_policy must be adaptive|always-think|never-think");
      c.mode_policy = val;
      continue;
    }
    if (k == "use_endpoint") { c.use_endpoint = to_bool(k, val); continue; }
    if (k == "use_adaptive") { c.use_adaptive = to_bool(k, val); continue; }
    if (k == "best_of_n") { c.best_of_n = to_int(k, val); continue; }
    if (k == "val_every") { c.val_every = to_int(k, val); continue; }
    throw std::runtime_error("config: unknown key grpo." + k);
  }
  if (c.group_size < 2) throw std::runtime_error("config: group_size must be >= 2");
  if (c.clip_eps <= 0.0 || c.clip_eps >= 1.0) throw std::runtime_error("config: clip_eps must be in (0,1)");
  if (c.kl_beta < 0.0) throw std::runtime_error("config: kl_beta must be >= 0");
  if (c.adaptive_t <= 0.0 || c.adaptive_t > 1.0) throw std::runtime_error("config: adaptive_t must be in (0,1]");
}

WorldConfig load_world_config(const std::string& path) {
  WorldConfig c;
  if (!path.empty()) apply_world_overrides(c, parse_ini_file(path));
  return c;
}

GrpoConfig load_grpo_config(const std::string& path) {
  GrpoConfig c;
  if (!path.empty()) apply_grpo_overrides(c, parse_ini_file(path));
  return c;
}

std::string dump_config(const WorldConfig& c) {
  std::ostringstream ss;
  ss << "[world]\n";
#define F(name) ss << #name << "=" << num_str(c.name) << "\n";
#define FV(name) ss << #name << "=" << vec_str(c.name) << "\n";
  F(v_max) F(ego_length) F(ego_width) F(horizon) F(traj_dt) F(sim_dt)
  F(s_min) F(s_max) F(centerline_step) F(turn_kappa)
  F(half_width_wide_lo) F(half_width_wide_hi)
  F(half_width_narrow_lo) F(half_width_narrow_hi)
  F(speed_fwd_lo) F(speed_fwd_hi) F(speed_turn_lo) F(speed_turn_hi)
  F(d_bound) F(cipo_range) F(merge_range) F(merge_lat_vel) F(mi_gate)
  F(feat_speed_norm) F(bucket_near) F(bucket_far) F(bound_bucket)
  F(feat_dist_norm) F(feat_time_norm) F(bound_clear_cap)
  F(cruiser_s_lo) F(cruiser_s_hi) F(cruiser_f_lo) F(cruiser_f_hi)
  F(max_cruisers) FV(lead_speed_factors) FV(lead_ego_speeds_fwd) FV(lead_ego_speeds_turn)
  F(merger_s_lo) F(merger_s_hi) F(merger_clear_lo) F(merger_clear_hi)
  F(merger_f_lo) F(merger_f_hi) F(merger_vlat_lo) F(merger_vlat_hi)
  F(crosser_vc_lo) F(crosser_vc_hi) F(crosser_cross_t_lo) F(crosser_cross_t_hi)
  F(mix_l1) F(mix_l2) F(mix_l3) F(l2_narrow_prob) F(p_lead) F(p_merger)
  F(extra_cruiser_prob)
  F(idm_a_max) F(idm_b) F(idm_s0) F(idm_T) F(expert_jerk_limit)
  F(expert_brake_limit) F(expert_yield_decel)
  FV(anchor_curvatures) FV(anchor_speed_factors)
  F(anchor_a_long) F(anchor_lat_budget) F(anchor_lat_budget_over)
  F(comfort_a_long) F(comfort_a_lat) F(comfort_jerk) F(ttc_tau)
  F(stopped_speed) F(ep_min_expert)
#undef F
#undef FV
  return ss.str();
}

std::string dump_config(const GrpoConfig& c) {
  std::ostringstream ss;
  ss << "[grpo]\n";
  ss << "group_size=" << c.group_size << "\n";
  ss << "clip_eps=" << num_str(c.clip_eps) << "\n";
  ss << "kl_beta=" << num_str(c.kl_beta) << "\n";
  ss << "lr=" << num_str(c.lr) << "\n";
  ss << "epochs=" << c.epochs << "\n";
  ss << "batch_scenes=" << c.batch_scenes << "\n";
  ss << "adaptive_t=" << num_str(c.adaptive_t) << "\n";
  ss << "seed=" << c.seed << "\n";
  ss << "n_train=" << c.n_train << "\n";
  ss << "n_val=" << c.n_val << "\n";
  ss << "n_test=" << c.n_test << "\n";
  ss << "sft_lr=" << num_str(c.sft_lr) << "\n";
  ss << "sft_epochs=" << c.sft_epochs << "\n";
  ss << "sft_mode_weight=" << num_str(c.sft_mode_weight) << "\n";
  ss << "mode_policy=" << c.mode_policy << "\n";
  ss << "use_endpoint=" << (c.use_endpoint ? 1 : 0) << "\n";
  ss << "use_adaptive=" << (c.use_adaptive ? 1 : 0) << "\n";
  ss << "best_of_n=" << c.best_of_n << "\n";
  ss << "val_every=" << c.val_every << "\n";
  return ss.str();
}

std::uint64_t config_hash(const WorldConfig& world, const GrpoConfig& grpo) {
  std::string text = dump_config(world) + dump_config(grpo);
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : text) h = (h ^ ch) * 1099511628211ull;
  return h;
}

}  // namespace adaplan
