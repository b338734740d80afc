#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "adaplan/config.hpp"
#include "adaplan/metrics.hpp"
#include "adaplan/policy.hpp"
#include "adaplan/rewards.hpp"
#include "adaplan/scene.hpp"
#include "adaplan/vocabulary.hpp"

namespace adaplan {

struct SftRecord {
  Scene scene;
  int expert_anchor_index = 0;  // verified argmin over vocabulary anchors
};

// Everything about a scene that the training loop needs, computed once:
// critical objects, features, vocabulary, expert reference, and per-anchor
// score tables. Policy outputs are always vocabulary anchors, so the cached
// tables reproduce score_group exactly (the serialize/parse round-trip is
// value-preserving).
struct PreparedScene {
  Scene scene;
  CriticalObjects crit;
  SceneFeatures feat;
  TrajectoryVocabulary vocab;
  Trajectory expert;
  double expert_progress = 0.0;
  int expert_anchor = 0;
  int d = 0;  // 1 when the scene is challenging (Level 2/3)
  int think_len = 0;
  std::vector<PdmScore> anchor_scores;
  std::vector<double> anchor_endpoint;
};

PreparedScene prepare_scene(const Scene& scene, const WorldConfig& cfg);
std::vector<PreparedScene> prepare_scenes(const std::vector<Scene>& scenes, const WorldConfig& cfg);

// Deterministic dataset: scene i is generated from derive_seed(seed, tag, i).
std::vector<Scene> generate_dataset(const WorldConfig& cfg, std::uint64_t seed, const char* tag,
                                    int count);

// A_i = (r_i - mean) / population std; all zeros when std < 1e-8.
std::vector<double> compute_advantages(const std::vector<double>& rewards);

struct RolloutGroup {
  const PreparedScene* scene = nullptr;
  std::vector<PolicyOutput> outputs;       // G rollouts sampled under pi_old
  std::vector<RewardBreakdown> rewards;    // scored breakdowns
  std::vector<double> advantages;
  std::vector<double> old_log_probs;
};

// Samples G rollouts under params_old (rollout i uses
// derive_seed(run_seed, "rollout", epoch, scene seed, i)) and scores them
// from the prepared tables.
RolloutGroup make_rollout_group(const PolicyParams& params_old, const PreparedScene& ps,
                                const GrpoConfig& gcfg, int epoch, ModePolicy mode_policy,
                                RewardGates gates);

struct StepStats {
  double mean_reward = 0.0;
  double mean_kl = 0.0;
  double clip_frac = 0.0;
  double think_rate = 0.0;
  double mean_surrogate = 0.0;          // mean J_i at the pre-update params
  std::vector<double> group_kl;         // per-scene KL(pi_theta || pi_ref)
  std::vector<double> group_clip_frac;  // per-scene clipped fraction
};

// One ascent step on J = (1/B) sum_groups[(1/G) sum_i min(c_i A_i,
// clip(c_i) A_i)] - beta*(1/B) sum KL(pi_theta || pi_ref). Gradients flow
// only through rollouts whose unclipped branch attains the min. Stats are
// measured at the pre-update parameters.
StepStats grpo_step(PolicyParams& params, const PolicyParams& params_old,
                    const PolicyParams& params_ref, const std::vector<RolloutGroup>& batch,
                    const GrpoConfig& gcfg, ModePolicy mode_policy = ModePolicy::Adaptive);

struct SftStats {
  int epochs_run = 0;
  double initial_loss = 0.0;
  double final_loss = 0.0;
  bool halted_early = false;
  std::vector<double> loss_trace;
};

// Full-batch gradient descent on the mean dual-mode anchor NLL plus a
// cross-entropy pull of the mode head toward (0.5, 0.5). Halts with a
// warning if the loss ever increases.
PolicyParams warmup_sft(const PolicyParams& params, const std::vector<SftRecord>& dataset,
                        const WorldConfig& wcfg, const GrpoConfig& gcfg, SftStats* stats = nullptr);

struct EvalRow {
  std::uint64_t scene_seed = 0;
  int level = 1;
  Mode mode = Mode::NonThinking;
  int traj_index = 0;
  double pdms = 0.0;
  double endpoint = 0.0;
  int token_cost = 0;
  double p_think = 0.0;
};

struct EvalReport {
  int n = 0;
  double mean_pdms = 0.0;
  double mean_nc = 0.0, mean_dac = 0.0, mean_ttc = 0.0, mean_comfort = 0.0, mean_ep = 0.0;
  double mean_endpoint = 0.0;
  double think_rate = 0.0;
  double mean_token_cost = 0.0;
  double mean_p_think = 0.0;             // mean mode-head P(Thinking)
  std::array<int, 3> level_n{};          // indexed by level - 1
  std::array<double, 3> level_pdms{};
  std::array<double, 3> level_think_rate{};
  std::array<int, 2> mode_n{};           // chosen-mode counts [Thinking, NonThinking]
  std::array<double, 2> mode_pdms{};
  int best_of_n = 0;                     // 0 disables the sampled columns
  double bon_pdms = 0.0;                 // oracle-best of N sampled candidates
  double single_sample_pdms = 0.0;       // first of the same N candidates
  std::vector<EvalRow> rows;             // per-scene rows; aggregates above are their exact means
};

// Greedy decoding: select_mode unless overridden, argmax trajectory. The
// best-of-N column samples N candidates per scene and keeps the highest
// PDMS; the single-sample column is candidate 0 of the same draw.
EvalReport evaluate(const PolicyParams& params, const std::vector<PreparedScene>& scenes,
                    const GrpoConfig& gcfg, std::optional<Mode> mode_override = std::nullopt,
                    int best_of_n = 0);
EvalReport evaluate(const PolicyParams& params, const std::vector<Scene>& scenes,
                    const WorldConfig& wcfg, const GrpoConfig& gcfg,
                    std::optional<Mode> mode_override = std::nullopt, int best_of_n = 0);

// Line-delimited JSON records: run_config header, sft summary, one record
// per (step, scene) group with per-rollout reward components, per-step
// stats, periodic validation, and a final summary.
struct TrainingLog {
  std::vector<std::string> lines;
};

struct TrainResult {
  PolicyParams params;
  PolicyParams ref;  // frozen post-warmup reference
  TrainingLog log;
  EvalReport final_val;
};

using EpochCallback = std::function<void(int epoch, const PolicyParams& params)>;

// Full pipeline: generate train/val sets, prepare them, warmup SFT (freeze
// pi_ref), then GRPO epochs with a fresh pi_old snapshot per epoch.
TrainResult train(const GrpoConfig& gcfg, const WorldConfig& wcfg,
                  ModePolicy mode_policy = ModePolicy::Adaptive, RewardGates gates = {},
                  const EpochCallback& on_epoch = nullptr);

}  // namespace adaplan
