#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "adaplan/config.hpp"
#include "adaplan/policy.hpp"
#include "adaplan/rewards.hpp"
#include "adaplan/trainer.hpp"

namespace adaplan {

// Resolved run setup: configs already loaded and overrides applied. Every
// emitted file embeds (schema_version, seed, config hash).
struct RunConfig {
  WorldConfig world;
  GrpoConfig grpo;
  std::string out_dir = ".";
};

constexpr int kSchemaVersion = 1;

// Writes <out_dir>/{train,val,test}.jsonl (header line + one record per
// scene with level label, expert waypoints, expert anchor index, and both
// serialized response styles) and prints the level histogram.
int cmd_gen_data(const RunConfig& rc);

// Warmup + GRPO; writes per-epoch and final checkpoints, training_log.jsonl,
// and the final validation report.
int cmd_train(const RunConfig& rc, ModePolicy mode_policy, RewardGates gates = {});

// Evaluates a checkpoint (on a dataset file, or the regenerated val split
// when data_path is empty) and writes eval_report.json / eval_report.txt.
// mode_override: "" (policy decides), "think", or "nothink".
int cmd_eval(const RunConfig& rc, const std::string& checkpoint_path, const std::string& data_path,
             const std::string& mode_override, int best_of_n);

// Trains the reward-suite variants (P&F, P&F+endpoint, full) on each seed
// and writes ablation_report.json / ablation_report.txt.
int cmd_ablate(const RunConfig& rc, const std::vector<std::uint64_t>& seeds);

// Prints one generated scene as JSON: classification, critical objects,
// expert plan and its score, and the policy features.
int cmd_inspect_scene(const RunConfig& rc, std::uint64_t scene_seed);

// Dataset records round-trip through these.
void write_dataset(const std::string& path, const std::vector<Scene>& scenes,
                   const WorldConfig& cfg, const GrpoConfig& gcfg, const std::string& split);
std::vector<Scene> load_dataset(const std::string& path, const WorldConfig& cfg);

std::string eval_report_json(const EvalReport& er, const RunConfig& rc, const std::string& checkpoint);
std::string eval_report_text(const EvalReport& er, const std::string& title);

}  // namespace adaplan
