#include <cstdio>
#include <exception>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "adaplan/config.hpp"
#include "adaplan/harness.hpp"
#include "adaplan/policy.hpp"

namespace {

std::map<std::string, std::string> parse_overrides(const std::string& section,
                                                   const std::vector<std::string>& kvs) {
  std::map<std::string, std::string> out;
  for (const std::string& kv : kvs) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config-error: override '" + kv + "' is not key=value");
    out[section + "." + kv.substr(0, eq)] = kv.substr(eq + 1);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"adaplan: synthetic driving world, dual-mode planning policy, GRPO trainer"};
  app.require_subcommand(1);

  std::string world_config_path, grpo_config_path;
  std::string out_dir = "out";
  std::vector<std::string> world_overrides, grpo_overrides;
  std::uint64_t seed = 0;
  bool seed_set = false;

  app.add_option("--world-config", world_config_path, "INI file with [world] settings");
  app.add_option("--grpo-config", grpo_config_path, "INI file with [grpo] settings");
  app.add_option("--out-dir", out_dir, "output directory")->capture_default_str();
  app.add_option("--world", world_overrides, "world override key=value (repeatable)");
  app.add_option("--grpo", grpo_overrides, "grpo override key=value (repeatable)");
  app.add_option("--seed", seed, "global rng seed (overrides grpo config)")
      ->each([&](const std::string&) { seed_set = true; });

  auto* gen = app.add_subcommand("gen-data", "generate train/val/test scene datasets");

  auto* train = app.add_subcommand("train", "warmup SFT then GRPO training");
  std::string mode_policy_str = "adaptive";
  std::string reward_suite = "full";
  train->add_option("--mode-policy", mode_policy_str, "adaptive | always-think | never-think")
      ->capture_default_str()
      ->check(CLI::IsMember({"adaptive", "always-think", "never-think"}));
  train->add_option("--reward-suite", reward_suite, "full | pf-endpoint | pf")
      ->capture_default_str()
      ->check(CLI::IsMember({"full", "pf-endpoint", "pf"}));

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  std::string checkpoint_path, data_path;
  std::string mode_override = "policy";
  int best_of_n = -1;
  eval->add_option("--checkpoint", checkpoint_path, "policy checkpoint file")->required();
  eval->add_option("--data", data_path, "scene dataset (JSONL); default regenerates the val split");
  eval->add_option("--mode-override", mode_override, "policy | think | nothink")
      ->capture_default_str()
      ->check(CLI::IsMember({"policy", "think", "nothink"}));
  eval->add_option("--best-of", best_of_n, "sampled candidates for the best-of-N column; default from config");

  auto* ablate = app.add_subcommand("ablate", "train reward-suite variants over a seed set");
  std::vector<std::uint64_t> ablate_seeds = {1, 2, 3};
  ablate->add_option("--seeds", ablate_seeds, "training seeds")->capture_default_str();

  auto* inspect = app.add_subcommand("inspect-scene", "print one generated scene as JSON");
  std::uint64_t scene_seed = 1;
  inspect->add_option("--scene-seed", scene_seed, "scene generation seed")->capture_default_str();

  // Defaults for both configs are part of --help.
  {
    const adaplan::WorldConfig wd;
    const adaplan::GrpoConfig gd;
    std::string footer = "world defaults:\n";
    footer += adaplan::dump_config(wd);
    footer += "\ngrpo defaults:\n";
    footer += adaplan::dump_config(gd);
    app.footer(footer);
  }

  CLI11_PARSE(app, argc, argv);

  try {
    adaplan::RunConfig rc;
    rc.out_dir = out_dir;
    rc.world = world_config_path.empty() ? adaplan::WorldConfig{}
                                         : adaplan::load_world_config(world_config_path);
    rc.grpo = grpo_config_path.empty() ? adaplan::GrpoConfig{}
                                       : adaplan::load_grpo_config(grpo_config_path);
    adaplan::apply_world_overrides(rc.world, parse_overrides("world", world_overrides));
    adaplan::apply_grpo_overrides(rc.grpo, parse_overrides("grpo", grpo_overrides));
    if (seed_set) rc.grpo.seed = seed;

    if (gen->parsed()) return adaplan::cmd_gen_data(rc);
    if (train->parsed()) {
      std::string mp = mode_policy_str;
      for (char& c : mp)
        if (c == '-') c = '_';
      adaplan::RewardGates gates;
      if (reward_suite == "pf") gates = {false, false};
      if (reward_suite == "pf-endpoint") gates = {true, false};
      return adaplan::cmd_train(rc, adaplan::mode_policy_from_string(mp), gates);
    }
    if (eval->parsed())
      return adaplan::cmd_eval(rc, checkpoint_path, data_path,
                               mode_override == "policy" ? "" : mode_override,
                               best_of_n < 0 ? rc.grpo.best_of_n : best_of_n);
    if (ablate->parsed()) return adaplan::cmd_ablate(rc, ablate_seeds);
    if (inspect->parsed()) return adaplan::cmd_inspect_scene(rc, scene_seed);
    std::fprintf(stderr, "error: config-error: no subcommand\n");
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
