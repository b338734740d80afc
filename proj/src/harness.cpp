#include "adaplan/harness.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "adaplan/metrics.hpp"
#include "adaplan/response.hpp"
#include "adaplan/rng.hpp"
#include "adaplan/vocabulary.hpp"
#include "adaplan/world.hpp"

namespace adaplan {

namespace {

using ordered_json = nlohmann::ordered_json;
namespace fs = std::filesystem;

const char* mode_name(Mode m) { return m == Mode::Thinking ? "thinking" : "non_thinking"; }

void write_text_file(const std::string& path, const std::string& content) {
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("io-error: cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw std::runtime_error("io-error: short write on '" + path + "'");
}

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

ordered_json pdm_json(const PdmScore& s) {
  ordered_json j;
  j["pdms"] = s.pdms;
  j["nc"] = s.nc;
  j["dac"] = s.dac;
  j["ttc"] = s.ttc;
  j["comfort"] = s.comfort;
  j["ep"] = s.ep;
  return j;
}

}  // namespace

void write_dataset(const std::string& path, const std::vector<Scene>& scenes,
                   const WorldConfig& cfg, const GrpoConfig& gcfg, const std::string& split) {
  std::string out;
  {
    ordered_json h;
    h["record"] = "header";
    h["schema_version"] = kSchemaVersion;
    h["seed"] = gcfg.seed;
    h["config_hash"] = config_hash(cfg, gcfg);
    h["split"] = split;
    h["count"] = scenes.size();
    out += h.dump();
    out += '\n';
  }
  for (const Scene& s : scenes) {
    const CriticalObjects crit = classify_critical_objects(s, cfg);
    const TrajectoryVocabulary vocab = build_vocabulary(s.ego.speed, cfg);
    const Trajectory expert = expert_plan(s, cfg, crit);
    const int anchor = nearest_anchor(vocab, expert);

    ordered_json j;
    j["record"] = "scene";
    j["level"] = static_cast<int>(s.complexity);
    j["scene"] = ordered_json::parse(scene_to_json(s));
    ordered_json wp = ordered_json::array();
    for (const Vec2& p : expert.waypoints) wp.push_back({p.x, p.y});
    j["expert"] = wp;
    j["expert_anchor_index"] = anchor;
    j["response_think"] = serialize_response(Mode::Thinking, think_template(crit), vocab.anchors[anchor]);
    j["response_nothink"] = serialize_response(Mode::NonThinking, "", vocab.anchors[anchor]);
    out += j.dump();
    out += '\n';
  }
  write_text_file(path, out);
}

std::vector<Scene> load_dataset(const std::string& path, const WorldConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("io-error: cannot read dataset '" + path + "'");
  std::vector<Scene> scenes;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    ordered_json j;
    try {
      j = ordered_json::parse(line);
    } catch (const std::exception& e) {
      throw std::runtime_error("data-error: " + path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    if (j.value("record", "") != "scene") continue;
    scenes.push_back(scene_from_json(j.at("scene").dump(), cfg));
  }
  if (scenes.empty()) throw std::runtime_error("data-error: no scene records in '" + path + "'");
  return scenes;
}

int cmd_gen_data(const RunConfig& rc) {
  const struct {
    const char* split;
    const char* tag;
    int count;
  } splits[] = {{"train", "train-scene", rc.grpo.n_train},
                {"val", "val-scene", rc.grpo.n_val},
                {"test", "test-scene", rc.grpo.n_test}};
  for (const auto& sp : splits) {
    const std::vector<Scene> scenes = generate_dataset(rc.world, rc.grpo.seed, sp.tag, sp.count);
    write_dataset(rc.out_dir + "/" + sp.split + ".jsonl", scenes, rc.world, rc.grpo, sp.split);
    int hist[3] = {0, 0, 0};
    for (const Scene& s : scenes) hist[static_cast<int>(s.complexity) - 1]++;
    std::printf("%s: %d scenes | level1 %d (%.1f%%) level2 %d (%.1f%%) level3 %d (%.1f%%)\n",
                sp.split, sp.count, hist[0], 100.0 * hist[0] / sp.count, hist[1],
                100.0 * hist[1] / sp.count, hist[2], 100.0 * hist[2] / sp.count);
  }
  return 0;
}

std::string eval_report_json(const EvalReport& er, const RunConfig& rc, const std::string& checkpoint) {
  ordered_json j;
  j["record"] = "eval_report";
  j["schema_version"] = kSchemaVersion;
  j["seed"] = rc.grpo.seed;
  j["config_hash"] = config_hash(rc.world, rc.grpo);
  j["checkpoint"] = checkpoint;
  j["n"] = er.n;
  j["mean_pdms"] = er.mean_pdms;
  j["mean_nc"] = er.mean_nc;
  j["mean_dac"] = er.mean_dac;
  j["mean_ttc"] = er.mean_ttc;
  j["mean_comfort"] = er.mean_comfort;
  j["mean_ep"] = er.mean_ep;
  j["mean_endpoint"] = er.mean_endpoint;
  j["think_rate"] = er.think_rate;
  j["mean_token_cost"] = er.mean_token_cost;
  j["mean_p_think"] = er.mean_p_think;
  ordered_json levels = ordered_json::array();
  for (int l = 0; l < 3; ++l) {
    ordered_json lv;
    lv["level"] = l + 1;
    lv["n"] = er.level_n[l];
    lv["pdms"] = er.level_pdms[l];
    lv["think_rate"] = er.level_think_rate[l];
    levels.push_back(lv);
  }
  j["levels"] = levels;
  ordered_json modes;
  for (int m = 0; m < 2; ++m) {
    ordered_json mv;
    mv["n"] = er.mode_n[m];
    mv["pdms"] = er.mode_pdms[m];
    modes[mode_name(static_cast<Mode>(m))] = mv;
  }
  j["modes"] = modes;
  if (er.best_of_n > 0) {
    j["best_of_n"] = er.best_of_n;
    j["bon_pdms"] = er.bon_pdms;
    j["single_sample_pdms"] = er.single_sample_pdms;
  }
  ordered_json rows = ordered_json::array();
  for (const EvalRow& r : er.rows) {
    ordered_json rj;
    rj["scene_seed"] = r.scene_seed;
    rj["level"] = r.level;
    rj["mode"] = mode_name(r.mode);
    rj["traj_index"] = r.traj_index;
    rj["pdms"] = r.pdms;
    rj["endpoint"] = r.endpoint;
    rj["token_cost"] = r.token_cost;
    rj["p_think"] = r.p_think;
    rows.push_back(rj);
  }
  j["rows"] = rows;
  return j.dump() + "\n";
}

std::string eval_report_text(const EvalReport& er, const std::string& title) {
  std::string s;
  s += "== " + title + " ==\n";
  s += "scenes " + std::to_string(er.n) + " | think rate " + fmt("%.3f", er.think_rate) +
       " | mean token cost " + fmt("%.2f", er.mean_token_cost) + " | mean P(think) " +
       fmt("%.3f", er.mean_p_think) + "\n";
  s += "PDMS " + fmt("%.4f", er.mean_pdms) + "  (nc " + fmt("%.3f", er.mean_nc) + "  dac " +
       fmt("%.3f", er.mean_dac) + "  ttc " + fmt("%.3f", er.mean_ttc) + "  comfort " +
       fmt("%.3f", er.mean_comfort) + "  ep " + fmt("%.3f", er.mean_ep) + "  endpoint " +
       fmt("%.3f", er.mean_endpoint) + ")\n";
  s += "level    n      pdms    think_rate\n";
  for (int l = 0; l < 3; ++l) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "L%d     %5d   %.4f   %.3f\n", l + 1, er.level_n[l],
                  er.level_pdms[l], er.level_think_rate[l]);
    s += buf;
  }
  s += "mode           n      pdms\n";
  for (int m = 0; m < 2; ++m) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "%-12s %5d   %.4f\n", mode_name(static_cast<Mode>(m)),
                  er.mode_n[m], er.mode_pdms[m]);
    s += buf;
  }
  if (er.best_of_n > 0) {
    s += "best-of-" + std::to_string(er.best_of_n) + " pdms " + fmt("%.4f", er.bon_pdms) +
         " | single-sample pdms " + fmt("%.4f", er.single_sample_pdms) + "\n";
  }
  return s;
}

int cmd_train(const RunConfig& rc, ModePolicy mode_policy, RewardGates gates) {
  fs::create_directories(rc.out_dir);
  const CheckpointMeta meta{rc.grpo.seed, config_hash(rc.world, rc.grpo)};
  const auto on_epoch = [&](int epoch, const PolicyParams& p) {
    char name[64];
    std::snprintf(name, sizeof(name), "checkpoint_epoch_%03d.bin", epoch);
    save_checkpoint(p, meta, rc.out_dir + "/" + name);
  };

  const TrainResult res = train(rc.grpo, rc.world, mode_policy, gates, on_epoch);
  save_checkpoint(res.params, meta, rc.out_dir + "/checkpoint_final.bin");

  std::string log_text;
  for (const std::string& line : res.log.lines) {
    log_text += line;
    log_text += '\n';
  }
  write_text_file(rc.out_dir + "/training_log.jsonl", log_text);
  write_text_file(rc.out_dir + "/final_val.json",
                  eval_report_json(res.final_val, rc, "checkpoint_final.bin"));
  const std::string table =
      eval_report_text(res.final_val, std::string("final validation (") + to_string(mode_policy) + ")");
  write_text_file(rc.out_dir + "/final_val.txt", table);
  std::fputs(table.c_str(), stdout);
  return 0;
}

int cmd_eval(const RunConfig& rc, const std::string& checkpoint_path, const std::string& data_path,
             const std::string& mode_override, int best_of_n) {
  CheckpointMeta meta;
  const PolicyParams params = load_checkpoint(checkpoint_path, &meta);

  std::optional<Mode> ov;
  if (mode_override == "think")
    ov = Mode::Thinking;
  else if (mode_override == "nothink")
    ov = Mode::NonThinking;
  else if (!mode_override.empty() && mode_override != "policy")
    throw std::runtime_error("config-error: unknown mode override '" + mode_override + "'");

  const std::vector<Scene> scenes =
      data_path.empty() ? generate_dataset(rc.world, rc.grpo.seed, "val-scene", rc.grpo.n_val)
                        : load_dataset(data_path, rc.world);
  const EvalReport er = evaluate(params, scenes, rc.world, rc.grpo, ov, best_of_n);

  fs::create_directories(rc.out_dir);
  write_text_file(rc.out_dir + "/eval_report.json", eval_report_json(er, rc, checkpoint_path));
  const std::string table = eval_report_text(
      er, "evaluation of " + checkpoint_path + (data_path.empty() ? " on regenerated val split"
                                                                  : " on " + data_path));
  write_text_file(rc.out_dir + "/eval_report.txt", table);
  std::fputs(table.c_str(), stdout);
  return 0;
}

int cmd_ablate(const RunConfig& rc, const std::vector<std::uint64_t>& seeds) {
  const struct {
    const char* name;
    RewardGates gates;
  } variants[] = {{"pdms_format", {false, false}},
                  {"pdms_format_endpoint", {true, false}},
                  {"full", {true, true}}};

  ordered_json rows = ordered_json::array();
  ordered_json means;
  std::string table;
  table += "variant                seed   pdms     think_rate  mean_p_think  token_cost\n";
  for (const auto& v : variants) {
    double pdms_sum = 0.0;
    double drift_max = 0.0;
    for (const std::uint64_t seed : seeds) {
      GrpoConfig g = rc.grpo;
      g.seed = seed;
      const TrainResult res = train(g, rc.world, ModePolicy::Adaptive, v.gates);
      const EvalReport& er = res.final_val;
      pdms_sum += er.mean_pdms;
      drift_max = std::max(drift_max, std::abs(er.mean_p_think - 0.5));

      ordered_json r;
      r["variant"] = v.name;
      r["seed"] = seed;
      r["pdms"] = er.mean_pdms;
      r["pdms_l1"] = er.level_pdms[0];
      r["pdms_l2"] = er.level_pdms[1];
      r["pdms_l3"] = er.level_pdms[2];
      r["think_rate"] = er.think_rate;
      r["mean_p_think"] = er.mean_p_think;
      r["token_cost"] = er.mean_token_cost;
      rows.push_back(r);

      char buf[128];
      std::snprintf(buf, sizeof(buf), "%-22s %4llu   %.4f   %.3f       %.3f         %.2f\n", v.name,
                    static_cast<unsigned long long>(seed), er.mean_pdms, er.think_rate,
                    er.mean_p_think, er.mean_token_cost);
      table += buf;
    }
    means[v.name] = pdms_sum / seeds.size();
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%-22s mean   %.4f   (max |P(think)-0.5| drift %.3f)\n", v.name,
                  pdms_sum / seeds.size(), drift_max);
    table += buf;
  }

  ordered_json j;
  j["record"] = "ablation_report";
  j["schema_version"] = kSchemaVersion;
  j["seed"] = rc.grpo.seed;
  j["config_hash"] = config_hash(rc.world, rc.grpo);
  j["seeds"] = seeds;
  j["mode_policy"] = "adaptive";
  j["rows"] = rows;
  j["variant_mean_pdms"] = means;

  fs::create_directories(rc.out_dir);
  write_text_file(rc.out_dir + "/ablation_report.json", j.dump() + "\n");
  write_text_file(rc.out_dir + "/ablation_report.txt", table);
  std::fputs(table.c_str(), stdout);
  return 0;
}

int cmd_inspect_scene(const RunConfig& rc, std::uint64_t scene_seed) {
  const Scene s = generate_scene(scene_seed, std::nullopt, rc.world);
  const CriticalObjects crit = classify_critical_objects(s, rc.world);
  const TrajectoryVocabulary vocab = build_vocabulary(s.ego.speed, rc.world);
  const Trajectory expert = expert_plan(s, rc.world, crit);
  const SceneFeatures feat = make_features(s, rc.world, crit);

  ordered_json j;
  j["record"] = "scene_inspection";
  j["schema_version"] = kSchemaVersion;
  j["seed"] = rc.grpo.seed;
  j["config_hash"] = config_hash(rc.world, rc.grpo);
  j["scene_seed"] = scene_seed;
  j["level"] = static_cast<int>(s.complexity);
  j["scene"] = ordered_json::parse(scene_to_json(s));
  ordered_json cj;
  if (crit.cipo1)
    cj["cipo1"] = *crit.cipo1;
  else
    cj["cipo1"] = nullptr;
  cj["cipo2"] = crit.cipo2;
  cj["motion_interaction"] = crit.motion_interaction;
  cj["boundary_proximity"] = crit.boundary_proximity;
  cj["boundary_min_dist"] = crit.boundary_min_dist;
  j["critical_objects"] = cj;
  ordered_json wp = ordered_json::array();
  for (const Vec2& p : expert.waypoints) wp.push_back({p.x, p.y});
  j["expert"] = wp;
  j["expert_pdms"] = pdm_json(pdm_score(expert, s, rc.world));
  j["expert_anchor_index"] = nearest_anchor(vocab, expert);
  j["think_text"] = think_template(crit);
  j["features_base"] = std::vector<double>(feat.base.data(), feat.base.data() + feat.base.size());
  j["features_think"] =
      std::vector<double>(feat.think_full.data(), feat.think_full.data() + feat.think_full.size());
  std::puts(j.dump(2).c_str());
  return 0;
}

}  // namespace adaplan
