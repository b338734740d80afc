#include "adaplan/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "adaplan/response.hpp"
#include "adaplan/rng.hpp"
#include "adaplan/world.hpp"

namespace adaplan {

namespace {

using ordered_json = nlohmann::ordered_json;

int argmax_strict(const Eigen::VectorXd& v) {
  int best = 0;
  for (int i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

std::optional<Mode> override_for(ModePolicy mp) {
  switch (mp) {
    case ModePolicy::Adaptive: return std::nullopt;
    case ModePolicy::AlwaysThink: return Mode::Thinking;
    case ModePolicy::NeverThink: return Mode::NonThinking;
  }
  return std::nullopt;
}

}  // namespace

PreparedScene prepare_scene(const Scene& scene, const WorldConfig& cfg) {
  PreparedScene ps;
  ps.scene = scene;
  ps.crit = classify_critical_objects(ps.scene, cfg);
  ps.feat = make_features(ps.scene, cfg, ps.crit);
  ps.vocab = build_vocabulary(ps.scene.ego.speed, cfg);
  ps.expert = expert_plan(ps.scene, cfg, ps.crit);
  ps.expert_progress = arc_progress(ps.expert, ps.scene);
  ps.expert_anchor = nearest_anchor(ps.vocab, ps.expert);
  ps.d = is_challenging(ps.scene.complexity) ? 1 : 0;
  ps.think_len = static_cast<int>(think_template(ps.crit).size());

  const int k = ps.vocab.size();
  ps.anchor_scores.resize(k);
  ps.anchor_endpoint.resize(k);
  for (int i = 0; i < k; ++i) {
    // Score through the serialize/parse round-trip so the cached tables are
    // bit-equal to score_group on materialized responses.
    Response r = parse_response(serialize_response(Mode::NonThinking, "", ps.vocab.anchors[i]));
    if (!r.tags_ok || !r.trajectory)
      throw std::runtime_error("internal-error: anchor response failed round-trip");
    ps.anchor_scores[i] = pdm_score(*r.trajectory, ps.scene, cfg, ps.expert_progress);
    ps.anchor_endpoint[i] = endpoint_reward(r.trajectory, ps.expert);
  }
  return ps;
}

std::vector<PreparedScene> prepare_scenes(const std::vector<Scene>& scenes, const WorldConfig& cfg) {
  std::vector<PreparedScene> out;
  out.reserve(scenes.size());
  for (const Scene& s : scenes) out.push_back(prepare_scene(s, cfg));
  return out;
}

std::vector<Scene> generate_dataset(const WorldConfig& cfg, std::uint64_t seed, const char* tag,
                                    int count) {
  std::vector<Scene> out;
  out.reserve(count);
  const std::uint64_t t = stream_tag(tag);
  for (int i = 0; i < count; ++i)
    out.push_back(generate_scene(derive_seed(seed, t, static_cast<std::uint64_t>(i)), std::nullopt, cfg));
  return out;
}

std::vector<double> compute_advantages(const std::vector<double>& rewards) {
  const int n = static_cast<int>(rewards.size());
  if (n < 2) throw std::runtime_error("grpo-error: advantage group needs at least 2 rewards");
  double mean = 0.0;
  for (double r : rewards) mean += r;
  mean /= n;
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  var /= n;
  const double sd = std::sqrt(var);
  std::vector<double> out(n, 0.0);
  if (sd < 1e-8) return out;
  for (int i = 0; i < n; ++i) out[i] = (rewards[i] - mean) / sd;
  return out;
}

RolloutGroup make_rollout_group(const PolicyParams& params_old, const PreparedScene& ps,
                                const GrpoConfig& gcfg, int epoch, ModePolicy mode_policy,
                                RewardGates gates) {
  RolloutGroup g;
  g.scene = &ps;
  const PolicyForward fwd = forward(params_old, ps.feat);
  const int G = gcfg.group_size;
  g.outputs.resize(G);
  g.rewards.resize(G);
  g.old_log_probs.resize(G);

  AdaptiveRewardInputs in;
  in.t = gcfg.adaptive_t;
  in.d = ps.d;
  for (int i = 0; i < G; ++i) {
    const std::uint64_t s = derive_seed(gcfg.seed, stream_tag("rollout"),
                                        static_cast<std::uint64_t>(epoch), ps.scene.seed,
                                        static_cast<std::uint64_t>(i));
    const SampledIndices si = sample_indices(fwd, s, mode_policy);
    PolicyOutput& o = g.outputs[i];  // response text intentionally left empty in the fast path
    o.mode = si.mode;
    o.traj_index = si.traj_index;
    o.log_prob = si.log_prob;
    o.mode_dist = fwd.mode_dist;
    o.traj_dist = fwd.traj_dist(si.mode);
    g.old_log_probs[i] = si.log_prob;

    RewardBreakdown& rb = g.rewards[i];
    rb.r_traj = ps.anchor_scores[si.traj_index].pdms;
    rb.r_fmt = 1;  // serialized anchor responses always parse (see round-trip test)
    rb.r_endpoint = gates.endpoint ? ps.anchor_endpoint[si.traj_index] : 0.0;
    if (si.mode == Mode::Thinking) {
      in.s_think += rb.r_traj;
      in.c_think += 1;
    } else {
      in.s_nothink += rb.r_traj;
      in.c_nothink += 1;
    }
  }
  if (in.c_think > 0) in.s_think /= in.c_think;
  if (in.c_nothink > 0) in.s_nothink /= in.c_nothink;

  const auto [rw_think, rw_nothink] = adaptive_think_reward(in);
  std::vector<double> totals(G);
  for (int i = 0; i < G; ++i) {
    RewardBreakdown& rb = g.rewards[i];
    if (gates.adaptive)
      rb.r_adaptive = g.outputs[i].mode == Mode::Thinking ? rw_think : rw_nothink;
    rb.total = rb.r_traj + rb.r_fmt + rb.r_endpoint + rb.r_adaptive;
    totals[i] = rb.total;
  }
  g.advantages = compute_advantages(totals);
  return g;
}

StepStats grpo_step(PolicyParams& params, const PolicyParams& params_old,
                    const PolicyParams& params_ref, const std::vector<RolloutGroup>& batch,
                    const GrpoConfig& gcfg, ModePolicy mode_policy) {
  (void)params_old;  // rollouts already carry their log-probs under pi_old
  const std::size_t B = batch.size();
  if (B == 0) throw std::runtime_error("grpo-error: empty batch");
  const double eps = gcfg.clip_eps;
  const double beta = gcfg.kl_beta;

  Eigen::MatrixXd gm = Eigen::MatrixXd::Zero(params.w_mode.rows(), params.w_mode.cols());
  Eigen::MatrixXd gt = Eigen::MatrixXd::Zero(params.w_traj.rows(), params.w_traj.cols());

  StepStats st;
  long n_rollouts = 0, n_clipped = 0, n_think = 0;
  double sum_reward = 0.0, sum_surr = 0.0, sum_kl = 0.0;

  for (const RolloutGroup& g : batch) {
    const PreparedScene& ps = *g.scene;
    const int G = static_cast<int>(g.outputs.size());
    int group_clipped = 0;
    for (int i = 0; i < G; ++i) {
      const PolicyOutput& o = g.outputs[i];
      const LogProbGrad lp = log_prob_and_grad(params, ps.feat, o.mode, o.traj_index, mode_policy);
      const double c = std::exp(lp.log_prob - g.old_log_probs[i]);
      if (!std::isfinite(c))
        throw std::runtime_error("grpo-error: non-finite ratio in group for scene seed " +
                                 std::to_string(ps.scene.seed));
      const double a = g.advantages[i];
      const double unclipped = c * a;
      const double clipped = std::clamp(c, 1.0 - eps, 1.0 + eps) * a;
      sum_surr += std::min(unclipped, clipped);
      sum_reward += g.rewards[i].total;
      if (o.mode == Mode::Thinking) ++n_think;
      ++n_rollouts;
      if (unclipped > clipped) {  // clipped branch attains the min: no gradient
        ++group_clipped;
        ++n_clipped;
        continue;
      }
      if (a != 0.0) {
        const double coef = unclipped / (static_cast<double>(B) * G);
        gm.noalias() += coef * lp.grad_w_mode;
        gt.noalias() += coef * lp.grad_w_traj;
      }
    }

    double kl;
    if (beta != 0.0) {
      const KlGrad kg = exact_kl_grad(params, params_ref, ps.feat, mode_policy);
      kl = kg.kl;
      gm.noalias() -= (beta / static_cast<double>(B)) * kg.grad_w_mode;
      gt.noalias() -= (beta / static_cast<double>(B)) * kg.grad_w_traj;
    } else {
      kl = exact_kl(params, params_ref, ps.feat, mode_policy);
    }
    if (!std::isfinite(kl))
      throw std::runtime_error("grpo-error: non-finite KL for scene seed " +
                               std::to_string(ps.scene.seed));
    sum_kl += kl;
    st.group_kl.push_back(kl);
    st.group_clip_frac.push_back(static_cast<double>(group_clipped) / G);
  }

  if (!gm.allFinite() || !gt.allFinite())
    throw std::runtime_error("grpo-error: non-finite gradient in batch");
  params.w_mode += gcfg.lr * gm;
  params.w_traj += gcfg.lr * gt;
  params.version += 1;

  st.mean_reward = sum_reward / n_rollouts;
  st.mean_kl = sum_kl / static_cast<double>(B);
  st.clip_frac = static_cast<double>(n_clipped) / n_rollouts;
  st.think_rate = static_cast<double>(n_think) / n_rollouts;
  st.mean_surrogate = sum_surr / n_rollouts;
  return st;
}

PolicyParams warmup_sft(const PolicyParams& params0, const std::vector<SftRecord>& dataset,
                        const WorldConfig& wcfg, const GrpoConfig& gcfg, SftStats* stats) {
  if (dataset.empty()) throw std::runtime_error("sft-error: empty dataset");
  const int n = static_cast<int>(dataset.size());

  std::vector<SceneFeatures> feats;
  feats.reserve(n);
  for (const SftRecord& rec : dataset)
    feats.push_back(make_features(rec.scene, wcfg, classify_critical_objects(rec.scene, wcfg)));

  PolicyParams params = params0;
  PolicyParams prev_params = params;
  const Eigen::Vector2d uniform(0.5, 0.5);
  const int k_total = static_cast<int>(params.w_traj.rows());
  SftStats local;
  double prev_loss = std::numeric_limits<double>::infinity();

  for (int e = 0; e < gcfg.sft_epochs; ++e) {
    double loss = 0.0;
    Eigen::MatrixXd gm = Eigen::MatrixXd::Zero(params.w_mode.rows(), params.w_mode.cols());
    Eigen::MatrixXd gt = Eigen::MatrixXd::Zero(params.w_traj.rows(), params.w_traj.cols());
    for (int i = 0; i < n; ++i) {
      const PolicyForward f = forward(params, feats[i]);
      const int k = dataset[i].expert_anchor_index;
      if (k < 0 || k >= k_total) throw std::runtime_error("sft-error: anchor index out of range");
      loss += -0.5 * (std::log(f.traj_dist_think[k]) + std::log(f.traj_dist_nothink[k]));
      Eigen::VectorXd ek = Eigen::VectorXd::Zero(k_total);
      ek[k] = 1.0;
      gt.noalias() += 0.5 * ((f.traj_dist_think - ek) * feats[i].think_full.transpose() +
                             (f.traj_dist_nothink - ek) * feats[i].nothink_full.transpose());
      loss += gcfg.sft_mode_weight *
              (-(0.5 * std::log(f.mode_dist[0]) + 0.5 * std::log(f.mode_dist[1])));
      gm.noalias() += gcfg.sft_mode_weight * ((f.mode_dist - uniform) * feats[i].base.transpose());
    }
    loss /= n;
    gm /= n;
    gt /= n;
    if (!std::isfinite(loss))
      throw std::runtime_error("sft-error: non-finite loss at epoch " + std::to_string(e));
    if (e == 0) local.initial_loss = loss;
    if (e > 0 && loss > prev_loss) {
      std::cerr << "warning: warmup loss increased at epoch " << e << " (" << prev_loss << " -> "
                << loss << "); reverting last step and halting\n";
      params = prev_params;
      local.halted_early = true;
      break;
    }
    local.loss_trace.push_back(loss);
    local.final_loss = loss;
    local.epochs_run = e + 1;
    prev_loss = loss;
    prev_params = params;
    params.w_mode -= gcfg.sft_lr * gm;
    params.w_traj -= gcfg.sft_lr * gt;
  }
  if (stats) *stats = local;
  return params;
}

EvalReport evaluate(const PolicyParams& params, const std::vector<PreparedScene>& scenes,
                    const GrpoConfig& gcfg, std::optional<Mode> mode_override, int best_of_n) {
  if (scenes.empty()) throw std::runtime_error("eval-error: empty scene list");
  EvalReport r;
  r.n = static_cast<int>(scenes.size());
  r.best_of_n = best_of_n;
  const ModePolicy mp = !mode_override ? ModePolicy::Adaptive
                        : (*mode_override == Mode::Thinking ? ModePolicy::AlwaysThink
                                                            : ModePolicy::NeverThink);

  std::array<double, 3> level_pdms_sum{};
  std::array<int, 3> level_think{};
  std::array<double, 2> mode_pdms_sum{};
  double bon_sum = 0.0, single_sum = 0.0;

  for (const PreparedScene& ps : scenes) {
    const PolicyForward fwd = forward(params, ps.feat);
    const Mode m = mode_override
                       ? *mode_override
                       : (fwd.mode_dist[0] > fwd.mode_dist[1] ? Mode::Thinking : Mode::NonThinking);
    const int k = argmax_strict(fwd.traj_dist(m));
    const PdmScore& sc = ps.anchor_scores[k];

    r.mean_pdms += sc.pdms;
    r.mean_nc += sc.nc;
    r.mean_dac += sc.dac;
    r.mean_ttc += sc.ttc;
    r.mean_comfort += sc.comfort;
    r.mean_ep += sc.ep;
    r.mean_endpoint += ps.anchor_endpoint[k];
    r.mean_token_cost += kBaseTokenCost + (m == Mode::Thinking ? ps.think_len : 0);
    r.mean_p_think += fwd.mode_dist[0];

    const int li = static_cast<int>(ps.scene.complexity) - 1;
    r.level_n[li] += 1;
    level_pdms_sum[li] += sc.pdms;
    const int mi = static_cast<int>(m);
    r.mode_n[mi] += 1;
    mode_pdms_sum[mi] += sc.pdms;
    if (m == Mode::Thinking) level_think[li] += 1;

    EvalRow row;
    row.scene_seed = ps.scene.seed;
    row.level = static_cast<int>(ps.scene.complexity);
    row.mode = m;
    row.traj_index = k;
    row.pdms = sc.pdms;
    row.endpoint = ps.anchor_endpoint[k];
    row.token_cost = kBaseTokenCost + (m == Mode::Thinking ? ps.think_len : 0);
    row.p_think = fwd.mode_dist[0];
    r.rows.push_back(row);

    if (best_of_n > 0) {
      double best = -1.0, first = 0.0;
      for (int j = 0; j < best_of_n; ++j) {
        const std::uint64_t s =
            derive_seed(gcfg.seed, stream_tag("bon"), ps.scene.seed, static_cast<std::uint64_t>(j));
        const SampledIndices si = sample_indices(fwd, s, mp);
        const double p = ps.anchor_scores[si.traj_index].pdms;
        if (j == 0) first = p;
        if (p > best) best = p;
      }
      bon_sum += best;
      single_sum += first;
    }
  }

  r.mean_pdms /= r.n;
  r.mean_nc /= r.n;
  r.mean_dac /= r.n;
  r.mean_ttc /= r.n;
  r.mean_comfort /= r.n;
  r.mean_ep /= r.n;
  r.mean_endpoint /= r.n;
  r.mean_token_cost /= r.n;
  r.mean_p_think /= r.n;
  r.think_rate = static_cast<double>(r.mode_n[0]) / r.n;
  for (int l = 0; l < 3; ++l) {
    if (r.level_n[l] > 0) {
      r.level_pdms[l] = level_pdms_sum[l] / r.level_n[l];
      r.level_think_rate[l] = static_cast<double>(level_think[l]) / r.level_n[l];
    }
  }
  for (int m = 0; m < 2; ++m)
    if (r.mode_n[m] > 0) r.mode_pdms[m] = mode_pdms_sum[m] / r.mode_n[m];
  if (best_of_n > 0) {
    r.bon_pdms = bon_sum / r.n;
    r.single_sample_pdms = single_sum / r.n;
  }
  return r;
}

EvalReport evaluate(const PolicyParams& params, const std::vector<Scene>& scenes,
                    const WorldConfig& wcfg, const GrpoConfig& gcfg,
                    std::optional<Mode> mode_override, int best_of_n) {
  return evaluate(params, prepare_scenes(scenes, wcfg), gcfg, mode_override, best_of_n);
}

namespace {

ordered_json val_record(const char* record, int epoch, const EvalReport& er) {
  ordered_json j;
  j["record"] = record;
  if (epoch >= 0) j["epoch"] = epoch;
  j["pdms"] = er.mean_pdms;
  j["pdms_l1"] = er.level_pdms[0];
  j["pdms_l2"] = er.level_pdms[1];
  j["pdms_l3"] = er.level_pdms[2];
  j["pdms_think"] = er.mode_pdms[0];
  j["pdms_nothink"] = er.mode_pdms[1];
  j["think_rate"] = er.think_rate;
  j["think_rate_l1"] = er.level_think_rate[0];
  j["think_rate_l2"] = er.level_think_rate[1];
  j["think_rate_l3"] = er.level_think_rate[2];
  j["token_cost"] = er.mean_token_cost;
  j["mean_p_think"] = er.mean_p_think;
  if (er.best_of_n > 0) {
    j["best_of_n"] = er.best_of_n;
    j["bon_pdms"] = er.bon_pdms;
    j["single_sample_pdms"] = er.single_sample_pdms;
  }
  return j;
}

}  // namespace

TrainResult train(const GrpoConfig& gcfg, const WorldConfig& wcfg, ModePolicy mode_policy,
                  RewardGates gates, const EpochCallback& on_epoch) {
  TrainResult res;

  const std::vector<Scene> train_scenes = generate_dataset(wcfg, gcfg.seed, "train-scene", gcfg.n_train);
  const std::vector<Scene> val_scenes = generate_dataset(wcfg, gcfg.seed, "val-scene", gcfg.n_val);
  const std::vector<PreparedScene> prep = prepare_scenes(train_scenes, wcfg);
  const std::vector<PreparedScene> prep_val = prepare_scenes(val_scenes, wcfg);

  const int k_anchors = static_cast<int>(wcfg.anchor_curvatures.size() * wcfg.anchor_speed_factors.size());
  PolicyParams params = init_params(k_anchors);

  std::vector<SftRecord> sft;
  sft.reserve(prep.size());
  for (const PreparedScene& ps : prep) sft.push_back(SftRecord{ps.scene, ps.expert_anchor});
  SftStats sft_stats;
  params = warmup_sft(params, sft, wcfg, gcfg, &sft_stats);
  res.ref = params;  // frozen reference

  TrainingLog& log = res.log;
  {
    ordered_json j;
    j["record"] = "run_config";
    j["schema_version"] = 1;
    j["seed"] = gcfg.seed;
    j["config_hash"] = config_hash(wcfg, gcfg);
    j["mode_policy"] = to_string(mode_policy);
    j["use_endpoint"] = gates.endpoint;
    j["use_adaptive"] = gates.adaptive;
    j["n_train"] = gcfg.n_train;
    j["n_val"] = gcfg.n_val;
    j["group_size"] = gcfg.group_size;
    j["epochs"] = gcfg.epochs;
    j["batch_scenes"] = gcfg.batch_scenes;
    j["lr"] = gcfg.lr;
    j["clip_eps"] = gcfg.clip_eps;
    j["kl_beta"] = gcfg.kl_beta;
    j["adaptive_t"] = gcfg.adaptive_t;
    log.lines.push_back(j.dump());
  }
  {
    ordered_json j;
    j["record"] = "sft";
    j["epochs_run"] = sft_stats.epochs_run;
    j["initial_loss"] = sft_stats.initial_loss;
    j["final_loss"] = sft_stats.final_loss;
    j["halted_early"] = sft_stats.halted_early;
    log.lines.push_back(j.dump());
  }

  const int n = static_cast<int>(prep.size());
  int step = 0;
  for (int epoch = 0; epoch < gcfg.epochs; ++epoch) {
    const PolicyParams params_old = params;
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng(derive_seed(gcfg.seed, stream_tag("shuffle"), static_cast<std::uint64_t>(epoch)));
    shuffle_rng.shuffle(order);

    for (int start = 0; start < n; start += gcfg.batch_scenes) {
      const int end = std::min(n, start + gcfg.batch_scenes);
      std::vector<RolloutGroup> batch;
      batch.reserve(end - start);
      for (int i = start; i < end; ++i)
        batch.push_back(make_rollout_group(params_old, prep[order[i]], gcfg, epoch, mode_policy, gates));

      const StepStats st = grpo_step(params, params_old, res.ref, batch, gcfg, mode_policy);

      for (std::size_t gi = 0; gi < batch.size(); ++gi) {
        const RolloutGroup& g = batch[gi];
        ordered_json j;
        j["record"] = "group";
        j["step"] = step;
        j["epoch"] = epoch;
        j["scene_seed"] = g.scene->scene.seed;
        int think_count = 0;
        for (const PolicyOutput& o : g.outputs)
          if (o.mode == Mode::Thinking) ++think_count;
        j["think_count"] = think_count;
        j["nothink_count"] = static_cast<int>(g.outputs.size()) - think_count;
        ordered_json r_pdms = ordered_json::array(), r_format = ordered_json::array(),
                     r_endpoint = ordered_json::array(), r_adaptive = ordered_json::array(),
                     r_total = ordered_json::array();
        for (const RewardBreakdown& rb : g.rewards) {
          r_pdms.push_back(rb.r_traj);
          r_format.push_back(rb.r_fmt);
          r_endpoint.push_back(rb.r_endpoint);
          r_adaptive.push_back(rb.r_adaptive);
          r_total.push_back(rb.total);
        }
        j["r_pdms"] = r_pdms;
        j["r_format"] = r_format;
        j["r_endpoint"] = r_endpoint;
        j["r_adaptive"] = r_adaptive;
        j["r_total"] = r_total;
        j["kl"] = st.group_kl[gi];
        j["clip_frac"] = st.group_clip_frac[gi];
        log.lines.push_back(j.dump());
      }
      {
        ordered_json j;
        j["record"] = "step";
        j["step"] = step;
        j["epoch"] = epoch;
        j["mean_reward"] = st.mean_reward;
        j["mean_kl"] = st.mean_kl;
        j["clip_frac"] = st.clip_frac;
        j["think_rate"] = st.think_rate;
        j["mean_surrogate"] = st.mean_surrogate;
        log.lines.push_back(j.dump());
      }
      ++step;
    }

    if (gcfg.val_every > 0 && (epoch + 1) % gcfg.val_every == 0) {
      const EvalReport er = evaluate(params, prep_val, gcfg, override_for(mode_policy), 0);
      log.lines.push_back(val_record("val", epoch, er).dump());
    }
    if (on_epoch) on_epoch(epoch, params);
  }

  res.final_val = evaluate(params, prep_val, gcfg, override_for(mode_policy), gcfg.best_of_n);
  log.lines.push_back(val_record("final", -1, res.final_val).dump());
  res.params = params;
  return res;
}

}  // namespace adaplan
