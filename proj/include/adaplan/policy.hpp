#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>

#include "adaplan/config.hpp"
#include "adaplan/response.hpp"
#include "adaplan/scene.hpp"
#include "adaplan/vocabulary.hpp"
#include "adaplan/world.hpp"

namespace adaplan {

// adaptive samples the mode head; the fixed policies pin the mode, zero the
// mode-head gradient, and score only the trajectory factor.
enum class ModePolicy { Adaptive = 0, AlwaysThink = 1, NeverThink = 2 };
ModePolicy mode_policy_from_string(const std::string& s);
const char* to_string(ModePolicy p);

struct PolicyParams {
  Eigen::MatrixXd w_mode;  // 2 x F_base; row 0 = Thinking, row 1 = NonThinking
  Eigen::MatrixXd w_traj;  // K x F_full, shared across modes via zero-padded features
  int version = 0;
};

PolicyParams init_params(int n_anchors);

// Per-scene feature bundle: base features, think features, and the non-think
// features zero-padded to full length.
struct SceneFeatures {
  Eigen::VectorXd base;
  Eigen::VectorXd think_full;
  Eigen::VectorXd nothink_full;

  const Eigen::VectorXd& full(Mode m) const { return m == Mode::Thinking ? think_full : nothink_full; }
};

SceneFeatures make_features(const Scene& scene, const WorldConfig& cfg, const CriticalObjects& crit);

struct PolicyForward {
  Eigen::Vector2d mode_dist;       // [P(Thinking), P(NonThinking)]
  Eigen::VectorXd traj_dist_think;
  Eigen::VectorXd traj_dist_nothink;

  const Eigen::VectorXd& traj_dist(Mode m) const {
    return m == Mode::Thinking ? traj_dist_think : traj_dist_nothink;
  }
};

PolicyForward forward(const PolicyParams& params, const SceneFeatures& feat);
PolicyForward forward(const PolicyParams& params, const Scene& scene, const WorldConfig& cfg);

struct PolicyOutput {
  Mode mode = Mode::NonThinking;
  int traj_index = 0;
  double log_prob = 0.0;
  Eigen::Vector2d mode_dist;
  Eigen::VectorXd traj_dist;
  Response response;
};

struct SampledIndices {
  Mode mode = Mode::NonThinking;
  int traj_index = 0;
  double log_prob = 0.0;
};

// The draw behind sample(): mode draw (adaptive only) then trajectory draw
// from one Rng stream. Deterministic in rng_seed.
SampledIndices sample_indices(const PolicyForward& fwd, std::uint64_t rng_seed,
                              ModePolicy mode_policy = ModePolicy::Adaptive);

// Deterministic in rng_seed. Thinking responses carry a templated think block
// naming the critical objects and boundary state.
PolicyOutput sample(const PolicyParams& params, const Scene& scene, std::uint64_t rng_seed,
                    const WorldConfig& cfg, const TrajectoryVocabulary& vocab,
                    const CriticalObjects& crit, ModePolicy mode_policy = ModePolicy::Adaptive);

struct LogProbGrad {
  double log_prob = 0.0;
  Eigen::MatrixXd grad_w_mode;
  Eigen::MatrixXd grad_w_traj;
};

// Exact joint log-probability and analytic gradient. Under a pinned mode the
// mode factor is excluded and its gradient is zero.
LogProbGrad log_prob_and_grad(const PolicyParams& params, const SceneFeatures& feat, Mode mode,
                              int traj_index, ModePolicy mode_policy = ModePolicy::Adaptive);

double log_prob_only(const PolicyParams& params, const SceneFeatures& feat, Mode mode,
                     int traj_index, ModePolicy mode_policy = ModePolicy::Adaptive);

// Greedy mode choice; exact ties break to NonThinking.
Mode select_mode(const PolicyParams& params, const SceneFeatures& feat);
Mode select_mode(const PolicyParams& params, const Scene& scene, const WorldConfig& cfg);

// Exact KL over the joint (mode x trajectory) categorical; under a pinned
// mode, the KL of that mode's trajectory distribution.
double exact_kl(const PolicyParams& p, const PolicyParams& q, const SceneFeatures& feat,
                ModePolicy mode_policy = ModePolicy::Adaptive);

struct KlGrad {
  double kl = 0.0;
  Eigen::MatrixXd grad_w_mode;
  Eigen::MatrixXd grad_w_traj;
};

// Closed-form gradient of KL(pi_params || pi_ref) w.r.t. params.
KlGrad exact_kl_grad(const PolicyParams& params, const PolicyParams& ref, const SceneFeatures& feat,
                     ModePolicy mode_policy = ModePolicy::Adaptive);

std::string think_template(const CriticalObjects& crit);

// Versioned binary checkpoint (header: magic, schema, F_base, F_full, K,
// param version, seed, config hash; row-major doubles). Round-trips bit-exactly.
struct CheckpointMeta {
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;
};

void save_checkpoint(const PolicyParams& params, const CheckpointMeta& meta, const std::string& path);
PolicyParams load_checkpoint(const std::string& path, CheckpointMeta* meta = nullptr);

}  // namespace adaplan
