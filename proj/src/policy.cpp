#include "adaplan/policy.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

#include "adaplan/rng.hpp"

namespace adaplan {

namespace {

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  Eigen::VectorXd z = logits.array() - logits.maxCoeff();
  Eigen::VectorXd e = z.array().exp();
  return e / e.sum();
}

int draw_categorical(const Eigen::VectorXd& dist, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (int i = 0; i < dist.size(); ++i) {
    acc += dist[i];
    if (u < acc) return i;
  }
  return static_cast<int>(dist.size()) - 1;
}

// KL(p || q) for one categorical plus d(KL)/d(logits of p): p .* (h - p.h)
// with h = log p - log q.
double categorical_kl(const Eigen::VectorXd& p, const Eigen::VectorXd& q,
                      Eigen::VectorXd* grad_logits = nullptr) {
  Eigen::VectorXd h = (p.array().log() - q.array().log()).matrix();
  const double kl = p.dot(h);
  if (grad_logits) *grad_logits = p.cwiseProduct(h - Eigen::VectorXd::Constant(p.size(), kl));
  return kl;
}

}  // namespace

ModePolicy mode_policy_from_string(const std::string& s) {
  if (s == "adaptive") return ModePolicy::Adaptive;
  if (s == "always_think") return ModePolicy::AlwaysThink;
  if (s == "never_think") return ModePolicy::NeverThink;
  throw std::runtime_error("config-error: unknown mode policy '" + s + "'");
}

const char* to_string(ModePolicy p) {
  switch (p) {
    case ModePolicy::Adaptive: return "adaptive";
    case ModePolicy::AlwaysThink: return "always_think";
    case ModePolicy::NeverThink: return "never_think";
  }
  return "?";
}

PolicyParams init_params(int n_anchors) {
  PolicyParams p;
  p.w_mode = Eigen::MatrixXd::Zero(2, kFeatureBase);
  p.w_traj = Eigen::MatrixXd::Zero(n_anchors, kFeatureFull);
  p.version = 0;
  return p;
}

SceneFeatures make_features(const Scene& scene, const WorldConfig& cfg, const CriticalObjects& crit) {
  SceneFeatures f;
  f.base = observe(scene, Mode::NonThinking, cfg, crit);
  f.think_full = observe(scene, Mode::Thinking, cfg, crit);
  f.nothink_full = Eigen::VectorXd::Zero(kFeatureFull);
  f.nothink_full.head(kFeatureBase) = f.base;
  return f;
}

PolicyForward forward(const PolicyParams& params, const SceneFeatures& feat) {
  PolicyForward out;
  Eigen::Vector2d mode_logits = params.w_mode * feat.base;
  Eigen::VectorXd md = softmax(mode_logits);
  out.mode_dist << md[0], md[1];
  out.traj_dist_think = softmax(params.w_traj * feat.think_full);
  out.traj_dist_nothink = softmax(params.w_traj * feat.nothink_full);
  return out;
}

PolicyForward forward(const PolicyParams& params, const Scene& scene, const WorldConfig& cfg) {
  const CriticalObjects crit = classify_critical_objects(scene, cfg);
  return forward(params, make_features(scene, cfg, crit));
}

std::string think_template(const CriticalObjects& crit) {
  std::string s;
  if (crit.cipo1) {
    s += "lead d=" + format_double_fixed(crit.cipo1_s, 1) + " dv=" + format_double_fixed(crit.cipo1_dv, 1) + "; ";
  } else {
    s += "no lead; ";
  }
  if (!crit.cipo2.empty()) {
    s += "cutin d=" + format_double_fixed(crit.cipo2_s_min, 1) + "; ";
  } else {
    s += "no cutin; ";
  }
  if (!crit.motion_interaction.empty()) {
    s += "cross t=" + format_double_fixed(crit.mi_earliest_t, 1) + "; ";
  } else {
    s += "no cross; ";
  }
  s += "margin=" + format_double_fixed(crit.boundary_min_dist, 1);
  return s;
}

SampledIndices sample_indices(const PolicyForward& fwd, std::uint64_t rng_seed,
                              ModePolicy mode_policy) {
  Rng rng(rng_seed);
  SampledIndices out;
  double lp = 0.0;
  switch (mode_policy) {
    case ModePolicy::Adaptive: {
      const int m = draw_categorical(fwd.mode_dist, rng);
      out.mode = static_cast<Mode>(m);
      lp += std::log(fwd.mode_dist[m]);
      break;
    }
    case ModePolicy::AlwaysThink: out.mode = Mode::Thinking; break;
    case ModePolicy::NeverThink: out.mode = Mode::NonThinking; break;
  }
  const Eigen::VectorXd& td = fwd.traj_dist(out.mode);
  out.traj_index = draw_categorical(td, rng);
  lp += std::log(td[out.traj_index]);
  out.log_prob = lp;
  return out;
}

PolicyOutput sample(const PolicyParams& params, const Scene& scene, std::uint64_t rng_seed,
                    const WorldConfig& cfg, const TrajectoryVocabulary& vocab,
                    const CriticalObjects& crit, ModePolicy mode_policy) {
  const SceneFeatures feat = make_features(scene, cfg, crit);
  const PolicyForward fwd = forward(params, feat);
  const SampledIndices idx = sample_indices(fwd, rng_seed, mode_policy);

  PolicyOutput out;
  out.mode_dist = fwd.mode_dist;
  out.mode = idx.mode;
  out.traj_index = idx.traj_index;
  out.log_prob = idx.log_prob;
  out.traj_dist = fwd.traj_dist(idx.mode);

  const std::string think = out.mode == Mode::Thinking ? think_template(crit) : std::string();
  const std::string text = serialize_response(out.mode, think, vocab.anchors[out.traj_index]);
  out.response = parse_response(text);
  return out;
}

LogProbGrad log_prob_and_grad(const PolicyParams& params, const SceneFeatures& feat, Mode mode,
                              int traj_index, ModePolicy mode_policy) {
  const PolicyForward fwd = forward(params, feat);
  LogProbGrad out;
  out.grad_w_mode = Eigen::MatrixXd::Zero(params.w_mode.rows(), params.w_mode.cols());
  out.grad_w_traj = Eigen::MatrixXd::Zero(params.w_traj.rows(), params.w_traj.cols());

  if (mode_policy == ModePolicy::Adaptive) {
    const int m = static_cast<int>(mode);
    out.log_prob += std::log(fwd.mode_dist[m]);
    Eigen::Vector2d onehot = Eigen::Vector2d::Zero();
    onehot[m] = 1.0;
    out.grad_w_mode = (onehot - fwd.mode_dist) * feat.base.transpose();
  }

  const Eigen::VectorXd& td = fwd.traj_dist(mode);
  out.log_prob += std::log(td[traj_index]);
  Eigen::VectorXd onehot_t = Eigen::VectorXd::Zero(td.size());
  onehot_t[traj_index] = 1.0;
  out.grad_w_traj = (onehot_t - td) * feat.full(mode).transpose();
  return out;
}

double log_prob_only(const PolicyParams& params, const SceneFeatures& feat, Mode mode,
                     int traj_index, ModePolicy mode_policy) {
  const PolicyForward fwd = forward(params, feat);
  double lp = 0.0;
  if (mode_policy == ModePolicy::Adaptive) lp += std::log(fwd.mode_dist[static_cast<int>(mode)]);
  lp += std::log(fwd.traj_dist(mode)[traj_index]);
  return lp;
}

Mode select_mode(const PolicyParams& params, const SceneFeatures& feat) {
  Eigen::Vector2d mode_logits = params.w_mode * feat.base;
  Eigen::VectorXd md = softmax(mode_logits);
  return md[0] > md[1] ? Mode::Thinking : Mode::NonThinking;
}

Mode select_mode(const PolicyParams& params, const Scene& scene, const WorldConfig& cfg) {
  const CriticalObjects crit = classify_critical_objects(scene, cfg);
  return select_mode(params, make_features(scene, cfg, crit));
}

double exact_kl(const PolicyParams& p, const PolicyParams& q, const SceneFeatures& feat,
                ModePolicy mode_policy) {
  const PolicyForward fp = forward(p, feat);
  const PolicyForward fq = forward(q, feat);
  if (mode_policy != ModePolicy::Adaptive) {
    const Mode m = mode_policy == ModePolicy::AlwaysThink ? Mode::Thinking : Mode::NonThinking;
    return categorical_kl(fp.traj_dist(m), fq.traj_dist(m));
  }
  const double kl_think = categorical_kl(fp.traj_dist_think, fq.traj_dist_think);
  const double kl_nothink = categorical_kl(fp.traj_dist_nothink, fq.traj_dist_nothink);
  double kl = 0.0;
  for (int m = 0; m < 2; ++m) {
    const double pm = fp.mode_dist[m];
    const double qm = fq.mode_dist[m];
    const double kl_m = m == 0 ? kl_think : kl_nothink;
    kl += pm * (std::log(pm / qm) + kl_m);
  }
  return kl;
}

KlGrad exact_kl_grad(const PolicyParams& params, const PolicyParams& ref, const SceneFeatures& feat,
                     ModePolicy mode_policy) {
  const PolicyForward fp = forward(params, feat);
  const PolicyForward fq = forward(ref, feat);
  KlGrad out;
  out.grad_w_mode = Eigen::MatrixXd::Zero(params.w_mode.rows(), params.w_mode.cols());
  out.grad_w_traj = Eigen::MatrixXd::Zero(params.w_traj.rows(), params.w_traj.cols());

  if (mode_policy != ModePolicy::Adaptive) {
    const Mode m = mode_policy == ModePolicy::AlwaysThink ? Mode::Thinking : Mode::NonThinking;
    Eigen::VectorXd g;
    out.kl = categorical_kl(fp.traj_dist(m), fq.traj_dist(m), &g);
    out.grad_w_traj = g * feat.full(m).transpose();
    return out;
  }

  double kl_m[2];
  for (int m = 0; m < 2; ++m) {
    const Mode mode = static_cast<Mode>(m);
    Eigen::VectorXd g;
    kl_m[m] = categorical_kl(fp.traj_dist(mode), fq.traj_dist(mode), &g);
    out.grad_w_traj += fp.mode_dist[m] * (g * feat.full(mode).transpose());
  }

  Eigen::Vector2d a;  // per-mode joint contribution: log ratio + inner KL
  for (int m = 0; m < 2; ++m) a[m] = std::log(fp.mode_dist[m] / fq.mode_dist[m]) + kl_m[m];
  out.kl = fp.mode_dist.dot(a);
  Eigen::Vector2d gz = fp.mode_dist.cwiseProduct(a - Eigen::Vector2d::Constant(out.kl));
  out.grad_w_mode = gz * feat.base.transpose();
  return out;
}

namespace {

constexpr char kMagic[4] = {'A', 'D', 'P', 'L'};
constexpr std::uint32_t kSchema = 1;

template <typename T>
void put(std::string& buf, const T& v) {
  const char* p = reinterpret_cast<const char*>(&v);
  buf.append(p, sizeof(T));
}

template <typename T>
T take(const std::string& buf, std::size_t& off) {
  if (off + sizeof(T) > buf.size()) throw std::runtime_error("checkpoint-error: truncated file");
  T v;
  std::memcpy(&v, buf.data() + off, sizeof(T));
  off += sizeof(T);
  return v;
}

void put_matrix(std::string& buf, const Eigen::MatrixXd& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) put(buf, m(r, c));
}

Eigen::MatrixXd take_matrix(const std::string& buf, std::size_t& off, int rows, int cols) {
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = take<double>(buf, off);
  return m;
}

}  // namespace

void save_checkpoint(const PolicyParams& params, const CheckpointMeta& meta, const std::string& path) {
  std::string buf;
  buf.append(kMagic, 4);
  put(buf, kSchema);
  put(buf, static_cast<std::int32_t>(params.w_mode.cols()));
  put(buf, static_cast<std::int32_t>(params.w_traj.cols()));
  put(buf, static_cast<std::int32_t>(params.w_traj.rows()));
  put(buf, static_cast<std::int32_t>(params.version));
  put(buf, meta.seed);
  put(buf, meta.config_hash);
  put_matrix(buf, params.w_mode);
  put_matrix(buf, params.w_traj);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("io-error: cannot write checkpoint '" + path + "'");
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw std::runtime_error("io-error: short write on checkpoint '" + path + "'");
}

PolicyParams load_checkpoint(const std::string& path, CheckpointMeta* meta) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("io-error: cannot read checkpoint '" + path + "'");
  std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  std::size_t off = 0;
  if (buf.size() < 4 || std::memcmp(buf.data(), kMagic, 4) != 0)
    throw std::runtime_error("checkpoint-error: bad magic in '" + path + "'");
  off = 4;
  const auto schema = take<std::uint32_t>(buf, off);
  if (schema != kSchema)
    throw std::runtime_error("checkpoint-error: unsupported schema version " + std::to_string(schema));
  const auto f_base = take<std::int32_t>(buf, off);
  const auto f_full = take<std::int32_t>(buf, off);
  const auto k = take<std::int32_t>(buf, off);
  if (f_base != kFeatureBase || f_full != kFeatureFull || k <= 0)
    throw std::runtime_error("checkpoint-error: dimension mismatch (expected " +
                             std::to_string(kFeatureBase) + "/" + std::to_string(kFeatureFull) +
                             ", got " + std::to_string(f_base) + "/" + std::to_string(f_full) + ")");
  PolicyParams params;
  params.version = take<std::int32_t>(buf, off);
  CheckpointMeta m;
  m.seed = take<std::uint64_t>(buf, off);
  m.config_hash = take<std::uint64_t>(buf, off);
  params.w_mode = take_matrix(buf, off, 2, f_base);
  params.w_traj = take_matrix(buf, off, k, f_full);
  if (off != buf.size()) throw std::runtime_error("checkpoint-error: trailing bytes in '" + path + "'");
  if (meta) *meta = m;
  return params;
}

}  // namespace adaplan
