#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "adaplan/config.hpp"
#include "adaplan/metrics.hpp"
#include "adaplan/response.hpp"
#include "adaplan/rewards.hpp"
#include "adaplan/rng.hpp"
#include "adaplan/vocabulary.hpp"
#include "adaplan/world.hpp"

using namespace adaplan;

namespace {

Trajectory ramp_traj(double step, double y) {
  Trajectory tr;
  for (int i = 0; i < kNumWaypoints; ++i) tr.waypoints[i] = {step * (i + 1), y};
  return tr;
}

// directly transcribed branch structure used as the truth-table oracle
std::pair<int, int> adaptive_oracle(const AdaptiveRewardInputs& in) {
  if (in.d == 0) {
    if (in.s_think > in.s_nothink && in.s_think > in.t && in.c_think > in.c_nothink)
      return {1, 0};
    return {0, 1};
  }
  if (in.s_nothink > in.s_think && in.s_nothink > in.t && in.c_nothink > in.c_think)
    return {0, 1};
  return {1, 0};
}

}  // namespace

TEST_CASE("parse_response handles canonical, malformed, and wrong-arity input") {
  Trajectory tr = ramp_traj(4.0, 0.0);
  std::string nonthink = serialize_response(Mode::NonThinking, "", tr);
  Response r1 = parse_response(nonthink);
  CHECK(r1.mode == Mode::NonThinking);
  CHECK(r1.tags_ok);
  REQUIRE(r1.trajectory.has_value());
  CHECK(*r1.trajectory == tr);
  CHECK(r1.token_cost == kBaseTokenCost);

  std::string think = serialize_response(Mode::Thinking, "lead vehicle braking", tr);
  Response r2 = parse_response(think);
  CHECK(r2.mode == Mode::Thinking);
  CHECK(r2.tags_ok);
  REQUIRE(r2.think_content.has_value());
  CHECK(*r2.think_content == "lead vehicle braking");
  REQUIRE(r2.trajectory.has_value());
  CHECK(*r2.trajectory == tr);
  CHECK(r2.token_cost == kBaseTokenCost + static_cast<int>(std::string("lead vehicle braking").size()));

  Response bad = parse_response("<answer>1,2,3</answer>");
  CHECK_FALSE(bad.trajectory.has_value());
  CHECK(parse_response("").trajectory.has_value() == false);
  CHECK_FALSE(parse_response("<think>x</think>plain text").trajectory.has_value());
}

TEST_CASE("format_reward rejects broken or duplicated tag structure") {
  Trajectory tr = ramp_traj(4.0, 0.0);
  CHECK(format_reward(parse_response(serialize_response(Mode::Thinking, "ok", tr))) == 1);
  CHECK(format_reward(parse_response(serialize_response(Mode::NonThinking, "", tr))) == 1);

  std::string good = serialize_response(Mode::NonThinking, "", tr);
  std::string unclosed = good.substr(0, good.size() - std::string("</answer>").size());
  CHECK(format_reward(parse_response(unclosed)) == 0);
  CHECK(format_reward(parse_response(good + good)) == 0);  // two answer blocks
  // think block after the answer block is out of order
  CHECK(format_reward(parse_response(good + "<think>late</think>")) == 0);
  CHECK(format_reward(parse_response("<answer>1,2,3</answer>")) == 0);
}

TEST_CASE("serialize -> parse is a fixed point with awkward doubles") {
  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    Trajectory tr;
    for (int k = 0; k < kNumWaypoints; ++k)
      tr.waypoints[k] = {rng.uniform(-150.0, 150.0) / 3.0, rng.normal(0.0, 10.0)};
    Mode mode = rng.bernoulli(0.5) ? Mode::Thinking : Mode::NonThinking;
    std::string think = mode == Mode::Thinking ? "cipo d=12.25 dv=-3.1" : "";
    std::string text = serialize_response(mode, think, tr);
    Response r = parse_response(text);
    CHECK(r.mode == mode);
    REQUIRE(r.trajectory.has_value());
    CHECK(*r.trajectory == tr);  // bit-exact round-trip
    CHECK(serialize_response(r.mode, r.think_content.value_or(""), *r.trajectory) == text);
  }
}

TEST_CASE("endpoint reward reproduces the strict threshold table") {
  Trajectory expert = ramp_traj(4.0, 0.0);
  const double probes[] = {1.9, 2.0, 3.9, 4.0, 5.9, 6.0, 9.9, 10.0, 14.9, 15.0, 20.0};
  const double want[] = {1.0, 0.8, 0.8, 0.6, 0.6, 0.4, 0.4, 0.2, 0.2, 0.0, 0.0};
  for (int i = 0; i < 11; ++i) {
    Trajectory t = expert;
    t.waypoints[kNumWaypoints - 1].y += probes[i];  // L1 distance = probe
    CHECK(endpoint_reward(t, expert) == want[i]);
  }
  CHECK(endpoint_reward(std::nullopt, expert) == 0.0);

  // non-increasing step function of d
  double prev = 1.0;
  for (double d = 0.0; d <= 25.0; d += 0.01) {
    Trajectory t = expert;
    t.waypoints[kNumWaypoints - 1].x += d * 0.5;
    t.waypoints[kNumWaypoints - 1].y -= d * 0.5;
    double r = endpoint_reward(t, expert);
    CHECK(r <= prev + 1e-15);
    prev = r;
  }
}

TEST_CASE("adaptive think reward: paper cases and exhaustive sign patterns") {
  CHECK(adaptive_think_reward({0.95, 0.80, 5, 3, 0.9, 0}) == std::pair<int, int>{1, 0});
  CHECK(adaptive_think_reward({0.85, 0.80, 5, 3, 0.9, 0}) == std::pair<int, int>{0, 1});
  CHECK(adaptive_think_reward({0.60, 0.95, 2, 6, 0.9, 1}) == std::pair<int, int>{0, 1});

  // every ordering of s vs s, s vs t, c vs c, including ties and empty modes
  const double svals[] = {0.0, 0.85, 0.9, 0.95, 1.0};
  const int cvals[] = {0, 3, 4, 5, 8};
  for (int d = 0; d <= 1; ++d)
    for (double st : svals)
      for (double sn : svals)
        for (int ct : cvals) {
          AdaptiveRewardInputs in{st, sn, ct, 8 - ct, 0.9, d};
          auto got = adaptive_think_reward(in);
          CHECK(got == adaptive_oracle(in));
          CHECK(got.first + got.second == 1);  // exactly one mode rewarded
        }
}

TEST_CASE("score_group composes components and is order invariant") {
  WorldConfig cfg;
  Scene s = generate_scene(123, ComplexityLevel::Level3, cfg);
  Trajectory expert = expert_plan(s, cfg);
  TrajectoryVocabulary vocab = build_vocabulary(s.ego.speed, cfg);

  std::vector<Response> group;
  group.push_back(parse_response(serialize_response(Mode::Thinking, "a", vocab.anchors[18])));
  group.push_back(parse_response(serialize_response(Mode::Thinking, "b", vocab.anchors[3])));
  group.push_back(parse_response(serialize_response(Mode::NonThinking, "", vocab.anchors[18])));
  group.push_back(parse_response(serialize_response(Mode::NonThinking, "", vocab.anchors[33])));

  std::vector<RewardBreakdown> out = score_group(group, s, expert, 0.9, cfg);
  REQUIRE(out.size() == 4);

  // hand-recomputed per-mode means and the adaptive pair
  double expert_progress = arc_progress(expert, s);
  double s_think = 0.0, s_nothink = 0.0;
  for (int i = 0; i < 4; ++i) {
    double r = pdm_score(*group[i].trajectory, s, cfg, expert_progress).pdms;
    CHECK(out[i].r_traj == doctest::Approx(r).epsilon(1e-12));
    CHECK(out[i].r_fmt == 1);
    CHECK(out[i].r_endpoint == endpoint_reward(group[i].trajectory, expert));
    (group[i].mode == Mode::Thinking ? s_think : s_nothink) += r / 2.0;
    CHECK(out[i].total ==
          doctest::Approx(out[i].r_traj + out[i].r_fmt + out[i].r_endpoint + out[i].r_adaptive)
              .epsilon(1e-12));
    CHECK(out[i].total >= 0.0);
    CHECK(out[i].total <= 4.0);
  }
  auto [rt, rn] = adaptive_think_reward({s_think, s_nothink, 2, 2, 0.9, 1});
  for (int i = 0; i < 4; ++i)
    CHECK(out[i].r_adaptive == (group[i].mode == Mode::Thinking ? rt : rn));

  // permutation invariance
  std::vector<int> perm{3, 1, 0, 2};
  std::vector<Response> shuffled;
  for (int i : perm) shuffled.push_back(group[i]);
  std::vector<RewardBreakdown> out2 = score_group(shuffled, s, expert, 0.9, cfg);
  for (int i = 0; i < 4; ++i) {
    CHECK(out2[i].r_traj == out[perm[i]].r_traj);
    CHECK(out2[i].r_adaptive == out[perm[i]].r_adaptive);
    CHECK(out2[i].total == out[perm[i]].total);
  }
}

TEST_CASE("score_group: single-mode and unparseable groups") {
  WorldConfig cfg;
  Scene s = generate_scene(55, ComplexityLevel::Level1, cfg);
  Trajectory expert = expert_plan(s, cfg);
  TrajectoryVocabulary vocab = build_vocabulary(s.ego.speed, cfg);

  // simple scene, both non-thinking: count condition fails, both keep r_adaptive = 1
  std::vector<Response> nothink;
  nothink.push_back(parse_response(serialize_response(Mode::NonThinking, "", vocab.anchors[18])));
  nothink.push_back(parse_response(serialize_response(Mode::NonThinking, "", vocab.anchors[18])));
  std::vector<RewardBreakdown> out = score_group(nothink, s, expert, 0.9, cfg);
  CHECK(out[0].r_adaptive == 1);
  CHECK(out[1].r_adaptive == 1);

  std::vector<Response> broken;
  broken.push_back(parse_response("<answer>not numbers</answer>"));
  broken.push_back(parse_response("<think>x</think>"));
  std::vector<RewardBreakdown> bout = score_group(broken, s, expert, 0.9, cfg);
  for (const RewardBreakdown& b : bout) {
    CHECK(b.r_traj == 0.0);
    CHECK(b.r_endpoint == 0.0);
    CHECK(b.r_fmt == 0);
  }
}
