#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "adaplan/config.hpp"
#include "adaplan/metrics.hpp"
#include "adaplan/policy.hpp"
#include "adaplan/response.hpp"
#include "adaplan/rewards.hpp"
#include "adaplan/trainer.hpp"
#include "adaplan/vocabulary.hpp"
#include "adaplan/world.hpp"

namespace py = pybind11;
using namespace adaplan;

namespace {

using PointList = std::vector<std::pair<double, double>>;

Trajectory traj_from_points(const PointList& pts) {
  if (pts.size() != kNumWaypoints)
    throw std::invalid_argument("trajectory needs exactly " + std::to_string(kNumWaypoints) +
                                " waypoints");
  Trajectory t;
  for (std::size_t i = 0; i < pts.size(); ++i) t.waypoints[i] = {pts[i].first, pts[i].second};
  return t;
}

PointList traj_to_points(const Trajectory& t) {
  PointList out;
  out.reserve(kNumWaypoints);
  for (const Vec2& p : t.waypoints) out.emplace_back(p.x, p.y);
  return out;
}

py::dict pdm_dict(const PdmScore& s) {
  py::dict d;
  d["pdms"] = s.pdms;
  d["nc"] = s.nc;
  d["dac"] = s.dac;
  d["ttc"] = s.ttc;
  d["comfort"] = s.comfort;
  d["ep"] = s.ep;
  return d;
}

py::dict eval_dict(const EvalReport& er) {
  py::dict d;
  d["n"] = er.n;
  d["mean_pdms"] = er.mean_pdms;
  d["think_rate"] = er.think_rate;
  d["mean_token_cost"] = er.mean_token_cost;
  d["mean_p_think"] = er.mean_p_think;
  d["level_pdms"] = std::vector<double>(er.level_pdms.begin(), er.level_pdms.end());
  d["level_think_rate"] =
      std::vector<double>(er.level_think_rate.begin(), er.level_think_rate.end());
  d["bon_pdms"] = er.bon_pdms;
  d["single_sample_pdms"] = er.single_sample_pdms;
  return d;
}

}  // namespace

PYBIND11_MODULE(adaplan, m) {
  m.doc() = "synthetic driving world, PDMS evaluator, and dual-mode GRPO policy";

  py::enum_<Mode>(m, "Mode")
      .value("Thinking", Mode::Thinking)
      .value("NonThinking", Mode::NonThinking);

  py::class_<WorldConfig>(m, "WorldConfig")
      .def(py::init<>())
      .def_readwrite("v_max", &WorldConfig::v_max)
      .def_readwrite("horizon", &WorldConfig::horizon)
      .def_readwrite("mix_l1", &WorldConfig::mix_l1)
      .def_readwrite("mix_l2", &WorldConfig::mix_l2)
      .def_readwrite("mix_l3", &WorldConfig::mix_l3)
      .def_readwrite("lead_speed_factors", &WorldConfig::lead_speed_factors)
      .def_readwrite("lead_ego_speeds_fwd", &WorldConfig::lead_ego_speeds_fwd)
      .def_readwrite("lead_ego_speeds_turn", &WorldConfig::lead_ego_speeds_turn);

  py::class_<GrpoConfig>(m, "GrpoConfig")
      .def(py::init<>())
      .def_readwrite("seed", &GrpoConfig::seed)
      .def_readwrite("group_size", &GrpoConfig::group_size)
      .def_readwrite("epochs", &GrpoConfig::epochs)
      .def_readwrite("batch_scenes", &GrpoConfig::batch_scenes)
      .def_readwrite("lr", &GrpoConfig::lr)
      .def_readwrite("clip_eps", &GrpoConfig::clip_eps)
      .def_readwrite("kl_beta", &GrpoConfig::kl_beta)
      .def_readwrite("adaptive_t", &GrpoConfig::adaptive_t)
      .def_readwrite("n_train", &GrpoConfig::n_train)
      .def_readwrite("n_val", &GrpoConfig::n_val)
      .def_readwrite("n_test", &GrpoConfig::n_test)
      .def_readwrite("sft_lr", &GrpoConfig::sft_lr)
      .def_readwrite("sft_epochs", &GrpoConfig::sft_epochs)
      .def_readwrite("best_of_n", &GrpoConfig::best_of_n)
      .def_readwrite("val_every", &GrpoConfig::val_every);

  py::class_<Scene>(m, "Scene")
      .def_property_readonly("seed", [](const Scene& s) { return s.seed; })
      .def_property_readonly("level", [](const Scene& s) { return static_cast<int>(s.complexity); })
      .def_property_readonly("command", [](const Scene& s) { return to_string(s.command); })
      .def_property_readonly("ego_speed", [](const Scene& s) { return s.ego.speed; })
      .def_property_readonly("num_agents", [](const Scene& s) { return s.agents.size(); })
      .def("to_json", &scene_to_json);

  py::class_<Response>(m, "Response")
      .def_readonly("raw_text", &Response::raw_text)
      .def_readonly("mode", &Response::mode)
      .def_readonly("token_cost", &Response::token_cost)
      .def_readonly("tags_ok", &Response::tags_ok)
      .def_property_readonly("think_content",
                             [](const Response& r) { return r.think_content; })
      .def_property_readonly("trajectory", [](const Response& r) -> std::optional<PointList> {
        if (!r.trajectory) return std::nullopt;
        return traj_to_points(*r.trajectory);
      });

  m.def(
      "generate_scene",
      [](std::uint64_t seed, const WorldConfig& cfg, std::optional<int> level) {
        std::optional<ComplexityLevel> lv;
        if (level) lv = level_from_int(*level);
        return generate_scene(seed, lv, cfg);
      },
      py::arg("seed"), py::arg("cfg") = WorldConfig{}, py::arg("level") = std::nullopt);

  m.def(
      "scene_from_json",
      [](const std::string& text, const WorldConfig& cfg) { return scene_from_json(text, cfg); },
      py::arg("text"), py::arg("cfg") = WorldConfig{});

  m.def(
      "expert_plan",
      [](const Scene& s, const WorldConfig& cfg) { return traj_to_points(expert_plan(s, cfg)); },
      py::arg("scene"), py::arg("cfg") = WorldConfig{});

  m.def(
      "pdm_score",
      [](const PointList& traj, const Scene& s, const WorldConfig& cfg) {
        return pdm_dict(pdm_score(traj_from_points(traj), s, cfg));
      },
      py::arg("trajectory"), py::arg("scene"), py::arg("cfg") = WorldConfig{});

  m.def(
      "critical_objects",
      [](const Scene& s, const WorldConfig& cfg) {
        const CriticalObjects c = classify_critical_objects(s, cfg);
        py::dict d;
        d["cipo1"] = c.cipo1 ? py::cast(*c.cipo1) : py::none();
        d["cipo1_s"] = c.cipo1_s;
        d["cipo1_dv"] = c.cipo1_dv;
        d["cipo2"] = c.cipo2;
        d["cipo2_s_min"] = c.cipo2_s_min;
        d["motion_interaction"] = c.motion_interaction;
        d["mi_earliest_t"] = c.mi_earliest_t;
        d["boundary_proximity"] = c.boundary_proximity;
        d["boundary_min_dist"] = c.boundary_min_dist;
        return d;
      },
      py::arg("scene"), py::arg("cfg") = WorldConfig{});

  m.def("parse_response", &parse_response, py::arg("text"));
  m.def(
      "serialize_response",
      [](Mode mode, const std::string& think, const PointList& traj) {
        return serialize_response(mode, think, traj_from_points(traj));
      },
      py::arg("mode"), py::arg("think_text"), py::arg("trajectory"));

  m.def(
      "endpoint_reward",
      [](const PointList& traj, const PointList& expert) {
        return endpoint_reward(traj_from_points(traj), traj_from_points(expert));
      },
      py::arg("trajectory"), py::arg("expert"));

  m.def(
      "adaptive_think_reward",
      [](double s_think, double s_nothink, int c_think, int c_nothink, double t, int d) {
        AdaptiveRewardInputs in{s_think, s_nothink, c_think, c_nothink, t, d};
        return adaptive_think_reward(in);
      },
      py::arg("s_think"), py::arg("s_nothink"), py::arg("c_think"), py::arg("c_nothink"),
      py::arg("t"), py::arg("d"));

  m.def(
      "anchor_trajectories",
      [](double ego_speed, const WorldConfig& cfg) {
        const TrajectoryVocabulary v = build_vocabulary(ego_speed, cfg);
        std::vector<PointList> out;
        out.reserve(v.anchors.size());
        for (const Trajectory& t : v.anchors) out.push_back(traj_to_points(t));
        return out;
      },
      py::arg("ego_speed"), py::arg("cfg") = WorldConfig{});

  m.def(
      "train",
      [](const GrpoConfig& gcfg, const WorldConfig& wcfg, const std::string& mode_policy) {
        const TrainResult res = train(gcfg, wcfg, mode_policy_from_string(mode_policy));
        return eval_dict(res.final_val);
      },
      py::arg("grpo_cfg"), py::arg("world_cfg") = WorldConfig{},
      py::arg("mode_policy") = "adaptive");
}
