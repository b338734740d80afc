#include "adaplan/scene.hpp"

#include <nlohmann/json.hpp>
#include <stdexcept>

#include "adaplan/world.hpp"

namespace adaplan {

using nlohmann::json;

const char* to_string(NavCommand c) {
  switch (c) {
    case NavCommand::MoveForward: return "move_forward";
    case NavCommand::TurnLeft: return "turn_left";
    default: return "turn_right";
  }
}

const char* to_string(ComplexityLevel l) {
  switch (l) {
    case ComplexityLevel::Level1: return "level1";
    case ComplexityLevel::Level2: return "level2";
    default: return "level3";
  }
}

const char* to_string(LaneAssignment l) {
  switch (l) {
    case LaneAssignment::EgoLane: return "ego_lane";
    case LaneAssignment::AdjacentLane: return "adjacent_lane";
    default: return "crossing";
  }
}

const char* to_string(MotionModel m) {
  return m == MotionModel::FollowLane ? "follow_lane" : "constant_velocity";
}

NavCommand nav_command_from_string(const std::string& s) {
  if (s == "move_forward") return NavCommand::MoveForward;
  if (s == "turn_left") return NavCommand::TurnLeft;
  if (s == "turn_right") return NavCommand::TurnRight;
  throw std::runtime_error("unknown nav command: " + s);
}

ComplexityLevel level_from_int(int v) {
  if (v < 1 || v > 3) throw std::runtime_error("complexity level out of range");
  return static_cast<ComplexityLevel>(v);
}

std::string scene_to_json(const Scene& scene) {
  json j;
  j["seed"] = scene.seed;
  j["level"] = static_cast<int>(scene.complexity);
  j["command"] = to_string(scene.command);
  j["ego"] = {{"x", scene.ego.position.x},
              {"y", scene.ego.position.y},
              {"heading", scene.ego.heading},
              {"speed", scene.ego.speed},
              {"accel", scene.ego.acceleration}};
  json hist = json::array();
  for (const HistoryFrame& f : scene.history.frames)
    hist.push_back({{"x", f.position.x}, {"y", f.position.y}, {"heading", f.heading},
                    {"speed", f.speed}, {"t", f.t}});
  j["history"] = hist;
  j["corridor"] = {{"kappa", scene.corridor.kappa},
                   {"s_min", scene.corridor.s_min},
                   {"s_max", scene.corridor.s_max},
                   {"half_width", scene.corridor.half_width}};
  json agents = json::array();
  for (const Agent& a : scene.agents) {
    agents.push_back({{"id", a.id},
                      {"length", a.length},
                      {"width", a.width},
                      {"x", a.pose.position.x},
                      {"y", a.pose.position.y},
                      {"heading", a.pose.heading},
                      {"vx", a.velocity.x},
                      {"vy", a.velocity.y},
                      {"lane", to_string(a.lane)},
                      {"model", to_string(a.model)},
                      {"s0", a.s0},
                      {"lat_offset", a.lat_offset},
                      {"speed", a.speed}});
  }
  j["agents"] = agents;
  return j.dump();
}

Scene scene_from_json(const std::string& line, const WorldConfig& cfg) {
  json j = json::parse(line);
  Scene scene;
  scene.seed = j.at("seed").get<std::uint64_t>();
  scene.complexity = level_from_int(j.at("level").get<int>());
  scene.command = nav_command_from_string(j.at("command").get<std::string>());
  const json& e = j.at("ego");
  scene.ego = EgoState{{e.at("x").get<double>(), e.at("y").get<double>()},
                       e.at("heading").get<double>(),
                       e.at("speed").get<double>(),
                       e.at("accel").get<double>()};
  const json& hist = j.at("history");
  for (size_t i = 0; i < 3; ++i) {
    const json& f = hist.at(i);
    scene.history.frames[i] = HistoryFrame{{f.at("x").get<double>(), f.at("y").get<double>()},
                                           f.at("heading").get<double>(),
                                           f.at("speed").get<double>(),
                                           f.at("t").get<double>()};
  }
  const json& c = j.at("corridor");
  scene.corridor = make_corridor(c.at("kappa").get<double>(), c.at("half_width").get<double>(), cfg);
  scene.corridor.s_min = c.at("s_min").get<double>();
  scene.corridor.s_max = c.at("s_max").get<double>();
  for (const json& a : j.at("agents")) {
    Agent ag;
    ag.id = a.at("id").get<int>();
    ag.length = a.at("length").get<double>();
    ag.width = a.at("width").get<double>();
    ag.pose = Pose{{a.at("x").get<double>(), a.at("y").get<double>()}, a.at("heading").get<double>()};
    ag.velocity = {a.at("vx").get<double>(), a.at("vy").get<double>()};
    std::string lane = a.at("lane").get<std::string>();
    ag.lane = lane == "ego_lane"        ? LaneAssignment::EgoLane
              : lane == "adjacent_lane" ? LaneAssignment::AdjacentLane
                                        : LaneAssignment::Crossing;
    ag.model = a.at("model").get<std::string>() == "follow_lane" ? MotionModel::FollowLane
                                                                 : MotionModel::ConstantVelocity;
    ag.s0 = a.at("s0").get<double>();
    ag.lat_offset = a.at("lat_offset").get<double>();
    ag.speed = a.at("speed").get<double>();
    scene.agents.push_back(ag);
  }
  build_future_tracks(scene, cfg);
  return scene;
}

}  // namespace adaplan
