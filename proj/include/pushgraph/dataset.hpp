#pragma once

#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "pushgraph/scene.hpp"

namespace pushgraph {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr int kDatasetVersion = 1;

// JSON-lines dataset: one trajectory per line. Doubles round-trip exactly
// through nlohmann::json, which the golden regression tests rely on.
namespace dataset {

inline nlohmann::json scene_to_json(const Scene& s) {
  nlohmann::json j;
  j["dt"] = s.dt;
  j["friction"] = s.friction;
  auto objs = nlohmann::json::array();
  for (const auto& o : s.objects) {
    objs.push_back({{"id", o.id},
                    {"kind", o.shape.kind == ShapeKind::Cylinder ? "cylinder" : "cuboid"},
                    {"dims", {o.shape.a, o.shape.b}},
                    {"mass", o.mass},
                    {"robot", o.is_robot},
                    {"kinematic", o.kinematic},
                    {"pose", {o.state.pose.x, o.state.pose.y, o.state.pose.theta}},
                    {"vel", {o.state.vx, o.state.vy, o.state.omega}}});
  }
  j["objects"] = std::move(objs);
  auto joints = nlohmann::json::array();
  for (const auto& jt : s.joints) {
    joints.push_back({{"type", joint_name(jt.type)},
                      {"a", jt.body_a},
                      {"b", jt.body_b},
                      {"anchor_a", {jt.anchor_a.x, jt.anchor_a.y}},
                      {"anchor_b", {jt.anchor_b.x, jt.anchor_b.y}},
                      {"axis_a", {jt.axis_a.x, jt.axis_a.y}},
                      {"rest_angle", jt.rest_angle}});
  }
  j["joints"] = std::move(joints);
  auto script = nlohmann::json::array();
  for (const auto& p : s.script) {
    script.push_back({{"start", {p.start.x, p.start.y, p.start.theta}},
                      {"dir", {p.dir.x, p.dir.y}},
                      {"length", p.length},
                      {"speed", p.speed}});
  }
  j["script"] = std::move(script);
  return j;
}

inline JointType joint_from_name(const std::string& n) {
  for (int k = 0; k < kNumJointTypes; ++k)
    if (n == joint_name(static_cast<JointType>(k))) return static_cast<JointType>(k);
  throw IoError("dataset: unknown joint type " + n);
}

inline Scene scene_from_json(const nlohmann::json& j) {
  Scene s;
  s.dt = j.at("dt").get<double>();
  s.friction = j.at("friction").get<double>();
  for (const auto& oj : j.at("objects")) {
    ObjectNode o;
    o.id = oj.at("id").get<int>();
    o.shape.kind = oj.at("kind").get<std::string>() == "cylinder" ? ShapeKind::Cylinder
                                                                  : ShapeKind::Cuboid;
    o.shape.a = oj.at("dims")[0].get<double>();
    o.shape.b = oj.at("dims")[1].get<double>();
    o.mass = oj.at("mass").get<double>();
    o.is_robot = oj.at("robot").get<bool>();
    o.kinematic = oj.at("kinematic").get<bool>();
    o.state.pose = {oj.at("pose")[0].get<double>(), oj.at("pose")[1].get<double>(),
                    oj.at("pose")[2].get<double>()};
    o.state.vx = oj.at("vel")[0].get<double>();
    o.state.vy = oj.at("vel")[1].get<double>();
    o.state.omega = oj.at("vel")[2].get<double>();
    s.objects.push_back(o);
  }
  for (const auto& jj : j.at("joints")) {
    Joint jt;
    jt.type = joint_from_name(jj.at("type").get<std::string>());
    jt.body_a = jj.at("a").get<int>();
    jt.body_b = jj.at("b").get<int>();
    jt.anchor_a = {jj.at("anchor_a")[0].get<double>(), jj.at("anchor_a")[1].get<double>()};
    jt.anchor_b = {jj.at("anchor_b")[0].get<double>(), jj.at("anchor_b")[1].get<double>()};
    jt.axis_a = {jj.at("axis_a")[0].get<double>(), jj.at("axis_a")[1].get<double>()};
    jt.rest_angle = jj.at("rest_angle").get<double>();
    s.joints.push_back(jt);
  }
  for (const auto& pj : j.at("script")) {
    PushCommand p;
    p.start = {pj.at("start")[0].get<double>(), pj.at("start")[1].get<double>(),
               pj.at("start")[2].get<double>()};
    p.dir = {pj.at("dir")[0].get<double>(), pj.at("dir")[1].get<double>()};
    p.length = pj.at("length").get<double>();
    p.speed = pj.at("speed").get<double>();
    s.script.push_back(p);
  }
  return s;
}

inline nlohmann::json trajectory_to_json(const Trajectory& tr) {
  nlohmann::json j;
  j["v"] = kDatasetVersion;
  j["setup"] = tr.setup;
  j["seed"] = tr.seed;
  j["dt"] = tr.dt;
  j["initial"] = scene_to_json(tr.initial);
  auto states = nlohmann::json::array();
  for (const auto& frame : tr.states) {
    auto fj = nlohmann::json::array();
    for (const auto& b : frame)
      fj.push_back({b.pose.x, b.pose.y, b.pose.theta, b.vx, b.vy, b.omega});
    states.push_back(std::move(fj));
  }
  j["states"] = std::move(states);
  auto controls = nlohmann::json::array();
  for (const auto& c : tr.controls) {
    nlohmann::json cj = {{"u", {c.ux, c.uy, c.uomega}}};
    if (c.teleport) cj["tp"] = {c.pose.x, c.pose.y, c.pose.theta};
    controls.push_back(std::move(cj));
  }
  j["controls"] = std::move(controls);
  return j;
}

inline Trajectory trajectory_from_json(const nlohmann::json& j) {
  if (j.at("v").get<int>() != kDatasetVersion)
    throw IoError("dataset: unsupported trajectory version");
  Trajectory tr;
  tr.setup = j.at("setup").get<std::string>();
  tr.seed = j.at("seed").get<std::uint64_t>();
  tr.dt = j.at("dt").get<double>();
  tr.initial = scene_from_json(j.at("initial"));
  for (const auto& fj : j.at("states")) {
    std::vector<BodyState> frame;
    for (const auto& bj : fj) {
      BodyState b;
      b.pose = {bj[0].get<double>(), bj[1].get<double>(), bj[2].get<double>()};
      b.vx = bj[3].get<double>();
      b.vy = bj[4].get<double>();
      b.omega = bj[5].get<double>();
      frame.push_back(b);
    }
    tr.states.push_back(std::move(frame));
  }
  for (const auto& cj : j.at("controls")) {
    StepControl c;
    c.ux = cj.at("u")[0].get<double>();
    c.uy = cj.at("u")[1].get<double>();
    c.uomega = cj.at("u")[2].get<double>();
    if (cj.contains("tp")) {
      c.teleport = true;
      c.pose = {cj["tp"][0].get<double>(), cj["tp"][1].get<double>(), cj["tp"][2].get<double>()};
    }
    tr.controls.push_back(c);
  }
  return tr;
}

}  // namespace dataset

inline void save_trajectories(const std::string& path, const std::vector<Trajectory>& trs) {
  std::ofstream out(path);
  if (!out) throw IoError("save_trajectories: cannot open " + path);
  for (const auto& tr : trs) out << dataset::trajectory_to_json(tr).dump() << "\n";
  if (!out) throw IoError("save_trajectories: write failed at " + path);
}

inline std::vector<Trajectory> load_trajectories(const std::string& path, int limit = -1) {
  std::ifstream in(path);
  if (!in) throw IoError("load_trajectories: cannot open " + path);
  std::vector<Trajectory> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(dataset::trajectory_from_json(nlohmann::json::parse(line)));
    if (limit > 0 && static_cast<int>(out.size()) >= limit) break;
  }
  return out;
}

}  // namespace pushgraph
