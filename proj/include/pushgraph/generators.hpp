#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "pushgraph/rng.hpp"
#include "pushgraph/scene.hpp"
#include "pushgraph/sim.hpp"

namespace pushgraph {

struct GeneratorConfig {
  double dt = 0.05;
  double friction = 0.3;
  double robot_radius = 0.03;
  int pushes = 9;            // multiple-parts protocol; different-masses uses 3
  double push_length = 0.30;
  double base_speed = 0.16;  // randomized +-50% per trajectory
  double approach_clearance = 0.02;
  // object placement region (matches the planner workspace)
  double x_min = -0.62, x_max = -0.18, y_min = -0.42, y_max = 0.42;
};

namespace detail_gen {

inline bool pose_free(const Scene& s, const Shape& shape, const Pose2D& pose, double min_gap,
                      int skip_id = -1) {
  for (const auto& o : s.objects) {
    if (o.id == skip_id) continue;
    if (surface_gap(shape, pose, o.shape, o.state.pose) < min_gap) return false;
  }
  return true;
}

inline Shape random_shape(Rng& rng, bool cylinders_only) {
  Shape sh;
  if (cylinders_only || rng.bernoulli(0.5)) {
    sh.kind = ShapeKind::Cylinder;
    sh.a = rng.uniform(0.04, 0.08);
    sh.b = 0.0;
  } else {
    sh.kind = ShapeKind::Cuboid;
    sh.a = rng.uniform(0.04, 0.10);
    sh.b = rng.uniform(0.03, 0.07);
  }
  return sh;
}

// plans one straight push toward a target object given the live scene state,
// trying several approach angles until the start pose is collision free
inline bool plan_push(const Scene& live, int target_id, Rng& rng, double speed, double length,
                      const GeneratorConfig& cfg, PushCommand& out) {
  const ObjectNode* target = live.find(target_id);
  if (!target) return false;
  Shape robot_shape;
  robot_shape.kind = ShapeKind::Cylinder;
  robot_shape.a = cfg.robot_radius;
  for (int attempt = 0; attempt < 24; ++attempt) {
    const double phi = rng.uniform(0.0, 2.0 * kPi);
    const Vec2 dir{std::cos(phi), std::sin(phi)};
    const double back = target->shape.bounding_radius() + cfg.robot_radius +
                        cfg.approach_clearance + 0.01 * attempt;
    const Vec2 start = target->state.pose.pos() - dir * back;
    Pose2D start_pose{start.x, start.y, 0.0};
    if (!pose_free(live, robot_shape, start_pose, 1e-3)) continue;
    out.start = start_pose;
    out.dir = dir;
    out.length = length;
    out.speed = speed;
    return true;
  }
  return false;
}

// connected components of the joint graph, as lists of object ids
inline std::vector<std::vector<int>> joint_components(const Scene& s) {
  std::vector<int> ids;
  for (const auto& o : s.objects)
    if (!o.kinematic) ids.push_back(o.id);
  std::vector<int> parent(ids.size());
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  auto index_of = [&](int id) {
    return static_cast<int>(std::find(ids.begin(), ids.end(), id) - ids.begin());
  };
  for (const auto& j : s.joints) parent[find(index_of(j.body_a))] = find(index_of(j.body_b));
  std::vector<std::vector<int>> comps;
  std::vector<int> root_slot(ids.size(), -1);
  for (size_t i = 0; i < ids.size(); ++i) {
    const int r = find(static_cast<int>(i));
    if (root_slot[r] < 0) {
      root_slot[r] = static_cast<int>(comps.size());
      comps.emplace_back();
    }
    comps[root_slot[r]].push_back(ids[i]);
  }
  return comps;
}

// Simulates the scene's script so far and appends pushes planned against the
// live state; the finished script is stored statically in the scene.
inline void plan_script(Scene& scene, Rng& rng, int pushes, double speed,
                        const GeneratorConfig& cfg,
                        const std::function<int(const Scene&, int, Rng&)>& pick_target) {
  Scene live = scene;
  for (int p = 0; p < pushes; ++p) {
    const int target = pick_target(live, p, rng);
    PushCommand cmd;
    if (!plan_push(live, target, rng, speed, cfg.push_length, cfg, cmd))
      throw std::runtime_error("plan_script: no free approach pose");
    scene.script.push_back(cmd);
    live.script = {cmd};
    const auto controls = script_to_controls(live);
    for (const auto& c : controls) live = step(live, c);
    live.script.clear();
  }
}

}  // namespace detail_gen

// Articulated clutter: random shapes, random joint chains covering all four
// relation classes, 9 pushes of 30 cm aimed round-robin over joint components.
inline Scene generate_multiple_parts(std::uint64_t seed, int n_objects,
                                     const GeneratorConfig& cfg = {}) {
  if (n_objects < 2) throw std::invalid_argument("generate_multiple_parts: need >= 2 objects");
  for (std::uint64_t attempt = 0; attempt < 64; ++attempt) {
    Rng rng(seed * 0x9e3779b97f4a7c15ull + attempt + 1);
    Scene s;
    s.dt = cfg.dt;
    s.friction = cfg.friction;

    // robot goes in first so placement checks see it
    {
      ObjectNode robot;
      robot.id = 0;
      robot.is_robot = true;
      robot.kinematic = true;
      robot.shape = {ShapeKind::Cylinder, cfg.robot_radius, 0.0};
      robot.mass = 1.0;
      robot.state.pose = {cfg.x_min - 0.2, 0.0, 0.0};
      s.objects.push_back(robot);
    }

    // chain component sizes; guarantee at least one jointed pair
    std::vector<int> comp_sizes;
    int remaining = n_objects;
    while (remaining > 0) {
      int size = std::min(remaining, rng.uniform_int(1, 3));
      comp_sizes.push_back(size);
      remaining -= size;
    }
    if (std::all_of(comp_sizes.begin(), comp_sizes.end(), [](int c) { return c == 1; }))
      comp_sizes[0] = std::min(n_objects, 2);

    bool ok = true;
    int next_id = 1;
    int total_placed = 0;
    bool has_joint = false;
    for (int size : comp_sizes) {
      if (total_placed + size > n_objects) size = n_objects - total_placed;
      if (size == 0) break;
      // local chain layout
      std::vector<ObjectNode> members;
      std::vector<Joint> local_joints;
      for (int m = 0; m < size; ++m) {
        ObjectNode o;
        o.id = next_id++;
        o.shape = detail_gen::random_shape(rng, false);
        o.mass = rng.uniform(0.5, 2.0);
        if (m == 0) {
          o.state.pose = {0, 0, rng.uniform(-kPi, kPi)};
        } else {
          const auto& prev = members.back();
          const auto jt = static_cast<JointType>(rng.uniform_int(0, 3));
          double gap;
          switch (jt) {
            case JointType::Fixed: gap = rng.uniform(0.000, 0.01); break;
            case JointType::Revolute: gap = rng.uniform(0.005, 0.02); break;
            case JointType::Prismatic: gap = rng.uniform(0.01, 0.03); break;
            default: gap = rng.uniform(0.005, 0.04); break;
          }
          const double ang = rng.uniform(-kPi, kPi);
          const Vec2 dir{std::cos(ang), std::sin(ang)};
          const double dist = prev.shape.bounding_radius() + o.shape.bounding_radius() + gap;
          o.state.pose = {prev.state.pose.x + dir.x * dist, prev.state.pose.y + dir.y * dist,
                          rng.uniform(-kPi, kPi)};
          // no overlap with earlier chain members
          bool clear = true;
          for (const auto& q : members)
            if (surface_gap(o.shape, o.state.pose, q.shape, q.state.pose) < 1e-4) clear = false;
          if (!clear && jt != JointType::Fixed) {
            ok = false;
            break;
          }
          if (jt != JointType::NoJoint) {
            Joint j;
            j.type = jt;
            j.body_a = prev.id;
            j.body_b = o.id;
            if (jt == JointType::Revolute) {
              j.anchor_a = {0, 0};  // child orbits the parent center
              j.anchor_b = rotate(prev.state.pose.pos() - o.state.pose.pos(), -o.state.pose.theta);
            } else {
              const Vec2 mid = (prev.state.pose.pos() + o.state.pose.pos()) * 0.5;
              j.anchor_a = rotate(mid - prev.state.pose.pos(), -prev.state.pose.theta);
              j.anchor_b = rotate(mid - o.state.pose.pos(), -o.state.pose.theta);
            }
            if (jt == JointType::Prismatic)
              j.axis_a = rotate(dir, -prev.state.pose.theta).normalized();
            j.rest_angle = wrap_angle(o.state.pose.theta - prev.state.pose.theta);
            local_joints.push_back(j);
            has_joint = true;
          }
        }
        members.push_back(o);
      }
      if (!ok) break;

      // drop the component somewhere free
      bool placed = false;
      for (int t = 0; t < 60 && !placed; ++t) {
        const Vec2 at{rng.uniform(cfg.x_min, cfg.x_max), rng.uniform(cfg.y_min, cfg.y_max)};
        const double rot = rng.uniform(-kPi, kPi);
        std::vector<ObjectNode> moved = members;
        for (auto& o : moved) {
          const Vec2 p = rotate(o.state.pose.pos(), rot) + at;
          o.state.pose = {p.x, p.y, wrap_angle(o.state.pose.theta + rot)};
        }
        bool clear = true;
        for (const auto& o : moved)
          if (!detail_gen::pose_free(s, o.shape, o.state.pose, rng.uniform(0.01, 0.05)))
            clear = false;
        if (!clear) continue;
        for (auto& o : moved) s.objects.push_back(o);
        // anchors, axes and rest angles are frame-local, the rigid move keeps them valid
        for (auto& j : local_joints) s.joints.push_back(j);
        placed = true;
      }
      if (!placed) {
        ok = false;
        break;
      }
      total_placed += size;
      if (total_placed >= n_objects) break;
    }
    if (!ok || !has_joint || total_placed < n_objects) continue;

    const double speed = cfg.base_speed * rng.uniform(0.5, 1.5);
    try {
      auto comps = detail_gen::joint_components(s);
      detail_gen::plan_script(s, rng, cfg.pushes, speed, cfg,
                              [&comps](const Scene& live, int p, Rng& r) {
                                (void)live;
                                const auto& comp = comps[p % comps.size()];
                                return comp[r.uniform_index(comp.size())];
                              });
    } catch (const std::exception&) {
      continue;
    }
    return s;
  }
  throw std::runtime_error("generate_multiple_parts: placement failed for seed " +
                           std::to_string(seed));
}

inline constexpr double kMassIntervals[3][2] = {{0.2, 0.5}, {1.0, 2.0}, {8.0, 10.0}};

// Differently massed cylinders, 3 scattering pushes through the cluster centroid.
inline Scene generate_different_masses(std::uint64_t seed, int n_objects,
                                       const GeneratorConfig& cfg = {}) {
  if (n_objects < 1) throw std::invalid_argument("generate_different_masses: need >= 1 object");
  for (std::uint64_t attempt = 0; attempt < 64; ++attempt) {
    Rng rng(seed * 0x9e3779b97f4a7c15ull + attempt + 0x51ull);
    Scene s;
    s.dt = cfg.dt;
    s.friction = cfg.friction;
    const Vec2 center{-0.40, 0.0};
    const double cluster_r = 0.07 * std::sqrt(static_cast<double>(n_objects)) + 0.06;
    bool ok = true;
    for (int i = 0; i < n_objects; ++i) {
      ObjectNode o;
      o.id = i + 1;
      o.shape = detail_gen::random_shape(rng, true);
      const int cls = rng.uniform_int(0, 2);
      o.mass = rng.uniform(kMassIntervals[cls][0], kMassIntervals[cls][1]);
      bool placed = false;
      for (int t = 0; t < 80 && !placed; ++t) {
        const double ang = rng.uniform(0.0, 2.0 * kPi);
        const double rad = cluster_r * std::sqrt(rng.uniform());
        o.state.pose = {center.x + rad * std::cos(ang), center.y + rad * std::sin(ang),
                        rng.uniform(-kPi, kPi)};
        if (detail_gen::pose_free(s, o.shape, o.state.pose, rng.uniform(0.005, 0.03)))
          placed = true;
      }
      if (!placed) {
        ok = false;
        break;
      }
      s.objects.push_back(o);
    }
    if (!ok) continue;

    ObjectNode robot;
    robot.id = 0;
    robot.is_robot = true;
    robot.kinematic = true;
    robot.shape = {ShapeKind::Cylinder, cfg.robot_radius, 0.0};
    robot.state.pose = {center.x - cluster_r - 0.2, center.y, 0.0};
    s.objects.push_back(robot);

    // three pushes through the live centroid at spread angles
    const double speed = cfg.base_speed * rng.uniform(0.5, 1.5);
    const double base_ang = rng.uniform(0.0, 2.0 * kPi);
    Scene live = s;
    bool scripted = true;
    for (int p = 0; p < 3; ++p) {
      Vec2 centroid{0, 0};
      int cnt = 0;
      for (const auto& o : live.objects)
        if (!o.kinematic) {
          centroid = centroid + o.state.pose.pos();
          ++cnt;
        }
      centroid = centroid * (1.0 / cnt);
      const double phi = base_ang + p * (2.0 * kPi / 3.0) + rng.uniform(-0.3, 0.3);
      const Vec2 dir{std::cos(phi), std::sin(phi)};
      PushCommand cmd;
      cmd.dir = dir;
      cmd.length = cfg.push_length;
      cmd.speed = speed;
      Shape rs = robot.shape;
      bool found = false;
      for (int t = 0; t < 24 && !found; ++t) {
        const double back = cluster_r + cfg.robot_radius + 0.03 + 0.012 * t;
        const Vec2 start = centroid - dir * back;
        Pose2D sp{start.x, start.y, 0.0};
        if (detail_gen::pose_free(live, rs, sp, 1e-3)) {
          cmd.start = sp;
          found = true;
        }
      }
      if (!found) {
        scripted = false;
        break;
      }
      s.script.push_back(cmd);
      live.script = {cmd};
      for (const auto& c : script_to_controls(live)) live = step(live, c);
      live.script.clear();
    }
    if (!scripted) continue;
    return s;
  }
  throw std::runtime_error("generate_different_masses: placement failed for seed " +
                           std::to_string(seed));
}

enum class ControlledLayout { TwoObject, ThreeObject };

// Fixed geometry and script; only the masses change between runs.
inline Scene generate_controlled_mass_env(ControlledLayout layout,
                                          const std::vector<double>& masses,
                                          const GeneratorConfig& cfg = {}) {
  Scene s;
  s.dt = cfg.dt;
  s.friction = cfg.friction;
  auto cyl = [](int id, double x, double y, double r, double m) {
    ObjectNode o;
    o.id = id;
    o.shape = {ShapeKind::Cylinder, r, 0.0};
    o.mass = m;
    o.state.pose = {x, y, 0.0};
    return o;
  };
  ObjectNode robot;
  robot.id = 0;
  robot.is_robot = true;
  robot.kinematic = true;
  robot.shape = {ShapeKind::Cylinder, cfg.robot_radius, 0.0};
  if (layout == ControlledLayout::TwoObject) {
    if (masses.size() != 2)
      throw std::invalid_argument("controlled 2-object layout needs 2 masses");
    s.objects.push_back(cyl(1, -0.46, 0.0, 0.06, masses[0]));
    // offset so the plowed A strikes B a single glancing blow and passes by;
    // the momentum split of that blow is where the mass ratio shows
    s.objects.push_back(cyl(2, -0.33, 0.092, 0.05, masses[1]));
    robot.state.pose = {-0.62, 0.0, 0.0};
    s.objects.push_back(robot);
    PushCommand cmd;
    cmd.start = {-0.58, 0.0, 0.0};
    cmd.dir = {1.0, 0.0};
    cmd.length = 0.24;
    cmd.speed = 0.16;
    s.script = {cmd};
  } else {
    if (masses.size() != 3)
      throw std::invalid_argument("controlled 3-object layout needs 3 masses");
    s.objects.push_back(cyl(1, -0.46, 0.10, 0.055, masses[0]));
    s.objects.push_back(cyl(2, -0.46, -0.10, 0.055, masses[1]));
    s.objects.push_back(cyl(3, -0.30, 0.00, 0.055, masses[2]));
    robot.state.pose = {-0.70, 0.0, 0.0};
    s.objects.push_back(robot);
    // one push aimed at each object
    const Vec2 targets[3] = {{-0.46, 0.10}, {-0.46, -0.10}, {-0.30, 0.00}};
    const Vec2 dirs[3] = {{1.0, 0.0}, {1.0, 0.0}, {0.0, -1.0}};
    for (int k = 0; k < 3; ++k) {
      PushCommand cmd;
      const double back = 0.055 + cfg.robot_radius + cfg.approach_clearance;
      const Vec2 st = targets[k] - dirs[k] * back;
      cmd.start = {st.x, st.y, 0.0};
      cmd.dir = dirs[k];
      cmd.length = 0.18;
      cmd.speed = 0.20;
      s.script.push_back(cmd);
    }
  }
  return s;
}

inline Trajectory make_trajectory(const Scene& scene, const std::string& setup,
                                  std::uint64_t seed, const SimConfig& sim_cfg = {}) {
  auto tr = rollout_sim(scene, script_to_controls(scene), sim_cfg);
  tr.setup = setup;
  tr.seed = seed;
  return tr;
}

}  // namespace pushgraph
