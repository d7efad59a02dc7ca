#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace pushgraph {

inline constexpr double kPi = 3.14159265358979323846;

struct Vec2 {
  double x = 0.0, y = 0.0;
  Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  double dot(Vec2 o) const { return x * o.x + y * o.y; }
  double cross(Vec2 o) const { return x * o.y - y * o.x; }
  double norm() const { return std::sqrt(x * x + y * y); }
  Vec2 perp() const { return {-y, x}; }
  Vec2 normalized() const {
    const double n = norm();
    return n > 0 ? Vec2{x / n, y / n} : Vec2{0, 0};
  }
};

inline Vec2 rotate(Vec2 v, double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}

// wrap to (-pi, pi]
inline double wrap_angle(double a) {
  a = std::fmod(a + kPi, 2.0 * kPi);
  if (a <= 0.0) a += 2.0 * kPi;
  return a - kPi;
}

struct Pose2D {
  double x = 0.0, y = 0.0, theta = 0.0;
  Vec2 pos() const { return {x, y}; }
};

enum class ShapeKind { Cylinder, Cuboid };

struct Shape {
  ShapeKind kind = ShapeKind::Cylinder;
  // cylinder: a = radius, b unused (0); cuboid: half-extents a (x), b (y)
  double a = 0.05, b = 0.0;

  double bounding_radius() const {
    return kind == ShapeKind::Cylinder ? a : std::sqrt(a * a + b * b);
  }
  // squared gyration radius; uniform density, mass cancels
  double gyration_sq() const {
    return kind == ShapeKind::Cylinder ? 0.5 * a * a : (a * a + b * b) / 3.0;
  }
};

struct BodyState {
  Pose2D pose;
  double vx = 0.0, vy = 0.0, omega = 0.0;
  Vec2 vel() const { return {vx, vy}; }
};

struct ObjectNode {
  int id = 0;
  Shape shape;
  BodyState state;
  double mass = 1.0;
  bool is_robot = false;
  bool kinematic = false;  // robot and attached tool parts
  // next-step end-effector velocity command, world frame; zero for non-robot
  double ux = 0.0, uy = 0.0, uomega = 0.0;
};

enum class JointType : int { NoJoint = 0, Fixed = 1, Revolute = 2, Prismatic = 3 };
inline constexpr int kNumJointTypes = 4;

inline const char* joint_name(JointType t) {
  switch (t) {
    case JointType::NoJoint: return "nojoint";
    case JointType::Fixed: return "fixed";
    case JointType::Revolute: return "revolute";
    case JointType::Prismatic: return "prismatic";
  }
  return "?";
}

struct Joint {
  JointType type = JointType::Fixed;
  int body_a = 0, body_b = 0;
  Vec2 anchor_a;          // in a's frame
  Vec2 anchor_b;          // in b's frame
  Vec2 axis_a{1.0, 0.0};  // prismatic slide direction, in a's frame
  double rest_angle = 0.0;  // fixed/prismatic: locked theta_b - theta_a
};

// One straight-line push: the end-effector teleports to `start`, then moves
// along `dir` for `length` meters at `speed`.
struct PushCommand {
  Pose2D start;
  Vec2 dir{1.0, 0.0};
  double length = 0.3;
  double speed = 0.1;
};

// Robot command for a single simulation step.
struct StepControl {
  bool teleport = false;
  Pose2D pose;  // teleport target (applies before the velocity)
  double ux = 0.0, uy = 0.0, uomega = 0.0;
};

struct Scene {
  std::vector<ObjectNode> objects;  // exactly one is_robot
  std::vector<Joint> joints;
  std::vector<PushCommand> script;
  double friction = 0.3;  // object-ground Coulomb coefficient
  double dt = 0.05;

  int robot_index() const {
    for (size_t i = 0; i < objects.size(); ++i)
      if (objects[i].is_robot) return static_cast<int>(i);
    throw std::logic_error("Scene: no robot node");
  }

  const ObjectNode* find(int id) const {
    for (const auto& o : objects)
      if (o.id == id) return &o;
    return nullptr;
  }
  ObjectNode* find(int id) {
    for (auto& o : objects)
      if (o.id == id) return &o;
    return nullptr;
  }

  const Joint* joint_between(int a, int b) const {
    for (const auto& j : joints)
      if ((j.body_a == a && j.body_b == b) || (j.body_a == b && j.body_b == a)) return &j;
    return nullptr;
  }
};

struct Trajectory {
  std::string setup;
  std::uint64_t seed = 0;
  Scene initial;                      // geometry, masses, joints, script
  std::vector<std::vector<BodyState>> states;  // [t][object_index], t = 0..T
  std::vector<StepControl> controls;           // length T
  double dt = 0.05;

  int num_steps() const { return static_cast<int>(controls.size()); }

  // scene snapshot at step t with the robot control of the upcoming step
  Scene scene_at(int t) const {
    Scene s = initial;
    s.script.clear();
    for (size_t i = 0; i < s.objects.size(); ++i) s.objects[i].state = states[t][i];
    const int r = s.robot_index();
    if (t < num_steps()) {
      s.objects[r].ux = controls[t].ux;
      s.objects[r].uy = controls[t].uy;
      s.objects[r].uomega = controls[t].uomega;
    } else {
      s.objects[r].ux = s.objects[r].uy = s.objects[r].uomega = 0.0;
    }
    return s;
  }
};

}  // namespace pushgraph
