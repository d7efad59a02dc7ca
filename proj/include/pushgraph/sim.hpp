#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "pushgraph/collision.hpp"
#include "pushgraph/scene.hpp"

namespace pushgraph {

struct SimError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SimConfig {
  int velocity_iterations = 10;
  int position_sweeps = 20;
  double gravity = 9.81;
  double surface_friction = 0.3;  // object-object tangential Coulomb limit
  double joint_tolerance = 1e-9;
  double penetration_fail = 1e-2;  // gross non-convergence threshold
};

namespace detail_sim {

struct BodyView {
  double inv_m = 0.0;   // 0 for kinematic bodies
  double inv_i = 0.0;
  Vec2 v;
  double omega = 0.0;
};

inline void apply_impulse(BodyView& b, Vec2 j, Vec2 r) {
  b.v = b.v + j * b.inv_m;
  b.omega += r.cross(j) * b.inv_i;
}

// impulse along n matching the relative velocity of anchor points to `target`
inline void point_velocity_constraint(BodyView& a, Vec2 ra, BodyView& b, Vec2 rb, Vec2 n,
                                      double target, bool one_sided, double& accum) {
  const Vec2 va = a.v + ra.perp() * a.omega;
  const Vec2 vb = b.v + rb.perp() * b.omega;
  const double vn = (vb - va).dot(n);
  const double k = a.inv_m + b.inv_m + a.inv_i * ra.cross(n) * ra.cross(n) +
                   b.inv_i * rb.cross(n) * rb.cross(n);
  if (k <= 0.0) return;
  double dj = -(vn - target) / k;
  if (one_sided) {
    const double next = std::max(0.0, accum + dj);
    dj = next - accum;
    accum = next;
  }
  apply_impulse(a, n * -dj, ra);
  apply_impulse(b, n * dj, rb);
}

inline std::vector<Contact> find_contacts(const Scene& s) {
  std::vector<Contact> out;
  const int n = static_cast<int>(s.objects.size());
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const auto& a = s.objects[i];
      const auto& b = s.objects[j];
      if (a.kinematic && b.kinematic) continue;
      if (s.joint_between(a.id, b.id)) continue;  // jointed pairs do not collide
      auto c = make_contact(i, a.shape, a.state.pose, j, b.shape, b.state.pose);
      if (c) out.push_back(*c);
    }
  }
  return out;
}

struct JointFrames {
  Vec2 anchor_a_w, anchor_b_w;  // world anchors
  Vec2 axis_w;                  // prismatic axis in world (from body a)
};

inline JointFrames joint_frames(const Scene& s, const Joint& j, int ia, int ib) {
  const auto& a = s.objects[ia].state.pose;
  const auto& b = s.objects[ib].state.pose;
  JointFrames f;
  f.anchor_a_w = a.pos() + rotate(j.anchor_a, a.theta);
  f.anchor_b_w = b.pos() + rotate(j.anchor_b, b.theta);
  f.axis_w = rotate(j.axis_a, a.theta);
  return f;
}

}  // namespace detail_sim

// residual constraint violations, for diagnostics and tests
struct ConstraintResiduals {
  double max_penetration = 0.0;
  double max_joint_error = 0.0;  // meters (angle errors scaled by gyration radius)
};

inline ConstraintResiduals measure_residuals(const Scene& s) {
  ConstraintResiduals r;
  for (const auto& c : detail_sim::find_contacts(s)) r.max_penetration = std::max(r.max_penetration, c.depth);
  for (const auto& j : s.joints) {
    int ia = -1, ib = -1;
    for (size_t i = 0; i < s.objects.size(); ++i) {
      if (s.objects[i].id == j.body_a) ia = static_cast<int>(i);
      if (s.objects[i].id == j.body_b) ib = static_cast<int>(i);
    }
    const auto f = detail_sim::joint_frames(s, j, ia, ib);
    const Vec2 delta = f.anchor_b_w - f.anchor_a_w;
    double err = 0.0;
    switch (j.type) {
      case JointType::Revolute:
        err = delta.norm();
        break;
      case JointType::Fixed: {
        const double dth = wrap_angle(s.objects[ib].state.pose.theta -
                                      s.objects[ia].state.pose.theta - j.rest_angle);
        err = delta.norm() + std::abs(dth) * s.objects[ib].shape.bounding_radius();
        break;
      }
      case JointType::Prismatic: {
        const double dth = wrap_angle(s.objects[ib].state.pose.theta -
                                      s.objects[ia].state.pose.theta - j.rest_angle);
        err = std::abs(delta.dot(f.axis_w.perp())) +
              std::abs(dth) * s.objects[ib].shape.bounding_radius();
        break;
      }
      case JointType::NoJoint:
        break;
    }
    r.max_joint_error = std::max(r.max_joint_error, err);
  }
  return r;
}

// One simulation step: kinematic robot advance, ground-friction decay,
// velocity-level sequential impulses (true masses), position integration, then
// position projection (geometry only, masses do not enter). Velocities are
// rewritten as observed displacement / dt, so recorded states always match the
// actual motion.
inline Scene step(const Scene& scene, const StepControl& control, const SimConfig& cfg = {}) {
  Scene s = scene;
  const double dt = s.dt;
  const int n = static_cast<int>(s.objects.size());
  const int robot = s.robot_index();

  // rigid offsets of kinematic parts relative to the robot
  std::vector<std::pair<Vec2, double>> kin_offset(n, {{0, 0}, 0.0});
  for (int i = 0; i < n; ++i) {
    if (!s.objects[i].kinematic || i == robot) continue;
    const auto& rp = s.objects[robot].state.pose;
    kin_offset[i] = {rotate(s.objects[i].state.pose.pos() - rp.pos(), -rp.theta),
                     s.objects[i].state.pose.theta - rp.theta};
  }

  if (control.teleport) {
    s.objects[robot].state.pose = control.pose;
    s.objects[robot].state.pose.theta = wrap_angle(control.pose.theta);
  }
  s.objects[robot].ux = control.ux;
  s.objects[robot].uy = control.uy;
  s.objects[robot].uomega = control.uomega;
  for (int i = 0; i < n; ++i) {
    if (!s.objects[i].kinematic) continue;
    auto& st = s.objects[i].state;
    if (i != robot) {
      const auto& rp = s.objects[robot].state.pose;
      st.pose.x = rp.pos().x + rotate(kin_offset[i].first, rp.theta).x;
      st.pose.y = rp.pos().y + rotate(kin_offset[i].first, rp.theta).y;
      st.pose.theta = wrap_angle(rp.theta + kin_offset[i].second);
    }
    st.vx = control.ux;
    st.vy = control.uy;
    st.omega = i == robot ? control.uomega : 0.0;
  }

  std::vector<Pose2D> pose_before(n);
  for (int i = 0; i < n; ++i) pose_before[i] = s.objects[i].state.pose;

  // ground friction: force mu*m*g opposes sliding, so the deceleration mu*g is
  // mass independent; spin decays with the same model over the gyration radius
  for (int i = 0; i < n; ++i) {
    auto& o = s.objects[i];
    if (o.kinematic) continue;
    const double dec = s.friction * cfg.gravity * dt;
    const double speed = o.state.vel().norm();
    const double lin_scale = speed > 1e-12 ? std::max(0.0, 1.0 - dec / speed) : 0.0;
    o.state.vx *= lin_scale;
    o.state.vy *= lin_scale;
    const double k = std::max(std::sqrt(o.shape.gyration_sq()), 1e-3);
    const double ang_dec = dec / k;
    const double w = std::abs(o.state.omega);
    o.state.omega *= w > 1e-12 ? std::max(0.0, 1.0 - ang_dec / w) : 0.0;
  }

  // velocity solve
  auto views = [&] {
    std::vector<detail_sim::BodyView> v(n);
    for (int i = 0; i < n; ++i) {
      const auto& o = s.objects[i];
      v[i].v = o.state.vel();
      v[i].omega = o.state.omega;
      if (!o.kinematic) {
        v[i].inv_m = 1.0 / o.mass;
        v[i].inv_i = 1.0 / (o.mass * o.shape.gyration_sq());
      }
    }
    return v;
  }();

  auto contacts = detail_sim::find_contacts(s);
  std::vector<double> accum(contacts.size(), 0.0);
  std::vector<double> accum_t(contacts.size(), 0.0);
  std::vector<std::pair<int, int>> joint_idx(s.joints.size());
  for (size_t k = 0; k < s.joints.size(); ++k) {
    int ia = -1, ib = -1;
    for (int i = 0; i < n; ++i) {
      if (s.objects[i].id == s.joints[k].body_a) ia = i;
      if (s.objects[i].id == s.joints[k].body_b) ib = i;
    }
    if (ia < 0 || ib < 0) throw SimError("step: joint references missing body");
    joint_idx[k] = {ia, ib};
  }

  for (int it = 0; it < cfg.velocity_iterations; ++it) {
    for (size_t c = 0; c < contacts.size(); ++c) {
      const auto& ct = contacts[c];
      auto& a = views[ct.a];
      auto& b = views[ct.b];
      const Vec2 ra = ct.point - s.objects[ct.a].state.pose.pos();
      const Vec2 rb = ct.point - s.objects[ct.b].state.pose.pos();
      detail_sim::point_velocity_constraint(a, ra, b, rb, ct.normal, 0.0, true, accum[c]);
      // Coulomb friction along the tangent, clamped by the normal impulse
      const Vec2 tan = ct.normal.perp();
      const Vec2 va = a.v + ra.perp() * a.omega;
      const Vec2 vb = b.v + rb.perp() * b.omega;
      const double vt = (vb - va).dot(tan);
      const double kt = a.inv_m + b.inv_m + a.inv_i * ra.cross(tan) * ra.cross(tan) +
                        b.inv_i * rb.cross(tan) * rb.cross(tan);
      if (kt > 0.0) {
        const double limit = cfg.surface_friction * accum[c];
        double djt = -vt / kt;
        const double next = std::clamp(accum_t[c] + djt, -limit, limit);
        djt = next - accum_t[c];
        accum_t[c] = next;
        detail_sim::apply_impulse(a, tan * -djt, ra);
        detail_sim::apply_impulse(b, tan * djt, rb);
      }
    }
    for (size_t k = 0; k < s.joints.size(); ++k) {
      const auto& j = s.joints[k];
      auto [ia, ib] = joint_idx[k];
      auto& a = views[ia];
      auto& b = views[ib];
      const auto f = detail_sim::joint_frames(s, j, ia, ib);
      const Vec2 ra = f.anchor_a_w - s.objects[ia].state.pose.pos();
      const Vec2 rb = f.anchor_b_w - s.objects[ib].state.pose.pos();
      double unused = 0.0;
      if (j.type == JointType::Fixed || j.type == JointType::Prismatic) {
        // lock relative rotation
        const double ki = a.inv_i + b.inv_i;
        if (ki > 0) {
          const double dw = b.omega - a.omega;
          a.omega += dw / ki * a.inv_i;
          b.omega -= dw / ki * b.inv_i;
        }
      }
      switch (j.type) {
        case JointType::Fixed:
        case JointType::Revolute:
          detail_sim::point_velocity_constraint(a, ra, b, rb, {1, 0}, 0.0, false, unused);
          detail_sim::point_velocity_constraint(a, ra, b, rb, {0, 1}, 0.0, false, unused);
          break;
        case JointType::Prismatic:
          detail_sim::point_velocity_constraint(a, ra, b, rb, f.axis_w.perp(), 0.0, false, unused);
          break;
        case JointType::NoJoint:
          break;
      }
    }
  }
  for (int i = 0; i < n; ++i) {
    if (s.objects[i].kinematic) continue;
    s.objects[i].state.vx = views[i].v.x;
    s.objects[i].state.vy = views[i].v.y;
    s.objects[i].state.omega = views[i].omega;
  }

  // integrate
  for (int i = 0; i < n; ++i) {
    auto& st = s.objects[i].state;
    st.pose.x += st.vx * dt;
    st.pose.y += st.vy * dt;
    st.pose.theta = wrap_angle(st.pose.theta + st.omega * dt);
  }

  // position projection: mixed sweeps, then a contact mop-up, joints polished last
  auto project_contacts_once = [&](double split_dynamic) {
    double worst = 0.0;
    for (const auto& ct : detail_sim::find_contacts(s)) {
      worst = std::max(worst, ct.depth);
      auto& a = s.objects[ct.a];
      auto& b = s.objects[ct.b];
      double wa = 0.5, wb = 0.5;
      if (a.kinematic) {
        wa = 0.0;
        wb = 1.0;
      } else if (b.kinematic) {
        wa = 1.0;
        wb = 0.0;
      } else {
        wa = split_dynamic;
        wb = 1.0 - split_dynamic;
      }
      a.state.pose.x -= ct.normal.x * ct.depth * wa;
      a.state.pose.y -= ct.normal.y * ct.depth * wa;
      b.state.pose.x += ct.normal.x * ct.depth * wb;
      b.state.pose.y += ct.normal.y * ct.depth * wb;
    }
    return worst;
  };
  auto project_joints_once = [&] {
    double worst = 0.0;
    for (size_t k = 0; k < s.joints.size(); ++k) {
      const auto& j = s.joints[k];
      auto [ia, ib] = joint_idx[k];
      auto& a = s.objects[ia];
      auto& b = s.objects[ib];
      double wa = 0.5, wb = 0.5;
      if (a.kinematic) {
        wa = 0.0;
        wb = 1.0;
      } else if (b.kinematic) {
        wa = 1.0;
        wb = 0.0;
      }
      if (j.type == JointType::Fixed || j.type == JointType::Prismatic) {
        const double dth = wrap_angle(b.state.pose.theta - a.state.pose.theta - j.rest_angle);
        worst = std::max(worst, std::abs(dth) * b.shape.bounding_radius());
        a.state.pose.theta = wrap_angle(a.state.pose.theta + dth * wa);
        b.state.pose.theta = wrap_angle(b.state.pose.theta - dth * wb);
      }
      const auto f = detail_sim::joint_frames(s, j, ia, ib);
      Vec2 delta = f.anchor_b_w - f.anchor_a_w;
      if (j.type == JointType::Prismatic) {
        const Vec2 nrm = f.axis_w.perp();
        delta = nrm * delta.dot(nrm);
      }
      worst = std::max(worst, delta.norm());
      a.state.pose.x += delta.x * wa;
      a.state.pose.y += delta.y * wa;
      b.state.pose.x -= delta.x * wb;
      b.state.pose.y -= delta.y * wb;
    }
    return worst;
  };

  for (int sweep = 0; sweep < cfg.position_sweeps; ++sweep) {
    const double cp = project_contacts_once(0.5);
    const double jp = project_joints_once();
    if (cp < 1e-9 && jp < cfg.joint_tolerance) break;
  }
  for (int sweep = 0; sweep < 10; ++sweep)
    if (project_contacts_once(0.5) < 1e-6) break;
  for (int sweep = 0; sweep < 50; ++sweep)
    if (project_joints_once() < cfg.joint_tolerance) break;

  const auto res = measure_residuals(s);
  if (res.max_penetration > cfg.penetration_fail)
    throw SimError("step: contact solver did not converge, penetration " +
                   std::to_string(res.max_penetration) + " m");

  // observed velocities
  for (int i = 0; i < n; ++i) {
    if (s.objects[i].kinematic) continue;
    auto& st = s.objects[i].state;
    st.vx = (st.pose.x - pose_before[i].x) / dt;
    st.vy = (st.pose.y - pose_before[i].y) / dt;
    st.omega = wrap_angle(st.pose.theta - pose_before[i].theta) / dt;
    if (std::abs(st.vx) < 1e-12) st.vx = 0.0;
    if (std::abs(st.vy) < 1e-12) st.vy = 0.0;
    if (std::abs(st.omega) < 1e-12) st.omega = 0.0;
  }
  return s;
}

// Expands the scene's push script into per-step controls. Each push costs one
// zero-velocity teleport step followed by ceil(length/(speed*dt)) move steps.
inline std::vector<StepControl> script_to_controls(const Scene& scene) {
  std::vector<StepControl> out;
  for (const auto& push : scene.script) {
    StepControl tp;
    tp.teleport = true;
    tp.pose = push.start;
    out.push_back(tp);
    const int steps = static_cast<int>(std::ceil(push.length / (push.speed * scene.dt)));
    const Vec2 u = push.dir.normalized() * push.speed;
    for (int k = 0; k < steps; ++k) {
      StepControl c;
      c.ux = u.x;
      c.uy = u.y;
      out.push_back(c);
    }
  }
  return out;
}

inline Trajectory rollout_sim(const Scene& scene, const std::vector<StepControl>& controls,
                              const SimConfig& cfg = {}) {
  Trajectory tr;
  tr.initial = scene;
  tr.dt = scene.dt;
  tr.controls = controls;
  tr.states.reserve(controls.size() + 1);
  std::vector<BodyState> st;
  for (const auto& o : scene.objects) st.push_back(o.state);
  tr.states.push_back(st);
  Scene cur = scene;
  for (const auto& c : controls) {
    cur = step(cur, c, cfg);
    st.clear();
    for (const auto& o : cur.objects) st.push_back(o.state);
    tr.states.push_back(st);
  }
  return tr;
}

// script-driven rollout, truncated or padded with rest steps to exactly `steps`
inline Trajectory rollout_sim(const Scene& scene, int steps, const SimConfig& cfg = {}) {
  if (steps < 1) throw std::invalid_argument("rollout_sim: steps must be >= 1");
  auto controls = script_to_controls(scene);
  controls.resize(steps);
  return rollout_sim(scene, controls, cfg);
}

inline double kinetic_energy(const Scene& s) {
  double e = 0.0;
  for (const auto& o : s.objects) {
    if (o.kinematic) continue;
    e += 0.5 * o.mass * (o.state.vx * o.state.vx + o.state.vy * o.state.vy);
    e += 0.5 * o.mass * o.shape.gyration_sq() * o.state.omega * o.state.omega;
  }
  return e;
}

}  // namespace pushgraph
