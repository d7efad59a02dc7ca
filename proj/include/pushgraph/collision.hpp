#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>

#include "pushgraph/scene.hpp"

namespace pushgraph {

// Contact between two bodies. normal points from a to b; depth > 0 means
// overlap; point is the representative contact location (world frame).
struct Contact {
  int a = 0, b = 0;  // object indices within the scene
  Vec2 normal;
  Vec2 point;
  double depth = 0.0;
};

namespace geom {

inline std::array<Vec2, 4> box_corners(const Pose2D& pose, double hx, double hy) {
  const Vec2 c = pose.pos();
  const Vec2 ex = rotate({hx, 0}, pose.theta);
  const Vec2 ey = rotate({0, hy}, pose.theta);
  return {c + ex + ey, c - ex + ey, c - ex - ey, c + ex - ey};
}

// closest point on an oriented box to p
inline Vec2 closest_on_box(const Pose2D& pose, double hx, double hy, Vec2 p) {
  Vec2 local = rotate(p - pose.pos(), -pose.theta);
  local.x = std::clamp(local.x, -hx, hx);
  local.y = std::clamp(local.y, -hy, hy);
  return rotate(local, pose.theta) + pose.pos();
}

inline bool point_in_box(const Pose2D& pose, double hx, double hy, Vec2 p) {
  const Vec2 local = rotate(p - pose.pos(), -pose.theta);
  return std::abs(local.x) <= hx && std::abs(local.y) <= hy;
}

}  // namespace geom

// Signed surface gap between two shapes (negative = penetration). Box-box uses
// the largest separating-axis distance, exact except for the corner-corner
// case, which is fine for the coarse contact-threshold bookkeeping.
inline double surface_gap(const Shape& sa, const Pose2D& pa, const Shape& sb, const Pose2D& pb) {
  const bool ca = sa.kind == ShapeKind::Cylinder, cb = sb.kind == ShapeKind::Cylinder;
  if (ca && cb) return (pb.pos() - pa.pos()).norm() - sa.a - sb.a;
  if (ca != cb) {
    const Shape& box = ca ? sb : sa;
    const Pose2D& boxp = ca ? pb : pa;
    const Shape& cyl = ca ? sa : sb;
    const Pose2D& cylp = ca ? pa : pb;
    if (geom::point_in_box(boxp, box.a, box.b, cylp.pos())) {
      Vec2 local = rotate(cylp.pos() - boxp.pos(), -boxp.theta);
      const double dx = box.a - std::abs(local.x);
      const double dy = box.b - std::abs(local.y);
      return -(std::min(dx, dy) + cyl.a);
    }
    const Vec2 q = geom::closest_on_box(boxp, box.a, box.b, cylp.pos());
    return (cylp.pos() - q).norm() - cyl.a;
  }
  // box-box SAT over the 4 face normals
  const auto corners_a = geom::box_corners(pa, sa.a, sa.b);
  const auto corners_b = geom::box_corners(pb, sb.a, sb.b);
  double best = -1e300;
  auto axis_sep = [&](Vec2 axis) {
    double min_a = 1e300, max_a = -1e300, min_b = 1e300, max_b = -1e300;
    for (const auto& c : corners_a) {
      const double d = c.dot(axis);
      min_a = std::min(min_a, d);
      max_a = std::max(max_a, d);
    }
    for (const auto& c : corners_b) {
      const double d = c.dot(axis);
      min_b = std::min(min_b, d);
      max_b = std::max(max_b, d);
    }
    best = std::max(best, std::max(min_b - max_a, min_a - max_b));
  };
  axis_sep(rotate({1, 0}, pa.theta));
  axis_sep(rotate({0, 1}, pa.theta));
  axis_sep(rotate({1, 0}, pb.theta));
  axis_sep(rotate({0, 1}, pb.theta));
  return best;
}

// Penetration contact, if any. Single deepest-point manifold.
inline std::optional<Contact> make_contact(int ia, const Shape& sa, const Pose2D& pa, int ib,
                                           const Shape& sb, const Pose2D& pb) {
  const bool ca = sa.kind == ShapeKind::Cylinder, cb = sb.kind == ShapeKind::Cylinder;
  Contact c;
  c.a = ia;
  c.b = ib;
  if (ca && cb) {
    const Vec2 d = pb.pos() - pa.pos();
    const double dist = d.norm();
    const double depth = sa.a + sb.a - dist;
    if (depth <= 0) return std::nullopt;
    c.normal = dist > 1e-12 ? d * (1.0 / dist) : Vec2{1, 0};
    c.point = pa.pos() + c.normal * (sa.a - 0.5 * depth);
    c.depth = depth;
    return c;
  }
  if (ca != cb) {
    // order: treat a as the cylinder, flip at the end if needed
    const bool flipped = !ca;
    const Shape& cyl = ca ? sa : sb;
    const Pose2D& cylp = ca ? pa : pb;
    const Shape& box = ca ? sb : sa;
    const Pose2D& boxp = ca ? pb : pa;
    Vec2 normal;  // cylinder -> box
    double depth;
    Vec2 point;
    if (geom::point_in_box(boxp, box.a, box.b, cylp.pos())) {
      Vec2 local = rotate(cylp.pos() - boxp.pos(), -boxp.theta);
      const double dx = box.a - std::abs(local.x);
      const double dy = box.b - std::abs(local.y);
      Vec2 n_local = dx < dy ? Vec2{local.x >= 0 ? 1.0 : -1.0, 0.0}
                             : Vec2{0.0, local.y >= 0 ? 1.0 : -1.0};
      normal = rotate(n_local, boxp.theta) * -1.0;  // push cylinder out of box
      depth = std::min(dx, dy) + cyl.a;
      point = cylp.pos();
    } else {
      const Vec2 q = geom::closest_on_box(boxp, box.a, box.b, cylp.pos());
      const Vec2 d = q - cylp.pos();
      const double dist = d.norm();
      depth = cyl.a - dist;
      if (depth <= 0) return std::nullopt;
      normal = dist > 1e-12 ? d * (1.0 / dist) : Vec2{1, 0};
      point = q;
    }
    if (!flipped) {
      c.normal = normal;
    } else {
      c.normal = normal * -1.0;
    }
    c.point = point;
    c.depth = depth;
    return c;
  }
  // box-box: SAT minimum-overlap axis, deepest corner of the other box
  const auto corners_a = geom::box_corners(pa, sa.a, sa.b);
  const auto corners_b = geom::box_corners(pb, sb.a, sb.b);
  double best_overlap = 1e300;
  Vec2 best_axis;
  int best_owner = 0;  // which box supplied the face axis
  auto consider = [&](Vec2 axis, int owner) {
    double min_a = 1e300, max_a = -1e300, min_b = 1e300, max_b = -1e300;
    for (const auto& q : corners_a) {
      const double d = q.dot(axis);
      min_a = std::min(min_a, d);
      max_a = std::max(max_a, d);
    }
    for (const auto& q : corners_b) {
      const double d = q.dot(axis);
      min_b = std::min(min_b, d);
      max_b = std::max(max_b, d);
    }
    const double overlap = std::min(max_a, max_b) - std::max(min_a, min_b);
    if (overlap < best_overlap) {
      best_overlap = overlap;
      // orient axis from a to b
      const double center_delta = (pb.pos() - pa.pos()).dot(axis);
      best_axis = center_delta >= 0 ? axis : axis * -1.0;
      best_owner = owner;
    }
  };
  consider(rotate({1, 0}, pa.theta), 0);
  consider(rotate({0, 1}, pa.theta), 0);
  consider(rotate({1, 0}, pb.theta), 1);
  consider(rotate({0, 1}, pb.theta), 1);
  if (best_overlap <= 0) return std::nullopt;
  c.normal = best_axis;
  c.depth = best_overlap;
  // deepest corner of the box that does not own the reference face
  const auto& probe = best_owner == 0 ? corners_b : corners_a;
  const double sign = best_owner == 0 ? -1.0 : 1.0;  // b's deepest along -n, a's along +n
  double best_d = 1e300;
  Vec2 deepest = probe[0];
  for (const auto& q : probe) {
    const double d = q.dot(c.normal) * -sign;
    if (d < best_d) {
      best_d = d;
      deepest = q;
    }
  }
  c.point = deepest;
  return c;
}

}  // namespace pushgraph
