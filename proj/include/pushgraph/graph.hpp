#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <stdexcept>
#include <vector>

#include "pushgraph/collision.hpp"
#include "pushgraph/scene.hpp"
#include "pushgraph/tensor.hpp"

namespace pushgraph {

// How edge joint attributes are filled when building a graph.
enum class RelationSource { Oracle, Unknown, Override };

using RelationOverride = std::function<std::array<double, 4>(int id_a, int id_b)>;

struct RelationEdge {
  int sender = 0, receiver = 0;        // object ids
  int sender_idx = 0, receiver_idx = 0;  // node indices in the graph
  std::array<double, 2> d{};       // sender position in receiver frame
  std::array<double, 2> dtheta{};  // (cos, sin) of theta_sender - theta_receiver
  std::array<double, 3> s{};       // velocity difference in receiver frame
  std::array<double, 4> attr{};    // joint-type distribution
};

struct SceneGraph {
  std::vector<ObjectNode> nodes;  // kinematic bodies first (robot leading), then by id
  std::vector<RelationEdge> edges;
  std::vector<std::vector<int>> neighbors;  // per node: incident edge indices (as receiver)
  bool include_mass_feature = true;

  int num_kinematic() const {
    int n = 0;
    for (const auto& o : nodes)
      if (o.kinematic) ++n;
    return n;
  }
  int node_index(int id) const {
    for (size_t i = 0; i < nodes.size(); ++i)
      if (nodes[i].id == id) return static_cast<int>(i);
    throw std::out_of_range("SceneGraph: unknown object id");
  }
};

// d_k, delta-theta encoding and s_k of a sender expressed in the receiver's
// body frame. No absolute world coordinates survive this transform.
inline std::array<double, 7> encode_relative(const BodyState& sender, const BodyState& receiver) {
  const Vec2 d = rotate(sender.pose.pos() - receiver.pose.pos(), -receiver.pose.theta);
  const double dth = sender.pose.theta - receiver.pose.theta;
  const Vec2 dv = rotate(sender.vel() - receiver.vel(), -receiver.pose.theta);
  return {d.x, d.y, std::cos(dth), std::sin(dth), dv.x, dv.y, sender.omega - receiver.omega};
}

// inverse of the frame transform used on predicted body-frame velocities
inline std::array<double, 3> decode_to_world(const std::array<double, 3>& body_vel,
                                             const Pose2D& receiver_pose) {
  const Vec2 w = rotate({body_vel[0], body_vel[1]}, receiver_pose.theta);
  return {w.x, w.y, body_vel[2]};
}

inline std::array<double, 4> joint_one_hot(JointType t) {
  std::array<double, 4> a{};
  a[static_cast<int>(t)] = 1.0;
  return a;
}

inline std::array<double, 4> joint_uniform() { return {0.25, 0.25, 0.25, 0.25}; }

// Builds the network-facing graph. Two directed edges per connected pair;
// jointed pairs stay connected regardless of distance.
inline SceneGraph build_graph(const Scene& scene, double contact_threshold,
                              RelationSource source, const RelationOverride& override_fn = {}) {
  SceneGraph g;
  {
    std::set<int> ids;
    for (const auto& o : scene.objects)
      if (!ids.insert(o.id).second)
        throw std::invalid_argument("build_graph: duplicate object id " +
                                    std::to_string(o.id));
  }
  int robots = 0;
  for (const auto& o : scene.objects) robots += o.is_robot ? 1 : 0;
  if (robots != 1)
    throw std::invalid_argument("build_graph: scene must contain exactly one robot node");
  if (source == RelationSource::Override && !override_fn)
    throw std::invalid_argument("build_graph: override source without override function");

  g.nodes = scene.objects;
  std::stable_sort(g.nodes.begin(), g.nodes.end(), [](const ObjectNode& a, const ObjectNode& b) {
    if (a.is_robot != b.is_robot) return a.is_robot;
    if (a.kinematic != b.kinematic) return a.kinematic;
    return a.id < b.id;
  });

  const int n = static_cast<int>(g.nodes.size());
  g.neighbors.assign(n, {});
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const auto& a = g.nodes[i];
      const auto& b = g.nodes[j];
      const Joint* joint = scene.joint_between(a.id, b.id);
      bool connected = joint != nullptr;
      if (!connected)
        connected = surface_gap(a.shape, a.state.pose, b.shape, b.state.pose) < contact_threshold;
      if (!connected) continue;
      std::array<double, 4> attr;
      switch (source) {
        case RelationSource::Oracle:
          attr = joint_one_hot(joint ? joint->type : JointType::NoJoint);
          break;
        case RelationSource::Unknown:
          attr = joint_uniform();
          break;
        case RelationSource::Override:
          attr = override_fn(a.id, b.id);
          break;
      }
      auto push_edge = [&](int si, int ri) {
        RelationEdge e;
        e.sender = g.nodes[si].id;
        e.receiver = g.nodes[ri].id;
        e.sender_idx = si;
        e.receiver_idx = ri;
        const auto rel = encode_relative(g.nodes[si].state, g.nodes[ri].state);
        e.d = {rel[0], rel[1]};
        e.dtheta = {rel[2], rel[3]};
        e.s = {rel[4], rel[5], rel[6]};
        e.attr = attr;
        g.neighbors[ri].push_back(static_cast<int>(g.edges.size()));
        g.edges.push_back(e);
      };
      push_edge(i, j);
      push_edge(j, i);
    }
  }
  return g;
}

inline constexpr int kEdgeFeatureDim = 11;  // d(2) + dtheta(2) + s(3) + attr(4)

inline int node_feature_dim(bool include_mass) { return include_mass ? 12 : 11; }

// Node features are position/orientation free: velocities and the control are
// expressed in the node's own body frame, mass enters as log(mass).
inline Tensor node_features(const SceneGraph& g) {
  const int dim = node_feature_dim(g.include_mass_feature);
  Tensor f(dim, static_cast<int>(g.nodes.size()));
  for (size_t i = 0; i < g.nodes.size(); ++i) {
    const auto& o = g.nodes[i];
    int r = 0;
    f.at(r++, i) = o.shape.kind == ShapeKind::Cylinder ? 1.0 : 0.0;
    f.at(r++, i) = o.shape.kind == ShapeKind::Cuboid ? 1.0 : 0.0;
    f.at(r++, i) = o.shape.a;
    f.at(r++, i) = o.shape.b;
    if (g.include_mass_feature) f.at(r++, i) = std::log(o.mass);
    f.at(r++, i) = o.is_robot ? 1.0 : 0.0;
    const Vec2 u_body = rotate({o.ux, o.uy}, -o.state.pose.theta);
    f.at(r++, i) = u_body.x;
    f.at(r++, i) = u_body.y;
    f.at(r++, i) = o.uomega;
    const Vec2 v_body = rotate(o.state.vel(), -o.state.pose.theta);
    f.at(r++, i) = v_body.x;
    f.at(r++, i) = v_body.y;
    f.at(r++, i) = o.state.omega;
  }
  return f;
}

inline Tensor edge_features(const SceneGraph& g) {
  Tensor f(kEdgeFeatureDim, static_cast<int>(g.edges.size()));
  for (size_t k = 0; k < g.edges.size(); ++k) {
    const auto& e = g.edges[k];
    int r = 0;
    f.at(r++, k) = e.d[0];
    f.at(r++, k) = e.d[1];
    f.at(r++, k) = e.dtheta[0];
    f.at(r++, k) = e.dtheta[1];
    f.at(r++, k) = e.s[0];
    f.at(r++, k) = e.s[1];
    f.at(r++, k) = e.s[2];
    for (int c = 0; c < 4; ++c) f.at(r++, k) = e.attr[c];
  }
  return f;
}

// 0/1 selection matrix S (N x E): S[i,k] = 1 iff node i is the wanted endpoint
// of edge k; p * S gathers endpoint columns.
inline Tensor endpoint_selector(const SceneGraph& g, bool sender_side) {
  Tensor s(static_cast<int>(g.nodes.size()), static_cast<int>(g.edges.size()));
  for (size_t k = 0; k < g.edges.size(); ++k) {
    const auto& e = g.edges[k];
    s.at(sender_side ? e.sender_idx : e.receiver_idx, static_cast<int>(k)) = 1.0;
  }
  return s;
}

// 0/1 incidence matrix A (E x N): A[k,i] = 1 iff edge k's receiver is node i;
// e * A sums incoming effect columns per node.
inline Tensor receiver_incidence(const SceneGraph& g) {
  Tensor a(static_cast<int>(g.edges.size()), static_cast<int>(g.nodes.size()));
  for (size_t k = 0; k < g.edges.size(); ++k) a.at(static_cast<int>(k), g.edges[k].receiver_idx) = 1.0;
  return a;
}

}  // namespace pushgraph
