#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "pushgraph/generators.hpp"
#include "pushgraph/graph.hpp"
#include "pushgraph/scene.hpp"

using namespace pushgraph;

namespace {

Scene three_body_scene(double gap01 = 0.02, double gap12 = 0.02) {
  Scene s;
  ObjectNode robot;
  robot.id = 0;
  robot.is_robot = true;
  robot.kinematic = true;
  robot.shape = {ShapeKind::Cylinder, 0.03, 0.0};
  robot.state.pose = {0.0, 0.0, 0.0};
  s.objects.push_back(robot);
  ObjectNode a;
  a.id = 1;
  a.shape = {ShapeKind::Cylinder, 0.05, 0.0};
  a.state.pose = {0.08 + gap01, 0.0, 0.0};
  s.objects.push_back(a);
  ObjectNode b;
  b.id = 2;
  b.shape = {ShapeKind::Cylinder, 0.05, 0.0};
  b.state.pose = {a.state.pose.x + 0.10 + gap12, 0.0, 0.0};
  s.objects.push_back(b);
  return s;
}

Scene rigid_transform(const Scene& s, Vec2 t, double rot) {
  Scene out = s;
  for (auto& o : out.objects) {
    const Vec2 p = rotate(o.state.pose.pos(), rot) + t;
    o.state.pose = {p.x, p.y, wrap_angle(o.state.pose.theta + rot)};
    const Vec2 v = rotate(o.state.vel(), rot);
    o.state.vx = v.x;
    o.state.vy = v.y;
    const Vec2 u = rotate({o.ux, o.uy}, rot);
    o.ux = u.x;
    o.uy = u.y;
  }
  return out;
}

}  // namespace

TEST_CASE("encode_relative hand cases") {
  BodyState recv;
  recv.pose = {0, 0, kPi / 2};
  BodyState send;
  send.pose = {1, 0, kPi / 2};
  const auto rel = encode_relative(send, recv);
  REQUIRE(rel[0] == Catch::Approx(0.0).margin(1e-12));
  REQUIRE(rel[1] == Catch::Approx(-1.0));
  REQUIRE(rel[2] == Catch::Approx(1.0));  // cos(0)
  REQUIRE(rel[3] == Catch::Approx(0.0).margin(1e-12));

  const auto self = encode_relative(recv, recv);
  REQUIRE(self[0] == 0.0);
  REQUIRE(self[1] == 0.0);
  REQUIRE(self[2] == 1.0);
  REQUIRE(self[3] == 0.0);
}

TEST_CASE("decode_to_world inverts encode") {
  Pose2D recv{0.4, -0.2, 0.0};
  REQUIRE(decode_to_world({1, 0, 0}, recv)[0] == 1.0);

  recv.theta = kPi / 2;
  const auto w = decode_to_world({1, 0, 0.3}, recv);
  REQUIRE(w[0] == Catch::Approx(0.0).margin(1e-12));
  REQUIRE(w[1] == Catch::Approx(1.0));
  REQUIRE(w[2] == 0.3);

  Rng rng(3);
  for (int i = 0; i < 50; ++i) {
    BodyState snd, rcv;
    snd.pose = {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-kPi, kPi)};
    rcv.pose = {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-kPi, kPi)};
    snd.vx = rng.uniform(-1, 1);
    snd.vy = rng.uniform(-1, 1);
    snd.omega = rng.uniform(-1, 1);
    const auto rel = encode_relative(snd, rcv);
    const auto back = decode_to_world({rel[4], rel[5], rel[6]}, rcv.pose);
    REQUIRE(std::abs(back[0] - (snd.vx - rcv.vx)) < 1e-12);
    REQUIRE(std::abs(back[1] - (snd.vy - rcv.vy)) < 1e-12);
  }
}

TEST_CASE("build_graph: 3 nodes all close gives 6 directed edges") {
  Scene s = three_body_scene(0.02, 0.02);  // robot-B surface gap is 0.14
  auto g = build_graph(s, 0.15, RelationSource::Oracle);
  REQUIRE(g.nodes.size() == 3);
  REQUIRE(g.edges.size() == 6);
  // mirror symmetry
  for (const auto& e : g.edges) {
    bool found = false;
    for (const auto& m : g.edges)
      if (m.sender == e.receiver && m.receiver == e.sender) found = true;
    REQUIRE(found);
  }
  // robot first
  REQUIRE(g.nodes[0].is_robot);
}

TEST_CASE("build_graph: distance gates edges, joints override them") {
  Scene far = three_body_scene(0.02, 1.0);
  auto g = build_graph(far, 0.10, RelationSource::Oracle);
  REQUIRE(g.edges.size() == 2);  // only robot-A

  Joint j;
  j.type = JointType::Prismatic;
  j.body_a = 1;
  j.body_b = 2;
  far.joints.push_back(j);
  auto g2 = build_graph(far, 0.10, RelationSource::Oracle);
  REQUIRE(g2.edges.size() == 4);  // jointed pair keeps its edges at any distance
  int prismatic_edges = 0;
  for (const auto& e : g2.edges)
    if (e.attr[static_cast<int>(JointType::Prismatic)] == 1.0) ++prismatic_edges;
  REQUIRE(prismatic_edges == 2);
}

TEST_CASE("build_graph rejects duplicate ids and missing robot") {
  Scene s = three_body_scene();
  s.objects[2].id = 1;
  REQUIRE_THROWS_AS(build_graph(s, 0.1, RelationSource::Oracle), std::invalid_argument);
  Scene s2 = three_body_scene();
  s2.objects[0].is_robot = false;
  REQUIRE_THROWS_AS(build_graph(s2, 0.1, RelationSource::Oracle), std::invalid_argument);
}

TEST_CASE("relation sources: unknown is uniform, override is caller-driven") {
  Scene s = three_body_scene();
  auto gu = build_graph(s, 0.10, RelationSource::Unknown);
  for (const auto& e : gu.edges)
    for (double a : e.attr) REQUIRE(a == 0.25);
  auto go = build_graph(s, 0.10, RelationSource::Override,
                        [](int, int) { return joint_one_hot(JointType::Fixed); });
  for (const auto& e : go.edges) REQUIRE(e.attr[static_cast<int>(JointType::Fixed)] == 1.0);
}

TEST_CASE("features are invariant under rigid transforms of the world") {
  Rng rng(11);
  Scene s = three_body_scene(0.01, 0.03);
  for (auto& o : s.objects) {
    o.state.vx = rng.uniform(-0.2, 0.2);
    o.state.vy = rng.uniform(-0.2, 0.2);
    o.state.omega = rng.uniform(-1, 1);
    o.state.pose.theta = rng.uniform(-kPi, kPi);
  }
  s.objects[0].ux = 0.1;
  s.objects[0].uy = -0.05;

  auto g1 = build_graph(s, 0.10, RelationSource::Oracle);
  Tensor n1 = node_features(g1);
  Tensor e1 = edge_features(g1);
  for (int trial = 0; trial < 8; ++trial) {
    Scene moved = rigid_transform(s, {rng.uniform(-3, 3), rng.uniform(-3, 3)},
                                  rng.uniform(-kPi, kPi));
    auto g2 = build_graph(moved, 0.10, RelationSource::Oracle);
    Tensor n2 = node_features(g2);
    Tensor e2 = edge_features(g2);
    REQUIRE(n1.size() == n2.size());
    REQUIRE(e1.size() == e2.size());
    for (int i = 0; i < n1.size(); ++i) REQUIRE(n1[i] == Catch::Approx(n2[i]).margin(1e-9));
    for (int i = 0; i < e1.size(); ++i) REQUIRE(e1[i] == Catch::Approx(e2[i]).margin(1e-9));
  }
}

TEST_CASE("feature layout matches the documented widths") {
  Scene s = three_body_scene();
  auto g = build_graph(s, 0.10, RelationSource::Oracle);
  REQUIRE(node_features(g).rows() == 12);
  g.include_mass_feature = false;
  REQUIRE(node_features(g).rows() == 11);
  REQUIRE(edge_features(g).rows() == kEdgeFeatureDim);
  // robot control appears in body frame in the node features
  Scene s2 = s;
  s2.objects[0].ux = 0.1;
  auto g2 = build_graph(s2, 0.10, RelationSource::Oracle);
  Tensor nf = node_features(g2);
  REQUIRE(nf.at(6, 0) == Catch::Approx(0.1));
  REQUIRE(nf.at(5, 0) == 1.0);  // is_robot flag on the robot column
}
