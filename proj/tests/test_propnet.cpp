#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "pushgraph/finite_diff.hpp"
#include "pushgraph/propnet.hpp"

using namespace pushgraph;

namespace {

ObjectNode make_cyl(int id, double x, double y, double r = 0.05, double mass = 1.0) {
  ObjectNode o;
  o.id = id;
  o.shape = {ShapeKind::Cylinder, r, 0.0};
  o.mass = mass;
  o.state.pose = {x, y, 0.0};
  return o;
}

// robot -> A -> B -> C chain; only consecutive pairs are within threshold
Scene chain_scene() {
  Scene s;
  ObjectNode robot = make_cyl(0, 0.0, 0.0, 0.03);
  robot.is_robot = true;
  robot.kinematic = true;
  robot.ux = 0.1;
  s.objects.push_back(robot);
  s.objects.push_back(make_cyl(1, 0.10, 0.0));
  s.objects.push_back(make_cyl(2, 0.22, 0.0));
  s.objects.push_back(make_cyl(3, 0.34, 0.0));
  for (auto& o : s.objects) {
    o.state.vx = 0.01 * o.id;
    o.state.omega = 0.02 * o.id;
  }
  return s;
}

PropNetConfig small_cfg(int L = 3) {
  PropNetConfig cfg;
  cfg.width = 16;
  cfg.prop_steps = L;
  cfg.contact_threshold = 0.05;
  return cfg;
}

}  // namespace

TEST_CASE("identical node features give identical encodings") {
  Scene s = chain_scene();
  // objects 1 and 3: same shape/mass, same velocities, different positions
  s.objects[1].state.vx = s.objects[3].state.vx = 0.05;
  s.objects[1].state.omega = s.objects[3].state.omega = 0.0;
  auto cfg = small_cfg();
  Rng rng(1);
  auto ps = propnet::init_params(cfg, rng);
  auto g = build_graph(s, cfg.contact_threshold, RelationSource::Oracle);
  auto ls = encode(nullptr, g, ps, cfg);
  const int ia = g.node_index(1), ib = g.node_index(3);
  for (int r = 0; r < cfg.width; ++r) REQUIRE(ls.c_obj.at(r, ia) == ls.c_obj.at(r, ib));
}

TEST_CASE("same parameters handle graphs of different sizes") {
  auto cfg = small_cfg();
  Rng rng(2);
  auto ps = propnet::init_params(cfg, rng);
  Scene s1 = chain_scene();
  Scene s2 = chain_scene();
  s2.objects.push_back(make_cyl(4, 0.46, 0.0));
  s2.objects.push_back(make_cyl(5, 0.58, 0.0));
  for (const Scene* s : {&s1, &s2}) {
    auto g = build_graph(*s, cfg.contact_threshold, RelationSource::Oracle);
    Tensor v = predict_step(nullptr, g, ps, cfg);
    REQUIRE(v.rows() == 3);
    REQUIRE(v.cols() == static_cast<int>(s->objects.size()));
  }
}

TEST_CASE("message reach is exactly one hop per propagation step") {
  Rng rng(3);
  for (int L = 1; L <= 3; ++L) {
    auto cfg = small_cfg(L);
    auto ps = propnet::init_params(cfg, rng);
    Scene base = chain_scene();
    Scene pert = base;
    pert.objects[0].state.pose.y += 1e-3;  // robot state perturbation
    pert.objects[0].state.vx += 1e-3;

    auto gb = build_graph(base, cfg.contact_threshold, RelationSource::Oracle);
    auto gp = build_graph(pert, cfg.contact_threshold, RelationSource::Oracle);
    REQUIRE(gb.edges.size() == gp.edges.size());

    LatentState lb = encode(nullptr, gb, ps, cfg);
    propagate(nullptr, lb, gb, ps, cfg);
    LatentState lp = encode(nullptr, gp, ps, cfg);
    propagate(nullptr, lp, gp, ps, cfg);

    for (int id = 1; id <= 3; ++id) {
      const int col = gb.node_index(id);
      double delta = 0.0;
      for (int r = 0; r < cfg.width; ++r)
        delta = std::max(delta, std::abs(lb.p.back().at(r, col) - lp.p.back().at(r, col)));
      INFO("L=" << L << " object " << id);
      if (id <= L) {
        REQUIRE(delta > 0.0);
      } else {
        REQUIRE(delta == 0.0);  // untouched inputs, bitwise-identical math
      }
    }
  }
}

TEST_CASE("isolated node depends only on its own features") {
  auto cfg = small_cfg();
  Rng rng(4);
  auto ps = propnet::init_params(cfg, rng);
  Scene s = chain_scene();
  s.objects.push_back(make_cyl(9, 5.0, 5.0));  // far away from everything
  auto g = build_graph(s, cfg.contact_threshold, RelationSource::Oracle);
  LatentState ls = encode(nullptr, g, ps, cfg);
  propagate(nullptr, ls, g, ps, cfg);

  Scene moved = s;
  for (auto& o : moved.objects)
    if (o.id != 9 && !o.is_robot) o.state.vx += 0.3;
  auto g2 = build_graph(moved, cfg.contact_threshold, RelationSource::Oracle);
  LatentState ls2 = encode(nullptr, g2, ps, cfg);
  propagate(nullptr, ls2, g2, ps, cfg);
  const int col = g.node_index(9);
  const int col2 = g2.node_index(9);
  for (int r = 0; r < cfg.width; ++r)
    REQUIRE(ls.p.back().at(r, col) == ls2.p.back().at(r, col2));
}

TEST_CASE("node permutation equivariance is bitwise under fixed edge order") {
  auto cfg = small_cfg();
  Rng rng(5);
  auto ps = propnet::init_params(cfg, rng);
  Scene s = chain_scene();
  auto g = build_graph(s, cfg.contact_threshold, RelationSource::Oracle);

  // permute object columns by hand while keeping the edge order
  SceneGraph gp = g;
  std::vector<int> perm(g.nodes.size());
  for (size_t i = 0; i < perm.size(); ++i) perm[i] = static_cast<int>(i);
  std::swap(perm[1], perm[3]);  // swap two dynamic objects
  std::vector<ObjectNode> nodes(g.nodes.size());
  std::vector<int> inverse(g.nodes.size());
  for (size_t i = 0; i < perm.size(); ++i) {
    nodes[i] = g.nodes[perm[i]];
    inverse[perm[i]] = static_cast<int>(i);
  }
  gp.nodes = nodes;
  gp.neighbors.assign(g.nodes.size(), {});
  for (size_t k = 0; k < gp.edges.size(); ++k) {
    gp.edges[k].sender_idx = inverse[gp.edges[k].sender_idx];
    gp.edges[k].receiver_idx = inverse[gp.edges[k].receiver_idx];
    gp.neighbors[gp.edges[k].receiver_idx].push_back(static_cast<int>(k));
  }

  Tensor v = predict_step(nullptr, g, ps, cfg);
  Tensor vp = predict_step(nullptr, gp, ps, cfg);
  for (size_t i = 0; i < perm.size(); ++i)
    for (int r = 0; r < 3; ++r) REQUIRE(v.at(r, perm[i]) == vp.at(r, i));
}

TEST_CASE("rigid world transforms leave body-frame predictions invariant") {
  auto cfg = small_cfg();
  Rng rng(6);
  auto ps = propnet::init_params(cfg, rng);
  Scene s = chain_scene();
  auto g = build_graph(s, cfg.contact_threshold, RelationSource::Oracle);
  Tensor v = predict_step(nullptr, g, ps, cfg);

  Rng trng(7);
  for (int trial = 0; trial < 5; ++trial) {
    const double rot = trng.uniform(-kPi, kPi);
    const Vec2 shift{trng.uniform(-2, 2), trng.uniform(-2, 2)};
    Scene m = s;
    for (auto& o : m.objects) {
      const Vec2 p = rotate(o.state.pose.pos(), rot) + shift;
      o.state.pose = {p.x, p.y, wrap_angle(o.state.pose.theta + rot)};
      const Vec2 vv = rotate(o.state.vel(), rot);
      o.state.vx = vv.x;
      o.state.vy = vv.y;
      const Vec2 u = rotate({o.ux, o.uy}, rot);
      o.ux = u.x;
      o.uy = u.y;
    }
    auto gm = build_graph(m, cfg.contact_threshold, RelationSource::Oracle);
    Tensor vm = predict_step(nullptr, gm, ps, cfg);
    for (int i = 0; i < v.size(); ++i) REQUIRE(std::abs(v[i] - vm[i]) < 1e-9);
  }
}

TEST_CASE("zero velocity head freezes the rollout") {
  auto cfg = small_cfg();
  Rng rng(8);
  auto ps = propnet::init_params(cfg, rng);
  ps.replace("phys/head_vel/w0", Tensor::zeros(cfg.width, cfg.width));
  ps.replace("phys/head_vel/b0", Tensor::zeros(cfg.width, 1));
  ps.replace("phys/head_vel/w1", Tensor::zeros(3, cfg.width));
  ps.replace("phys/head_vel/b1", Tensor::zeros(3, 1));
  Scene s = chain_scene();
  std::vector<StepControl> controls(5);
  auto tr = rollout_net(s, controls, ps, cfg);
  for (size_t i = 0; i < s.objects.size(); ++i) {
    if (s.objects[i].kinematic) continue;
    REQUIRE(tr.states.back()[i].pose.x == s.objects[i].state.pose.x);
    REQUIRE(tr.states.back()[i].pose.y == s.objects[i].state.pose.y);
  }
}

TEST_CASE("rollout of one step equals predict plus integrate") {
  auto cfg = small_cfg();
  Rng rng(9);
  auto ps = propnet::init_params(cfg, rng);
  Scene s = chain_scene();
  StepControl c;
  c.ux = 0.1;
  auto tr = rollout_net(s, {c}, ps, cfg);

  Scene manual = s;
  manual.objects[manual.robot_index()].ux = 0.1;
  manual.objects[manual.robot_index()].uy = 0.0;
  auto g = build_graph(manual, cfg.contact_threshold, RelationSource::Oracle);
  Tensor vb = predict_step(nullptr, g, ps, cfg);
  for (size_t i = 0; i < manual.objects.size(); ++i) {
    auto& o = manual.objects[i];
    if (o.kinematic) continue;
    const int col = g.node_index(o.id);
    const auto w = decode_to_world({vb.at(0, col), vb.at(1, col), vb.at(2, col)}, o.state.pose);
    REQUIRE(tr.states.back()[i].pose.x == Catch::Approx(o.state.pose.x + w[0] * s.dt));
    REQUIRE(tr.states.back()[i].pose.y == Catch::Approx(o.state.pose.y + w[1] * s.dt));
  }
}

TEST_CASE("relation strategy changes rollout on a jointless scene") {
  auto cfg = small_cfg();
  Rng rng(10);
  auto ps = propnet::init_params(cfg, rng);
  Scene s = chain_scene();
  std::vector<StepControl> controls(4);
  for (auto& c : controls) c.ux = 0.1;
  auto oracle = rollout_net(s, controls, ps, cfg);
  RolloutOptions allfixed;
  allfixed.source = RelationSource::Override;
  allfixed.override_fn = [](int a, int b) {
    if (a == 0 || b == 0) return joint_one_hot(JointType::NoJoint);
    return joint_one_hot(JointType::Fixed);
  };
  auto fixed = rollout_net(s, controls, ps, cfg, allfixed);
  double dmax = 0.0;
  for (size_t t = 0; t < oracle.states.size(); ++t)
    for (size_t i = 0; i < oracle.states[t].size(); ++i)
      dmax = std::max(dmax, (oracle.states[t][i].pose.pos() -
                             fixed.states[t][i].pose.pos()).norm());
  REQUIRE(dmax > 1e-9);
}

TEST_CASE("composed physics loss passes the gradient oracle") {
  PropNetConfig cfg = small_cfg();
  cfg.width = 8;
  Scene s = chain_scene();
  auto g = build_graph(s, cfg.contact_threshold, RelationSource::Oracle);
  std::map<int, std::array<double, 3>> targets;
  Rng trng(20);
  for (const auto& o : s.objects)
    if (!o.kinematic)
      targets[o.id] = {trng.uniform(-0.1, 0.1), trng.uniform(-0.1, 0.1), trng.uniform(-1, 1)};
  const Tensor target_t = body_frame_targets(g, targets);

  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    Rng rng(seed);
    ParamStore ps = propnet::init_params(cfg, rng);
    for (const auto& [name, value] : ps.items()) {
      auto f = [&, name = name](Tape* t, const Tensor& x) {
        ParamStore probe = ps;
        probe.replace(name, x);
        return physics_loss(t, g, predict_step(t, g, probe, cfg), target_t);
      };
      INFO("param " << name << " seed " << seed);
      REQUIRE(finite_difference_check(f, ps.at(name), {1e-5, 1e-6}) < 1e-4);
    }
  }
}
