#pragma once

#include <array>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pushgraph/graph.hpp"
#include "pushgraph/mlp.hpp"
#include "pushgraph/scene.hpp"

namespace pushgraph {

struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PropNetConfig {
  int width = 256;     // latent width of every encoder/propagator
  int prop_steps = 3;  // L
  bool share_propagator_weights = true;
  bool include_mass_feature = true;
  double contact_threshold = 0.10;
  double divergence_guard = 10.0;  // rollout aborts past this |position|

  std::map<std::string, std::string> to_meta() const {
    return {{"width", std::to_string(width)},
            {"prop_steps", std::to_string(prop_steps)},
            {"share_propagator_weights", share_propagator_weights ? "1" : "0"},
            {"include_mass_feature", include_mass_feature ? "1" : "0"},
            {"contact_threshold", std::to_string(contact_threshold)}};
  }
  static PropNetConfig from_meta(const std::map<std::string, std::string>& m) {
    PropNetConfig c;
    c.width = std::stoi(m.at("width"));
    c.prop_steps = std::stoi(m.at("prop_steps"));
    c.share_propagator_weights = m.at("share_propagator_weights") == "1";
    c.include_mass_feature = m.at("include_mass_feature") == "1";
    c.contact_threshold = std::stod(m.at("contact_threshold"));
    return c;
  }
};

namespace propnet {

inline std::string prop_o_prefix(const PropNetConfig& cfg, int l) {
  return cfg.share_propagator_weights ? std::string("phys/prop_o")
                                      : "phys/prop_o_" + std::to_string(l);
}
inline std::string prop_r_prefix(const PropNetConfig& cfg, int l) {
  return cfg.share_propagator_weights ? std::string("phys/prop_r")
                                      : "phys/prop_r_" + std::to_string(l);
}

inline ParamStore init_params(const PropNetConfig& cfg, Rng& rng) {
  ParamStore ps;
  const int w = cfg.width;
  const int nd = node_feature_dim(cfg.include_mass_feature);
  mlp::init(ps, "phys/enc_o", {nd, w, w, w}, rng);                 // two hidden layers
  mlp::init(ps, "phys/enc_r", {kEdgeFeatureDim, w, w, w, w}, rng); // three hidden layers
  const int steps = cfg.share_propagator_weights ? 1 : cfg.prop_steps;
  for (int l = 0; l < steps; ++l) {
    mlp::init(ps, prop_o_prefix(cfg, l), {3 * w, w, w}, rng);  // single hidden layer
    mlp::init(ps, prop_r_prefix(cfg, l), {3 * w, w, w}, rng);
  }
  mlp::init(ps, "phys/head_vel", {w, w, 3}, rng);
  return ps;
}

// names of the weights shared with the belief module (everything that shapes
// the latents; the velocity head is physics-only but frozen with the rest)
inline bool is_shared_param(const std::string& name) { return name.rfind("phys/", 0) == 0; }

}  // namespace propnet

struct LatentState {
  Tensor c_obj, c_rel;    // width x N, width x E
  std::vector<Tensor> p;  // p[0..L], width x N, p[0] zeros
  std::vector<Tensor> e;  // e[1..L] stored at index l-1, width x E
  int L = 0;
};

// Eqs. of the encoders: latent codes per node and per edge.
inline LatentState encode(Tape* t, const SceneGraph& g, const ParamStore& ps,
                          const PropNetConfig& cfg) {
  LatentState ls;
  const Tensor nf = node_features(g);
  if (nf.rows() != node_feature_dim(cfg.include_mass_feature))
    throw std::invalid_argument("encode: node feature width mismatch");
  ls.c_obj = mlp::forward(t, ps, "phys/enc_o", nf, 3);
  ls.c_rel = mlp::forward(t, ps, "phys/enc_r", edge_features(g), 4);
  ls.L = cfg.prop_steps;
  return ls;
}

// L propagation rounds. Each round computes edge effects from the previous
// node latents, then refreshes node latents from the summed incoming effects,
// so influence travels one graph hop per round.
inline void propagate(Tape* t, LatentState& ls, const SceneGraph& g, const ParamStore& ps,
                      const PropNetConfig& cfg) {
  const int n = static_cast<int>(g.nodes.size());
  const Tensor sel_send = endpoint_selector(g, true);
  const Tensor sel_recv = endpoint_selector(g, false);
  const Tensor incidence = receiver_incidence(g);
  ls.p.assign(1, Tensor::zeros(cfg.width, n));
  ls.e.clear();
  for (int l = 1; l <= cfg.prop_steps; ++l) {
    const Tensor& prev = ls.p.back();
    const Tensor p_send = matmul(t, prev, sel_send);
    const Tensor p_recv = matmul(t, prev, sel_recv);
    const Tensor e_in = concat_rows(t, {ls.c_rel, p_send, p_recv});
    const Tensor e_l = mlp::forward(t, ps, propnet::prop_r_prefix(cfg, l - 1), e_in, 2);
    const Tensor agg = matmul(t, e_l, incidence);
    const Tensor p_in = concat_rows(t, {ls.c_obj, prev, agg});
    const Tensor p_l = mlp::forward(t, ps, propnet::prop_o_prefix(cfg, l - 1), p_in, 2);
    ls.e.push_back(e_l);
    ls.p.push_back(p_l);
  }
}

// body-frame velocity predictions for every node, 3 x N
inline Tensor predict_body_velocity(Tape* t, const LatentState& ls, const ParamStore& ps) {
  return mlp::forward(t, ps, "phys/head_vel", ls.p.back(), 2);
}

// one-step prediction on a prepared graph; robot/kinematic outputs are ignored
// by callers (their motion is scripted)
inline Tensor predict_step(Tape* t, const SceneGraph& g, const ParamStore& ps,
                           const PropNetConfig& cfg, LatentState* latents_out = nullptr) {
  LatentState ls = encode(t, g, ps, cfg);
  propagate(t, ls, g, ps, cfg);
  Tensor v = predict_body_velocity(t, ls, ps);
  if (latents_out) *latents_out = std::move(ls);
  return v;
}

// Options shaping how rollout graphs are rebuilt from predicted states.
struct RolloutOptions {
  RelationSource source = RelationSource::Oracle;
  RelationOverride override_fn;  // used with RelationSource::Override
  std::function<double(int)> mass_fn;  // optional node mass replacement by id
};

inline void apply_mass_fn(Scene& s, const std::function<double(int)>& mass_fn) {
  if (!mass_fn) return;
  for (auto& o : s.objects)
    if (!o.kinematic) o.mass = mass_fn(o.id);
}

// advances robot and slaved kinematic parts by one control
inline void apply_robot_control(Scene& s, const StepControl& c) {
  const int robot = s.robot_index();
  std::vector<std::pair<Vec2, double>> offsets(s.objects.size());
  const auto& rp0 = s.objects[robot].state.pose;
  for (size_t i = 0; i < s.objects.size(); ++i) {
    if (!s.objects[i].kinematic || static_cast<int>(i) == robot) continue;
    offsets[i] = {rotate(s.objects[i].state.pose.pos() - rp0.pos(), -rp0.theta),
                  s.objects[i].state.pose.theta - rp0.theta};
  }
  auto& robot_state = s.objects[robot].state;
  if (c.teleport) robot_state.pose = {c.pose.x, c.pose.y, wrap_angle(c.pose.theta)};
  robot_state.pose.x += c.ux * s.dt;
  robot_state.pose.y += c.uy * s.dt;
  robot_state.pose.theta = wrap_angle(robot_state.pose.theta + c.uomega * s.dt);
  robot_state.vx = c.ux;
  robot_state.vy = c.uy;
  robot_state.omega = c.uomega;
  for (size_t i = 0; i < s.objects.size(); ++i) {
    if (!s.objects[i].kinematic || static_cast<int>(i) == robot) continue;
    auto& st = s.objects[i].state;
    const auto& rp = robot_state.pose;
    const Vec2 p = rp.pos() + rotate(offsets[i].first, rp.theta);
    st.pose = {p.x, p.y, wrap_angle(rp.theta + offsets[i].second)};
    st.vx = c.ux;
    st.vy = c.uy;
    st.omega = 0.0;
  }
}

// Chained one-step predictions: integrate predicted velocities, rebuild the
// graph from the predicted state, repeat. The robot follows the control script
// exactly; object velocities feed the next step's features.
inline Trajectory rollout_net(const Scene& initial, const std::vector<StepControl>& controls,
                              const ParamStore& ps, const PropNetConfig& cfg,
                              const RolloutOptions& opt = {}) {
  Scene cur = initial;
  apply_mass_fn(cur, opt.mass_fn);
  Trajectory tr;
  tr.initial = cur;
  tr.dt = cur.dt;
  tr.controls = controls;
  auto snapshot = [&tr](const Scene& s) {
    std::vector<BodyState> frame;
    for (const auto& o : s.objects) frame.push_back(o.state);
    tr.states.push_back(std::move(frame));
  };
  snapshot(cur);
  for (const auto& c : controls) {
    // control features for this step
    {
      const int r = cur.robot_index();
      cur.objects[r].ux = c.teleport ? 0.0 : c.ux;
      cur.objects[r].uy = c.teleport ? 0.0 : c.uy;
      cur.objects[r].uomega = c.teleport ? 0.0 : c.uomega;
    }
    SceneGraph g = build_graph(cur, cfg.contact_threshold, opt.source, opt.override_fn);
    g.include_mass_feature = cfg.include_mass_feature;
    const Tensor vb = predict_step(nullptr, g, ps, cfg);
    // integrate objects from predictions; kinematic bodies are slaved after
    std::map<int, std::array<double, 3>> world_v;
    for (size_t col = 0; col < g.nodes.size(); ++col) {
      if (g.nodes[col].kinematic) continue;
      world_v[g.nodes[col].id] =
          decode_to_world({vb.at(0, col), vb.at(1, col), vb.at(2, col)},
                          g.nodes[col].state.pose);
    }
    for (auto& o : cur.objects) {
      if (o.kinematic) continue;
      const auto& v = world_v.at(o.id);
      o.state.pose.x += v[0] * cur.dt;
      o.state.pose.y += v[1] * cur.dt;
      o.state.pose.theta = wrap_angle(o.state.pose.theta + v[2] * cur.dt);
      o.state.vx = v[0];
      o.state.vy = v[1];
      o.state.omega = v[2];
      if (std::abs(o.state.pose.x) > cfg.divergence_guard ||
          std::abs(o.state.pose.y) > cfg.divergence_guard)
        throw NumericalError("rollout_net: prediction diverged past " +
                             std::to_string(cfg.divergence_guard) + " m");
    }
    apply_robot_control(cur, c);
    snapshot(cur);
  }
  return tr;
}

// body-frame target velocities arranged to match graph columns, given the
// world-frame next-step velocities of each object
inline Tensor body_frame_targets(const SceneGraph& g,
                                 const std::map<int, std::array<double, 3>>& world_vel) {
  Tensor t(3, static_cast<int>(g.nodes.size()));
  for (size_t col = 0; col < g.nodes.size(); ++col) {
    const auto it = world_vel.find(g.nodes[col].id);
    if (it == world_vel.end()) continue;
    const auto& v = it->second;
    const Vec2 body = rotate({v[0], v[1]}, -g.nodes[col].state.pose.theta);
    t.at(0, col) = body.x;
    t.at(1, col) = body.y;
    t.at(2, col) = v[2];
  }
  return t;
}

// MSE over the dynamic-object columns only (kinematic bodies lead the column
// order by construction)
inline Tensor physics_loss(Tape* t, const SceneGraph& g, const Tensor& predicted,
                           const Tensor& targets) {
  const int k = g.num_kinematic();
  const int n = static_cast<int>(g.nodes.size());
  if (k >= n) throw std::invalid_argument("physics_loss: no dynamic objects");
  Tensor pred_obj = slice_cols(t, predicted, k, n);
  Tensor targ_obj = slice_cols(t, targets, k, n);
  return mse(t, pred_obj, targ_obj);
}

}  // namespace pushgraph
