#pragma once

#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "pushgraph/tape.hpp"
#include "pushgraph/tensor.hpp"

namespace pushgraph {

// Named learnable tensors. std::map keeps iteration order deterministic, which
// fixes the update order and the checkpoint layout.
class ParamStore {
 public:
  Tensor& add(const std::string& name, Tensor t) {
    t.set_requires_grad(true);
    auto [it, fresh] = params_.emplace(name, std::move(t));
    if (!fresh) throw std::invalid_argument("ParamStore: duplicate name " + name);
    return it->second;
  }

  Tensor& at(const std::string& name) {
    auto it = params_.find(name);
    if (it == params_.end()) throw std::out_of_range("ParamStore: no parameter " + name);
    return it->second;
  }
  const Tensor& at(const std::string& name) const {
    auto it = params_.find(name);
    if (it == params_.end()) throw std::out_of_range("ParamStore: no parameter " + name);
    return it->second;
  }
  bool has(const std::string& name) const { return params_.count(name) > 0; }

  void replace(const std::string& name, Tensor t) {
    t.set_requires_grad(at(name).requires_grad());
    params_.at(name) = std::move(t);
  }

  void set_trainable(const std::string& name, bool b) { at(name).set_requires_grad(b); }

  std::map<std::string, Tensor>& items() { return params_; }
  const std::map<std::string, Tensor>& items() const { return params_; }

  long long total_values() const {
    long long n = 0;
    for (const auto& [k, v] : params_) n += v.size();
    return n;
  }

 private:
  std::map<std::string, Tensor> params_;
};

struct AdamConfig {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;  // decoupled; 0 gives plain Adam/AMSGrad
  bool amsgrad = true;
};

// Per-parameter moments plus the shared step counter.
struct OptimizerState {
  struct Moments {
    std::vector<double> m, v, vmax;
  };
  AdamConfig cfg;
  double lr_current = 0.0;  // mutable copy, adjusted by the plateau schedule
  long step = 0;
  std::map<std::string, Moments> moments;

  explicit OptimizerState(AdamConfig c = {}) : cfg(c), lr_current(c.lr) {}
};

// One AMSGrad update over every trainable parameter with a gradient in
// `grads`. Missing gradients count as zero (moments still decay).
inline void adamw_step(ParamStore& params, const GradMap& grads, OptimizerState& st) {
  st.step += 1;
  const double b1 = st.cfg.beta1, b2 = st.cfg.beta2;
  const double corr1 = 1.0 - std::pow(b1, static_cast<double>(st.step));
  const double corr2 = 1.0 - std::pow(b2, static_cast<double>(st.step));
  for (auto& [name, p] : params.items()) {
    if (!p.requires_grad()) continue;
    auto& mom = st.moments[name];
    if (mom.m.empty()) {
      mom.m.assign(p.size(), 0.0);
      mom.v.assign(p.size(), 0.0);
      if (st.cfg.amsgrad) mom.vmax.assign(p.size(), 0.0);
    }
    const Tensor* g = nullptr;
    auto git = grads.find(p.id());
    if (git != grads.end()) g = &git->second;
    if (g) {
      for (int i = 0; i < p.size(); ++i)
        if (!std::isfinite((*g)[i]))
          throw std::runtime_error("adamw_step: non-finite gradient in " + name);
    }
    Tensor next(p.rows(), p.cols());
    for (int i = 0; i < p.size(); ++i) {
      const double gi = g ? (*g)[i] : 0.0;
      mom.m[i] = b1 * mom.m[i] + (1.0 - b1) * gi;
      mom.v[i] = b2 * mom.v[i] + (1.0 - b2) * gi * gi;
      double vhat;
      if (st.cfg.amsgrad) {
        mom.vmax[i] = std::max(mom.vmax[i], mom.v[i]);
        vhat = mom.vmax[i] / corr2;
      } else {
        vhat = mom.v[i] / corr2;
      }
      const double mhat = mom.m[i] / corr1;
      double x = p[i] - st.lr_current * mhat / (std::sqrt(vhat) + st.cfg.eps);
      if (st.cfg.weight_decay != 0.0) x -= st.lr_current * st.cfg.weight_decay * p[i];
      next[i] = x;
    }
    params.replace(name, std::move(next));
  }
}

// Sums per-thread gradient maps in thread-index order (deterministic).
inline GradMap sum_grads(const std::vector<GradMap>& parts) {
  GradMap out;
  for (const auto& part : parts) {
    for (const auto& [id, g] : part) {
      auto it = out.find(id);
      if (it == out.end()) {
        out.emplace(id, g.clone());
      } else {
        Tensor& acc = it->second;
        for (int i = 0; i < acc.size(); ++i) acc[i] += g[i];
      }
    }
  }
  return out;
}

}  // namespace pushgraph
