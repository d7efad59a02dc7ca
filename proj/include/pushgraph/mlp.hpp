#pragma once

#include <string>
#include <vector>

#include "pushgraph/optimizer.hpp"
#include "pushgraph/rng.hpp"
#include "pushgraph/tape.hpp"

namespace pushgraph {

// MLP with relu hidden layers and a linear output, parameters living in a
// ParamStore under `prefix/w0, b0, w1, ...`. Inputs are column-batched.
namespace mlp {

inline void init(ParamStore& ps, const std::string& prefix, const std::vector<int>& dims,
                 Rng& rng) {
  for (size_t l = 0; l + 1 < dims.size(); ++l) {
    ps.add(prefix + "/w" + std::to_string(l),
           Tensor::glorot_uniform(dims[l + 1], dims[l], dims[l], rng));
    ps.add(prefix + "/b" + std::to_string(l), Tensor::zeros(dims[l + 1], 1));
  }
}

inline Tensor forward(Tape* t, const ParamStore& ps, const std::string& prefix, Tensor x,
                      int n_layers) {
  for (int l = 0; l < n_layers; ++l) {
    x = add(t, matmul(t, ps.at(prefix + "/w" + std::to_string(l)), x),
            ps.at(prefix + "/b" + std::to_string(l)));
    if (l + 1 < n_layers) x = relu_op(t, x);
  }
  return x;
}

inline int layer_count(const ParamStore& ps, const std::string& prefix) {
  int n = 0;
  while (ps.has(prefix + "/w" + std::to_string(n))) ++n;
  return n;
}

}  // namespace mlp

}  // namespace pushgraph
