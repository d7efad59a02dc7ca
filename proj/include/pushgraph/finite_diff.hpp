#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "pushgraph/tape.hpp"
#include "pushgraph/tensor.hpp"

namespace pushgraph {

// f must evaluate the same scalar whether or not a tape is supplied.
using TapedScalarFn = std::function<Tensor(Tape*, const Tensor&)>;

// Max over coordinates of |analytic - central difference| / (|analytic| + 1e-8).
// Multiple step sizes guard against relu kinks inside the difference bracket:
// a kink artifact shrinks with h while a genuine gradient bug persists at
// every h, so each coordinate keeps its best step.
inline double finite_difference_check(const TapedScalarFn& f, const Tensor& x,
                                      const std::vector<double>& hs) {
  Tensor xt = x.clone();
  xt.set_requires_grad(true);
  Tape tape;
  Tensor loss = f(&tape, xt);
  GradMap grads = tape.backward(loss);
  const Tensor& analytic = grads.at(xt.id());

  double worst = 0.0;
  for (int i = 0; i < x.size(); ++i) {
    double best = 1e300;
    for (double h : hs) {
      Tensor xp = x.clone();
      Tensor xm = x.clone();
      xp[i] += h;
      xm[i] -= h;
      const double fp = f(nullptr, xp)[0];
      const double fm = f(nullptr, xm)[0];
      const double numeric = (fp - fm) / (2.0 * h);
      best = std::min(best, std::abs(analytic[i] - numeric) / (std::abs(analytic[i]) + 1e-8));
    }
    worst = std::max(worst, best);
  }
  return worst;
}

inline double finite_difference_check(const TapedScalarFn& f, const Tensor& x, double h) {
  return finite_difference_check(f, x, std::vector<double>{h});
}

}  // namespace pushgraph
