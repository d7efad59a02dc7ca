#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "pushgraph/tensor.hpp"

namespace pushgraph {

enum class OpKind {
  Matmul,
  Add,        // elementwise; rhs may be a column vector broadcast over columns
  Mul,        // elementwise (Hadamard)
  Scale,      // multiply by compile-time constant
  Tanh,
  Sigmoid,
  Relu,
  Exp,
  ConcatRows,
  ConcatCols,
  SliceRows,
  SliceCols,
  SumAll,
  Mse,         // mean over all elements of squared difference, no 1/2 factor
  SoftmaxXent  // column-wise softmax cross-entropy vs target distribution, mean over columns
};

inline const char* op_name(OpKind k) {
  switch (k) {
    case OpKind::Matmul: return "matmul";
    case OpKind::Add: return "add";
    case OpKind::Mul: return "mul";
    case OpKind::Scale: return "scale";
    case OpKind::Tanh: return "tanh";
    case OpKind::Sigmoid: return "sigmoid";
    case OpKind::Relu: return "relu";
    case OpKind::Exp: return "exp";
    case OpKind::ConcatRows: return "concat_rows";
    case OpKind::ConcatCols: return "concat_cols";
    case OpKind::SliceRows: return "slice_rows";
    case OpKind::SliceCols: return "slice_cols";
    case OpKind::SumAll: return "sum_all";
    case OpKind::Mse: return "mse";
    case OpKind::SoftmaxXent: return "softmax_xent";
  }
  return "?";
}

struct OpAttrs {
  double c = 1.0;  // Scale
  int lo = 0;      // Slice*
  int hi = 0;
};

using GradMap = std::unordered_map<std::uint64_t, Tensor>;

// Define-by-run record of one forward pass. Rebuilt per pass; single-threaded.
// backward() walks the records in reverse creation order, which is a reverse
// topological order of the computation graph.
class Tape {
 public:
  struct Record {
    std::function<void(Tape&)> backprop;
  };

  bool tracking(const Tensor& t) const { return grads_.count(t.id()) > 0; }

  // Registers a tensor as a tracked node (leaf if it carries requires_grad and
  // was not produced by an op on this tape).
  void track(const Tensor& t, bool leaf) {
    if (grads_.count(t.id())) return;
    grads_.emplace(t.id(), Tensor(t.rows(), t.cols()));
    if (leaf) leaves_.push_back(t);
  }

  Tensor& grad(const Tensor& t) { return grads_.at(t.id()); }

  void push(std::function<void(Tape&)> fn) { records_.push_back({std::move(fn)}); }

  // Reverse pass from a scalar loss. Consumes the tape.
  GradMap backward(const Tensor& loss) {
    if (consumed_)
      throw std::logic_error("backward: tape already consumed");
    if (loss.size() != 1)
      throw std::invalid_argument("backward: loss must be scalar, got " + loss.shape_str());
    GradMap out;
    if (grads_.count(loss.id())) {
      grads_.at(loss.id())[0] = 1.0;
      for (auto it = records_.rbegin(); it != records_.rend(); ++it) it->backprop(*this);
      for (const auto& leaf : leaves_) out.emplace(leaf.id(), grads_.at(leaf.id()));
    }
    consumed_ = true;
    records_.clear();
    grads_.clear();
    leaves_.clear();
    return out;
  }

  size_t num_records() const { return records_.size(); }

 private:
  std::vector<Record> records_;
  std::unordered_map<std::uint64_t, Tensor> grads_;
  std::vector<Tensor> leaves_;
  bool consumed_ = false;
};

namespace detail {

[[noreturn]] inline void shape_error(OpKind k, const Tensor& a, const Tensor& b) {
  throw std::invalid_argument(std::string("op ") + op_name(k) + ": incompatible shapes " +
                              a.shape_str() + " and " + b.shape_str());
}

inline bool want_grad(Tape* tape, std::span<const Tensor> ins) {
  if (!tape) return false;
  for (const auto& t : ins)
    if (t.requires_grad() || tape->tracking(t)) return true;
  return false;
}

// Ensures inputs are registered and the result participates in later records.
inline void enroll(Tape& tape, std::span<const Tensor> ins, const Tensor& out) {
  for (const auto& t : ins)
    if (t.requires_grad() || tape.tracking(t)) tape.track(t, t.requires_grad());
  tape.track(out, false);
}

}  // namespace detail

// --- primitives -----------------------------------------------------------

inline Tensor matmul(Tape* tape, const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) detail::shape_error(OpKind::Matmul, a, b);
  const int m = a.rows(), k = a.cols(), n = b.cols();
  Tensor c(m, n);
  const double* av = a.vals().data();
  const double* bv = b.vals().data();
  double* cv = c.vals().data();
  for (int i = 0; i < m; ++i) {
    const double* arow = av + i * k;
    double* crow = cv + i * n;
    for (int p = 0; p < k; ++p) {
      const double aik = arow[p];
      if (aik == 0.0) continue;
      const double* brow = bv + p * n;
      for (int j = 0; j < n; ++j) crow[j] += aik * brow[j];
    }
  }
  const Tensor ins[] = {a, b};
  if (detail::want_grad(tape, ins)) {
    detail::enroll(*tape, ins, c);
    tape->push([a, b, c](Tape& t) {
      const Tensor& gc = t.grad(c);
      const int m = a.rows(), k = a.cols(), n = b.cols();
      if (t.tracking(a)) {
        // dA = gC * B^T
        Tensor& ga = t.grad(a);
        for (int i = 0; i < m; ++i)
          for (int p = 0; p < k; ++p) {
            double s = 0.0;
            for (int j = 0; j < n; ++j) s += gc.at(i, j) * b.at(p, j);
            ga.at(i, p) += s;
          }
      }
      if (t.tracking(b)) {
        // dB = A^T * gC
        Tensor& gb = t.grad(b);
        for (int p = 0; p < k; ++p)
          for (int i = 0; i < m; ++i) {
            const double aip = a.at(i, p);
            if (aip == 0.0) continue;
            for (int j = 0; j < n; ++j) gb.at(p, j) += aip * gc.at(i, j);
          }
      }
    });
  }
  return c;
}

// add: same shape, or rhs a column vector broadcast across columns
inline Tensor add(Tape* tape, const Tensor& a, const Tensor& b) {
  const bool bcast = (b.cols() == 1 && a.rows() == b.rows() && a.cols() != 1);
  if (!bcast && !a.same_shape(b)) detail::shape_error(OpKind::Add, a, b);
  Tensor c(a.rows(), a.cols());
  if (bcast) {
    for (int i = 0; i < a.rows(); ++i) {
      const double bi = b.at(i, 0);
      for (int j = 0; j < a.cols(); ++j) c.at(i, j) = a.at(i, j) + bi;
    }
  } else {
    for (int i = 0; i < a.size(); ++i) c[i] = a[i] + b[i];
  }
  const Tensor ins[] = {a, b};
  if (detail::want_grad(tape, ins)) {
    detail::enroll(*tape, ins, c);
    tape->push([a, b, c, bcast](Tape& t) {
      const Tensor& gc = t.grad(c);
      if (t.tracking(a)) {
        Tensor& ga = t.grad(a);
        for (int i = 0; i < a.size(); ++i) ga[i] += gc[i];
      }
      if (t.tracking(b)) {
        Tensor& gb = t.grad(b);
        if (bcast) {
          for (int i = 0; i < a.rows(); ++i) {
            double s = 0.0;
            for (int j = 0; j < a.cols(); ++j) s += gc.at(i, j);
            gb.at(i, 0) += s;
          }
        } else {
          for (int i = 0; i < b.size(); ++i) gb[i] += gc[i];
        }
      }
    });
  }
  return c;
}

inline Tensor mul(Tape* tape, const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) detail::shape_error(OpKind::Mul, a, b);
  Tensor c(a.rows(), a.cols());
  for (int i = 0; i < a.size(); ++i) c[i] = a[i] * b[i];
  const Tensor ins[] = {a, b};
  if (detail::want_grad(tape, ins)) {
    detail::enroll(*tape, ins, c);
    tape->push([a, b, c](Tape& t) {
      const Tensor& gc = t.grad(c);
      if (t.tracking(a)) {
        Tensor& ga = t.grad(a);
        for (int i = 0; i < a.size(); ++i) ga[i] += gc[i] * b[i];
      }
      if (t.tracking(b)) {
        Tensor& gb = t.grad(b);
        for (int i = 0; i < b.size(); ++i) gb[i] += gc[i] * a[i];
      }
    });
  }
  return c;
}

inline Tensor scale(Tape* tape, const Tensor& a, double c0) {
  Tensor c(a.rows(), a.cols());
  for (int i = 0; i < a.size(); ++i) c[i] = a[i] * c0;
  const Tensor ins[] = {a};
  if (detail::want_grad(tape, ins)) {
    detail::enroll(*tape, ins, c);
    tape->push([a, c, c0](Tape& t) {
      if (!t.tracking(a)) return;
      const Tensor& gc = t.grad(c);
      Tensor& ga = t.grad(a);
      for (int i = 0; i < a.size(); ++i) ga[i] += gc[i] * c0;
    });
  }
  return c;
}

namespace detail {

template <typename F, typename DF>
Tensor unary(OpKind kind, Tape* tape, const Tensor& a, F f, DF df) {
  (void)kind;
  Tensor c(a.rows(), a.cols());
  for (int i = 0; i < a.size(); ++i) c[i] = f(a[i]);
  const Tensor ins[] = {a};
  if (want_grad(tape, ins)) {
    enroll(*tape, ins, c);
    tape->push([a, c, df](Tape& t) {
      if (!t.tracking(a)) return;
      const Tensor& gc = t.grad(c);
      Tensor& ga = t.grad(a);
      for (int i = 0; i < a.size(); ++i) ga[i] += gc[i] * df(a[i], c[i]);
    });
  }
  return c;
}

}  // namespace detail

inline Tensor tanh_op(Tape* tape, const Tensor& a) {
  return detail::unary(
      OpKind::Tanh, tape, a, [](double x) { return std::tanh(x); },
      [](double, double y) { return 1.0 - y * y; });
}

inline Tensor sigmoid_op(Tape* tape, const Tensor& a) {
  return detail::unary(
      OpKind::Sigmoid, tape, a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
      [](double, double y) { return y * (1.0 - y); });
}

inline Tensor relu_op(Tape* tape, const Tensor& a) {
  return detail::unary(
      OpKind::Relu, tape, a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

inline Tensor exp_op(Tape* tape, const Tensor& a) {
  return detail::unary(
      OpKind::Exp, tape, a, [](double x) { return std::exp(x); },
      [](double, double y) { return y; });
}

inline Tensor concat_rows(Tape* tape, const std::vector<Tensor>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_rows: no inputs");
  const int cols = parts[0].cols();
  int rows = 0;
  for (const auto& p : parts) {
    if (p.cols() != cols) detail::shape_error(OpKind::ConcatRows, parts[0], p);
    rows += p.rows();
  }
  Tensor c(rows, cols);
  int r0 = 0;
  for (const auto& p : parts) {
    for (int i = 0; i < p.rows(); ++i)
      for (int j = 0; j < cols; ++j) c.at(r0 + i, j) = p.at(i, j);
    r0 += p.rows();
  }
  if (detail::want_grad(tape, parts)) {
    detail::enroll(*tape, parts, c);
    tape->push([parts, c](Tape& t) {
      const Tensor& gc = t.grad(c);
      int r0 = 0;
      for (const auto& p : parts) {
        if (t.tracking(p)) {
          Tensor& gp = t.grad(p);
          for (int i = 0; i < p.rows(); ++i)
            for (int j = 0; j < p.cols(); ++j) gp.at(i, j) += gc.at(r0 + i, j);
        }
        r0 += p.rows();
      }
    });
  }
  return c;
}

inline Tensor concat_cols(Tape* tape, const std::vector<Tensor>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no inputs");
  const int rows = parts[0].rows();
  int cols = 0;
  for (const auto& p : parts) {
    if (p.rows() != rows) detail::shape_error(OpKind::ConcatCols, parts[0], p);
    cols += p.cols();
  }
  Tensor c(rows, cols);
  int c0 = 0;
  for (const auto& p : parts) {
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < p.cols(); ++j) c.at(i, c0 + j) = p.at(i, j);
    c0 += p.cols();
  }
  if (detail::want_grad(tape, parts)) {
    detail::enroll(*tape, parts, c);
    tape->push([parts, c](Tape& t) {
      const Tensor& gc = t.grad(c);
      int c0 = 0;
      for (const auto& p : parts) {
        if (t.tracking(p)) {
          Tensor& gp = t.grad(p);
          for (int i = 0; i < p.rows(); ++i)
            for (int j = 0; j < p.cols(); ++j) gp.at(i, j) += gc.at(i, c0 + j);
        }
        c0 += p.cols();
      }
    });
  }
  return c;
}

inline Tensor slice_rows(Tape* tape, const Tensor& a, int lo, int hi) {
  if (lo < 0 || hi > a.rows() || lo >= hi)
    throw std::invalid_argument("slice_rows: bad range [" + std::to_string(lo) + "," +
                                std::to_string(hi) + ") for " + a.shape_str());
  Tensor c(hi - lo, a.cols());
  for (int i = lo; i < hi; ++i)
    for (int j = 0; j < a.cols(); ++j) c.at(i - lo, j) = a.at(i, j);
  const Tensor ins[] = {a};
  if (detail::want_grad(tape, ins)) {
    detail::enroll(*tape, ins, c);
    tape->push([a, c, lo](Tape& t) {
      if (!t.tracking(a)) return;
      const Tensor& gc = t.grad(c);
      Tensor& ga = t.grad(a);
      for (int i = 0; i < c.rows(); ++i)
        for (int j = 0; j < c.cols(); ++j) ga.at(lo + i, j) += gc.at(i, j);
    });
  }
  return c;
}

inline Tensor slice_cols(Tape* tape, const Tensor& a, int lo, int hi) {
  if (lo < 0 || hi > a.cols() || lo >= hi)
    throw std::invalid_argument("slice_cols: bad range [" + std::to_string(lo) + "," +
                                std::to_string(hi) + ") for " + a.shape_str());
  Tensor c(a.rows(), hi - lo);
  for (int i = 0; i < a.rows(); ++i)
    for (int j = lo; j < hi; ++j) c.at(i, j - lo) = a.at(i, j);
  const Tensor ins[] = {a};
  if (detail::want_grad(tape, ins)) {
    detail::enroll(*tape, ins, c);
    tape->push([a, c, lo](Tape& t) {
      if (!t.tracking(a)) return;
      const Tensor& gc = t.grad(c);
      Tensor& ga = t.grad(a);
      for (int i = 0; i < c.rows(); ++i)
        for (int j = 0; j < c.cols(); ++j) ga.at(i, lo + j) += gc.at(i, j);
    });
  }
  return c;
}

inline Tensor sum_all(Tape* tape, const Tensor& a) {
  Tensor c(1, 1);
  double s = 0.0;
  for (int i = 0; i < a.size(); ++i) s += a[i];
  c[0] = s;
  const Tensor ins[] = {a};
  if (detail::want_grad(tape, ins)) {
    detail::enroll(*tape, ins, c);
    tape->push([a, c](Tape& t) {
      if (!t.tracking(a)) return;
      const double g = t.grad(c)[0];
      Tensor& ga = t.grad(a);
      for (int i = 0; i < a.size(); ++i) ga[i] += g;
    });
  }
  return c;
}

// mean over all elements of (a-b)^2, no 1/2 factor
inline Tensor mse(Tape* tape, const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) detail::shape_error(OpKind::Mse, a, b);
  Tensor c(1, 1);
  double s = 0.0;
  for (int i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  c[0] = s / a.size();
  const Tensor ins[] = {a, b};
  if (detail::want_grad(tape, ins)) {
    detail::enroll(*tape, ins, c);
    tape->push([a, b, c](Tape& t) {
      const double g = t.grad(c)[0] * 2.0 / a.size();
      if (t.tracking(a)) {
        Tensor& ga = t.grad(a);
        for (int i = 0; i < a.size(); ++i) ga[i] += g * (a[i] - b[i]);
      }
      if (t.tracking(b)) {
        Tensor& gb = t.grad(b);
        for (int i = 0; i < a.size(); ++i) gb[i] -= g * (a[i] - b[i]);
      }
    });
  }
  return c;
}

// Column-wise softmax of logits against a target distribution; mean of
// cross-entropies over columns. Targets are treated as constants.
inline Tensor softmax_xent(Tape* tape, const Tensor& logits, const Tensor& targets) {
  if (!logits.same_shape(targets)) detail::shape_error(OpKind::SoftmaxXent, logits, targets);
  const int k = logits.rows(), n = logits.cols();
  Tensor probs(k, n);
  for (int j = 0; j < n; ++j) {
    double mx = logits.at(0, j);
    for (int i = 1; i < k; ++i) mx = std::max(mx, logits.at(i, j));
    double z = 0.0;
    for (int i = 0; i < k; ++i) z += std::exp(logits.at(i, j) - mx);
    const double logz = std::log(z) + mx;
    for (int i = 0; i < k; ++i) probs.at(i, j) = std::exp(logits.at(i, j) - logz);
  }
  Tensor c(1, 1);
  double loss = 0.0;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < k; ++i) {
      const double ti = targets.at(i, j);
      if (ti != 0.0) loss -= ti * std::log(std::max(probs.at(i, j), 1e-300));
    }
  c[0] = loss / n;
  const Tensor ins[] = {logits};
  if (detail::want_grad(tape, ins)) {
    detail::enroll(*tape, ins, c);
    tape->push([logits, targets, probs, c](Tape& t) {
      if (!t.tracking(logits)) return;
      const double g = t.grad(c)[0] / logits.cols();
      Tensor& gl = t.grad(logits);
      for (int i = 0; i < logits.rows(); ++i)
        for (int j = 0; j < logits.cols(); ++j)
          gl.at(i, j) += g * (probs.at(i, j) - targets.at(i, j));
    });
  }
  return c;
}

// Generic dispatcher over the primitive set.
inline Tensor forward(Tape* tape, OpKind kind, const std::vector<Tensor>& inputs,
                      const OpAttrs& attrs = {}) {
  auto need = [&](size_t n) {
    if (inputs.size() != n)
      throw std::invalid_argument(std::string("op ") + op_name(kind) + ": expected " +
                                  std::to_string(n) + " inputs, got " +
                                  std::to_string(inputs.size()));
  };
  switch (kind) {
    case OpKind::Matmul: need(2); return matmul(tape, inputs[0], inputs[1]);
    case OpKind::Add: need(2); return add(tape, inputs[0], inputs[1]);
    case OpKind::Mul: need(2); return mul(tape, inputs[0], inputs[1]);
    case OpKind::Scale: need(1); return scale(tape, inputs[0], attrs.c);
    case OpKind::Tanh: need(1); return tanh_op(tape, inputs[0]);
    case OpKind::Sigmoid: need(1); return sigmoid_op(tape, inputs[0]);
    case OpKind::Relu: need(1); return relu_op(tape, inputs[0]);
    case OpKind::Exp: need(1); return exp_op(tape, inputs[0]);
    case OpKind::ConcatRows: return concat_rows(tape, inputs);
    case OpKind::ConcatCols: return concat_cols(tape, inputs);
    case OpKind::SliceRows: need(1); return slice_rows(tape, inputs[0], attrs.lo, attrs.hi);
    case OpKind::SliceCols: need(1); return slice_cols(tape, inputs[0], attrs.lo, attrs.hi);
    case OpKind::SumAll: need(1); return sum_all(tape, inputs[0]);
    case OpKind::Mse: need(2); return mse(tape, inputs[0], inputs[1]);
    case OpKind::SoftmaxXent: need(2); return softmax_xent(tape, inputs[0], inputs[1]);
  }
  throw std::logic_error("forward: unknown op");
}

}  // namespace pushgraph
