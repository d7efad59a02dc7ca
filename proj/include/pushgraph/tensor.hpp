#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pushgraph/rng.hpp"

namespace pushgraph {

// Dense row-major matrix of doubles. Values are immutable once the tensor is
// handed to an op; handles share storage. Scalars are 1x1, column vectors Nx1.
class Tensor {
 public:
  Tensor() : Tensor(0, 0) {}

  Tensor(int rows, int cols)
      : d_(std::make_shared<Data>(rows, cols)) {}

  static Tensor zeros(int rows, int cols) { return Tensor(rows, cols); }

  static Tensor full(int rows, int cols, double v) {
    Tensor t(rows, cols);
    for (auto& x : t.d_->v) x = v;
    return t;
  }

  static Tensor scalar(double v) { return full(1, 1, v); }

  static Tensor from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const int r = static_cast<int>(rows.size());
    const int c = r == 0 ? 0 : static_cast<int>(rows.begin()->size());
    Tensor t(r, c);
    int i = 0;
    for (const auto& row : rows) {
      if (static_cast<int>(row.size()) != c)
        throw std::invalid_argument("Tensor::from_rows: ragged rows");
      int j = 0;
      for (double v : row) t.d_->v[i * c + j++] = v;
      ++i;
    }
    return t;
  }

  static Tensor column(const std::vector<double>& v) {
    Tensor t(static_cast<int>(v.size()), 1);
    t.d_->v = v;
    return t;
  }

  // uniform in +-sqrt(1/fan_in), the init used by all learnable weights
  static Tensor glorot_uniform(int rows, int cols, int fan_in, Rng& rng) {
    const double bound = std::sqrt(1.0 / static_cast<double>(fan_in));
    Tensor t(rows, cols);
    for (auto& x : t.d_->v) x = rng.uniform(-bound, bound);
    return t;
  }

  int rows() const { return d_->rows; }
  int cols() const { return d_->cols; }
  int size() const { return d_->rows * d_->cols; }
  std::uint64_t id() const { return d_->id; }

  bool same_shape(const Tensor& o) const {
    return rows() == o.rows() && cols() == o.cols();
  }

  std::string shape_str() const {
    std::ostringstream os;
    os << rows() << "x" << cols();
    return os.str();
  }

  double at(int r, int c) const { return d_->v[r * d_->cols + c]; }
  double& at(int r, int c) { return d_->v[r * d_->cols + c]; }
  double operator[](int i) const { return d_->v[i]; }
  double& operator[](int i) { return d_->v[i]; }

  const std::vector<double>& vals() const { return d_->v; }
  std::vector<double>& vals() { return d_->v; }

  bool requires_grad() const { return d_->requires_grad; }
  Tensor& set_requires_grad(bool b) {
    d_->requires_grad = b;
    return *this;
  }

  Tensor clone() const {
    Tensor t(rows(), cols());
    t.d_->v = d_->v;
    return t;
  }

  bool all_finite() const {
    for (double x : d_->v)
      if (!std::isfinite(x)) return false;
    return true;
  }

 private:
  struct Data {
    Data(int r, int c)
        : rows(r), cols(c), v(static_cast<size_t>(r) * c, 0.0), id(next_id()) {}
    int rows, cols;
    std::vector<double> v;
    bool requires_grad = false;
    std::uint64_t id;
    static std::uint64_t next_id() {
      static std::atomic<std::uint64_t> counter{1};
      return counter.fetch_add(1, std::memory_order_relaxed);
    }
  };
  std::shared_ptr<Data> d_;
};

}  // namespace pushgraph
