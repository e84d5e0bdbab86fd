// Copyright 2026 The rflow Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "rflow/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "rflow/error.hpp"

namespace rflow {

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (auto s : shape) n *= s;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)) {
  for (auto s : shape_) {
    if (s == 0) throw ShapeError("tensor dimensions must be positive, got " + shape_string(shape_));
  }
  data_.assign(shape_size(shape_), fill);
}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
  for (auto s : shape_) {
    if (s == 0) throw ShapeError("tensor dimensions must be positive, got " + shape_string(shape_));
  }
  if (shape_size(shape_) != data_.size()) {
    throw ShapeError("shape " + shape_string(shape_) + " does not match " +
                     std::to_string(data_.size()) + " elements");
  }
}

Tensor Tensor::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  if (rows.size() == 0) throw ShapeError("from_rows: no rows");
  const std::size_t n_cols = rows.begin()->size();
  std::vector<double> data;
  data.reserve(rows.size() * n_cols);
  for (const auto& r : rows) {
    if (r.size() != n_cols) throw ShapeError("from_rows: ragged rows");
    data.insert(data.end(), r.begin(), r.end());
  }
  return Tensor(Shape{rows.size(), n_cols}, std::move(data));
}

Tensor Tensor::vector(std::initializer_list<double> values) {
  return Tensor(Shape{values.size()}, std::vector<double>(values));
}

std::size_t Tensor::rows() const {
  if (shape_.empty()) throw ShapeError("rows() on a rank-0 tensor");
  return shape_[0];
}

std::size_t Tensor::cols() const {
  if (shape_.size() != 2) throw ShapeError("cols() requires rank 2, got " + shape_string(shape_));
  return shape_[1];
}

std::span<double> Tensor::row(std::size_t i) {
  const auto c = cols();
  return {data_.data() + i * c, c};
}

std::span<const double> Tensor::row(std::size_t i) const {
  const auto c = cols();
  return {data_.data() + i * c, c};
}

void Tensor::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

Tensor Tensor::reshaped(Shape shape) const {
  if (shape_size(shape) != data_.size()) {
    throw ShapeError("cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
  }
  return Tensor(std::move(shape), data_);
}

bool bitwise_equal(const Tensor& a, const Tensor& b) {
  return a.shape() == b.shape() &&
         (a.size() == 0 || std::memcmp(a.raw(), b.raw(), a.size() * sizeof(double)) == 0);
}

bool all_finite(const Tensor& t) {
  return std::all_of(t.data().begin(), t.data().end(), [](double v) { return std::isfinite(v); });
}

double silu(double x) { return x / (1.0 + std::exp(-x)); }

double silu_grad(double x) {
  const double s = 1.0 / (1.0 + std::exp(-x));
  return s * (1.0 + x * (1.0 - s));
}

namespace {

// Number of leading-axis repeats when `b` broadcasts over `a`, 0 if incompatible.
std::size_t broadcast_repeats(const Tensor& a, const Tensor& b) {
  if (a.shape() == b.shape()) return 1;
  if (a.rank() < 1) return 0;
  Shape tail(a.shape().begin() + 1, a.shape().end());
  if (tail.empty()) tail.push_back(1);
  Shape lead_one = tail;
  lead_one.insert(lead_one.begin(), 1);
  if (b.shape() == tail || b.shape() == lead_one) return a.shape()[0];
  return 0;
}

}  // namespace

Tensor elementwise(ElementwiseOp op, const Tensor& a, const Tensor& b) {
  const std::size_t reps = broadcast_repeats(a, b);
  if (reps == 0) {
    throw ShapeError("elementwise: cannot combine " + shape_string(a.shape()) + " with " +
                     shape_string(b.shape()));
  }
  Tensor out = a;
  const std::size_t stride = b.size();
  double* o = out.raw();
  const double* pb = b.raw();
  for (std::size_t r = 0; r < (reps == 1 ? 1 : reps); ++r) {
    double* orow = o + r * stride;
    switch (op) {
      case ElementwiseOp::add:
        for (std::size_t i = 0; i < stride; ++i) orow[i] += pb[i];
        break;
      case ElementwiseOp::sub:
        for (std::size_t i = 0; i < stride; ++i) orow[i] -= pb[i];
        break;
      case ElementwiseOp::mul:
        for (std::size_t i = 0; i < stride; ++i) orow[i] *= pb[i];
        break;
      default:
        throw ValidationError("elementwise: op is not binary");
    }
  }
  return out;
}

Tensor elementwise(ElementwiseOp op, const Tensor& a, double scalar) {
  Tensor out = a;
  auto d = out.data();
  switch (op) {
    case ElementwiseOp::scale:
      for (auto& v : d) v *= scalar;
      break;
    case ElementwiseOp::tanh:
      for (auto& v : d) v = std::tanh(v);
      break;
    case ElementwiseOp::silu:
      for (auto& v : d) v = silu(v);
      break;
    default:
      throw ValidationError("elementwise: op needs a second tensor");
  }
  return out;
}

namespace {

void require_matrix(const Tensor& t, const char* what) {
  if (t.rank() != 2) throw ShapeError(std::string(what) + " must be rank 2, got " + shape_string(t.shape()));
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_matrix(a, "matmul lhs");
  require_matrix(b, "matmul rhs");
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  if (b.rows() != k) {
    throw ShapeError("matmul: inner dimensions differ, " + shape_string(a.shape()) + " x " +
                     shape_string(b.shape()));
  }
  Tensor c = Tensor::matrix(m, n);
  const double* pa = a.raw();
  const double* pb = b.raw();
  double* pc = c.raw();
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = pc + i * n;
    for (std::size_t l = 0; l < k; ++l) {
      const double av = pa[i * k + l];
      const double* brow = pb + l * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
  return c;
}

Tensor matmul_bt(const Tensor& a, const Tensor& b) {
  require_matrix(a, "matmul_bt lhs");
  require_matrix(b, "matmul_bt rhs");
  const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
  if (b.cols() != k) {
    throw ShapeError("matmul_bt: inner dimensions differ, " + shape_string(a.shape()) + " x " +
                     shape_string(b.shape()) + "^T");
  }
  Tensor c = Tensor::matrix(m, n);
  const double* pa = a.raw();
  const double* pb = b.raw();
  double* pc = c.raw();
  // Four output columns at a time so each lhs row is streamed once per block.
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = pa + i * k;
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) {
      const double* b0 = pb + j * k;
      const double* b1 = b0 + k;
      const double* b2 = b1 + k;
      const double* b3 = b2 + k;
      double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
      for (std::size_t l = 0; l < k; ++l) {
        const double av = arow[l];
        s0 += av * b0[l];
        s1 += av * b1[l];
        s2 += av * b2[l];
        s3 += av * b3[l];
      }
      pc[i * n + j] = s0;
      pc[i * n + j + 1] = s1;
      pc[i * n + j + 2] = s2;
      pc[i * n + j + 3] = s3;
    }
    for (; j < n; ++j) {
      const double* brow = pb + j * k;
      double s = 0;
      for (std::size_t l = 0; l < k; ++l) s += arow[l] * brow[l];
      pc[i * n + j] = s;
    }
  }
  return c;
}

Tensor matmul_at(const Tensor& a, const Tensor& b) {
  require_matrix(a, "matmul_at lhs");
  require_matrix(b, "matmul_at rhs");
  const std::size_t k = a.rows(), m = a.cols(), n = b.cols();
  if (b.rows() != k) {
    throw ShapeError("matmul_at: inner dimensions differ, " + shape_string(a.shape()) + "^T x " +
                     shape_string(b.shape()));
  }
  Tensor c = Tensor::matrix(m, n);
  const double* pa = a.raw();
  const double* pb = b.raw();
  double* pc = c.raw();
  for (std::size_t l = 0; l < k; ++l) {
    const double* arow = pa + l * m;
    const double* brow = pb + l * n;
    for (std::size_t i = 0; i < m; ++i) {
      const double av = arow[i];
      double* crow = pc + i * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
  return c;
}

void axpy(double alpha, const Tensor& x, Tensor& y) {
  if (x.shape() != y.shape()) {
    throw ShapeError("axpy: " + shape_string(x.shape()) + " vs " + shape_string(y.shape()));
  }
  const double* px = x.raw();
  double* py = y.raw();
  for (std::size_t i = 0; i < x.size(); ++i) py[i] += alpha * px[i];
}

double sum_squares(const Tensor& t) {
  double s = 0.0;
  for (double v : t.data()) s += v * v;
  return s;
}

double dot(const Tensor& a, const Tensor& b) {
  if (a.size() != b.size()) throw ShapeError("dot: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

Tensor finite_difference_gradient(const std::function<double(const Tensor&)>& f, const Tensor& x,
                                  double h) {
  if (!(h > 0.0)) throw ValidationError("finite_difference_gradient: h must be positive");
  Tensor grad(x.shape());
  Tensor probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + h;
    const double up = f(probe);
    probe[i] = orig - h;
    const double down = f(probe);
    probe[i] = orig;
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

}  // namespace rflow
