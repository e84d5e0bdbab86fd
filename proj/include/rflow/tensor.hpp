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

#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace rflow {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Dense row-major array of doubles.
///
/// Rank-2 tensors are the common case (frames x features); the accessors
/// `rows()`/`cols()` and `row(i)` assume rank 2. Rank 1 is used for plain
/// vectors such as biases and time embeddings.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor matrix(std::size_t rows, std::size_t cols, double fill = 0.0) {
    return Tensor(Shape{rows, cols}, fill);
  }
  static Tensor from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static Tensor vector(std::initializer_list<double> values);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::size_t rows() const;
  std::size_t cols() const;

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  double* raw() noexcept { return data_.data(); }
  const double* raw() const noexcept { return data_.data(); }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * shape_[1] + j]; }

  std::span<double> row(std::size_t i);
  std::span<const double> row(std::size_t i) const;

  void fill(double value);
  Tensor reshaped(Shape shape) const;

  /// Value equality on shape and elements (so -0.0 == 0.0).
  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  Shape shape_;
  std::vector<double> data_;
};

/// Same shape and same bit pattern in every element.
bool bitwise_equal(const Tensor& a, const Tensor& b);
bool all_finite(const Tensor& t);

enum class ElementwiseOp { add, sub, mul, scale, tanh, silu };

/// Binary elementwise op (add, sub, mul). `b` either has `a`'s shape or is a
/// row vector (shape `a.shape()` minus the leading axis, or with a leading 1)
/// that is broadcast along the leading axis.
Tensor elementwise(ElementwiseOp op, const Tensor& a, const Tensor& b);
/// Unary elementwise op (tanh, silu), or `scale` multiplying by `scalar`.
Tensor elementwise(ElementwiseOp op, const Tensor& a, double scalar = 1.0);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return elementwise(ElementwiseOp::add, a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return elementwise(ElementwiseOp::sub, a, b); }
inline Tensor operator*(double s, const Tensor& a) { return elementwise(ElementwiseOp::scale, a, s); }

double silu(double x);
/// d/dx silu(x).
double silu_grad(double x);

/// a[m x k] * b[k x n].
Tensor matmul(const Tensor& a, const Tensor& b);
/// a[m x k] * b[n x k]^T.
Tensor matmul_bt(const Tensor& a, const Tensor& b);
/// a[k x m]^T * b[k x n].
Tensor matmul_at(const Tensor& a, const Tensor& b);

/// y += alpha * x, shapes equal.
void axpy(double alpha, const Tensor& x, Tensor& y);
double sum_squares(const Tensor& t);
double dot(const Tensor& a, const Tensor& b);

/// Central differences (f(x + h e_i) - f(x - h e_i)) / 2h for every coordinate.
Tensor finite_difference_gradient(const std::function<double(const Tensor&)>& f, const Tensor& x,
                                  double h);

}  // namespace rflow
