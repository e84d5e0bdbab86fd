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

#include <cmath>
#include <limits>
#include <cstring>
#include <sstream>

#include <doctest.h>

#include "rflow/error.hpp"
#include "rflow/random.hpp"
#include "rflow/tensor.hpp"
#include "rflow/text_format.hpp"

using namespace rflow;

namespace {

// Plain triple loop, kept deliberately separate from the library kernel.
Tensor naive_matmul(const Tensor& a, const Tensor& b) {
  const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  Tensor c(Shape{m, n});
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      long double s = 0.0L;
      for (std::size_t l = 0; l < k; ++l) s += static_cast<long double>(a.raw()[i * k + l]) * b.raw()[l * n + j];
      c.raw()[i * n + j] = static_cast<double>(s);
    }
  }
  return c;
}

Tensor transpose(const Tensor& a) {
  Tensor t(Shape{a.cols(), a.rows()});
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  }
  return t;
}

double max_rel_diff(const Tensor& a, const Tensor& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double scale = std::max(1.0, std::fabs(b[i]));
    worst = std::max(worst, std::fabs(a[i] - b[i]) / scale);
  }
  return worst;
}

}  // namespace

TEST_SUITE("numeric") {
  TEST_CASE("tensor shape bookkeeping") {
    Tensor t(Shape{2, 3}, 1.5);
    CHECK(t.size() == 6);
    CHECK(t.rows() == 2);
    CHECK(t.cols() == 3);
    CHECK_THROWS_AS(Tensor(Shape{2, 0}), ShapeError);
    CHECK_THROWS_AS(Tensor(Shape{2, 2}, std::vector<double>{1, 2, 3}), ShapeError);
    CHECK(t.reshaped({3, 2}).shape() == Shape{3, 2});
    CHECK_THROWS_AS(t.reshaped({4, 2}), ShapeError);
  }

  TEST_CASE("matmul small hand case") {
    const Tensor a = Tensor::from_rows({{1, 2}, {3, 4}});
    const Tensor b = Tensor::from_rows({{1}, {1}});
    CHECK(matmul(a, b) == Tensor::from_rows({{3}, {7}}));
  }

  TEST_CASE("matmul by identity") {
    Rng rng(3);
    const Tensor a = sample_standard_normal(rng, {4, 5});
    Tensor eye(Shape{5, 5});
    for (std::size_t i = 0; i < 5; ++i) eye(i, i) = 1.0;
    CHECK(bitwise_equal(matmul(a, eye), a));
  }

  TEST_CASE("matmul rejects mismatched inner dims") {
    CHECK_THROWS_AS(matmul(Tensor::matrix(2, 3), Tensor::matrix(2, 3)), ShapeError);
    CHECK_THROWS_AS(matmul_bt(Tensor::matrix(2, 3), Tensor::matrix(2, 4)), ShapeError);
    CHECK_THROWS_AS(matmul_at(Tensor::matrix(2, 3), Tensor::matrix(3, 3)), ShapeError);
  }

  TEST_CASE("matmul matches naive loop on 5x7 times 7x3") {
    Rng rng(11);
    const Tensor a = sample_standard_normal(rng, {5, 7});
    const Tensor b = sample_standard_normal(rng, {7, 3});
    const Tensor c = matmul(a, b);
    const Tensor ref = naive_matmul(a, b);
    for (std::size_t i = 0; i < c.size(); ++i) CHECK(std::fabs(c[i] - ref[i]) <= 1e-12);
  }

  TEST_CASE("matmul variants agree with naive loop up to 64x64") {
    Rng rng(12);
    for (int trial = 0; trial < 20; ++trial) {
      const std::size_t m = 1 + rng.uniform_int(0, 63), k = 1 + rng.uniform_int(0, 63),
                        n = 1 + rng.uniform_int(0, 63);
      const Tensor a = sample_standard_normal(rng, {m, k});
      const Tensor b = sample_standard_normal(rng, {k, n});
      const Tensor ref = naive_matmul(a, b);
      CHECK(max_rel_diff(matmul(a, b), ref) < 1e-12);
      CHECK(max_rel_diff(matmul_bt(a, transpose(b)), ref) < 1e-12);
      CHECK(max_rel_diff(matmul_at(transpose(a), b), ref) < 1e-12);
    }
  }

  TEST_CASE("elementwise examples") {
    CHECK(Tensor::vector({1, 2}) + Tensor::vector({3, 4}) == Tensor::vector({4, 6}));
    CHECK(elementwise(ElementwiseOp::tanh, Tensor::vector({0.0}))[0] == 0.0);
    const double expected = 1.0 / (1.0 + std::exp(-1.0));
    CHECK(elementwise(ElementwiseOp::silu, Tensor::vector({1.0}))[0] == doctest::Approx(expected).epsilon(1e-15));
    CHECK(silu(1.0) == doctest::Approx(0.7310585786300049).epsilon(1e-15));
    CHECK(elementwise(ElementwiseOp::scale, Tensor::vector({1, -2}), 3.0) == Tensor::vector({3, -6}));
    CHECK(elementwise(ElementwiseOp::mul, Tensor::vector({2, 3}), Tensor::vector({4, 5})) == Tensor::vector({8, 15}));
  }

  TEST_CASE("silu gradient matches finite differences") {
    for (double x : {-3.0, -0.5, 0.0, 0.7, 4.0}) {
      const double h = 1e-6;
      CHECK(silu_grad(x) == doctest::Approx((silu(x + h) - silu(x - h)) / (2 * h)).epsilon(1e-8));
    }
  }

  TEST_CASE("leading-axis broadcasting") {
    const Tensor a = Tensor::from_rows({{1, 2, 3}, {4, 5, 6}});
    const Tensor row = Tensor::vector({10, 20, 30});
    CHECK(a + row == Tensor::from_rows({{11, 22, 33}, {14, 25, 36}}));
    CHECK(a + Tensor::from_rows({{1, 1, 1}}) == Tensor::from_rows({{2, 3, 4}, {5, 6, 7}}));
    CHECK_THROWS_AS(a + Tensor::vector({1, 2}), ShapeError);
    CHECK_THROWS_AS(a + Tensor::from_rows({{1, 2, 3}, {1, 2, 3}, {1, 2, 3}}), ShapeError);
  }

  TEST_CASE("broadcast add then sub restores bitwise") {
    Rng rng(5);
    // Dyadic values keep every sum exact.
    Tensor a(Shape{6, 4});
    Tensor b(Shape{4});
    for (auto& v : a.data()) v = static_cast<double>(rng.uniform_int(-1000, 1000)) / 64.0;
    for (auto& v : b.data()) v = static_cast<double>(rng.uniform_int(-1000, 1000)) / 32.0;
    CHECK(bitwise_equal((a + b) - b, a));
  }

  TEST_CASE("finite differences examples") {
    auto sq = [](const Tensor& x) { return sum_squares(x); };
    const Tensor g = finite_difference_gradient(sq, Tensor::vector({1, 2}), 1e-5);
    CHECK(g[0] == doctest::Approx(2.0).epsilon(1e-8));
    CHECK(g[1] == doctest::Approx(4.0).epsilon(1e-8));
    const Tensor z = finite_difference_gradient([](const Tensor&) { return 3.0; }, Tensor::vector({1, 2, 3}), 1e-5);
    for (double v : z.data()) CHECK(v == 0.0);
    const Tensor s = finite_difference_gradient([](const Tensor& x) { return std::sin(x[0]); }, Tensor::vector({0}),
                                                1e-5);
    CHECK(s[0] == doctest::Approx(1.0).epsilon(1e-9));
  }

  TEST_CASE("rng determinism and independence") {
    Rng a(42), b(42);
    const Tensor x = sample_standard_normal(a, {4});
    const Tensor y = sample_standard_normal(b, {4});
    CHECK(bitwise_equal(x, y));
    // A child stream does not depend on how far its parent has advanced.
    Rng p(9);
    const Rng c1 = p.split(3);
    for (int i = 0; i < 100; ++i) p.normal();
    Rng c2 = p.split(3);
    Rng c1m = c1;
    CHECK(c1m.next_u64() == c2.next_u64());
    CHECK(Rng(9).split(3).next_u64() != Rng(9).split(4).next_u64());
  }

  TEST_CASE("standard normal moments over one million draws") {
    Rng rng(2024);
    const Tensor x = sample_standard_normal(rng, {1000000});
    double mean = 0.0;
    for (double v : x.data()) mean += v;
    mean /= static_cast<double>(x.size());
    double var = 0.0;
    for (double v : x.data()) var += (v - mean) * (v - mean);
    var /= static_cast<double>(x.size() - 1);
    CHECK(mean > -0.01);
    CHECK(mean < 0.01);
    CHECK(var > 0.99);
    CHECK(var < 1.01);
  }

  TEST_CASE("uniform integers stay in range and cover it") {
    Rng rng(1);
    int counts[5] = {0, 0, 0, 0, 0};
    for (int i = 0; i < 5000; ++i) {
      const auto v = rng.uniform_int(3, 7);
      REQUIRE(v >= 3);
      REQUIRE(v <= 7);
      ++counts[v - 3];
    }
    for (int c : counts) CHECK(c > 850);
    for (int i = 0; i < 1000; ++i) {
      const double u = rng.uniform();
      REQUIRE(u >= 0.0);
      REQUIRE(u < 1.0);
    }
  }

  TEST_CASE("rng serialization continues the stream") {
    Rng rng(77);
    for (int i = 0; i < 7; ++i) rng.normal();  // odd count leaves a cached spare
    Rng copy = Rng::deserialize(rng.serialize());
    for (int i = 0; i < 50; ++i) {
      const double a = rng.normal(), b = copy.normal();
      CHECK(std::memcmp(&a, &b, sizeof a) == 0);
    }
    CHECK(rng.next_u64() == copy.next_u64());
    CHECK_THROWS_AS(Rng::deserialize("garbage"), FormatError);
  }

  TEST_CASE("double text round trip") {
    Rng rng(8);
    for (int i = 0; i < 1000; ++i) {
      const double v = rng.normal() * std::pow(10.0, rng.uniform_int(-30, 30));
      const auto back = parse_double(format_double(v));
      REQUIRE(back);
      CHECK(std::memcmp(&v, &*back, sizeof v) == 0);
    }
    CHECK_FALSE(parse_double("1.5x"));
    CHECK_FALSE(parse_u64("-3"));
  }

  TEST_CASE("all_finite flags nan and inf") {
    CHECK(all_finite(Tensor::vector({1, 2})));
    CHECK_FALSE(all_finite(Tensor::vector({1, std::numeric_limits<double>::quiet_NaN()})));
    CHECK_FALSE(all_finite(Tensor::vector({std::numeric_limits<double>::infinity()})));
  }
}
