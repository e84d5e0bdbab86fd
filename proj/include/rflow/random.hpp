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

#include <cstdint>
#include <random>
#include <string>

#include "rflow/tensor.hpp"

namespace rflow {

std::uint64_t splitmix64(std::uint64_t x);

/// Seeded random stream.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the C++
/// standard. Everything derived from it (uniforms, integers, normals) is
/// computed here rather than through <random> distributions, whose algorithms
/// are implementation-defined.
///
/// Normals use the polar Box-Muller transform: draw u, v uniform on (-1, 1)
/// until 0 < s = u^2 + v^2 < 1, return u * sqrt(-2 ln s / s) and keep
/// v * sqrt(-2 ln s / s) as the next value.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform integer on [lo, hi], inclusive, by rejection (no modulo bias).
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
  double normal();

  /// Child stream keyed by `stream`; depends only on this stream's seed,
  /// never on how much of it has been consumed.
  Rng split(std::uint64_t stream) const;

  std::string serialize() const;
  static Rng deserialize(const std::string& text);

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// i.i.d. N(0, 1) tensor.
Tensor sample_standard_normal(Rng& rng, const Shape& shape);

}  // namespace rflow
