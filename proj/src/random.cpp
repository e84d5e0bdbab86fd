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

#include "rflow/random.hpp"

#include <bit>
#include <cmath>
#include <sstream>

#include "rflow/error.hpp"

namespace rflow {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

Rng::Rng(std::uint64_t seed) : seed_(seed), engine_(splitmix64(seed)) {}

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

std::int64_t Rng::uniform_int(std::int64_t lo, std::int64_t hi) {
  if (hi < lo) throw ValidationError("uniform_int: empty range");
  const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
  if (span == 0) return static_cast<std::int64_t>(engine_());
  const std::uint64_t limit = (~std::uint64_t{0}) - ((~std::uint64_t{0}) % span);
  std::uint64_t r;
  do {
    r = engine_();
  } while (r >= limit);
  return lo + static_cast<std::int64_t>(r % span);
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double f = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * f;
  has_spare_ = true;
  return u * f;
}

Rng Rng::split(std::uint64_t stream) const {
  return Rng(seed_ ^ splitmix64(stream ^ 0xD1B54A32D192ED03ull));
}

std::string Rng::serialize() const {
  std::ostringstream os;
  os << seed_ << ' ' << (has_spare_ ? 1 : 0) << ' ' << std::bit_cast<std::uint64_t>(spare_) << ' '
     << engine_;
  return os.str();
}

Rng Rng::deserialize(const std::string& text) {
  std::istringstream is(text);
  std::uint64_t seed = 0, spare_bits = 0;
  int has_spare = 0;
  is >> seed >> has_spare >> spare_bits;
  if (!is) throw FormatError("rng state: bad header");
  Rng rng(seed);
  is >> rng.engine_;
  if (!is) throw FormatError("rng state: bad engine words");
  rng.has_spare_ = has_spare != 0;
  rng.spare_ = std::bit_cast<double>(spare_bits);
  return rng;
}

Tensor sample_standard_normal(Rng& rng, const Shape& shape) {
  if (shape.empty()) throw ShapeError("sample_standard_normal: empty shape");
  Tensor out(shape);
  for (auto& v : out.data()) v = rng.normal();
  return out;
}

}  // namespace rflow
