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
#include <optional>
#include <vector>

#include "rflow/model.hpp"
#include "rflow/ode.hpp"
#include "rflow/random.hpp"

namespace rflow {

/// u(x, y, t) with the condition held fixed along the trajectory.
VectorField model_field(const Model& model, const Condition& cond);

/// Text + durations -> frame-level condition.
Condition build_condition(const Model& model, const std::vector<std::size_t>& phone_ids,
                          const std::vector<std::size_t>& durations, std::size_t speaker_id);

struct SampleRequest {
  std::vector<std::size_t> phone_ids;
  std::size_t speaker_id = 0;
  /// Ground-truth durations; predicted (rounded, floor 1) when empty.
  std::optional<std::vector<std::size_t>> durations;
  SolverConfig solver;
};

struct SampleResult {
  Tensor noise;
  Tensor frames;
  std::vector<std::size_t> durations;
  std::optional<Trajectory> trajectory;
};

/// Draws x0 ~ N(0, I) of the regulated length and solves the ODE.
SampleResult sample_frames(const Model& model, const SampleRequest& request, Rng& rng);

}  // namespace rflow
