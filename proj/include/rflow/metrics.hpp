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
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "rflow/data.hpp"
#include "rflow/model.hpp"
#include "rflow/ode.hpp"

namespace rflow {

struct StraightnessResult {
  double value = 0.0;
  /// Trajectories skipped because their endpoints coincide.
  std::size_t excluded = 0;
};

/// Mean over trajectories of
///   (1/N) sum_k |N (s[k+1] - s[k]) - (s[N] - s[0])|^2 / |s[N] - s[0]|^2,
/// the normalized deviation of each step's velocity from the chord.
StraightnessResult straightness(std::span<const Trajectory> trajectories);

/// V-statistic 2 E|a - b| - E|a - a'| - E|b - b'| over the rows of a and b.
/// Bitwise symmetric in its arguments.
double energy_distance(const Tensor& a, const Tensor& b);

/// Root mean squared difference over all frames and dims.
double cond_rmse(const Tensor& generated, const Tensor& oracle);

struct TaggedModel {
  std::string tag;
  const Model* model = nullptr;
};

struct EvalRow {
  std::string model;
  SolverMethod solver = SolverMethod::euler;
  std::size_t nfe = 0;
  double energy_distance = 0.0;
  double cond_rmse = 0.0;
  double straightness = 0.0;
  double frames_per_second = 0.0;
  /// Energy distance when the model's own duration predictions are used.
  double energy_distance_predicted_durations = 0.0;
};

struct EvalReport {
  std::vector<EvalRow> rows;
  /// Irreducible cond_rmse floor of the data.
  double sigma_data = 0.0;
};

/// For every model and step budget: one sample per test utterance from noise
/// seeded by (seed, utterance index), shared across models and budgets.
/// Ground-truth durations drive energy_distance, cond_rmse and
/// straightness; a second pass with predicted durations fills
/// energy_distance_predicted_durations. frames_per_second is wall clock.
EvalReport nfe_sweep(std::span<const TaggedModel> models, const Corpus& test, std::span<const std::size_t> nfe_list,
                     SolverMethod solver, std::uint64_t seed);

/// `model,solver,nfe,energy_distance,cond_rmse,straightness,frames_per_second`.
std::string report_csv(const EvalReport& report);
/// `model,solver,nfe,energy_distance_predicted_durations`.
std::string predicted_durations_csv(const EvalReport& report);
void write_text_file(const std::string& text, const std::filesystem::path& path);

}  // namespace rflow
