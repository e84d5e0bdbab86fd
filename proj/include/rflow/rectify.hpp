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

// Flow rectification: pair each training utterance's noise with the sample
// the current model transports it to, then retrain on those fixed pairs.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "rflow/cfm.hpp"
#include "rflow/data.hpp"
#include "rflow/model.hpp"
#include "rflow/ode.hpp"

namespace rflow {

struct PairEntry {
  std::string utterance_id;
  Tensor noise;   // x0'
  Tensor sample;  // x1_hat = ODE(x0')

  friend bool operator==(const PairEntry&, const PairEntry&) = default;
};

struct PairSet {
  std::uint32_t round = 1;
  SolverConfig solver{SolverMethod::euler, 100, false};
  std::size_t frame_dim = 0;
  /// Utterances dropped because their ODE solve diverged.
  std::size_t excluded = 0;
  std::vector<PairEntry> entries;

  const PairEntry& find(const std::string& utterance_id) const;
  friend bool operator==(const PairSet&, const PairSet&) = default;
};

/// Solves the model's ODE from fresh noise for every utterance, conditioning
/// on ground-truth durations. Utterance i uses the stream rng.split(i).
/// Diverged solves are excluded and counted; more than 1% excluded throws
/// DivergenceError.
PairSet generate_pairs(const Model& model, const Corpus& corpus, const SolverConfig& solver, const Rng& rng);

/// cfm::train_step with x0 := noise and x1 := sample from `entry`.
TrainStats rectified_train_step(Model& model, Rng& rng, const Utterance& utterance, const PairEntry& entry,
                                const TrainOptions& options);

struct RectifyOptions {
  SolverConfig solver{SolverMethod::euler, 100, false};
  std::size_t steps = 5000;
  TrainOptions train;
  /// Restart from a fresh initialization instead of the current weights.
  bool reinitialize = false;
  std::uint64_t init_seed = 0;
};

struct RoundResult {
  PairSet pairs;
  std::vector<TrainStats> history;
};

/// generate_pairs followed by a full training loop on the pairs; increments
/// model.round. Call repeatedly for further rounds.
RoundResult rectification_round(Model& model, const Corpus& corpus, const RectifyOptions& options, Rng& rng,
                                const StatsSink& sink = {});

/// PairSet file: `key=value` header (round, solver, nfe, d, count,
/// excluded), then per entry `utt <id> <frames>`, a `noise` line with its
/// frame block and a `sample` line with its frame block.
std::string pairset_text(const PairSet& pairs);
PairSet parse_pairset(const std::string& text, const std::string& source = "pairset");
void write_pairset(const PairSet& pairs, const std::filesystem::path& path);
PairSet read_pairset(const std::filesystem::path& path);

/// Text-free variant for point clouds: solves from `noise` rows ([n x d])
/// and returns (x0, x1_hat) pairs of [1 x d] frames.
std::vector<std::pair<Tensor, Tensor>> generate_unconditional_pairs(const Model& model, const Tensor& noise,
                                                                    const SolverConfig& solver);

}  // namespace rflow
