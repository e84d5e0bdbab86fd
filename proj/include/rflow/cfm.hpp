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

// Conditional flow matching: path sampling, training steps and loops, and a
// brute-force marginal vector field for finite pair sets.

#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "rflow/data.hpp"
#include "rflow/model.hpp"
#include "rflow/random.hpp"

namespace rflow {

/// A draw from N(t x1 + (1 - t) x0, sigma^2 I) with its regression target.
struct PathSample {
  Tensor x_t;
  double t = 0.0;
  Tensor target;  // x1 - x0
};

PathSample sample_path_point(Rng& rng, const Tensor& x0, const Tensor& x1, double t, double sigma);

struct TrainStats {
  std::size_t step = 0;
  double loss_fm = 0.0;
  double loss_dur = 0.0;

  double total() const { return loss_fm + loss_dur; }
};

struct TrainOptions {
  AdamOptions adam;
  std::size_t batch_size = 16;
  /// Overrides the sampled path time (test hook).
  std::optional<double> fixed_t;
  /// Called for each batch item with the noise actually used and the path
  /// point drawn from it.
  std::function<void(const Tensor& x0, const PathSample&)> on_path_sample;
};

/// One batch item: an utterance and, optionally, fixed endpoints. A null
/// `noise` means x0 is drawn fresh from N(0, I); a null `target` means x1 is
/// the utterance's own frames.
struct TrainItem {
  const Utterance* utterance = nullptr;
  const Tensor* noise = nullptr;
  const Tensor* target = nullptr;
};

/// Samples x0 (if needed), t ~ U[0, 1] and x_t for every item, then applies
/// one Adam step on L_FM + L_dur. Durations fed to the length regulator are
/// the ground-truth ones. Throws DivergenceError if the loss is not finite.
TrainStats train_step(Model& model, Rng& rng, std::span<const TrainItem> batch, const TrainOptions& options,
                      std::size_t step_index = 1);
TrainStats train_step(Model& model, Rng& rng, const Utterance& utterance, const TrainOptions& options);

using StatsSink = std::function<void(const TrainStats&)>;

/// Cycles over `items` in minibatches, reshuffling with `rng` at every epoch.
std::vector<TrainStats> train_loop(Model& model, std::span<const TrainItem> items, std::size_t n_steps,
                                   const TrainOptions& options, Rng& rng, const StatsSink& sink = {});
/// Base flow-matching phase over a corpus (fresh noise every step).
std::vector<TrainStats> train_loop(Model& model, const Corpus& corpus, std::size_t n_steps,
                                   const TrainOptions& options, Rng& rng, const StatsSink& sink = {});

/// Draws one (x0, x1) pair of [1 x d] frames.
using EndpointSampler = std::function<std::pair<Tensor, Tensor>(Rng&)>;

/// Training without text: every batch item is a single frame with a zero
/// condition. Text parameters are left untouched; stats report loss_dur = 0.
std::vector<TrainStats> train_unconditional(Model& model, const EndpointSampler& sampler, std::size_t n_steps,
                                            const TrainOptions& options, Rng& rng, const StatsSink& sink = {});

/// Marginal-optimal field of a finite pair set under the Gaussian path:
/// sum_i w_i (x1_i - x0_i), w_i proportional to
/// exp(-|x - (t x1_i + (1 - t) x0_i)|^2 / (2 sigma^2)).
Tensor oracle_vector_field(std::span<const std::pair<Tensor, Tensor>> pairs, const Tensor& x, double t,
                           double sigma);

/// Model config for text-free use on d-dimensional points.
ModelConfig unconditional_config(std::size_t frame_dim, std::size_t hidden_dim, std::size_t n_hidden_layers);

/// Writes `step,loss_fm,loss_dur,loss_total` rows.
class TrainLogWriter {
 public:
  explicit TrainLogWriter(const std::filesystem::path& path);
  void operator()(const TrainStats& stats);

 private:
  std::ofstream out_;
};

}  // namespace rflow
