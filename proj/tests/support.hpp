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

// Helpers shared by the unit tests and the acceptance binary.

#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "rflow/model.hpp"
#include "rflow/random.hpp"

namespace rflow::testing {

/// max |a - f| / max(max |a|, max |f|, 1e-8) over one tensor.
inline double tensor_rel_error(const Tensor& analytic, const Tensor& numeric) {
  double diff = 0.0, scale = 1e-8;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    diff = std::max(diff, std::fabs(analytic[i] - numeric[i]));
    scale = std::max({scale, std::fabs(analytic[i]), std::fabs(numeric[i])});
  }
  return diff / scale;
}

/// Small config with two speakers so every parameter family is present.
inline ModelConfig small_config(std::size_t hidden = 8, std::size_t layers = 2) {
  ModelConfig c;
  c.vocab_size = 5;
  c.embed_dim = 4;
  c.frame_dim = 3;
  c.cond_dim = 4;
  c.hidden_dim = hidden;
  c.n_hidden_layers = layers;
  c.time_embed_dim = 6;
  c.n_speakers = 2;
  c.speaker_embed_dim = 2;
  c.sigma = 1e-4;
  return c;
}

/// Random initialization with every tensor (biases included) perturbed, so
/// no gradient vanishes by symmetry.
inline Model perturbed_model(const ModelConfig& config, std::uint64_t seed) {
  Model m = init_model(config, seed);
  Rng rng = Rng(seed).split(99);
  for (auto& w : m.params.weights) {
    for (auto& v : w.data()) v += 0.3 * rng.normal();
  }
  return m;
}

/// Two utterances with random path points.
inline std::vector<TextExample> text_batch(const ModelConfig& config, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<TextExample> batch;
  const std::vector<std::vector<std::size_t>> phones{{0, 3, 1}, {4, 2}};
  const std::vector<std::vector<std::size_t>> durs{{2, 1, 3}, {1, 4}};
  for (std::size_t b = 0; b < phones.size(); ++b) {
    TextExample ex;
    ex.phone_ids = phones[b];
    ex.speaker_id = b % config.n_speakers;
    ex.durations = durs[b];
    std::size_t frames = 0;
    for (auto d : ex.durations) frames += d;
    ex.x_t = sample_standard_normal(rng, {frames, config.frame_dim});
    ex.target = sample_standard_normal(rng, {frames, config.frame_dim});
    ex.t = 0.2 + 0.6 * rng.uniform();
    batch.push_back(std::move(ex));
  }
  return batch;
}

struct TensorCheck {
  std::string name;
  double rel_error = 0.0;
};

/// Central-difference check of joint_loss_and_grad on every parameter tensor.
inline std::vector<TensorCheck> check_joint_gradients(const Model& model, const std::vector<TextExample>& batch,
                                                      double h) {
  const JointLoss analytic = joint_loss_and_grad(model, batch);
  const auto specs = param_inventory(model.config);
  std::vector<TensorCheck> out;
  for (std::size_t k = 0; k < specs.size(); ++k) {
    Model probe = model;
    auto loss_at = [&](const Tensor& w) {
      probe.params.weights[k] = w;
      return joint_loss_and_grad(probe, batch).total();
    };
    const Tensor numeric = finite_difference_gradient(loss_at, model.params.weights[k], h);
    out.push_back({specs[k].name, tensor_rel_error(analytic.grads[k], numeric)});
  }
  return out;
}

}  // namespace rflow::testing
