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

// Learnable acoustic-model components: text encoder, duration predictor,
// length regulator and the per-frame vector-field estimator, with
// hand-derived backpropagation, Adam and checkpoint persistence.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "rflow/tensor.hpp"

namespace rflow {

struct ModelConfig {
  std::size_t vocab_size = 16;
  std::size_t embed_dim = 16;
  std::size_t frame_dim = 8;
  std::size_t cond_dim = 16;
  std::size_t hidden_dim = 128;
  std::size_t n_hidden_layers = 3;
  std::size_t time_embed_dim = 32;
  std::size_t n_speakers = 1;
  /// Must be 0 when n_speakers == 1.
  std::size_t speaker_embed_dim = 0;
  /// Standard deviation of the conditional probability path.
  double sigma = 1e-4;

  void validate() const;
  /// Estimator input per frame: x_t, y and the in-phone position.
  std::size_t field_input_dim() const { return frame_dim + cond_dim + 1; }

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Frame-level condition produced by the length regulator.
///
/// `y` holds phone latents repeated by duration. `position[j]` is the
/// relative position k / duration of frame j inside its phone (k = 0 for the
/// first frame of a phone), which the estimator receives next to y.
struct Condition {
  Tensor y;
  std::vector<double> position;

  std::size_t frames() const { return position.size(); }
};

struct ParamSpec {
  std::string name;
  Shape shape;
};

/// Names and shapes of every learnable tensor, in storage order.
std::vector<ParamSpec> param_inventory(const ModelConfig& config);

/// Learnable tensors (ordered as param_inventory) plus Adam state.
struct ModelParams {
  std::vector<Tensor> weights;
  std::vector<Tensor> adam_m;
  std::vector<Tensor> adam_v;
  std::uint64_t adam_step = 0;
};

struct Model {
  ModelConfig config;
  ModelParams params;
  /// Number of completed rectification rounds.
  std::uint32_t round = 0;

  Tensor& weight(const std::string& name);
  const Tensor& weight(const std::string& name) const;
};

using Gradients = std::vector<Tensor>;

/// Weights ~ N(0, 1/fan_in), embedding tables ~ N(0, 1), biases 0.
Model init_model(const ModelConfig& config, std::uint64_t seed);
Gradients zero_gradients(const Model& model);

/// Sinusoidal embedding: emb[2i] = sin(t w_i), emb[2i+1] = cos(t w_i),
/// w_i = 10000^(-2i/dim).
Tensor time_embedding(double t, std::size_t dim);

/// Per-phone latents [L x cond_dim].
Tensor encode_text(const Model& model, std::span<const std::size_t> phone_ids, std::size_t speaker_id);

/// Positive per-phone durations (exp of the predicted log-duration), shape [L].
Tensor predict_durations(const Model& model, const Tensor& phone_latents);
/// Number of predict_durations calls so far in this process.
std::uint64_t predict_durations_call_count();
/// Rounds predicted durations to integers, never below 1.
std::vector<std::size_t> round_durations(const Tensor& durations);
/// Mean over phones of (log predicted - log target)^2.
double duration_loss(const Tensor& predicted, std::span<const std::size_t> target);

Condition regulate_length(const Tensor& phone_latents, std::span<const std::size_t> durations);
/// Condition for unconditional use: zero y, zero position.
Condition empty_condition(std::size_t frames, std::size_t cond_dim);

/// u(x_t, y, t) for every frame, shape [T x frame_dim].
Tensor vf_forward(const Model& model, const Tensor& x_t, const Condition& cond, double t);

/// One regression example for the vector-field estimator.
struct FieldExample {
  Tensor x_t;
  Condition cond;
  double t = 0.0;
  Tensor target;
};

struct LossAndGrad {
  double loss = 0.0;
  Gradients grads;
};

/// Loss = mean over all frames and dims of (u(x_t, y, t) - target)^2, with
/// its gradient w.r.t. every parameter (text parameters get zeros).
LossAndGrad vf_backward(const Model& model, std::span<const FieldExample> batch);

/// One utterance seen by the joint loss. `x_t`, `t` and `target` are the
/// already sampled path point; the condition is rebuilt from the text.
struct TextExample {
  std::vector<std::size_t> phone_ids;
  std::size_t speaker_id = 0;
  std::vector<std::size_t> durations;
  Tensor x_t;
  double t = 0.0;
  Tensor target;
};

struct JointLoss {
  double loss_fm = 0.0;
  double loss_dur = 0.0;
  Gradients grads;

  double total() const { return loss_fm + loss_dur; }
};

/// L_FM + L_dur over a batch, where L_FM is normalized by the batch's total
/// frame count times frame_dim and L_dur by its total phone count. Gradients
/// reach the text encoder through both terms.
JointLoss joint_loss_and_grad(const Model& model, std::span<const TextExample> batch);

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

void adam_step(Model& model, const Gradients& grads, const AdamOptions& options);

/// Binary checkpoint: "VFLW", u32 version, u32-length key=value config block,
/// then tensor records (u32 name length, name, u32 rank, u32 dims, f64
/// payload), all little-endian. Adam moments are stored as records named
/// "adam.m/<name>" and "adam.v/<name>".
std::string checkpoint_bytes(const Model& model);
Model parse_checkpoint(const std::string& bytes);
void save_checkpoint(const Model& model, const std::filesystem::path& path);
Model load_checkpoint(const std::filesystem::path& path);

}  // namespace rflow
