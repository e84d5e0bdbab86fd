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

#include "rflow/model.hpp"

#include <atomic>
#include <cmath>
#include <limits>

#include "rflow/error.hpp"
#include "rflow/random.hpp"

namespace rflow {

void ModelConfig::validate() const {
  auto positive = [](std::size_t v, const char* name) {
    if (v == 0) throw ValidationError(std::string("model config: ") + name + " must be positive");
  };
  positive(vocab_size, "vocab_size");
  positive(embed_dim, "embed_dim");
  positive(frame_dim, "frame_dim");
  positive(cond_dim, "cond_dim");
  positive(hidden_dim, "hidden_dim");
  positive(n_hidden_layers, "n_hidden_layers");
  positive(time_embed_dim, "time_embed_dim");
  positive(n_speakers, "n_speakers");
  if (time_embed_dim % 2 != 0) throw ValidationError("model config: time_embed_dim must be even");
  if (n_speakers == 1 && speaker_embed_dim != 0) {
    throw ValidationError("model config: speaker_embed_dim must be 0 for a single speaker");
  }
  if (n_speakers > 1 && speaker_embed_dim == 0) {
    throw ValidationError("model config: speaker_embed_dim must be positive with several speakers");
  }
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
    throw ValidationError("model config: sigma must be finite and >= 0");
  }
}

namespace {

constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

// Index of each parameter tensor inside ModelParams::weights.
struct Layout {
  std::size_t embedding = 0;
  std::size_t speaker = kNone;
  std::size_t enc_w = 0, enc_b = 0;
  std::size_t dur_w1 = 0, dur_b1 = 0, dur_w2 = 0, dur_b2 = 0;
  std::vector<std::size_t> layer_w, layer_b, layer_time;
  std::size_t out_w = 0, out_b = 0;
  std::size_t first_field = 0;
};

Layout layout_for(const ModelConfig& c) {
  Layout l;
  std::size_t i = 0;
  l.embedding = i++;
  if (c.speaker_embed_dim > 0) l.speaker = i++;
  l.enc_w = i++;
  l.enc_b = i++;
  l.dur_w1 = i++;
  l.dur_b1 = i++;
  l.dur_w2 = i++;
  l.dur_b2 = i++;
  l.first_field = i;
  for (std::size_t k = 0; k < c.n_hidden_layers; ++k) {
    l.layer_w.push_back(i++);
    l.layer_b.push_back(i++);
    l.layer_time.push_back(i++);
  }
  l.out_w = i++;
  l.out_b = i++;
  return l;
}

std::atomic<std::uint64_t> g_predict_durations_calls{0};

// z[f] += b for every row f.
void add_row_bias(Tensor& z, const Tensor& b) {
  const std::size_t n = z.cols();
  double* pz = z.raw();
  const double* pb = b.raw();
  for (std::size_t f = 0; f < z.rows(); ++f) {
    for (std::size_t j = 0; j < n; ++j) pz[f * n + j] += pb[j];
  }
}

Tensor col_sums(const Tensor& g) {
  Tensor out(Shape{g.cols()});
  const std::size_t n = g.cols();
  const double* pg = g.raw();
  for (std::size_t f = 0; f < g.rows(); ++f) {
    for (std::size_t j = 0; j < n; ++j) out[j] += pg[f * n + j];
  }
  return out;
}

void add_into(Tensor& acc, const Tensor& x) { axpy(1.0, x, acc); }

// ---------------------------------------------------------------------------
// Text encoder and duration predictor.

struct EncoderCache {
  Tensor input;   // [L x (embed + speaker)]
  Tensor latent;  // [L x cond], tanh output
};

EncoderCache encoder_forward(const Model& model, std::span<const std::size_t> phone_ids,
                             std::size_t speaker_id) {
  const auto& c = model.config;
  const Layout l = layout_for(c);
  if (phone_ids.empty()) throw ValidationError("encode_text: empty phone sequence");
  if (speaker_id >= c.n_speakers) {
    throw ValidationError("encode_text: speaker id " + std::to_string(speaker_id) + " out of range (" +
                          std::to_string(c.n_speakers) + " speakers)");
  }
  const std::size_t width = c.embed_dim + c.speaker_embed_dim;
  EncoderCache cache;
  cache.input = Tensor::matrix(phone_ids.size(), width);
  const Tensor& table = model.params.weights[l.embedding];
  for (std::size_t p = 0; p < phone_ids.size(); ++p) {
    if (phone_ids[p] >= c.vocab_size) {
      throw ValidationError("encode_text: phone id " + std::to_string(phone_ids[p]) +
                            " out of range (vocab " + std::to_string(c.vocab_size) + ")");
    }
    auto dst = cache.input.row(p);
    auto src = table.row(phone_ids[p]);
    std::copy(src.begin(), src.end(), dst.begin());
    if (l.speaker != kNone) {
      auto spk = model.params.weights[l.speaker].row(speaker_id);
      std::copy(spk.begin(), spk.end(), dst.begin() + static_cast<std::ptrdiff_t>(c.embed_dim));
    }
  }
  Tensor pre = matmul_bt(cache.input, model.params.weights[l.enc_w]);
  add_row_bias(pre, model.params.weights[l.enc_b]);
  cache.latent = elementwise(ElementwiseOp::tanh, pre);
  return cache;
}

struct DurationCache {
  Tensor hidden;  // [L x cond], tanh output
  Tensor log_duration;  // [L x 1]
};

DurationCache duration_forward(const Model& model, const Tensor& latent) {
  const Layout l = layout_for(model.config);
  if (latent.rank() != 2 || latent.cols() != model.config.cond_dim) {
    throw ShapeError("duration predictor expects [L x " + std::to_string(model.config.cond_dim) +
                     "] latents, got " + shape_string(latent.shape()));
  }
  DurationCache cache;
  Tensor pre = matmul_bt(latent, model.params.weights[l.dur_w1]);
  add_row_bias(pre, model.params.weights[l.dur_b1]);
  cache.hidden = elementwise(ElementwiseOp::tanh, pre);
  cache.log_duration = matmul_bt(cache.hidden, model.params.weights[l.dur_w2]);
  add_row_bias(cache.log_duration, model.params.weights[l.dur_b2]);
  return cache;
}

// ---------------------------------------------------------------------------
// Vector-field estimator over a stack of frames from one or more examples.

struct FieldCache {
  std::vector<Tensor> acts;  // acts[0] is the input, acts[k+1] = silu(pre[k])
  std::vector<Tensor> pre;
  Tensor out;
  Tensor time_emb;  // [items x E]
  std::vector<std::size_t> item_of_frame;
};

FieldCache field_forward(const Model& model, Tensor input, std::span<const double> item_times,
                         std::vector<std::size_t> item_of_frame) {
  const auto& c = model.config;
  const Layout l = layout_for(c);
  const auto& w = model.params.weights;
  FieldCache cache;
  cache.item_of_frame = std::move(item_of_frame);
  cache.time_emb = Tensor::matrix(item_times.size(), c.time_embed_dim);
  for (std::size_t i = 0; i < item_times.size(); ++i) {
    const Tensor e = time_embedding(item_times[i], c.time_embed_dim);
    std::copy(e.data().begin(), e.data().end(), cache.time_emb.row(i).begin());
  }
  cache.acts.push_back(std::move(input));
  for (std::size_t k = 0; k < c.n_hidden_layers; ++k) {
    Tensor z = matmul_bt(cache.acts.back(), w[l.layer_w[k]]);
    add_row_bias(z, w[l.layer_b[k]]);
    const Tensor time_bias = matmul_bt(cache.time_emb, w[l.layer_time[k]]);  // [items x H]
    const std::size_t h = z.cols();
    for (std::size_t f = 0; f < z.rows(); ++f) {
      const double* tb = time_bias.raw() + cache.item_of_frame[f] * h;
      double* zr = z.raw() + f * h;
      for (std::size_t j = 0; j < h; ++j) zr[j] += tb[j];
    }
    cache.acts.push_back(elementwise(ElementwiseOp::silu, z));
    cache.pre.push_back(std::move(z));
  }
  cache.out = matmul_bt(cache.acts.back(), w[l.out_w]);
  add_row_bias(cache.out, w[l.out_b]);
  return cache;
}

// Accumulates parameter gradients for dL/d(out) = g_out. Returns dL/d(input).
Tensor field_backward(const Model& model, const FieldCache& cache, const Tensor& g_out, Gradients& grads) {
  const auto& c = model.config;
  const Layout l = layout_for(c);
  const auto& w = model.params.weights;
  add_into(grads[l.out_w], matmul_at(g_out, cache.acts.back()));
  add_into(grads[l.out_b], col_sums(g_out));
  Tensor g_act = matmul(g_out, w[l.out_w]);
  for (std::size_t k = c.n_hidden_layers; k-- > 0;) {
    const Tensor& z = cache.pre[k];
    Tensor g_z = g_act;
    for (std::size_t i = 0; i < g_z.size(); ++i) g_z[i] *= silu_grad(z[i]);
    add_into(grads[l.layer_w[k]], matmul_at(g_z, cache.acts[k]));
    add_into(grads[l.layer_b[k]], col_sums(g_z));
    // Time projection: sum frame gradients per item, then outer product with
    // the item's embedding.
    const std::size_t h = g_z.cols();
    Tensor per_item = Tensor::matrix(cache.time_emb.rows(), h);
    for (std::size_t f = 0; f < g_z.rows(); ++f) {
      double* dst = per_item.raw() + cache.item_of_frame[f] * h;
      const double* src = g_z.raw() + f * h;
      for (std::size_t j = 0; j < h; ++j) dst[j] += src[j];
    }
    add_into(grads[l.layer_time[k]], matmul_at(per_item, cache.time_emb));
    g_act = matmul(g_z, w[l.layer_w[k]]);
  }
  return g_act;
}

void check_field_inputs(const ModelConfig& c, const Tensor& x_t, const Condition& cond, double t) {
  if (x_t.rank() != 2 || x_t.cols() != c.frame_dim) {
    throw ShapeError("x_t must be [T x " + std::to_string(c.frame_dim) + "], got " +
                     shape_string(x_t.shape()));
  }
  if (cond.frames() != x_t.rows() || cond.y.rank() != 2 || cond.y.rows() != x_t.rows() ||
      cond.y.cols() != c.cond_dim) {
    throw ShapeError("condition " + shape_string(cond.y.shape()) + " does not match x_t " +
                     shape_string(x_t.shape()));
  }
  if (!(t >= 0.0 && t <= 1.0)) throw ValidationError("t must lie in [0, 1]");
}

// Appends [x_t | y | position] rows for one example into `input` at `row0`.
void fill_input_rows(Tensor& input, std::size_t row0, const Tensor& x_t, const Condition& cond) {
  const std::size_t d = x_t.cols();
  const std::size_t cd = cond.y.cols();
  for (std::size_t j = 0; j < x_t.rows(); ++j) {
    auto dst = input.row(row0 + j);
    auto xr = x_t.row(j);
    auto yr = cond.y.row(j);
    std::copy(xr.begin(), xr.end(), dst.begin());
    std::copy(yr.begin(), yr.end(), dst.begin() + static_cast<std::ptrdiff_t>(d));
    dst[d + cd] = cond.position[j];
  }
}

}  // namespace

std::vector<ParamSpec> param_inventory(const ModelConfig& c) {
  c.validate();
  std::vector<ParamSpec> specs;
  specs.push_back({"text.embedding", {c.vocab_size, c.embed_dim}});
  if (c.speaker_embed_dim > 0) {
    specs.push_back({"text.speaker_embedding", {c.n_speakers, c.speaker_embed_dim}});
  }
  specs.push_back({"text.encoder.weight", {c.cond_dim, c.embed_dim + c.speaker_embed_dim}});
  specs.push_back({"text.encoder.bias", {c.cond_dim}});
  specs.push_back({"duration.hidden.weight", {c.cond_dim, c.cond_dim}});
  specs.push_back({"duration.hidden.bias", {c.cond_dim}});
  specs.push_back({"duration.out.weight", {1, c.cond_dim}});
  specs.push_back({"duration.out.bias", {1}});
  std::size_t in = c.field_input_dim();
  for (std::size_t k = 0; k < c.n_hidden_layers; ++k) {
    const std::string prefix = "field.layer" + std::to_string(k);
    specs.push_back({prefix + ".weight", {c.hidden_dim, in}});
    specs.push_back({prefix + ".bias", {c.hidden_dim}});
    specs.push_back({prefix + ".time", {c.hidden_dim, c.time_embed_dim}});
    in = c.hidden_dim;
  }
  specs.push_back({"field.out.weight", {c.frame_dim, c.hidden_dim}});
  specs.push_back({"field.out.bias", {c.frame_dim}});
  return specs;
}

Tensor& Model::weight(const std::string& name) {
  return const_cast<Tensor&>(static_cast<const Model&>(*this).weight(name));
}

const Tensor& Model::weight(const std::string& name) const {
  const auto specs = param_inventory(config);
  for (std::size_t i = 0; i < specs.size(); ++i) {
    if (specs[i].name == name) return params.weights[i];
  }
  throw ValidationError("no parameter named '" + name + "'");
}

Model init_model(const ModelConfig& config, std::uint64_t seed) {
  Model model;
  model.config = config;
  Rng rng = Rng(seed).split(0x1417);
  for (const auto& spec : param_inventory(config)) {
    Tensor t(spec.shape);
    const bool is_bias = spec.shape.size() == 1;
    const bool is_table = spec.name == "text.embedding" || spec.name == "text.speaker_embedding";
    if (!is_bias) {
      const double scale = is_table ? 1.0 : 1.0 / std::sqrt(static_cast<double>(spec.shape[1]));
      for (auto& v : t.data()) v = scale * rng.normal();
    }
    model.params.adam_m.emplace_back(spec.shape);
    model.params.adam_v.emplace_back(spec.shape);
    model.params.weights.push_back(std::move(t));
  }
  return model;
}

Gradients zero_gradients(const Model& model) {
  Gradients g;
  g.reserve(model.params.weights.size());
  for (const auto& w : model.params.weights) g.emplace_back(w.shape());
  return g;
}

Tensor time_embedding(double t, std::size_t dim) {
  if (dim == 0 || dim % 2 != 0) throw ValidationError("time_embedding: dim must be even and positive");
  Tensor emb(Shape{dim});
  for (std::size_t i = 0; i < dim / 2; ++i) {
    const double omega = std::pow(10000.0, -2.0 * static_cast<double>(i) / static_cast<double>(dim));
    emb[2 * i] = std::sin(t * omega);
    emb[2 * i + 1] = std::cos(t * omega);
  }
  return emb;
}

Tensor encode_text(const Model& model, std::span<const std::size_t> phone_ids, std::size_t speaker_id) {
  return encoder_forward(model, phone_ids, speaker_id).latent;
}

Tensor predict_durations(const Model& model, const Tensor& phone_latents) {
  g_predict_durations_calls.fetch_add(1, std::memory_order_relaxed);
  const DurationCache cache = duration_forward(model, phone_latents);
  Tensor out(Shape{phone_latents.rows()});
  for (std::size_t p = 0; p < out.size(); ++p) out[p] = std::exp(cache.log_duration[p]);
  return out;
}

std::uint64_t predict_durations_call_count() {
  return g_predict_durations_calls.load(std::memory_order_relaxed);
}

std::vector<std::size_t> round_durations(const Tensor& durations) {
  std::vector<std::size_t> out;
  out.reserve(durations.size());
  for (double v : durations.data()) {
    const double r = std::round(v);
    out.push_back(r < 1.0 ? 1 : static_cast<std::size_t>(r));
  }
  return out;
}

double duration_loss(const Tensor& predicted, std::span<const std::size_t> target) {
  if (predicted.size() != target.size()) throw ShapeError("duration_loss: length mismatch");
  double s = 0.0;
  for (std::size_t p = 0; p < target.size(); ++p) {
    const double r = std::log(predicted[p]) - std::log(static_cast<double>(target[p]));
    s += r * r;
  }
  return s / static_cast<double>(target.size());
}

Condition regulate_length(const Tensor& phone_latents, std::span<const std::size_t> durations) {
  if (phone_latents.rank() != 2 || phone_latents.rows() != durations.size()) {
    throw ShapeError("regulate_length: " + std::to_string(durations.size()) + " durations for latents " +
                     shape_string(phone_latents.shape()));
  }
  std::size_t total = 0;
  for (std::size_t p = 0; p < durations.size(); ++p) {
    if (durations[p] == 0) {
      throw ValidationError("regulate_length: duration of phone " + std::to_string(p) + " is zero");
    }
    total += durations[p];
  }
  Condition cond;
  cond.y = Tensor::matrix(total, phone_latents.cols());
  cond.position.reserve(total);
  std::size_t j = 0;
  for (std::size_t p = 0; p < durations.size(); ++p) {
    auto src = phone_latents.row(p);
    for (std::size_t k = 0; k < durations[p]; ++k, ++j) {
      std::copy(src.begin(), src.end(), cond.y.row(j).begin());
      cond.position.push_back(static_cast<double>(k) / static_cast<double>(durations[p]));
    }
  }
  return cond;
}

Condition empty_condition(std::size_t frames, std::size_t cond_dim) {
  Condition cond;
  cond.y = Tensor::matrix(frames, cond_dim);
  cond.position.assign(frames, 0.0);
  return cond;
}

Tensor vf_forward(const Model& model, const Tensor& x_t, const Condition& cond, double t) {
  check_field_inputs(model.config, x_t, cond, t);
  Tensor input = Tensor::matrix(x_t.rows(), model.config.field_input_dim());
  fill_input_rows(input, 0, x_t, cond);
  const double times[1] = {t};
  return field_forward(model, std::move(input), times, std::vector<std::size_t>(x_t.rows(), 0)).out;
}

namespace {

// Shared by vf_backward and joint_loss_and_grad: forward the stacked frames,
// accumulate parameter gradients of the mean squared residual and return
// (loss, dL/d(input)).
std::pair<double, Tensor> field_regression(const Model& model, Tensor input, std::span<const double> times,
                                           std::vector<std::size_t> item_of_frame, const Tensor& target,
                                           Gradients& grads) {
  const FieldCache cache = field_forward(model, std::move(input), times, std::move(item_of_frame));
  const double norm = static_cast<double>(target.size());
  Tensor g_out = cache.out;
  double loss = 0.0;
  for (std::size_t i = 0; i < g_out.size(); ++i) {
    const double r = cache.out[i] - target[i];
    loss += r * r;
    g_out[i] = 2.0 * r / norm;
  }
  Tensor g_input = field_backward(model, cache, g_out, grads);
  return {loss / norm, std::move(g_input)};
}

}  // namespace

LossAndGrad vf_backward(const Model& model, std::span<const FieldExample> batch) {
  const auto& c = model.config;
  if (batch.empty()) throw ValidationError("vf_backward: empty batch");
  std::size_t frames = 0;
  for (const auto& ex : batch) {
    check_field_inputs(c, ex.x_t, ex.cond, ex.t);
    if (ex.target.shape() != ex.x_t.shape()) throw ShapeError("vf_backward: target shape differs from x_t");
    frames += ex.x_t.rows();
  }
  Tensor input = Tensor::matrix(frames, c.field_input_dim());
  Tensor target = Tensor::matrix(frames, c.frame_dim);
  std::vector<double> times;
  std::vector<std::size_t> item_of_frame;
  item_of_frame.reserve(frames);
  std::size_t row = 0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& ex = batch[i];
    fill_input_rows(input, row, ex.x_t, ex.cond);
    std::copy(ex.target.data().begin(), ex.target.data().end(), target.raw() + row * c.frame_dim);
    times.push_back(ex.t);
    item_of_frame.insert(item_of_frame.end(), ex.x_t.rows(), i);
    row += ex.x_t.rows();
  }
  LossAndGrad result;
  result.grads = zero_gradients(model);
  result.loss = field_regression(model, std::move(input), times, std::move(item_of_frame), target, result.grads).first;
  return result;
}

JointLoss joint_loss_and_grad(const Model& model, std::span<const TextExample> batch) {
  const auto& c = model.config;
  const Layout l = layout_for(c);
  const auto& w = model.params.weights;
  if (batch.empty()) throw ValidationError("joint_loss_and_grad: empty batch");

  std::vector<EncoderCache> enc;
  std::vector<DurationCache> dur;
  std::vector<Condition> conds;
  std::size_t frames = 0, phones = 0;
  for (const auto& ex : batch) {
    if (ex.durations.size() != ex.phone_ids.size()) {
      throw ShapeError("joint_loss_and_grad: durations and phones differ in length");
    }
    enc.push_back(encoder_forward(model, ex.phone_ids, ex.speaker_id));
    dur.push_back(duration_forward(model, enc.back().latent));
    conds.push_back(regulate_length(enc.back().latent, ex.durations));
    check_field_inputs(c, ex.x_t, conds.back(), ex.t);
    if (ex.target.shape() != ex.x_t.shape()) throw ShapeError("joint_loss_and_grad: target shape differs from x_t");
    frames += ex.x_t.rows();
    phones += ex.phone_ids.size();
  }

  Tensor input = Tensor::matrix(frames, c.field_input_dim());
  Tensor target = Tensor::matrix(frames, c.frame_dim);
  std::vector<double> times;
  std::vector<std::size_t> item_of_frame;
  std::size_t row = 0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    fill_input_rows(input, row, batch[i].x_t, conds[i]);
    std::copy(batch[i].target.data().begin(), batch[i].target.data().end(), target.raw() + row * c.frame_dim);
    times.push_back(batch[i].t);
    item_of_frame.insert(item_of_frame.end(), batch[i].x_t.rows(), i);
    row += batch[i].x_t.rows();
  }

  JointLoss result;
  result.grads = zero_gradients(model);
  auto& g = result.grads;
  auto [loss_fm, g_input] = field_regression(model, std::move(input), times, std::move(item_of_frame), target, g);
  result.loss_fm = loss_fm;

  const double phone_norm = static_cast<double>(phones);
  row = 0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& ex = batch[i];
    const std::size_t n_ph = ex.phone_ids.size();

    // Duration loss and its gradient w.r.t. the latents.
    Tensor g_log = Tensor::matrix(n_ph, 1);
    for (std::size_t p = 0; p < n_ph; ++p) {
      const double r = dur[i].log_duration[p] - std::log(static_cast<double>(ex.durations[p]));
      result.loss_dur += r * r / phone_norm;
      g_log[p] = 2.0 * r / phone_norm;
    }
    add_into(g[l.dur_w2], matmul_at(g_log, dur[i].hidden));
    add_into(g[l.dur_b2], col_sums(g_log));
    Tensor g_hidden = matmul(g_log, w[l.dur_w2]);
    for (std::size_t k = 0; k < g_hidden.size(); ++k) {
      const double h = dur[i].hidden[k];
      g_hidden[k] *= 1.0 - h * h;
    }
    add_into(g[l.dur_w1], matmul_at(g_hidden, enc[i].latent));
    add_into(g[l.dur_b1], col_sums(g_hidden));
    Tensor g_latent = matmul(g_hidden, w[l.dur_w1]);

    // Length regulation is a row copy, so its adjoint sums the y-gradients of
    // a phone's frames.
    for (std::size_t p = 0; p < n_ph; ++p) {
      auto dst = g_latent.row(p);
      for (std::size_t k = 0; k < ex.durations[p]; ++k, ++row) {
        const double* src = g_input.raw() + row * c.field_input_dim() + c.frame_dim;
        for (std::size_t j = 0; j < c.cond_dim; ++j) dst[j] += src[j];
      }
    }

    for (std::size_t k = 0; k < g_latent.size(); ++k) {
      const double h = enc[i].latent[k];
      g_latent[k] *= 1.0 - h * h;
    }
    add_into(g[l.enc_w], matmul_at(g_latent, enc[i].input));
    add_into(g[l.enc_b], col_sums(g_latent));
    const Tensor g_in = matmul(g_latent, w[l.enc_w]);
    for (std::size_t p = 0; p < n_ph; ++p) {
      auto src = g_in.row(p);
      auto emb = g[l.embedding].row(ex.phone_ids[p]);
      for (std::size_t j = 0; j < c.embed_dim; ++j) emb[j] += src[j];
      if (l.speaker != kNone) {
        auto spk = g[l.speaker].row(ex.speaker_id);
        for (std::size_t j = 0; j < c.speaker_embed_dim; ++j) spk[j] += src[c.embed_dim + j];
      }
    }
  }
  return result;
}

void adam_step(Model& model, const Gradients& grads, const AdamOptions& options) {
  auto& p = model.params;
  if (grads.size() != p.weights.size()) throw ShapeError("adam_step: gradient count mismatch");
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (grads[i].shape() != p.weights[i].shape()) {
      throw ShapeError("adam_step: gradient " + std::to_string(i) + " has shape " +
                       shape_string(grads[i].shape()) + ", parameter has " + shape_string(p.weights[i].shape()));
    }
  }
  ++p.adam_step;
  const double step = static_cast<double>(p.adam_step);
  const double c1 = 1.0 - std::pow(options.beta1, step);
  const double c2 = 1.0 - std::pow(options.beta2, step);
  for (std::size_t i = 0; i < grads.size(); ++i) {
    double* w = p.weights[i].raw();
    double* m = p.adam_m[i].raw();
    double* v = p.adam_v[i].raw();
    const double* gr = grads[i].raw();
    for (std::size_t k = 0; k < grads[i].size(); ++k) {
      m[k] = options.beta1 * m[k] + (1.0 - options.beta1) * gr[k];
      v[k] = options.beta2 * v[k] + (1.0 - options.beta2) * gr[k] * gr[k];
      const double m_hat = m[k] / c1;
      const double v_hat = v[k] / c2;
      w[k] -= options.lr * m_hat / (std::sqrt(v_hat) + options.eps);
    }
  }
}

}  // namespace rflow
