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

#include "rflow/cfm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rflow/error.hpp"
#include "rflow/text_format.hpp"

namespace rflow {

PathSample sample_path_point(Rng& rng, const Tensor& x0, const Tensor& x1, double t, double sigma) {
  if (x0.shape() != x1.shape()) {
    throw ShapeError("sample_path_point: x0 " + shape_string(x0.shape()) + " vs x1 " + shape_string(x1.shape()));
  }
  if (!(t >= 0.0 && t <= 1.0)) throw ValidationError("sample_path_point: t must lie in [0, 1]");
  if (!(sigma >= 0.0)) throw ValidationError("sample_path_point: sigma must be >= 0");
  PathSample s;
  s.t = t;
  s.x_t = Tensor(x0.shape());
  s.target = Tensor(x0.shape());
  for (std::size_t i = 0; i < x0.size(); ++i) {
    s.x_t[i] = t * x1[i] + (1.0 - t) * x0[i];
    s.target[i] = x1[i] - x0[i];
  }
  if (sigma > 0.0) {
    for (auto& v : s.x_t.data()) v += sigma * rng.normal();
  }
  return s;
}

namespace {

void check_finite(const TrainStats& stats) {
  if (!std::isfinite(stats.loss_fm) || !std::isfinite(stats.loss_dur)) {
    throw DivergenceError("training loss is not finite", stats.step);
  }
}

}  // namespace

TrainStats train_step(Model& model, Rng& rng, std::span<const TrainItem> batch, const TrainOptions& options,
                      std::size_t step_index) {
  if (batch.empty()) throw ValidationError("train_step: empty batch");
  const std::size_t d = model.config.frame_dim;
  std::vector<TextExample> examples;
  examples.reserve(batch.size());
  for (const auto& item : batch) {
    const Utterance& u = *item.utterance;
    const Tensor& x1 = item.target ? *item.target : u.frames;
    if (x1.rank() != 2 || x1.rows() != u.frame_count() || x1.cols() != d) {
      throw ShapeError("train_step: endpoints of '" + u.id + "' have shape " + shape_string(x1.shape()) +
                       ", expected [" + std::to_string(u.frame_count()) + "x" + std::to_string(d) + "]");
    }
    const Tensor x0 = item.noise ? *item.noise : sample_standard_normal(rng, x1.shape());
    if (x0.shape() != x1.shape()) throw ShapeError("train_step: noise shape differs from target for '" + u.id + "'");
    const double t = options.fixed_t ? *options.fixed_t : rng.uniform();
    PathSample ps = sample_path_point(rng, x0, x1, t, model.config.sigma);
    if (options.on_path_sample) options.on_path_sample(x0, ps);
    TextExample ex;
    ex.phone_ids = u.phone_ids;
    ex.speaker_id = u.speaker_id;
    ex.durations = u.durations;
    ex.x_t = std::move(ps.x_t);
    ex.t = ps.t;
    ex.target = std::move(ps.target);
    examples.push_back(std::move(ex));
  }
  JointLoss loss = joint_loss_and_grad(model, examples);
  TrainStats stats{step_index, loss.loss_fm, loss.loss_dur};
  check_finite(stats);
  adam_step(model, loss.grads, options.adam);
  return stats;
}

TrainStats train_step(Model& model, Rng& rng, const Utterance& utterance, const TrainOptions& options) {
  const TrainItem item{&utterance, nullptr, nullptr};
  return train_step(model, rng, std::span<const TrainItem>(&item, 1), options);
}

std::vector<TrainStats> train_loop(Model& model, std::span<const TrainItem> items, std::size_t n_steps,
                                   const TrainOptions& options, Rng& rng, const StatsSink& sink) {
  if (items.empty()) throw ValidationError("train_loop: no training items");
  if (options.batch_size == 0) throw ValidationError("train_loop: batch_size must be positive");
  std::vector<TrainStats> history;
  history.reserve(n_steps);
  std::vector<std::size_t> order(items.size());
  std::size_t cursor = order.size();
  std::vector<std::size_t> picked;
  std::vector<TrainItem> batch;
  for (std::size_t step = 1; step <= n_steps; ++step) {
    picked.clear();
    while (picked.size() < std::min(options.batch_size, items.size())) {
      if (cursor == order.size()) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        for (std::size_t i = order.size(); i > 1; --i) {
          const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
          std::swap(order[i - 1], order[j]);
        }
        cursor = 0;
      }
      picked.push_back(order[cursor++]);
    }
    // Batch items are processed in item order, whatever the shuffle.
    std::sort(picked.begin(), picked.end());
    batch.clear();
    for (auto i : picked) batch.push_back(items[i]);
    history.push_back(train_step(model, rng, batch, options, step));
    if (sink) sink(history.back());
  }
  return history;
}

std::vector<TrainStats> train_loop(Model& model, const Corpus& corpus, std::size_t n_steps,
                                   const TrainOptions& options, Rng& rng, const StatsSink& sink) {
  std::vector<TrainItem> items;
  items.reserve(corpus.utterances.size());
  for (const auto& u : corpus.utterances) items.push_back({&u, nullptr, nullptr});
  return train_loop(model, items, n_steps, options, rng, sink);
}

std::vector<TrainStats> train_unconditional(Model& model, const EndpointSampler& sampler, std::size_t n_steps,
                                            const TrainOptions& options, Rng& rng, const StatsSink& sink) {
  if (options.batch_size == 0) throw ValidationError("train_unconditional: batch_size must be positive");
  const auto& c = model.config;
  std::vector<TrainStats> history;
  history.reserve(n_steps);
  const Condition cond = empty_condition(1, c.cond_dim);
  std::vector<FieldExample> batch(options.batch_size);
  for (std::size_t step = 1; step <= n_steps; ++step) {
    for (auto& ex : batch) {
      auto [x0, x1] = sampler(rng);
      if (x0.rank() != 2 || x0.rows() != 1 || x0.cols() != c.frame_dim) {
        throw ShapeError("train_unconditional: sampler must return [1 x " + std::to_string(c.frame_dim) + "]");
      }
      const double t = options.fixed_t ? *options.fixed_t : rng.uniform();
      PathSample ps = sample_path_point(rng, x0, x1, t, c.sigma);
      if (options.on_path_sample) options.on_path_sample(x0, ps);
      ex.x_t = std::move(ps.x_t);
      ex.cond = cond;
      ex.t = ps.t;
      ex.target = std::move(ps.target);
    }
    LossAndGrad lg = vf_backward(model, batch);
    TrainStats stats{step, lg.loss, 0.0};
    check_finite(stats);
    adam_step(model, lg.grads, options.adam);
    history.push_back(stats);
    if (sink) sink(stats);
  }
  return history;
}

Tensor oracle_vector_field(std::span<const std::pair<Tensor, Tensor>> pairs, const Tensor& x, double t,
                           double sigma) {
  if (!(sigma > 0.0)) throw ValidationError("oracle_vector_field: sigma must be positive");
  if (pairs.empty()) throw ValidationError("oracle_vector_field: no pairs");
  std::vector<double> log_w(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& [x0, x1] = pairs[i];
    if (x0.size() != x.size() || x1.size() != x.size()) throw ShapeError("oracle_vector_field: shape mismatch");
    double dist2 = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
      const double r = x[k] - (t * x1[k] + (1.0 - t) * x0[k]);
      dist2 += r * r;
    }
    log_w[i] = -dist2 / (2.0 * sigma * sigma);
  }
  const double max_log = *std::max_element(log_w.begin(), log_w.end());
  double norm = 0.0;
  for (auto& lw : log_w) {
    lw = std::exp(lw - max_log);
    norm += lw;
  }
  Tensor out(x.shape());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const double w = log_w[i] / norm;
    for (std::size_t k = 0; k < x.size(); ++k) out[k] += w * (pairs[i].second[k] - pairs[i].first[k]);
  }
  return out;
}

ModelConfig unconditional_config(std::size_t frame_dim, std::size_t hidden_dim, std::size_t n_hidden_layers) {
  ModelConfig c;
  c.vocab_size = 1;
  c.embed_dim = 1;
  c.frame_dim = frame_dim;
  c.cond_dim = 1;
  c.hidden_dim = hidden_dim;
  c.n_hidden_layers = n_hidden_layers;
  c.n_speakers = 1;
  c.speaker_embed_dim = 0;
  return c;
}

TrainLogWriter::TrainLogWriter(const std::filesystem::path& path) : out_(path, std::ios::trunc) {
  if (!out_) throw IoError("cannot open training log '" + path.string() + "'");
  out_ << "step,loss_fm,loss_dur,loss_total\n";
}

void TrainLogWriter::operator()(const TrainStats& s) {
  out_ << s.step << ',' << format_double(s.loss_fm) << ',' << format_double(s.loss_dur) << ','
       << format_double(s.total()) << '\n';
  if (!out_) throw IoError("failed writing training log");
}

}  // namespace rflow
