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

#include "rflow/rflow.h"

#include <memory>
#include <new>
#include <optional>
#include <string>
#include <vector>

#include "rflow/cfm.hpp"
#include "rflow/data.hpp"
#include "rflow/error.hpp"
#include "rflow/metrics.hpp"
#include "rflow/model.hpp"
#include "rflow/rectify.hpp"
#include "rflow/sampling.hpp"

struct rflow_corpus {
  rflow::Corpus corpus;
};

struct rflow_model {
  rflow::Model model;
};

struct rflow_pairset {
  rflow::PairSet pairs;
};

struct rflow_frames {
  rflow::Tensor frames;
  rflow::Tensor noise;
  std::vector<size_t> durations;
};

namespace {

// Stream ids under the caller's seed; model initialization uses its own
// split inside init_model.
constexpr std::uint64_t kTrainStream = 2;
constexpr std::uint64_t kRectifyStream = 3;
constexpr std::uint64_t kSampleStream = 4;

thread_local std::string g_last_error;
thread_local size_t g_last_step = 0;

rflow_status fail(rflow_status status, const std::string& message, size_t step = 0) {
  g_last_error = message;
  g_last_step = step;
  return status;
}

template <class F>
rflow_status guarded(F&& body) {
  try {
    body();
    g_last_error.clear();
    g_last_step = 0;
    return RFLOW_OK;
  } catch (const rflow::DivergenceError& e) {
    return fail(RFLOW_ERR_DIVERGENCE, e.what(), e.step());
  } catch (const rflow::ValidationError& e) {
    return fail(RFLOW_ERR_INVALID_ARGUMENT, e.what());
  } catch (const rflow::ShapeError& e) {
    return fail(RFLOW_ERR_SHAPE, e.what());
  } catch (const rflow::FormatError& e) {
    return fail(RFLOW_ERR_FORMAT, e.what());
  } catch (const rflow::IoError& e) {
    return fail(RFLOW_ERR_IO, e.what());
  } catch (const std::bad_alloc&) {
    return fail(RFLOW_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(RFLOW_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(RFLOW_ERR_INTERNAL, "unknown error");
  }
}

void require(const void* p, const char* what) {
  if (p == nullptr) throw rflow::ValidationError(std::string(what) + " is NULL");
}

rflow::SolverMethod to_method(rflow_solver s) {
  switch (s) {
    case RFLOW_SOLVER_EULER:
      return rflow::SolverMethod::euler;
    case RFLOW_SOLVER_MIDPOINT:
      return rflow::SolverMethod::midpoint;
    case RFLOW_SOLVER_RK4:
      return rflow::SolverMethod::rk4;
  }
  throw rflow::ValidationError("unknown solver enum value " + std::to_string(static_cast<int>(s)));
}

rflow::CorpusConfig to_cpp(const rflow_corpus_config& c) {
  rflow::CorpusConfig out;
  out.vocab_size = c.vocab_size;
  out.frame_dim = c.frame_dim;
  out.n_speakers = c.n_speakers;
  out.sigma_data = c.sigma_data;
  out.offset_scale = c.offset_scale;
  out.seed = c.seed;
  return out;
}

rflow_corpus_config to_c(const rflow::CorpusConfig& c) {
  return {c.vocab_size, c.frame_dim, c.n_speakers, c.sigma_data, c.offset_scale, c.seed};
}

rflow::ModelConfig to_cpp(const rflow_model_config& c) {
  rflow::ModelConfig out;
  out.vocab_size = c.vocab_size;
  out.embed_dim = c.embed_dim;
  out.frame_dim = c.frame_dim;
  out.cond_dim = c.cond_dim;
  out.hidden_dim = c.hidden_dim;
  out.n_hidden_layers = c.n_hidden_layers;
  out.time_embed_dim = c.time_embed_dim;
  out.n_speakers = c.n_speakers;
  out.speaker_embed_dim = c.speaker_embed_dim;
  out.sigma = c.sigma;
  return out;
}

rflow_model_config to_c(const rflow::ModelConfig& c) {
  return {c.vocab_size, c.embed_dim,  c.frame_dim,         c.cond_dim, c.hidden_dim, c.n_hidden_layers,
          c.time_embed_dim, c.n_speakers, c.speaker_embed_dim, c.sigma};
}

rflow::SolverConfig solver_config(rflow_solver solver, size_t nfe, bool record) {
  if (nfe == 0) throw rflow::ValidationError("nfe must be at least 1");
  return {to_method(solver), nfe, record};
}

rflow::TrainOptions train_options(size_t batch_size, double lr) {
  if (batch_size == 0) throw rflow::ValidationError("batch_size must be at least 1");
  if (!(lr > 0.0)) throw rflow::ValidationError("lr must be positive");
  rflow::TrainOptions opts;
  opts.batch_size = batch_size;
  opts.adam.lr = lr;
  return opts;
}

rflow::StatsSink log_sink(const char* path, std::unique_ptr<rflow::TrainLogWriter>& holder) {
  if (path == nullptr) return {};
  holder = std::make_unique<rflow::TrainLogWriter>(path);
  rflow::TrainLogWriter* w = holder.get();
  return [w](const rflow::TrainStats& s) { (*w)(s); };
}

rflow_frames* make_frames(const rflow::Model& model, const rflow::SampleRequest& req,
                          const rflow_sample_options& options) {
  rflow::Rng rng = rflow::Rng(options.seed).split(kSampleStream);
  rflow::SampleResult r = rflow::sample_frames(model, req, rng);
  if (options.trajectory_path != nullptr) rflow::write_trajectory_csv(*r.trajectory, options.trajectory_path);
  auto out = std::make_unique<rflow_frames>();
  out->frames = std::move(r.frames);
  out->noise = std::move(r.noise);
  out->durations.assign(r.durations.begin(), r.durations.end());
  return out.release();
}

}  // namespace

extern "C" {

const char* rflow_version(void) { return "0.1.0"; }

const char* rflow_last_error(void) { return g_last_error.c_str(); }

size_t rflow_last_error_step(void) { return g_last_step; }

const char* rflow_status_name(rflow_status status) {
  switch (status) {
    case RFLOW_OK:
      return "ok";
    case RFLOW_ERR_INVALID_ARGUMENT:
      return "invalid_argument";
    case RFLOW_ERR_SHAPE:
      return "shape";
    case RFLOW_ERR_FORMAT:
      return "format";
    case RFLOW_ERR_IO:
      return "io";
    case RFLOW_ERR_DIVERGENCE:
      return "divergence";
    case RFLOW_ERR_INTERNAL:
      return "internal";
  }
  return "unknown";
}

rflow_status rflow_solver_parse(const char* name, rflow_solver* out) {
  return guarded([&] {
    require(name, "name");
    require(out, "out");
    switch (rflow::parse_solver_method(name)) {
      case rflow::SolverMethod::euler:
        *out = RFLOW_SOLVER_EULER;
        break;
      case rflow::SolverMethod::midpoint:
        *out = RFLOW_SOLVER_MIDPOINT;
        break;
      case rflow::SolverMethod::rk4:
        *out = RFLOW_SOLVER_RK4;
        break;
    }
  });
}

const char* rflow_solver_name(rflow_solver solver) {
  switch (solver) {
    case RFLOW_SOLVER_EULER:
      return "euler";
    case RFLOW_SOLVER_MIDPOINT:
      return "midpoint";
    case RFLOW_SOLVER_RK4:
      return "rk4";
  }
  return "unknown";
}

void rflow_corpus_config_default(rflow_corpus_config* config) {
  if (config) *config = to_c(rflow::CorpusConfig{});
}

rflow_status rflow_corpus_generate(const rflow_corpus_config* config, size_t n_utts, const char* split,
                                   rflow_corpus** out) {
  return guarded([&] {
    require(config, "config");
    require(out, "out");
    auto c = std::make_unique<rflow_corpus>();
    c->corpus = rflow::make_corpus(to_cpp(*config), n_utts, split ? split : "train");
    *out = c.release();
  });
}

rflow_status rflow_corpus_read(const char* path, rflow_corpus** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    auto c = std::make_unique<rflow_corpus>();
    c->corpus = rflow::read_corpus(path);
    *out = c.release();
  });
}

rflow_status rflow_corpus_write(const rflow_corpus* corpus, const char* path) {
  return guarded([&] {
    require(corpus, "corpus");
    require(path, "path");
    rflow::write_corpus(corpus->corpus, path);
  });
}

void rflow_corpus_free(rflow_corpus* corpus) { delete corpus; }

size_t rflow_corpus_size(const rflow_corpus* corpus) { return corpus ? corpus->corpus.utterances.size() : 0; }

size_t rflow_corpus_frame_count(const rflow_corpus* corpus) {
  size_t n = 0;
  if (corpus) {
    for (const auto& u : corpus->corpus.utterances) n += u.frame_count();
  }
  return n;
}

rflow_status rflow_corpus_get_config(const rflow_corpus* corpus, rflow_corpus_config* out) {
  return guarded([&] {
    require(corpus, "corpus");
    require(out, "out");
    *out = to_c(corpus->corpus.config);
  });
}

void rflow_model_config_default(rflow_model_config* config) {
  if (config) *config = to_c(rflow::ModelConfig{});
}

rflow_status rflow_model_create(const rflow_model_config* config, uint64_t seed, rflow_model** out) {
  return guarded([&] {
    require(config, "config");
    require(out, "out");
    auto m = std::make_unique<rflow_model>();
    m->model = rflow::init_model(to_cpp(*config), seed);
    *out = m.release();
  });
}

rflow_status rflow_model_load(const char* path, rflow_model** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    auto m = std::make_unique<rflow_model>();
    m->model = rflow::load_checkpoint(path);
    *out = m.release();
  });
}

rflow_status rflow_model_save(const rflow_model* model, const char* path) {
  return guarded([&] {
    require(model, "model");
    require(path, "path");
    rflow::save_checkpoint(model->model, path);
  });
}

void rflow_model_free(rflow_model* model) { delete model; }

rflow_status rflow_model_get_config(const rflow_model* model, rflow_model_config* out) {
  return guarded([&] {
    require(model, "model");
    require(out, "out");
    *out = to_c(model->model.config);
  });
}

uint32_t rflow_model_round(const rflow_model* model) { return model ? model->model.round : 0; }

size_t rflow_model_param_count(const rflow_model* model) {
  size_t n = 0;
  if (model) {
    for (const auto& w : model->model.params.weights) n += w.size();
  }
  return n;
}

void rflow_train_options_default(rflow_train_options* options) {
  if (options) *options = {5000, 16, 1e-3, 0, nullptr};
}

rflow_status rflow_train(rflow_model* model, const rflow_corpus* corpus, const rflow_train_options* options) {
  return guarded([&] {
    require(model, "model");
    require(corpus, "corpus");
    require(options, "options");
    const auto opts = train_options(options->batch_size, options->lr);
    std::unique_ptr<rflow::TrainLogWriter> writer;
    const auto sink = log_sink(options->log_path, writer);
    rflow::Rng rng = rflow::Rng(options->seed).split(kTrainStream);
    rflow::train_loop(model->model, corpus->corpus, options->steps, opts, rng, sink);
  });
}

void rflow_rectify_options_default(rflow_rectify_options* options) {
  if (options) *options = {RFLOW_SOLVER_EULER, 100, 5000, 16, 1e-4, 0, 0, nullptr};
}

rflow_status rflow_rectify_round(rflow_model* model, const rflow_corpus* corpus, const rflow_rectify_options* options,
                                 rflow_pairset** pairs_out) {
  return guarded([&] {
    require(model, "model");
    require(corpus, "corpus");
    require(options, "options");
    rflow::RectifyOptions ro;
    ro.solver = solver_config(options->solver, options->nfe, false);
    ro.steps = options->steps;
    ro.train = train_options(options->batch_size, options->lr);
    ro.reinitialize = options->reinitialize != 0;
    ro.init_seed = options->seed;
    std::unique_ptr<rflow::TrainLogWriter> writer;
    const auto sink = log_sink(options->log_path, writer);
    rflow::Rng rng = rflow::Rng(options->seed).split(kRectifyStream).split(model->model.round);
    rflow::RoundResult r = rflow::rectification_round(model->model, corpus->corpus, ro, rng, sink);
    if (pairs_out) {
      auto p = std::make_unique<rflow_pairset>();
      p->pairs = std::move(r.pairs);
      *pairs_out = p.release();
    }
  });
}

rflow_status rflow_pairset_read(const char* path, rflow_pairset** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    auto p = std::make_unique<rflow_pairset>();
    p->pairs = rflow::read_pairset(path);
    *out = p.release();
  });
}

rflow_status rflow_pairset_write(const rflow_pairset* pairs, const char* path) {
  return guarded([&] {
    require(pairs, "pairs");
    require(path, "path");
    rflow::write_pairset(pairs->pairs, path);
  });
}

void rflow_pairset_free(rflow_pairset* pairs) { delete pairs; }

size_t rflow_pairset_size(const rflow_pairset* pairs) { return pairs ? pairs->pairs.entries.size() : 0; }

size_t rflow_pairset_excluded(const rflow_pairset* pairs) { return pairs ? pairs->pairs.excluded : 0; }

uint32_t rflow_pairset_round(const rflow_pairset* pairs) { return pairs ? pairs->pairs.round : 0; }

void rflow_sample_options_default(rflow_sample_options* options) {
  if (options) *options = {RFLOW_SOLVER_EULER, 10, 0, nullptr};
}

rflow_status rflow_sample_phones(const rflow_model* model, const size_t* phone_ids, size_t n_phones,
                                 size_t speaker_id, const size_t* durations, const rflow_sample_options* options,
                                 rflow_frames** out) {
  return guarded([&] {
    require(model, "model");
    require(options, "options");
    require(out, "out");
    if (n_phones == 0) throw rflow::ValidationError("at least one phone id is required");
    require(phone_ids, "phone_ids");
    rflow::SampleRequest req;
    req.phone_ids.assign(phone_ids, phone_ids + n_phones);
    req.speaker_id = speaker_id;
    if (durations) req.durations = std::vector<std::size_t>(durations, durations + n_phones);
    req.solver = solver_config(options->solver, options->nfe, options->trajectory_path != nullptr);
    *out = make_frames(model->model, req, *options);
  });
}

rflow_status rflow_sample_utterance(const rflow_model* model, const rflow_corpus* corpus, const char* utt_id,
                                    int gt_durations, const rflow_sample_options* options, rflow_frames** out) {
  return guarded([&] {
    require(model, "model");
    require(corpus, "corpus");
    require(utt_id, "utt_id");
    require(options, "options");
    require(out, "out");
    const rflow::Utterance& u = corpus->corpus.find(utt_id);
    rflow::SampleRequest req;
    req.phone_ids = u.phone_ids;
    req.speaker_id = u.speaker_id;
    if (gt_durations) req.durations = u.durations;
    req.solver = solver_config(options->solver, options->nfe, options->trajectory_path != nullptr);
    *out = make_frames(model->model, req, *options);
  });
}

void rflow_frames_free(rflow_frames* frames) { delete frames; }

size_t rflow_frames_rows(const rflow_frames* frames) { return frames ? frames->frames.rows() : 0; }

size_t rflow_frames_cols(const rflow_frames* frames) { return frames ? frames->frames.cols() : 0; }

const double* rflow_frames_data(const rflow_frames* frames) { return frames ? frames->frames.raw() : nullptr; }

const double* rflow_frames_noise(const rflow_frames* frames) { return frames ? frames->noise.raw() : nullptr; }

size_t rflow_frames_duration_count(const rflow_frames* frames) { return frames ? frames->durations.size() : 0; }

const size_t* rflow_frames_durations(const rflow_frames* frames) {
  return frames ? frames->durations.data() : nullptr;
}

rflow_status rflow_frames_write(const rflow_frames* frames, const char* path) {
  return guarded([&] {
    require(frames, "frames");
    require(path, "path");
    rflow::write_frames(frames->frames, path);
  });
}

rflow_status rflow_eval(const rflow_model* const* models, const char* const* tags, size_t n_models,
                        const rflow_corpus* test, const rflow_eval_options* options) {
  return guarded([&] {
    require(test, "test");
    require(options, "options");
    require(options->report_path, "options->report_path");
    if (n_models == 0) throw rflow::ValidationError("at least one model is required");
    require(models, "models");
    require(tags, "tags");
    if (options->n_nfe == 0) throw rflow::ValidationError("NFE list is empty");
    require(options->nfe, "options->nfe");
    std::vector<rflow::TaggedModel> tagged;
    for (size_t i = 0; i < n_models; ++i) {
      require(models[i], "models[i]");
      require(tags[i], "tags[i]");
      tagged.push_back({tags[i], &models[i]->model});
    }
    std::vector<std::size_t> nfe(options->nfe, options->nfe + options->n_nfe);
    for (auto n : nfe) {
      if (n == 0) throw rflow::ValidationError("NFE values must be at least 1");
    }
    const auto report = rflow::nfe_sweep(tagged, test->corpus, nfe, to_method(options->solver), options->seed);
    rflow::write_text_file(rflow::report_csv(report), options->report_path);
    if (options->predicted_durations_path) {
      rflow::write_text_file(rflow::predicted_durations_csv(report), options->predicted_durations_path);
    }
  });
}

}  // extern "C"
