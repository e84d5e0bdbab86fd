/*
 * Copyright 2026 The rflow Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/*
 * C interface to librflow. Objects are opaque handles owned by the caller
 * and released with the matching *_free function (NULL is accepted).
 * Every fallible call returns an rflow_status; on failure a message for the
 * calling thread is available from rflow_last_error().
 *
 * Random streams: every call that consumes randomness takes a 64-bit seed
 * and derives its own stream from it, so independent calls never share
 * state.
 */

#ifndef RFLOW_RFLOW_H
#define RFLOW_RFLOW_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define RFLOW_API __declspec(dllexport)
#else
#define RFLOW_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum rflow_status {
  RFLOW_OK = 0,
  RFLOW_ERR_INVALID_ARGUMENT = 1,
  RFLOW_ERR_SHAPE = 2,
  RFLOW_ERR_FORMAT = 3,
  RFLOW_ERR_IO = 4,
  RFLOW_ERR_DIVERGENCE = 5,
  RFLOW_ERR_INTERNAL = 6
} rflow_status;

typedef enum rflow_solver {
  RFLOW_SOLVER_EULER = 0,
  RFLOW_SOLVER_MIDPOINT = 1,
  RFLOW_SOLVER_RK4 = 2
} rflow_solver;

typedef struct rflow_corpus rflow_corpus;
typedef struct rflow_model rflow_model;
typedef struct rflow_pairset rflow_pairset;
typedef struct rflow_frames rflow_frames;

RFLOW_API const char* rflow_version(void);
/* Message of the last failed call on this thread; "" if none. */
RFLOW_API const char* rflow_last_error(void);
/* For RFLOW_ERR_DIVERGENCE: the 1-based step that produced a non-finite
 * value (training step or solver step), else 0. */
RFLOW_API size_t rflow_last_error_step(void);
RFLOW_API const char* rflow_status_name(rflow_status status);

RFLOW_API rflow_status rflow_solver_parse(const char* name, rflow_solver* out);
RFLOW_API const char* rflow_solver_name(rflow_solver solver);

/* ---- corpus ---- */

typedef struct rflow_corpus_config {
  size_t vocab_size;
  size_t frame_dim;
  size_t n_speakers;
  double sigma_data;
  double offset_scale;
  uint64_t seed;
} rflow_corpus_config;

RFLOW_API void rflow_corpus_config_default(rflow_corpus_config* config);
/* Splits with equal seeds share phone templates and speaker offsets. */
RFLOW_API rflow_status rflow_corpus_generate(const rflow_corpus_config* config, size_t n_utts, const char* split,
                                             rflow_corpus** out);
/* Reads `path` and its `path.templates` sibling. */
RFLOW_API rflow_status rflow_corpus_read(const char* path, rflow_corpus** out);
RFLOW_API rflow_status rflow_corpus_write(const rflow_corpus* corpus, const char* path);
RFLOW_API void rflow_corpus_free(rflow_corpus* corpus);
RFLOW_API size_t rflow_corpus_size(const rflow_corpus* corpus);
RFLOW_API size_t rflow_corpus_frame_count(const rflow_corpus* corpus);
RFLOW_API rflow_status rflow_corpus_get_config(const rflow_corpus* corpus, rflow_corpus_config* out);

/* ---- model ---- */

typedef struct rflow_model_config {
  size_t vocab_size;
  size_t embed_dim;
  size_t frame_dim;
  size_t cond_dim;
  size_t hidden_dim;
  size_t n_hidden_layers;
  size_t time_embed_dim;
  size_t n_speakers;
  size_t speaker_embed_dim;
  double sigma;
} rflow_model_config;

RFLOW_API void rflow_model_config_default(rflow_model_config* config);
RFLOW_API rflow_status rflow_model_create(const rflow_model_config* config, uint64_t seed, rflow_model** out);
RFLOW_API rflow_status rflow_model_load(const char* path, rflow_model** out);
RFLOW_API rflow_status rflow_model_save(const rflow_model* model, const char* path);
RFLOW_API void rflow_model_free(rflow_model* model);
RFLOW_API rflow_status rflow_model_get_config(const rflow_model* model, rflow_model_config* out);
/* Number of completed rectification rounds. */
RFLOW_API uint32_t rflow_model_round(const rflow_model* model);
RFLOW_API size_t rflow_model_param_count(const rflow_model* model);

/* ---- training ---- */

typedef struct rflow_train_options {
  size_t steps;
  size_t batch_size;
  double lr;
  uint64_t seed;
  /* CSV `step,loss_fm,loss_dur,loss_total`; NULL for none. */
  const char* log_path;
} rflow_train_options;

RFLOW_API void rflow_train_options_default(rflow_train_options* options);
/* Flow-matching training on `corpus` with fresh noise each step. */
RFLOW_API rflow_status rflow_train(rflow_model* model, const rflow_corpus* corpus, const rflow_train_options* options);

typedef struct rflow_rectify_options {
  rflow_solver solver;
  size_t nfe;
  /* Retraining budget, batch and learning rate on the generated pairs. */
  size_t steps;
  size_t batch_size;
  double lr;
  uint64_t seed;
  /* Nonzero: retrain from a fresh initialization seeded by `seed`. */
  int reinitialize;
  const char* log_path;
} rflow_rectify_options;

RFLOW_API void rflow_rectify_options_default(rflow_rectify_options* options);
/* One rectification round; the model's round counter advances by one.
 * The stream depends on `seed` and the model's current round, so repeated
 * calls with one seed still draw fresh pair noise. `pairs_out` may be NULL. */
RFLOW_API rflow_status rflow_rectify_round(rflow_model* model, const rflow_corpus* corpus,
                                           const rflow_rectify_options* options, rflow_pairset** pairs_out);

RFLOW_API rflow_status rflow_pairset_read(const char* path, rflow_pairset** out);
RFLOW_API rflow_status rflow_pairset_write(const rflow_pairset* pairs, const char* path);
RFLOW_API void rflow_pairset_free(rflow_pairset* pairs);
RFLOW_API size_t rflow_pairset_size(const rflow_pairset* pairs);
RFLOW_API size_t rflow_pairset_excluded(const rflow_pairset* pairs);
RFLOW_API uint32_t rflow_pairset_round(const rflow_pairset* pairs);

/* ---- sampling ---- */

typedef struct rflow_sample_options {
  rflow_solver solver;
  size_t nfe;
  uint64_t seed;
  /* Trajectory CSV `t,frame,dim0..`; NULL for none. */
  const char* trajectory_path;
} rflow_sample_options;

RFLOW_API void rflow_sample_options_default(rflow_sample_options* options);
/* `durations` may be NULL, in which case the model predicts them. */
RFLOW_API rflow_status rflow_sample_phones(const rflow_model* model, const size_t* phone_ids, size_t n_phones,
                                           size_t speaker_id, const size_t* durations,
                                           const rflow_sample_options* options, rflow_frames** out);
/* Text, speaker and (if `gt_durations`) durations of corpus entry `utt_id`. */
RFLOW_API rflow_status rflow_sample_utterance(const rflow_model* model, const rflow_corpus* corpus,
                                              const char* utt_id, int gt_durations,
                                              const rflow_sample_options* options, rflow_frames** out);

RFLOW_API void rflow_frames_free(rflow_frames* frames);
RFLOW_API size_t rflow_frames_rows(const rflow_frames* frames);
RFLOW_API size_t rflow_frames_cols(const rflow_frames* frames);
/* Row-major [rows x cols]; valid until the handle is freed. */
RFLOW_API const double* rflow_frames_data(const rflow_frames* frames);
/* Starting noise the sample was integrated from. */
RFLOW_API const double* rflow_frames_noise(const rflow_frames* frames);
RFLOW_API size_t rflow_frames_duration_count(const rflow_frames* frames);
RFLOW_API const size_t* rflow_frames_durations(const rflow_frames* frames);
/* Frame block format of the corpus files. */
RFLOW_API rflow_status rflow_frames_write(const rflow_frames* frames, const char* path);

/* ---- evaluation ---- */

typedef struct rflow_eval_options {
  rflow_solver solver;
  const size_t* nfe;
  size_t n_nfe;
  uint64_t seed;
  /* CSV `model,solver,nfe,energy_distance,cond_rmse,straightness,frames_per_second`. */
  const char* report_path;
  /* Energy distance with predicted durations; NULL for none. */
  const char* predicted_durations_path;
} rflow_eval_options;

/* NFE sweep over every (model, nfe) cell. `tags` names the report rows. */
RFLOW_API rflow_status rflow_eval(const rflow_model* const* models, const char* const* tags, size_t n_models,
                                  const rflow_corpus* test, const rflow_eval_options* options);

#ifdef __cplusplus
}
#endif

#endif /* RFLOW_RFLOW_H */
