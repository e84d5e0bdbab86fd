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

// Synthetic text-to-frames corpus with a known conditional distribution.
//
// Each phone p owns a template vector and a ramp vector. Frame k of a phone
// with duration D spoken by speaker s is
//
//   template_p + (k / D) * ramp_p + offset_s + N(0, sigma_data^2 I)
//
// so the noise-free conditional mean of every frame is available exactly.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "rflow/random.hpp"
#include "rflow/tensor.hpp"

namespace rflow {

struct CorpusConfig {
  std::size_t vocab_size = 16;
  std::size_t frame_dim = 8;
  std::size_t n_speakers = 4;
  double sigma_data = 0.05;
  double offset_scale = 0.5;
  std::uint64_t seed = 0;

  void validate() const;
  friend bool operator==(const CorpusConfig&, const CorpusConfig&) = default;
};

struct PhoneTemplate {
  std::size_t base_duration = 1;
  std::vector<double> mean;  // entries in [-2, 2]
  std::vector<double> ramp;  // entries in [-2, 2]

  friend bool operator==(const PhoneTemplate&, const PhoneTemplate&) = default;
};

/// Generator "world" derived from the corpus seed: per-phone templates and
/// per-speaker offsets.
struct TemplateSet {
  std::vector<PhoneTemplate> phones;
  Tensor speaker_offsets;  // [n_speakers x frame_dim]

  friend bool operator==(const TemplateSet&, const TemplateSet&) = default;
};

struct Utterance {
  std::string id;
  std::size_t speaker_id = 0;
  std::vector<std::size_t> phone_ids;
  std::vector<std::size_t> durations;
  Tensor frames;  // [sum(durations) x frame_dim]

  std::size_t frame_count() const;
  friend bool operator==(const Utterance&, const Utterance&) = default;
};

struct Corpus {
  CorpusConfig config;
  TemplateSet templates;
  std::string split = "train";
  std::vector<Utterance> utterances;

  const Utterance& find(const std::string& id) const;
  friend bool operator==(const Corpus&, const Corpus&) = default;
};

TemplateSet make_templates(const CorpusConfig& config);

/// Deterministic corpus. Utterance i draws from a stream keyed by (split, i),
/// so any subset can be regenerated independently.
Corpus make_corpus(const CorpusConfig& config, std::size_t n_utts, const std::string& split = "train");

/// Noise-free frame sequence (template + ramp + speaker offset).
Tensor oracle_frame_mean(const CorpusConfig& config, const TemplateSet& templates,
                         std::span<const std::size_t> phone_ids, std::span<const std::size_t> durations,
                         std::size_t speaker_id);

/// Corpus text; templates live in a sibling file `<path>.templates`.
std::string corpus_text(const Corpus& corpus);
std::string templates_text(const Corpus& corpus);
std::filesystem::path templates_path(const std::filesystem::path& corpus_path);

void write_corpus(const Corpus& corpus, const std::filesystem::path& path);
Corpus read_corpus(const std::filesystem::path& path);
Corpus parse_corpus(const std::string& corpus_text, const std::string& templates_text,
                    const std::string& source = "corpus");

/// Writes `frames` as a frame block (one row of space-separated values per frame).
void write_frames(const Tensor& frames, const std::filesystem::path& path);

}  // namespace rflow
