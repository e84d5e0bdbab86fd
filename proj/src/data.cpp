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

#include "rflow/data.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <map>
#include <set>
#include <sstream>

#include "rflow/error.hpp"
#include "rflow/text_format.hpp"

namespace rflow {

namespace {

constexpr std::size_t kMinPhones = 3;
constexpr std::size_t kMaxPhones = 8;
constexpr std::int64_t kMinBaseDuration = 2;
constexpr std::int64_t kMaxBaseDuration = 6;
constexpr double kTemplateRange = 1.0;
constexpr double kRampRange = 1.0;

std::uint64_t split_stream(const std::string& split) {
  // FNV-1a so arbitrary split names get distinct streams.
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : split) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

}  // namespace

void CorpusConfig::validate() const {
  if (vocab_size == 0) throw ValidationError("corpus: vocab_size must be positive");
  if (frame_dim == 0) throw ValidationError("corpus: frame dimension must be positive");
  if (n_speakers == 0) throw ValidationError("corpus: n_speakers must be positive");
  if (!(sigma_data >= 0.0) || !std::isfinite(sigma_data)) throw ValidationError("corpus: sigma_data must be >= 0");
  if (!(offset_scale >= 0.0) || !std::isfinite(offset_scale)) {
    throw ValidationError("corpus: offset_scale must be >= 0");
  }
}

std::size_t Utterance::frame_count() const {
  std::size_t t = 0;
  for (auto d : durations) t += d;
  return t;
}

const Utterance& Corpus::find(const std::string& id) const {
  for (const auto& u : utterances) {
    if (u.id == id) return u;
  }
  throw ValidationError("no utterance with id '" + id + "'");
}

TemplateSet make_templates(const CorpusConfig& config) {
  config.validate();
  Rng rng = Rng(config.seed).split(0x7E3);
  TemplateSet set;
  for (std::size_t p = 0; p < config.vocab_size; ++p) {
    PhoneTemplate t;
    t.base_duration = static_cast<std::size_t>(rng.uniform_int(kMinBaseDuration, kMaxBaseDuration));
    for (std::size_t k = 0; k < config.frame_dim; ++k) t.mean.push_back(kTemplateRange * (2.0 * rng.uniform() - 1.0));
    for (std::size_t k = 0; k < config.frame_dim; ++k) t.ramp.push_back(kRampRange * (2.0 * rng.uniform() - 1.0));
    set.phones.push_back(std::move(t));
  }
  set.speaker_offsets = Tensor::matrix(config.n_speakers, config.frame_dim);
  // A single speaker carries no offset.
  if (config.n_speakers > 1) {
    for (auto& v : set.speaker_offsets.data()) v = config.offset_scale * rng.normal();
  }
  return set;
}

Tensor oracle_frame_mean(const CorpusConfig& config, const TemplateSet& templates,
                         std::span<const std::size_t> phone_ids, std::span<const std::size_t> durations,
                         std::size_t speaker_id) {
  if (phone_ids.size() != durations.size() || phone_ids.empty()) {
    throw ValidationError("oracle_frame_mean: phones and durations must be nonempty and equally long");
  }
  if (speaker_id >= config.n_speakers) {
    throw ValidationError("oracle_frame_mean: unknown speaker " + std::to_string(speaker_id));
  }
  std::size_t total = 0;
  for (std::size_t p = 0; p < phone_ids.size(); ++p) {
    if (phone_ids[p] >= templates.phones.size()) {
      throw ValidationError("oracle_frame_mean: unknown phone " + std::to_string(phone_ids[p]));
    }
    if (durations[p] == 0) throw ValidationError("oracle_frame_mean: zero duration");
    total += durations[p];
  }
  const std::size_t d = config.frame_dim;
  Tensor out = Tensor::matrix(total, d);
  auto offset = templates.speaker_offsets.row(speaker_id);
  std::size_t j = 0;
  for (std::size_t p = 0; p < phone_ids.size(); ++p) {
    const auto& tpl = templates.phones[phone_ids[p]];
    for (std::size_t k = 0; k < durations[p]; ++k, ++j) {
      const double pos = static_cast<double>(k) / static_cast<double>(durations[p]);
      for (std::size_t i = 0; i < d; ++i) out(j, i) = tpl.mean[i] + pos * tpl.ramp[i] + offset[i];
    }
  }
  return out;
}

Corpus make_corpus(const CorpusConfig& config, std::size_t n_utts, const std::string& split) {
  config.validate();
  if (n_utts == 0) throw ValidationError("make_corpus: n_utts must be at least 1");
  Corpus corpus;
  corpus.config = config;
  corpus.split = split;
  corpus.templates = make_templates(config);
  const Rng split_rng = Rng(config.seed).split(split_stream(split));
  const int width = n_utts > 1 ? static_cast<int>(std::to_string(n_utts - 1).size()) : 1;
  for (std::size_t i = 0; i < n_utts; ++i) {
    Rng rng = split_rng.split(i);
    Utterance u;
    char id[64];
    std::snprintf(id, sizeof(id), "%s_%0*zu", split.c_str(), width, i);
    u.id = id;
    u.speaker_id = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(config.n_speakers) - 1));
    const auto n_phones = static_cast<std::size_t>(rng.uniform_int(kMinPhones, kMaxPhones));
    for (std::size_t p = 0; p < n_phones; ++p) {
      const auto ph = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(config.vocab_size) - 1));
      const auto base = static_cast<std::int64_t>(corpus.templates.phones[ph].base_duration);
      const auto dur = std::max<std::int64_t>(1, base + rng.uniform_int(-1, 1));
      u.phone_ids.push_back(ph);
      u.durations.push_back(static_cast<std::size_t>(dur));
    }
    u.frames = oracle_frame_mean(config, corpus.templates, u.phone_ids, u.durations, u.speaker_id);
    if (config.sigma_data > 0.0) {
      for (auto& v : u.frames.data()) v += config.sigma_data * rng.normal();
    }
    corpus.utterances.push_back(std::move(u));
  }
  return corpus;
}

std::filesystem::path templates_path(const std::filesystem::path& corpus_path) {
  return std::filesystem::path(corpus_path.string() + ".templates");
}

namespace {

void write_common_header(std::ostream& os, const CorpusConfig& c) {
  os << "vocab_size=" << c.vocab_size << '\n'
     << "d=" << c.frame_dim << '\n'
     << "n_speakers=" << c.n_speakers << '\n'
     << "sigma_data=" << format_double(c.sigma_data) << '\n'
     << "offset_scale=" << format_double(c.offset_scale) << '\n'
     << "seed=" << c.seed << '\n';
}

template <typename T>
void write_ints(std::ostream& os, const char* tag, const std::vector<T>& values) {
  os << tag;
  for (auto v : values) os << ' ' << v;
  os << '\n';
}

}  // namespace

std::string corpus_text(const Corpus& corpus) {
  std::ostringstream os;
  write_common_header(os, corpus.config);
  os << "split=" << corpus.split << '\n' << "count=" << corpus.utterances.size() << '\n';
  for (const auto& u : corpus.utterances) {
    os << '\n' << "utt " << u.id << ' ' << u.speaker_id << '\n';
    write_ints(os, "phones", u.phone_ids);
    write_ints(os, "durs", u.durations);
    for (std::size_t j = 0; j < u.frames.rows(); ++j) write_row(os, u.frames.row(j));
  }
  return os.str();
}

std::string templates_text(const Corpus& corpus) {
  std::ostringstream os;
  write_common_header(os, corpus.config);
  const auto& t = corpus.templates;
  for (std::size_t p = 0; p < t.phones.size(); ++p) {
    os << '\n' << "phone " << p << ' ' << t.phones[p].base_duration << '\n';
    os << "template ";
    write_row(os, t.phones[p].mean);
    os << "ramp ";
    write_row(os, t.phones[p].ramp);
  }
  for (std::size_t s = 0; s < t.speaker_offsets.rows(); ++s) {
    os << '\n' << "speaker " << s << '\n' << "offset ";
    write_row(os, t.speaker_offsets.row(s));
  }
  return os.str();
}

void write_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  write_file(path, corpus_text(corpus));
  write_file(templates_path(path), templates_text(corpus));
}

namespace {

CorpusConfig parse_config_header(LineReader& reader, std::map<std::string, std::string>& h) {
  auto take = [&](const std::string& key) {
    auto it = h.find(key);
    if (it == h.end()) reader.fail("missing header key '" + key + "'");
    std::string v = it->second;
    h.erase(it);
    return v;
  };
  auto take_u64 = [&](const std::string& key) {
    auto v = parse_u64(take(key));
    if (!v) reader.fail("bad integer for header key '" + key + "'");
    return *v;
  };
  auto take_double = [&](const std::string& key) {
    auto v = parse_double(take(key));
    if (!v) reader.fail("bad number for header key '" + key + "'");
    return *v;
  };
  CorpusConfig c;
  c.vocab_size = take_u64("vocab_size");
  c.frame_dim = take_u64("d");
  c.n_speakers = take_u64("n_speakers");
  c.sigma_data = take_double("sigma_data");
  c.offset_scale = take_double("offset_scale");
  c.seed = take_u64("seed");
  try {
    c.validate();
  } catch (const ValidationError& e) {
    reader.fail(e.what());
  }
  return c;
}

std::vector<std::size_t> parse_ints(LineReader& reader, const std::string& line, const std::string& tag) {
  const auto fields = split_ws(line);
  if (fields.empty() || fields[0] != tag) reader.fail("expected '" + tag + "' line");
  std::vector<std::size_t> out;
  for (std::size_t i = 1; i < fields.size(); ++i) {
    auto v = parse_u64(fields[i]);
    if (!v) reader.fail("bad integer '" + std::string(fields[i]) + "'");
    out.push_back(*v);
  }
  return out;
}

std::vector<double> parse_tagged_row(LineReader& reader, const std::string& line, const std::string& tag,
                                     std::size_t n) {
  if (line.rfind(tag + " ", 0) != 0) reader.fail("expected '" + tag + "' line");
  return parse_row(reader, std::string_view(line).substr(tag.size() + 1), n);
}

// Skips blank lines; returns the next nonblank line or nullopt at EOF.
std::optional<std::string> next_nonblank(LineReader& reader, std::optional<std::string> pending) {
  while (pending && pending->empty()) pending = reader.next();
  return pending;
}

TemplateSet parse_templates(const std::string& text, const CorpusConfig& expected, const std::string& source) {
  std::istringstream is(text);
  LineReader reader(is, source);
  std::optional<std::string> line;
  auto header = read_header(reader, line);
  const CorpusConfig c = parse_config_header(reader, header);
  if (!header.empty()) reader.fail("unknown header key '" + header.begin()->first + "'");
  if (!(c == expected)) reader.fail("templates header does not match the corpus header");
  TemplateSet set;
  for (std::size_t p = 0; p < c.vocab_size; ++p) {
    line = next_nonblank(reader, std::move(line));
    if (!line) reader.fail("missing phone " + std::to_string(p));
    const auto head = parse_ints(reader, *line, "phone");
    if (head.size() != 2 || head[0] != p || head[1] == 0) reader.fail("bad phone line");
    PhoneTemplate t;
    t.base_duration = head[1];
    t.mean = parse_tagged_row(reader, reader.expect("template"), "template", c.frame_dim);
    t.ramp = parse_tagged_row(reader, reader.expect("ramp"), "ramp", c.frame_dim);
    set.phones.push_back(std::move(t));
    line = reader.next();
  }
  set.speaker_offsets = Tensor::matrix(c.n_speakers, c.frame_dim);
  for (std::size_t s = 0; s < c.n_speakers; ++s) {
    line = next_nonblank(reader, std::move(line));
    if (!line) reader.fail("missing speaker " + std::to_string(s));
    const auto head = parse_ints(reader, *line, "speaker");
    if (head.size() != 1 || head[0] != s) reader.fail("bad speaker line");
    const auto row = parse_tagged_row(reader, reader.expect("offset"), "offset", c.frame_dim);
    std::copy(row.begin(), row.end(), set.speaker_offsets.row(s).begin());
    line = reader.next();
  }
  if (next_nonblank(reader, std::move(line))) reader.fail("unexpected trailing content");
  return set;
}

}  // namespace

Corpus parse_corpus(const std::string& text, const std::string& templates, const std::string& source) {
  std::istringstream is(text);
  LineReader reader(is, source);
  std::optional<std::string> line;
  auto header = read_header(reader, line);
  Corpus corpus;
  corpus.config = parse_config_header(reader, header);
  const auto& c = corpus.config;
  {
    auto it = header.find("split");
    if (it == header.end()) reader.fail("missing header key 'split'");
    corpus.split = it->second;
    header.erase(it);
  }
  std::uint64_t count = 0;
  {
    auto it = header.find("count");
    if (it == header.end()) reader.fail("missing header key 'count'");
    auto v = parse_u64(it->second);
    if (!v) reader.fail("bad integer for header key 'count'");
    count = *v;
    header.erase(it);
  }
  if (!header.empty()) reader.fail("unknown header key '" + header.begin()->first + "'");
  corpus.templates = parse_templates(templates, c, source + ".templates");

  std::set<std::string> ids;
  for (line = next_nonblank(reader, std::move(line)); line; line = next_nonblank(reader, reader.next())) {
    const std::size_t record = corpus.utterances.size() + 1;
    const auto fields = split_ws(*line);
    if (fields.size() != 3 || fields[0] != "utt") reader.fail("record " + std::to_string(record) + ": expected 'utt <id> <speaker>'");
    Utterance u;
    u.id = std::string(fields[1]);
    auto spk = parse_u64(fields[2]);
    if (!spk || *spk >= c.n_speakers) reader.fail("record " + std::to_string(record) + ": bad speaker id");
    u.speaker_id = *spk;
    if (!ids.insert(u.id).second) reader.fail("duplicate utterance id '" + u.id + "'");
    u.phone_ids = parse_ints(reader, reader.expect("phones"), "phones");
    u.durations = parse_ints(reader, reader.expect("durs"), "durs");
    if (u.phone_ids.empty() || u.phone_ids.size() != u.durations.size()) {
      reader.fail("record " + std::to_string(record) + ": phones and durs differ in length");
    }
    for (auto p : u.phone_ids) {
      if (p >= c.vocab_size) reader.fail("record " + std::to_string(record) + ": phone id out of range");
    }
    for (auto d : u.durations) {
      if (d == 0) reader.fail("record " + std::to_string(record) + ": zero duration");
    }
    const std::size_t frames = u.frame_count();
    std::vector<double> data;
    data.reserve(frames * c.frame_dim);
    for (std::size_t j = 0; j < frames; ++j) {
      auto row_line = reader.next();
      if (!row_line || row_line->empty() || row_line->rfind("utt ", 0) == 0) {
        reader.fail("record " + std::to_string(record) + ": frame block has " + std::to_string(j) +
                    " rows but durations sum to " + std::to_string(frames));
      }
      const auto row = parse_row(reader, *row_line, c.frame_dim);
      data.insert(data.end(), row.begin(), row.end());
    }
    u.frames = Tensor(Shape{frames, c.frame_dim}, std::move(data));
    auto after = reader.next();
    if (after && !after->empty()) {
      reader.fail("record " + std::to_string(record) + ": frame block longer than durations sum " +
                  std::to_string(frames));
    }
    corpus.utterances.push_back(std::move(u));
  }
  if (corpus.utterances.size() != count) {
    reader.fail("header count " + std::to_string(count) + " but " + std::to_string(corpus.utterances.size()) +
                " utterances");
  }
  return corpus;
}

Corpus read_corpus(const std::filesystem::path& path) {
  const std::string corpus = read_file(path);
  return parse_corpus(corpus, read_file(templates_path(path)), path.string());
}

void write_frames(const Tensor& frames, const std::filesystem::path& path) {
  std::ostringstream os;
  for (std::size_t j = 0; j < frames.rows(); ++j) write_row(os, frames.row(j));
  write_file(path, os.str());
}

}  // namespace rflow
