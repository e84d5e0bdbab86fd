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

#include "rflow/rectify.hpp"

#include <fstream>
#include <iterator>
#include <map>
#include <sstream>

#include "rflow/error.hpp"
#include "rflow/sampling.hpp"
#include "rflow/text_format.hpp"

namespace rflow {

const PairEntry& PairSet::find(const std::string& utterance_id) const {
  for (const auto& e : entries) {
    if (e.utterance_id == utterance_id) return e;
  }
  throw ValidationError("pairset has no entry for utterance '" + utterance_id + "'");
}

PairSet generate_pairs(const Model& model, const Corpus& corpus, const SolverConfig& solver, const Rng& rng) {
  PairSet pairs;
  pairs.round = model.round + 1;
  pairs.solver = solver;
  pairs.solver.record_trajectory = false;
  pairs.frame_dim = model.config.frame_dim;
  for (std::size_t i = 0; i < corpus.utterances.size(); ++i) {
    const Utterance& u = corpus.utterances[i];
    Rng utt_rng = rng.split(i);
    // Ground-truth durations only; the duration predictor is never consulted here.
    const Condition cond = build_condition(model, u.phone_ids, u.durations, u.speaker_id);
    PairEntry entry;
    entry.utterance_id = u.id;
    entry.noise = sample_standard_normal(utt_rng, {cond.frames(), model.config.frame_dim});
    try {
      entry.sample = solve(model_field(model, cond), entry.noise, pairs.solver).final_state;
    } catch (const DivergenceError&) {
      ++pairs.excluded;
      continue;
    }
    pairs.entries.push_back(std::move(entry));
  }
  if (pairs.excluded * 100 > corpus.utterances.size()) {
    throw DivergenceError("pair generation: " + std::to_string(pairs.excluded) + " of " +
                              std::to_string(corpus.utterances.size()) + " solves diverged (limit 1%)",
                          pairs.excluded);
  }
  return pairs;
}

TrainStats rectified_train_step(Model& model, Rng& rng, const Utterance& utterance, const PairEntry& entry,
                                const TrainOptions& options) {
  if (entry.utterance_id != utterance.id) {
    throw ValidationError("pair entry '" + entry.utterance_id + "' does not belong to utterance '" + utterance.id + "'");
  }
  const TrainItem item{&utterance, &entry.noise, &entry.sample};
  return train_step(model, rng, std::span<const TrainItem>(&item, 1), options);
}

RoundResult rectification_round(Model& model, const Corpus& corpus, const RectifyOptions& options, Rng& rng,
                                const StatsSink& sink) {
  RoundResult result;
  result.pairs = generate_pairs(model, corpus, options.solver, rng.split(model.round + 1));
  if (options.reinitialize) {
    const auto round = model.round;
    model = init_model(model.config, options.init_seed);
    model.round = round;
  }
  std::map<std::string, const Utterance*> by_id;
  for (const auto& u : corpus.utterances) by_id[u.id] = &u;
  std::vector<TrainItem> items;
  items.reserve(result.pairs.entries.size());
  for (const auto& e : result.pairs.entries) {
    items.push_back({by_id.at(e.utterance_id), &e.noise, &e.sample});
  }
  if (!items.empty()) result.history = train_loop(model, items, options.steps, options.train, rng, sink);
  model.round += 1;
  return result;
}

std::string pairset_text(const PairSet& pairs) {
  std::ostringstream os;
  os << "round=" << pairs.round << '\n'
     << "solver=" << to_string(pairs.solver.method) << '\n'
     << "nfe=" << pairs.solver.steps << '\n'
     << "d=" << pairs.frame_dim << '\n'
     << "count=" << pairs.entries.size() << '\n'
     << "excluded=" << pairs.excluded << '\n';
  for (const auto& e : pairs.entries) {
    os << '\n' << "utt " << e.utterance_id << ' ' << e.noise.rows() << '\n';
    os << "noise\n";
    for (std::size_t j = 0; j < e.noise.rows(); ++j) write_row(os, e.noise.row(j));
    os << "sample\n";
    for (std::size_t j = 0; j < e.sample.rows(); ++j) write_row(os, e.sample.row(j));
  }
  return os.str();
}

PairSet parse_pairset(const std::string& text, const std::string& source) {
  std::istringstream is(text);
  LineReader reader(is, source);
  std::optional<std::string> line;
  auto header = read_header(reader, line);
  auto take = [&](const std::string& key) {
    auto it = header.find(key);
    if (it == header.end()) reader.fail("missing header key '" + key + "'");
    std::string v = it->second;
    header.erase(it);
    return v;
  };
  auto take_u64 = [&](const std::string& key) {
    auto v = parse_u64(take(key));
    if (!v) reader.fail("bad integer for header key '" + key + "'");
    return *v;
  };
  PairSet pairs;
  pairs.round = static_cast<std::uint32_t>(take_u64("round"));
  try {
    pairs.solver.method = parse_solver_method(take("solver"));
  } catch (const ValidationError& e) {
    reader.fail(e.what());
  }
  pairs.solver.steps = take_u64("nfe");
  pairs.frame_dim = take_u64("d");
  const auto count = take_u64("count");
  pairs.excluded = take_u64("excluded");
  if (!header.empty()) reader.fail("unknown header key '" + header.begin()->first + "'");
  if (pairs.frame_dim == 0 || pairs.solver.steps == 0) reader.fail("d and nfe must be positive");

  auto read_block = [&](const char* tag, std::size_t frames) {
    if (reader.expect(tag) != tag) reader.fail(std::string("expected '") + tag + "'");
    std::vector<double> data;
    for (std::size_t j = 0; j < frames; ++j) {
      const auto row = parse_row(reader, reader.expect("frame row"), pairs.frame_dim);
      data.insert(data.end(), row.begin(), row.end());
    }
    return Tensor(Shape{frames, pairs.frame_dim}, std::move(data));
  };
  while (line && line->empty()) line = reader.next();
  while (line) {
    const auto fields = split_ws(*line);
    if (fields.size() != 3 || fields[0] != "utt") reader.fail("expected 'utt <id> <frames>'");
    auto frames = parse_u64(fields[2]);
    if (!frames || *frames == 0) reader.fail("bad frame count");
    PairEntry e;
    e.utterance_id = std::string(fields[1]);
    e.noise = read_block("noise", *frames);
    e.sample = read_block("sample", *frames);
    pairs.entries.push_back(std::move(e));
    line = reader.next();
    if (line && !line->empty()) reader.fail("sample block longer than declared frame count");
    while (line && line->empty()) line = reader.next();
  }
  if (pairs.entries.size() != count) reader.fail("header count does not match entries");
  return pairs;
}

void write_pairset(const PairSet& pairs, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << pairset_text(pairs);
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

PairSet read_pairset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open pairset '" + path.string() + "'");
  return parse_pairset(std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>()),
                       path.string());
}

std::vector<std::pair<Tensor, Tensor>> generate_unconditional_pairs(const Model& model, const Tensor& noise,
                                                                    const SolverConfig& solver) {
  if (noise.rank() != 2 || noise.cols() != model.config.frame_dim) {
    throw ShapeError("generate_unconditional_pairs: noise must be [n x " + std::to_string(model.config.frame_dim) + "]");
  }
  // All points are solved together as one frame stack; frames are independent.
  const Condition cond = empty_condition(noise.rows(), model.config.cond_dim);
  SolverConfig cfg = solver;
  cfg.record_trajectory = false;
  const Tensor x1 = solve(model_field(model, cond), noise, cfg).final_state;
  std::vector<std::pair<Tensor, Tensor>> pairs;
  pairs.reserve(noise.rows());
  for (std::size_t i = 0; i < noise.rows(); ++i) {
    Tensor a = Tensor::matrix(1, noise.cols());
    Tensor b = Tensor::matrix(1, noise.cols());
    std::copy(noise.row(i).begin(), noise.row(i).end(), a.raw());
    std::copy(x1.row(i).begin(), x1.row(i).end(), b.raw());
    pairs.emplace_back(std::move(a), std::move(b));
  }
  return pairs;
}

}  // namespace rflow
