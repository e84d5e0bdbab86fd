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

#include <cmath>
#include <functional>
#include <limits>
#include <map>

#include <doctest.h>

#include "rflow/error.hpp"
#include "rflow/rectify.hpp"
#include "rflow/sampling.hpp"

using namespace rflow;

namespace {

struct Fixture {
  Corpus corpus;
  Model model;

  explicit Fixture(std::size_t n = 6) {
    CorpusConfig cc;
    cc.seed = 21;
    corpus = make_corpus(cc, n);
    ModelConfig c;
    c.n_speakers = cc.n_speakers;
    c.speaker_embed_dim = 2;
    c.embed_dim = 8;
    c.cond_dim = 8;
    c.hidden_dim = 16;
    c.n_hidden_layers = 2;
    c.time_embed_dim = 8;
    model = init_model(c, 5);
    Rng rng(6);
    TrainOptions opts;
    opts.batch_size = 3;
    train_loop(model, corpus, 30, opts, rng);
  }
};

const SolverConfig kPairSolver{SolverMethod::euler, 10, false};

RectifyOptions quick_options() {
  RectifyOptions o;
  o.solver = kPairSolver;
  o.steps = 15;
  o.train.batch_size = 3;
  o.train.adam.lr = 1e-4;
  return o;
}

}  // namespace

TEST_SUITE("rectify") {
  TEST_CASE("pairs cover each utterance once with ground-truth shapes") {
    const Fixture f;
    const std::uint64_t calls_before = predict_durations_call_count();
    const PairSet ps = generate_pairs(f.model, f.corpus, kPairSolver, Rng(1));
    CHECK(predict_durations_call_count() == calls_before);
    CHECK(ps.round == 1);
    CHECK(ps.excluded == 0);
    CHECK(ps.frame_dim == 8);
    CHECK(ps.solver == kPairSolver);
    REQUIRE(ps.entries.size() == f.corpus.utterances.size());
    std::map<std::string, int> seen;
    for (const auto& e : ps.entries) {
      ++seen[e.utterance_id];
      const Utterance& u = f.corpus.find(e.utterance_id);
      CHECK(e.noise.shape() == u.frames.shape());
      CHECK(e.sample.shape() == u.frames.shape());
    }
    for (const auto& u : f.corpus.utterances) CHECK(seen[u.id] == 1);
    CHECK(&ps.find(f.corpus.utterances[2].id) == &ps.entries[2]);
    CHECK_THROWS_AS(ps.find("nope"), ValidationError);
  }

  TEST_CASE("pairs are the solved noise") {
    const Fixture f;
    const PairSet ps = generate_pairs(f.model, f.corpus, kPairSolver, Rng(2));
    const Utterance& u = f.corpus.utterances[1];
    const Condition cond = build_condition(f.model, u.phone_ids, u.durations, u.speaker_id);
    const Tensor solved = solve(model_field(f.model, cond), ps.entries[1].noise, kPairSolver).final_state;
    CHECK(bitwise_equal(solved, ps.entries[1].sample));
  }

  TEST_CASE("same seed gives the same pairset text") {
    const Fixture f;
    const std::string a = pairset_text(generate_pairs(f.model, f.corpus, kPairSolver, Rng(3)));
    const std::string b = pairset_text(generate_pairs(f.model, f.corpus, kPairSolver, Rng(3)));
    CHECK(a == b);
    CHECK(a != pairset_text(generate_pairs(f.model, f.corpus, kPairSolver, Rng(4))));
  }

  TEST_CASE("pairset round trip") {
    const Fixture f(3);
    PairSet ps = generate_pairs(f.model, f.corpus, {SolverMethod::midpoint, 7, false}, Rng(5));
    ps.excluded = 2;
    const std::string text = pairset_text(ps);
    CHECK(text.rfind("round=1\nsolver=midpoint\nnfe=7\nd=8\ncount=3\nexcluded=2\n", 0) == 0);
    const PairSet back = parse_pairset(text);
    CHECK(back == ps);
    CHECK(pairset_text(back) == text);
    const auto path = std::filesystem::temp_directory_path() / "rflow_test.pairs";
    write_pairset(ps, path);
    CHECK(read_pairset(path) == ps);
    std::filesystem::remove(path);
    CHECK_THROWS_AS(read_pairset(path), IoError);
    std::string bad = text;
    bad.replace(bad.find("count=3"), 7, "count=4");
    CHECK_THROWS_AS(parse_pairset(bad), FormatError);
    CHECK_THROWS_AS(parse_pairset("round=1\n"), FormatError);
  }

  TEST_CASE("rectified step keeps the stored pairing") {
    const Fixture f(3);
    const PairSet ps = generate_pairs(f.model, f.corpus, kPairSolver, Rng(7));
    Model m = f.model;
    TrainOptions opts;
    std::size_t calls = 0;
    const PairEntry& e = ps.entries[0];
    opts.on_path_sample = [&](const Tensor& x0, const PathSample& p) {
      ++calls;
      CHECK(bitwise_equal(x0, e.noise));
      CHECK(bitwise_equal(p.target, e.sample - e.noise));
    };
    Rng rng(8);
    const TrainStats s = rectified_train_step(m, rng, f.corpus.utterances[0], e, opts);
    CHECK(calls == 1);
    CHECK(std::isfinite(s.total()));
    CHECK(s.loss_dur > 0.0);
    CHECK_THROWS_AS(rectified_train_step(m, rng, f.corpus.utterances[1], e, opts), ValidationError);
  }

  TEST_CASE("rectified steps are deterministic") {
    const Fixture f(3);
    const PairSet ps = generate_pairs(f.model, f.corpus, kPairSolver, Rng(9));
    auto run = [&] {
      Model m = f.model;
      Rng rng(10);
      std::vector<double> out;
      for (std::size_t i = 0; i < 3; ++i) {
        out.push_back(rectified_train_step(m, rng, f.corpus.utterances[i], ps.entries[i], TrainOptions{}).total());
      }
      out.push_back(static_cast<double>(std::hash<std::string>{}(checkpoint_bytes(m))));
      return out;
    };
    CHECK(run() == run());
  }

  TEST_CASE("rounds increment and reproduce") {
    const Fixture f(4);
    auto two_rounds = [&] {
      Model m = f.model;
      Rng rng(11);
      std::vector<std::string> out;
      for (int r = 0; r < 2; ++r) {
        const RoundResult res = rectification_round(m, f.corpus, quick_options(), rng);
        CHECK(res.pairs.round == static_cast<std::uint32_t>(r + 1));
        CHECK(m.round == static_cast<std::uint32_t>(r + 1));
        CHECK(res.history.size() == 15);
        out.push_back(pairset_text(res.pairs));
      }
      out.push_back(checkpoint_bytes(m));
      return out;
    };
    const auto a = two_rounds();
    CHECK(a == two_rounds());
    CHECK(a[0] != a[1]);
    // Checkpoints carry the round.
    CHECK(parse_checkpoint(a[2]).round == 2);
  }

  TEST_CASE("reinitialize restarts from fresh weights") {
    const Fixture f(3);
    RectifyOptions o = quick_options();
    o.steps = 0;
    o.reinitialize = true;
    o.init_seed = 77;
    Model m = f.model;
    Rng rng(12);
    rectification_round(m, f.corpus, o, rng);
    Model fresh = init_model(f.model.config, 77);
    fresh.round = 1;
    CHECK(checkpoint_bytes(m) == checkpoint_bytes(fresh));
    o.reinitialize = false;
    Model warm = f.model;
    rectification_round(warm, f.corpus, o, rng);
    Model expect = f.model;
    expect.round = 1;
    CHECK(checkpoint_bytes(warm) == checkpoint_bytes(expect));
  }

  TEST_CASE("widespread divergence is a hard error") {
    Fixture f(3);
    f.model.weight("field.out.bias").fill(std::numeric_limits<double>::infinity());
    CHECK_THROWS_AS(generate_pairs(f.model, f.corpus, kPairSolver, Rng(1)), DivergenceError);
  }
}
