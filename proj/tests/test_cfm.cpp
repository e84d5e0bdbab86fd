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
#include <fstream>
#include <sstream>

#include <doctest.h>

#include "rflow/cfm.hpp"
#include "rflow/error.hpp"
#include "rflow/sampling.hpp"
#include "support.hpp"

using namespace rflow;
using rflow::testing::perturbed_model;
using rflow::testing::small_config;

namespace {

using PairList = std::vector<std::pair<Tensor, Tensor>>;

// Direct normalized weights, no log-sum-exp.
Tensor naive_oracle(const PairList& pairs, const Tensor& x, double t, double sigma) {
  std::vector<double> w;
  double norm = 0.0;
  for (const auto& [x0, x1] : pairs) {
    double d2 = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
      const double mu = t * x1[k] + (1.0 - t) * x0[k];
      d2 += (x[k] - mu) * (x[k] - mu);
    }
    w.push_back(std::exp(-d2 / (2.0 * sigma * sigma)));
    norm += w.back();
  }
  Tensor out(x.shape());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    for (std::size_t k = 0; k < x.size(); ++k) out[k] += (w[i] / norm) * (pairs[i].second[k] - pairs[i].first[k]);
  }
  return out;
}

PairList random_pairs(Rng& rng, std::size_t n, std::size_t d) {
  PairList pairs;
  for (std::size_t i = 0; i < n; ++i) {
    Tensor x0 = sample_standard_normal(rng, {1, d});
    Tensor x1 = sample_standard_normal(rng, {1, d});
    pairs.emplace_back(std::move(x0), std::move(x1));
  }
  return pairs;
}

Corpus small_corpus(std::size_t n, std::uint64_t seed) {
  CorpusConfig cfg;
  cfg.seed = seed;
  return make_corpus(cfg, n);
}

ModelConfig corpus_model_config(const Corpus& c, std::size_t hidden) {
  ModelConfig m;
  m.vocab_size = c.config.vocab_size;
  m.frame_dim = c.config.frame_dim;
  m.n_speakers = c.config.n_speakers;
  m.speaker_embed_dim = 4;
  m.embed_dim = 8;
  m.cond_dim = 8;
  m.hidden_dim = hidden;
  m.n_hidden_layers = 2;
  m.time_embed_dim = 8;
  return m;
}

double mean_fm(const std::vector<TrainStats>& h, std::size_t from, std::size_t to) {
  double s = 0.0;
  for (std::size_t i = from; i < to; ++i) s += h[i].loss_fm;
  return s / static_cast<double>(to - from);
}

}  // namespace

TEST_SUITE("cfm") {
  TEST_CASE("path point examples") {
    Rng rng(1);
    const PathSample mid = sample_path_point(rng, Tensor::from_rows({{0.0}}), Tensor::from_rows({{2.0}}), 0.5, 0.0);
    CHECK(mid.x_t[0] == 1.0);
    CHECK(mid.target[0] == 2.0);
    CHECK(mid.t == 0.5);
    const Tensor x0 = sample_standard_normal(rng, {4, 3});
    const Tensor x1 = sample_standard_normal(rng, {4, 3});
    CHECK(bitwise_equal(sample_path_point(rng, x0, x1, 1.0, 0.0).x_t, x1));
    CHECK(bitwise_equal(sample_path_point(rng, x0, x1, 0.0, 0.0).x_t, x0));
    CHECK_THROWS_AS(sample_path_point(rng, x0, Tensor::matrix(4, 2), 0.5, 0.0), ShapeError);
  }

  TEST_CASE("noise-free path point lies on the chord") {
    Rng rng(2);
    const Tensor x0 = sample_standard_normal(rng, {6, 4});
    const Tensor x1 = sample_standard_normal(rng, {6, 4});
    for (int i = 0; i < 50; ++i) {
      const double t = rng.uniform();
      const PathSample ps = sample_path_point(rng, x0, x1, t, 0.0);
      for (std::size_t k = 0; k < x0.size(); ++k) {
        CHECK(ps.x_t[k] == t * x1[k] + (1.0 - t) * x0[k]);
        CHECK(ps.target[k] == x1[k] - x0[k]);
      }
    }
  }

  TEST_CASE("path point mean and spread over 1e5 draws") {
    Rng rng(3);
    const Tensor x0 = Tensor::from_rows({{-1.0}});
    const Tensor x1 = Tensor::from_rows({{3.0}});
    const double t = 0.3, sigma = 0.1, centre = t * 3.0 + (1.0 - t) * -1.0;
    const int n = 100000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
      const double dev = sample_path_point(rng, x0, x1, t, sigma).x_t[0] - centre;
      sum += dev;
      sum2 += dev * dev;
    }
    const double mean = sum / n;
    CHECK(std::fabs(mean) < 4.0 * sigma / std::sqrt(static_cast<double>(n)));
    const double sd = std::sqrt(sum2 / n - mean * mean);
    CHECK(std::fabs(sd - sigma) < 0.05 * sigma);
  }

  TEST_CASE("oracle field examples") {
    Rng rng(4);
    const PairList one = random_pairs(rng, 1, 3);
    for (int i = 0; i < 5; ++i) {
      const Tensor x = sample_standard_normal(rng, {1, 3});
      const Tensor u = oracle_vector_field(one, x, rng.uniform(), 0.05);
      for (std::size_t k = 0; k < 3; ++k) CHECK(u[k] == doctest::Approx(one[0].second[k] - one[0].first[k]).epsilon(1e-15));
    }
    // Mirror-image pairs about the origin; x at the origin is equidistant.
    PairList two;
    two.emplace_back(Tensor::from_rows({{1.0, 0.0}}), Tensor::from_rows({{2.0, 1.0}}));
    two.emplace_back(Tensor::from_rows({{-1.0, 0.0}}), Tensor::from_rows({{-2.0, -1.0}}));
    const Tensor u = oracle_vector_field(two, Tensor::from_rows({{0.0, 0.0}}), 0.4, 0.3);
    CHECK(u[0] == doctest::Approx(0.5 * (1.0 + -1.0)));
    CHECK(u[1] == doctest::Approx(0.5 * (1.0 + -1.0)));
    CHECK_THROWS_AS(oracle_vector_field(two, Tensor::from_rows({{0.0, 0.0}}), 0.4, 0.0), ValidationError);
    CHECK_THROWS_AS(oracle_vector_field(PairList{}, Tensor::from_rows({{0.0, 0.0}}), 0.4, 0.1), ValidationError);
  }

  TEST_CASE("oracle field matches naive summation on 4 pairs") {
    Rng rng(5);
    const PairList pairs = random_pairs(rng, 4, 3);
    for (int i = 0; i < 200; ++i) {
      const double t = rng.uniform();
      const Tensor x = sample_standard_normal(rng, {1, 3});
      const double sigma = 0.5 + rng.uniform();
      const Tensor got = oracle_vector_field(pairs, x, t, sigma);
      const Tensor want = naive_oracle(pairs, x, t, sigma);
      for (std::size_t k = 0; k < 3; ++k) CHECK(std::fabs(got[k] - want[k]) < 1e-10);
    }
  }

  TEST_CASE("oracle field is a local minimizer of the posterior loss") {
    Rng rng(6);
    const PairList pairs = random_pairs(rng, 2, 2);
    const double sigma = 0.4;
    auto posterior_loss = [&](const Tensor& x, double t, const Tensor& u) {
      std::vector<double> w;
      double norm = 0.0;
      for (const auto& [x0, x1] : pairs) {
        double d2 = 0.0;
        for (std::size_t k = 0; k < 2; ++k) {
          const double r = x[k] - (t * x1[k] + (1.0 - t) * x0[k]);
          d2 += r * r;
        }
        w.push_back(std::exp(-d2 / (2 * sigma * sigma)));
        norm += w.back();
      }
      double loss = 0.0;
      for (std::size_t i = 0; i < pairs.size(); ++i) {
        for (std::size_t k = 0; k < 2; ++k) {
          const double r = u[k] - (pairs[i].second[k] - pairs[i].first[k]);
          loss += w[i] / norm * r * r;
        }
      }
      return loss;
    };
    for (double t : {0.1, 0.5, 0.9}) {
      for (double gx : {-1.0, 0.0, 1.0}) {
        for (double gy : {-1.0, 0.0, 1.0}) {
          const Tensor x = Tensor::from_rows({{gx, gy}});
          const Tensor u = oracle_vector_field(pairs, x, t, sigma);
          const double best = posterior_loss(x, t, u);
          for (std::size_t k = 0; k < 2; ++k) {
            for (double delta : {-0.1, -0.01, 0.01, 0.1}) {
              Tensor v = u;
              v[k] += delta;
              CHECK(posterior_loss(x, t, v) > best);
            }
          }
        }
      }
    }
  }

  TEST_CASE("exact field and durations give zero loss and zero gradient") {
    ModelConfig c = small_config();
    Model m = perturbed_model(c, 12);
    for (auto& spec : param_inventory(c)) {
      if (spec.name.rfind("duration.", 0) == 0) m.weight(spec.name).fill(0.0);
    }
    Rng rng(13);
    std::vector<TextExample> batch(1);
    auto& ex = batch[0];
    ex.phone_ids = {1, 3, 0};
    ex.durations = {1, 1, 1};  // what zeroed duration weights predict
    ex.speaker_id = 1;
    ex.t = 0.35;
    ex.x_t = sample_standard_normal(rng, {3, c.frame_dim});
    const Condition cond = build_condition(m, ex.phone_ids, ex.durations, ex.speaker_id);
    ex.target = vf_forward(m, ex.x_t, cond, ex.t);
    const JointLoss j = joint_loss_and_grad(m, batch);
    CHECK(j.loss_fm == 0.0);
    CHECK(j.loss_dur == 0.0);
    for (const auto& g : j.grads) {
      for (double v : g.data()) CHECK(v == 0.0);
    }
  }

  TEST_CASE("train step determinism and stats") {
    const Corpus corpus = small_corpus(6, 7);
    const ModelConfig c = corpus_model_config(corpus, 16);
    TrainOptions opts;
    opts.batch_size = 3;
    auto run = [&] {
      Model m = init_model(c, 1);
      Rng rng(9);
      auto h = train_loop(m, corpus, 20, opts, rng);
      return std::make_pair(h, checkpoint_bytes(m));
    };
    const auto [h1, ck1] = run();
    const auto [h2, ck2] = run();
    REQUIRE(h1.size() == 20);
    for (std::size_t i = 0; i < h1.size(); ++i) {
      CHECK(h1[i].step == i + 1);
      CHECK(h1[i].loss_fm == h2[i].loss_fm);
      CHECK(h1[i].loss_dur == h2[i].loss_dur);
      CHECK(h1[i].total() == h1[i].loss_fm + h1[i].loss_dur);
    }
    CHECK(ck1 == ck2);
  }

  TEST_CASE("train step uses the noise it reports") {
    const Corpus corpus = small_corpus(2, 8);
    const ModelConfig c = corpus_model_config(corpus, 8);
    Model m = init_model(c, 2);
    Rng rng(3);
    TrainOptions opts;
    std::size_t calls = 0;
    opts.on_path_sample = [&](const Tensor& x0, const PathSample& ps) {
      ++calls;
      CHECK(x0.shape() == corpus.utterances[0].frames.shape());
      for (std::size_t k = 0; k < x0.size(); ++k) {
        CHECK(ps.target[k] == corpus.utterances[0].frames[k] - x0[k]);
      }
      CHECK(ps.t >= 0.0);
      CHECK(ps.t <= 1.0);
    };
    train_step(m, rng, corpus.utterances[0], opts);
    CHECK(calls == 1);
  }

  TEST_CASE("zero steps leave the model unchanged") {
    const Corpus corpus = small_corpus(4, 9);
    const Model m0 = init_model(corpus_model_config(corpus, 8), 4);
    Model m = m0;
    Rng rng(1);
    std::size_t sink_calls = 0;
    const auto h = train_loop(m, corpus, 0, TrainOptions{}, rng, [&](const TrainStats&) { ++sink_calls; });
    CHECK(h.empty());
    CHECK(sink_calls == 0);
    CHECK(checkpoint_bytes(m) == checkpoint_bytes(m0));
    Corpus empty = corpus;
    empty.utterances.clear();
    CHECK_THROWS_AS(train_loop(m, empty, 1, TrainOptions{}, rng), ValidationError);
  }

  TEST_CASE("fixed-t loss drops on a single utterance") {
    const Corpus corpus = small_corpus(1, 10);
    ModelConfig c = corpus_model_config(corpus, 32);
    c.sigma = 0.0;
    Model m = init_model(c, 5);
    TrainOptions opts;
    opts.fixed_t = 0.5;
    Rng rng(6);
    const auto h = train_loop(m, corpus, 2000, opts, rng);
    REQUIRE(h.size() == 2000);
    CHECK(h.back().loss_fm < h[9].loss_fm);
    CHECK(mean_fm(h, 1900, 2000) < mean_fm(h, 0, 10));
  }

  TEST_CASE("loss trends down on the default corpus") {
    CorpusConfig cc;
    const Corpus corpus = make_corpus(cc, 100);
    ModelConfig c;
    c.n_speakers = cc.n_speakers;
    c.speaker_embed_dim = 4;
    Model m = init_model(c, 0);
    Rng rng(1);
    const std::size_t n = 200;
    const auto h = train_loop(m, corpus, n, TrainOptions{}, rng);
    CHECK(mean_fm(h, n - n / 10, n) < mean_fm(h, 0, n / 10));
  }

  TEST_CASE("training log csv") {
    const auto path = std::filesystem::temp_directory_path() / "rflow_test_train_log.csv";
    {
      TrainLogWriter log(path);
      log(TrainStats{1, 0.5, 0.25});
      log(TrainStats{2, 0.125, 1.0});
    }
    std::ifstream in(path);
    std::ostringstream os;
    os << in.rdbuf();
    CHECK(os.str() == "step,loss_fm,loss_dur,loss_total\n1,0.5,0.25,0.75\n2,0.125,1,1.125\n");
    std::filesystem::remove(path);
    CHECK_THROWS_AS(TrainLogWriter("/nonexistent_dir/x.csv"), IoError);
  }
}
