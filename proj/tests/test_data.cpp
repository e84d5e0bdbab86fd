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
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <doctest.h>

#include "rflow/data.hpp"
#include "rflow/error.hpp"
#include "rflow/model.hpp"

using namespace rflow;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

CorpusConfig config_with_seed(std::uint64_t seed) {
  CorpusConfig c;
  c.seed = seed;
  return c;
}

}  // namespace

TEST_SUITE("data") {
  TEST_CASE("generator shape and ranges") {
    const Corpus c = make_corpus(config_with_seed(7), 200);
    std::set<std::string> ids;
    for (const auto& u : c.utterances) {
      CHECK(ids.insert(u.id).second);
      CHECK(u.phone_ids.size() >= 3);
      CHECK(u.phone_ids.size() <= 8);
      REQUIRE(u.durations.size() == u.phone_ids.size());
      std::size_t T = 0;
      for (std::size_t p = 0; p < u.durations.size(); ++p) {
        const auto base = c.templates.phones[u.phone_ids[p]].base_duration;
        CHECK(u.durations[p] >= 1);
        CHECK(static_cast<long>(u.durations[p]) >= static_cast<long>(base) - 1);
        CHECK(u.durations[p] <= base + 1);
        T += u.durations[p];
      }
      CHECK(u.frames.shape() == Shape{T, 8});
      CHECK(u.speaker_id < 4);
      // Cross-module consistency with the length regulator.
      CHECK(regulate_length(Tensor(Shape{u.phone_ids.size(), 2}), u.durations).frames() == T);
    }
    for (const auto& ph : c.templates.phones) {
      for (double v : ph.mean) CHECK(std::fabs(v) <= 2.0);
      for (double v : ph.ramp) CHECK(std::fabs(v) <= 2.0);
    }
  }

  TEST_CASE("same seed gives byte-identical files") {
    const auto dir = std::filesystem::temp_directory_path() / "rflow_test_data_det";
    std::filesystem::create_directories(dir);
    write_corpus(make_corpus(config_with_seed(7), 30), dir / "a.corpus");
    write_corpus(make_corpus(config_with_seed(7), 30), dir / "b.corpus");
    CHECK(slurp(dir / "a.corpus") == slurp(dir / "b.corpus"));
    CHECK(slurp(dir / "a.corpus.templates") == slurp(dir / "b.corpus.templates"));
    write_corpus(make_corpus(config_with_seed(8), 30), dir / "c.corpus");
    CHECK(slurp(dir / "a.corpus") != slurp(dir / "c.corpus"));
    std::filesystem::remove_all(dir);
  }

  TEST_CASE("noise-free corpus equals the oracle mean") {
    CorpusConfig cfg = config_with_seed(3);
    cfg.sigma_data = 0.0;
    const Corpus c = make_corpus(cfg, 40);
    for (const auto& u : c.utterances) {
      const Tensor m = oracle_frame_mean(cfg, c.templates, u.phone_ids, u.durations, u.speaker_id);
      CHECK(bitwise_equal(m, u.frames));
    }
  }

  TEST_CASE("oracle mean is template plus ramp plus offset") {
    const CorpusConfig cfg = config_with_seed(4);
    const TemplateSet ts = make_templates(cfg);
    const std::vector<std::size_t> phones{2, 5}, durs{3, 2};
    const Tensor m = oracle_frame_mean(cfg, ts, phones, durs, 1);
    std::size_t row = 0;
    for (std::size_t p = 0; p < phones.size(); ++p) {
      for (std::size_t k = 0; k < durs[p]; ++k, ++row) {
        for (std::size_t j = 0; j < cfg.frame_dim; ++j) {
          const auto& ph = ts.phones[phones[p]];
          const double want = ph.mean[j] + (static_cast<double>(k) / static_cast<double>(durs[p])) * ph.ramp[j] +
                              ts.speaker_offsets(1, j);
          CHECK(m(row, j) == doctest::Approx(want).epsilon(1e-15));
        }
      }
    }
    // Pure function: same inputs, same result.
    CHECK(bitwise_equal(m, oracle_frame_mean(cfg, ts, phones, durs, 1)));
    // Speakers differ by their offset difference on every frame.
    const Tensor m3 = oracle_frame_mean(cfg, ts, phones, durs, 3);
    for (std::size_t r = 0; r < m.rows(); ++r) {
      for (std::size_t j = 0; j < cfg.frame_dim; ++j) {
        CHECK(m3(r, j) - m(r, j) ==
              doctest::Approx(ts.speaker_offsets(3, j) - ts.speaker_offsets(1, j)).epsilon(1e-12));
      }
    }
    CHECK_THROWS_AS(oracle_frame_mean(cfg, ts, std::vector<std::size_t>{16}, std::vector<std::size_t>{1}, 0),
                    ValidationError);
    CHECK_THROWS_AS(oracle_frame_mean(cfg, ts, phones, durs, 4), ValidationError);
  }

  TEST_CASE("per-phone frame mean converges to the template") {
    // Ramp and offset removed through the oracle, leaving only noise.
    const CorpusConfig cfg = config_with_seed(5);
    const Corpus c = make_corpus(cfg, 600);
    std::map<std::size_t, std::pair<std::vector<double>, std::size_t>> acc;
    std::size_t total = 0;
    for (const auto& u : c.utterances) {
      const Tensor m = oracle_frame_mean(cfg, c.templates, u.phone_ids, u.durations, u.speaker_id);
      std::size_t row = 0;
      for (std::size_t p = 0; p < u.phone_ids.size(); ++p) {
        auto& [sum, n] = acc[u.phone_ids[p]];
        sum.resize(cfg.frame_dim, 0.0);
        for (std::size_t k = 0; k < u.durations[p]; ++k, ++row) {
          for (std::size_t j = 0; j < cfg.frame_dim; ++j) sum[j] += u.frames(row, j) - m(row, j);
          ++n;
          ++total;
        }
      }
    }
    REQUIRE(total >= 10000);
    for (const auto& [phone, sn] : acc) {
      const double bound = 4.0 * cfg.sigma_data / std::sqrt(static_cast<double>(sn.second));
      for (double s : sn.first) CHECK(std::fabs(s / static_cast<double>(sn.second)) < bound);
    }
  }

  TEST_CASE("write read write is byte-identical") {
    const Corpus c = make_corpus(config_with_seed(6), 25, "test");
    const Corpus back = parse_corpus(corpus_text(c), templates_text(c));
    CHECK(back == c);
    CHECK(corpus_text(back) == corpus_text(c));
    CHECK(templates_text(back) == templates_text(c));
  }

  TEST_CASE("header records the generator settings") {
    CorpusConfig cfg = config_with_seed(11);
    cfg.n_speakers = 2;
    cfg.sigma_data = 0.125;
    const std::string text = corpus_text(make_corpus(cfg, 3, "test"));
    CHECK(text.find("n_speakers=2\n") != std::string::npos);
    CHECK(text.find("sigma_data=0.125\n") != std::string::npos);
    CHECK(text.find("seed=11\n") != std::string::npos);
    CHECK(text.find("split=test\n") != std::string::npos);
    CHECK(text.find("count=3\n") != std::string::npos);
  }

  TEST_CASE("empty corpus round-trips") {
    Corpus c;
    c.config = config_with_seed(2);
    c.templates = make_templates(c.config);
    c.split = "train";
    const Corpus back = parse_corpus(corpus_text(c), templates_text(c));
    CHECK(back == c);
    CHECK(back.utterances.empty());
    CHECK_THROWS_AS(make_corpus(c.config, 0), ValidationError);
  }

  TEST_CASE("frame block contradicting durations is rejected") {
    const Corpus c = make_corpus(config_with_seed(9), 3);
    std::string text = corpus_text(c);
    // Drop the last frame row of the final record.
    const auto last_nl = text.find_last_of('\n', text.size() - 2);
    const std::string short_text = text.substr(0, last_nl + 1);
    CHECK_THROWS_WITH_AS(parse_corpus(short_text, templates_text(c)), doctest::Contains("record 3"), FormatError);

    // Bump a duration so the block is one row short.
    const auto durs = text.find("durs ");
    const auto eol = text.find('\n', durs);
    std::string line = text.substr(durs, eol - durs);
    std::string bumped = line + " 1";
    auto phones = text.rfind("phones ", durs);
    std::string phone_line = text.substr(phones, durs - phones - 1);
    std::string modified = text;
    modified.replace(durs, line.size(), bumped);
    modified.replace(phones, phone_line.size(), phone_line + " 0");
    CHECK_THROWS_AS(parse_corpus(modified, templates_text(c)), FormatError);
  }

  TEST_CASE("malformed corpus files report the line") {
    const Corpus c = make_corpus(config_with_seed(10), 2);
    std::string text = corpus_text(c);
    text.replace(text.find("count=2"), 7, "count=3");
    CHECK_THROWS_AS(parse_corpus(text, templates_text(c)), FormatError);
    std::string bad_key = "bogus=1\n" + corpus_text(c);
    CHECK_THROWS_WITH_AS(parse_corpus(bad_key, templates_text(c), "x.corpus"), doctest::Contains("x.corpus:"),
                         FormatError);
    CHECK_THROWS_AS(read_corpus(std::filesystem::temp_directory_path() / "rflow_no_such.corpus"), IoError);
  }

  TEST_CASE("splits share templates but not utterances") {
    const Corpus a = make_corpus(config_with_seed(7), 5, "train");
    const Corpus b = make_corpus(config_with_seed(7), 5, "test");
    CHECK(a.templates == b.templates);
    CHECK_FALSE(a.utterances[0].frames == b.utterances[0].frames);
    // Utterance i does not depend on how many are generated.
    const Corpus longer = make_corpus(config_with_seed(7), 9, "train");
    for (std::size_t i = 0; i < 5; ++i) CHECK(longer.utterances[i] == a.utterances[i]);
  }
}
