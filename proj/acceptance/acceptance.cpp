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

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// nonzero if any selected criterion fails.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rflow/cfm.hpp"
#include "rflow/data.hpp"
#include "rflow/metrics.hpp"
#include "rflow/model.hpp"
#include "rflow/ode.hpp"
#include "rflow/rectify.hpp"
#include "rflow/sampling.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using namespace rflow;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const char* name, const Outcome& o) {
  std::printf("criterion %d %-24s %s  %s\n", id, name, o.pass ? "PASS" : "FAIL", o.detail.c_str());
  std::fflush(stdout);
  if (!o.pass) ++failures;
}

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

// ---- 1: gradients ----

Outcome gradients() {
  const auto start = Clock::now();
  const ModelConfig c = testing::small_config(8, 2);
  const Model m = testing::perturbed_model(c, 17);
  const auto checks = testing::check_joint_gradients(m, testing::text_batch(c, 18), 1e-6);
  double worst = 0.0;
  std::string worst_name;
  for (const auto& ch : checks) {
    if (ch.rel_error >= worst) {
      worst = ch.rel_error;
      worst_name = ch.name;
    }
  }
  const double secs = seconds_since(start);
  return {worst < 1e-5 && secs < 10.0,
          fmt("max rel error %.2e (%s) over %zu tensors; %.1f s", worst, worst_name.c_str(), checks.size(), secs)};
}

// ---- 2: solver orders ----

Outcome solver_orders() {
  const auto start = Clock::now();
  const VectorField f = [](const Tensor& x, double) { return x; };
  const Tensor x0 = Tensor::vector({1.0});
  const Tensor exact = Tensor::vector({std::exp(1.0)});
  const std::vector<std::size_t> steps{8, 16, 32, 64};
  const struct {
    SolverMethod method;
    double want, tol;
  } cases[] = {{SolverMethod::euler, 1.0, 0.1}, {SolverMethod::midpoint, 2.0, 0.2}, {SolverMethod::rk4, 4.0, 0.5}};
  bool ok = true;
  std::string detail;
  for (const auto& cs : cases) {
    const auto est = empirical_order(cs.method, f, x0, exact, steps);
    const double order = est.order.value_or(std::nan(""));
    ok = ok && est.order && std::fabs(order - cs.want) <= cs.tol;
    detail += fmt("%s %.3f; ", to_string(cs.method).c_str(), order);
  }
  const double secs = seconds_since(start);
  return {ok && secs < 5.0, detail + fmt("%.2f s", secs)};
}

// ---- 3: marginal field oracle ----

using PairList = std::vector<std::pair<Tensor, Tensor>>;

// Trains a width-8 estimator on `pairs` (sigma 0.05, 20k steps, cosine
// decay from 3e-3) and returns the RMS of |u - oracle| at 100 probes drawn
// from the path marginals.
double oracle_rms(const PairList& pairs, std::uint64_t seed) {
  const double sigma = 0.05;
  ModelConfig mc = unconditional_config(2, 8, 2);
  mc.sigma = sigma;
  Model m = init_model(mc, seed);
  const EndpointSampler sampler = [&](Rng& r) { return pairs[static_cast<std::size_t>(r.uniform_int(0, 3))]; };
  TrainOptions opts;
  opts.batch_size = 16;
  Rng rng = Rng(seed).split(1);
  const std::size_t chunks = 20;
  const double pi = std::acos(-1.0);
  for (std::size_t c = 0; c < chunks; ++c) {
    opts.adam.lr = 3e-3 * 0.5 * (1.0 + std::cos(pi * (static_cast<double>(c) + 0.5) / chunks));
    train_unconditional(m, sampler, 20000 / chunks, opts, rng);
  }
  Rng probe = Rng(seed).split(2);
  const Condition cond = empty_condition(1, mc.cond_dim);
  double se = 0.0;
  for (int k = 0; k < 100; ++k) {
    const auto& [a, b] = pairs[static_cast<std::size_t>(probe.uniform_int(0, 3))];
    const double t = probe.uniform();
    Tensor x = Tensor::matrix(1, 2);
    for (std::size_t j = 0; j < 2; ++j) x[j] = t * b[j] + (1.0 - t) * a[j] + sigma * probe.normal();
    se += sum_squares(oracle_vector_field(pairs, x, t, sigma) - vf_forward(m, x, cond, t));
  }
  return std::sqrt(se / 100.0);
}

Outcome oracle_field() {
  const auto start = Clock::now();
  // Four radial pairs: x0 on radius 0.5, x1 on radius 2, diagonal directions.
  // No two paths come within 14 sigma of each other.
  PairList radial;
  const double pi = std::acos(-1.0);
  for (int i = 0; i < 4; ++i) {
    const double ang = pi / 4.0 + i * pi / 2.0;
    radial.emplace_back(Tensor::from_rows({{0.5 * std::cos(ang), 0.5 * std::sin(ang)}}),
                        Tensor::from_rows({{2.0 * std::cos(ang), 2.0 * std::sin(ang)}}));
  }
  const double rms = oracle_rms(radial, 1);
  const double secs = seconds_since(start);

  // Not gated: Gaussian pair sets whose paths can pass within a few sigma
  // of each other, where the oracle switches over a width of about sigma.
  int under = 0;
  std::string values;
  for (std::uint64_t s = 0; s < 8; ++s) {
    Rng pr(1000 + s);
    PairList gauss;
    for (int i = 0; i < 4; ++i) {
      Tensor x0 = Tensor::matrix(1, 2), x1 = Tensor::matrix(1, 2);
      for (std::size_t j = 0; j < 2; ++j) x0[j] = pr.normal();
      for (std::size_t j = 0; j < 2; ++j) x1[j] = 2.0 * pr.normal();
      gauss.emplace_back(std::move(x0), std::move(x1));
    }
    const double r = oracle_rms(gauss, s + 2);
    under += r < 0.1;
    values += fmt(" %.3f", r);
  }
  std::printf("  diagnostic, random Gaussian pair sets:%s (%d of 8 under 0.1)\n", values.c_str(), under);
  return {rms < 0.1 && secs < 120.0, fmt("RMS deviation %.4f at 100 probes (radial pairs); %.1f s", rms, secs)};
}

// ---- 4, 5, 6: rectification on the 2D toy and the corpus ----

double toy_straightness(const Model& m) {
  Rng r(77);
  const Tensor noise = sample_standard_normal(r, {256, 2});
  const Condition cond = empty_condition(1, m.config.cond_dim);
  std::vector<Trajectory> trajs;
  for (std::size_t i = 0; i < 256; ++i) {
    const Tensor x = Tensor::from_rows({{noise(i, 0), noise(i, 1)}});
    trajs.push_back(*solve(model_field(m, cond), x, {SolverMethod::euler, 100, true}).trajectory);
  }
  return straightness(trajs).value;
}

struct ToyResult {
  double before = 0.0, after = 0.0, secs = 0.0;
};

ToyResult two_cluster_toy() {
  const auto start = Clock::now();
  Model m = init_model(unconditional_config(2, 64, 3), 3);
  // x0 ~ N(0, I); x1 at (+-2, 0) with spread 0.25.
  const EndpointSampler sampler = [](Rng& r) {
    Tensor x0 = Tensor::matrix(1, 2), x1 = Tensor::matrix(1, 2);
    x0[0] = r.normal();
    x0[1] = r.normal();
    const double cx = r.uniform() < 0.5 ? -2.0 : 2.0;
    x1[0] = cx + 0.25 * r.normal();
    x1[1] = 0.25 * r.normal();
    return std::make_pair(x0, x1);
  };
  TrainOptions opts;
  opts.batch_size = 256;
  opts.adam.lr = 1e-3;
  Rng rng(5);
  train_unconditional(m, sampler, 3000, opts, rng);
  ToyResult r;
  r.before = toy_straightness(m);

  Rng noise_rng(8);
  const auto pairs = generate_unconditional_pairs(m, sample_standard_normal(noise_rng, {4096, 2}),
                                                  {SolverMethod::euler, 100, false});
  const EndpointSampler rectified = [&](Rng& rr) {
    return pairs[static_cast<std::size_t>(rr.uniform_int(0, static_cast<std::int64_t>(pairs.size()) - 1))];
  };
  opts.adam.lr = 1e-4;
  train_unconditional(m, rectified, 3000, opts, rng);
  r.after = toy_straightness(m);
  r.secs = seconds_since(start);
  return r;
}

struct CorpusRun {
  EvalReport report;
  double train_secs = 0.0, rectify_secs = 0.0, sweep_secs = 0.0;
  double fidelity_secs = 0.0;
  double fidelity_rmse = 0.0;

  const EvalRow& row(const std::string& tag, std::size_t nfe) const {
    for (const auto& r : report.rows) {
      if (r.model == tag && r.nfe == nfe) return r;
    }
    throw std::runtime_error("missing report row");
  }
};

struct CorpusSetup {
  std::uint64_t data_seed = 7;
  std::uint64_t init_seed = 1;
  std::uint64_t train_seed = 11;
  std::size_t base_steps = 20000;
  std::size_t rectify_steps = 20000;
};

CorpusRun corpus_pipeline(const CorpusSetup& s) {
  CorpusConfig cc;
  cc.seed = s.data_seed;
  const Corpus train = make_corpus(cc, 500, "train");
  const Corpus test = make_corpus(cc, 256, "test");
  ModelConfig mc;
  mc.n_speakers = cc.n_speakers;
  mc.speaker_embed_dim = 4;
  Model model = init_model(mc, s.init_seed);

  CorpusRun run;
  auto start = Clock::now();
  TrainOptions opts;
  opts.adam.lr = 1e-3;
  Rng rng(s.train_seed);
  train_loop(model, train, s.base_steps, opts, rng);
  run.train_secs = seconds_since(start);
  const Model base = model;

  start = Clock::now();
  RectifyOptions ro;
  ro.steps = s.rectify_steps;
  ro.train = opts;
  ro.train.adam.lr = 1e-4;
  rectification_round(model, train, ro, rng);
  run.rectify_secs = seconds_since(start);

  start = Clock::now();
  const std::vector<TaggedModel> models{{"base", &base}, {"rectified", &model}};
  const std::vector<std::size_t> nfe{2, 100};
  run.report = nfe_sweep(models, test, nfe, SolverMethod::euler, 5);
  run.sweep_secs = seconds_since(start);

  // Conditional fidelity: rectified model, NFE 10, ground-truth durations.
  start = Clock::now();
  const Rng root(6);
  double rmse = 0.0;
  for (std::size_t i = 0; i < test.utterances.size(); ++i) {
    const Utterance& u = test.utterances[i];
    Rng r = root.split(i);
    const SampleRequest req{u.phone_ids, u.speaker_id, u.durations, {SolverMethod::euler, 10, false}};
    const Tensor frames = sample_frames(model, req, r).frames;
    rmse += cond_rmse(frames, oracle_frame_mean(test.config, test.templates, u.phone_ids, u.durations, u.speaker_id));
  }
  run.fidelity_rmse = rmse / static_cast<double>(test.utterances.size());
  run.fidelity_secs = seconds_since(start);
  return run;
}

void rectified_flow(const std::set<int>& selected) {
  const ToyResult toy = selected.count(4) ? two_cluster_toy() : ToyResult{};
  const CorpusRun run = corpus_pipeline(CorpusSetup{});
  const double pipeline = run.train_secs + run.rectify_secs + run.sweep_secs;
  std::printf("  corpus pipeline: base training %.0f s, rectification %.0f s, sweep %.0f s\n", run.train_secs,
              run.rectify_secs, run.sweep_secs);
  for (const auto& r : run.report.rows) {
    std::printf("  %-9s nfe=%-3zu energy_distance=%.5f cond_rmse=%.4f straightness=%.5f\n", r.model.c_str(), r.nfe,
                r.energy_distance, r.cond_rmse, r.straightness);
  }

  if (selected.count(4)) {
    const double corpus_before = run.row("base", 100).straightness;
    const double corpus_after = run.row("rectified", 100).straightness;
    const double reduction = 1.0 - toy.after / toy.before;
    const double secs = toy.secs + pipeline;
    const bool ok = toy.after < toy.before && reduction >= 0.5 && corpus_after < corpus_before && secs < 600.0;
    report(4, "straightening", {ok, fmt("2D toy %.4f -> %.4f (-%.0f%%); corpus %.5f -> %.5f; %.0f s", toy.before,
                                        toy.after, 100.0 * reduction, corpus_before, corpus_after, secs)});
  }
  if (selected.count(5)) {
    const double base2 = run.row("base", 2).energy_distance;
    const double rect2 = run.row("rectified", 2).energy_distance;
    const double rect100 = run.row("rectified", 100).energy_distance;
    const bool ok = rect2 < base2 && rect2 <= 2.0 * rect100 && pipeline < 600.0;
    report(5, "few-step tradeoff",
           {ok, fmt("ED@2 rectified %.5f vs base %.5f; rectified ED@100 %.5f (ratio %.2f); %.0f s", rect2, base2,
                    rect100, rect2 / rect100, pipeline)});
  }
  if (selected.count(6)) {
    const double bound = 2.5 * 0.05;
    const bool ok = run.fidelity_rmse <= bound && run.fidelity_secs < 300.0;
    report(6, "conditional fidelity", {ok, fmt("cond_rmse %.4f <= %.4f (2.5 sigma_data); %.0f s", run.fidelity_rmse,
                                               bound, run.fidelity_secs)});
  }
}

// ---- 7: CLI determinism ----

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(RFLOW_CLI_PATH) + " " + args + " >> " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// Report CSV without the wall-clock frames_per_second column.
std::string without_timing(const std::string& csv) {
  std::istringstream in(csv);
  std::ostringstream out;
  std::string line;
  while (std::getline(in, line)) out << line.substr(0, line.rfind(',')) << '\n';
  return out.str();
}

Outcome cli_determinism(const fs::path& root) {
  const auto start = Clock::now();
  fs::remove_all(root);
  for (const char* run : {"a", "b"}) {
    const fs::path dir = root / run;
    fs::create_directories(dir);
    const fs::path log = dir / "cli.log";
    const std::string d = dir.string();
    const bool ok = run_cli("gen-data --out " + d + "/data --seed 3", log) == 0 &&
                    run_cli("train --corpus " + d + "/data/train.corpus --out " + d + "/base.ckpt --steps 5000 --seed 3",
                            log) == 0 &&
                    run_cli("rectify --corpus " + d + "/data/train.corpus --checkpoint " + d + "/base.ckpt --out-dir " +
                                d + "/rect --seed 3",
                            log) == 0 &&
                    run_cli("eval --corpus " + d + "/data/test.corpus --checkpoint base=" + d +
                                "/base.ckpt --checkpoint rectified=" + d + "/rect/round1.ckpt --out " + d +
                                "/report.csv --predicted-out " + d + "/predicted.csv --seed 3",
                            log) == 0;
    if (!ok) return {false, "CLI chain failed, see " + log.string()};
  }
  const fs::path a = root / "a", b = root / "b";
  const std::pair<const char*, bool> files[] = {
      {"data/train.corpus", false}, {"data/test.corpus", false}, {"base.ckpt", false},
      {"base.ckpt.log.csv", false}, {"rect/round1.pairs", false}, {"rect/round1.ckpt", false},
      {"rect/round1.log.csv", false}, {"predicted.csv", false},   {"report.csv", true}};
  std::string mismatched;
  for (const auto& [name, timed] : files) {
    const std::string x = slurp(a / name), y = slurp(b / name);
    const bool same = !x.empty() && (timed ? without_timing(x) == without_timing(y) : x == y);
    if (!same) mismatched += std::string(" ") + name;
  }
  const double secs = seconds_since(start);
  if (!mismatched.empty()) return {false, "differs:" + mismatched};
  return {secs < 1200.0, fmt("%zu artifacts identical across two runs; %.0f s", std::size(files), secs)};
}

// ---- 8: exactness ----

Outcome exactness() {
  const auto start = Clock::now();
  std::vector<std::string> broken;

  // One Euler step is x0 + u(x0, y, 0).
  const ModelConfig c = testing::small_config();
  const Model m = testing::perturbed_model(c, 4);
  const std::vector<std::size_t> phones{1, 4, 2}, durs{2, 3, 1};
  const Condition cond = build_condition(m, phones, durs, 1);
  Rng rng(5);
  const Tensor x0 = sample_standard_normal(rng, {cond.frames(), c.frame_dim});
  const Tensor one = solve(model_field(m, cond), x0, {SolverMethod::euler, 1, false}).final_state;
  if (!bitwise_equal(one, x0 + vf_forward(m, x0, cond, 0.0))) broken.push_back("one-step identity");

  // Straight fields: bitwise on dyadic data with power-of-two N, 1e-12 otherwise.
  const Tensor a = Tensor::from_rows({{0.5, -1.25}, {2.0, 0.75}});
  const Tensor b = Tensor::from_rows({{1.5, 0.25}, {-3.0, 0.125}});
  const Tensor ra = sample_standard_normal(rng, {4, 3});
  const Tensor rb = sample_standard_normal(rng, {4, 3});
  for (auto method : {SolverMethod::euler, SolverMethod::midpoint, SolverMethod::rk4}) {
    const Tensor v = b - a, rv = rb - ra;
    const VectorField f = [&](const Tensor&, double) { return v; };
    const VectorField rf = [&](const Tensor&, double) { return rv; };
    for (std::size_t n = 1; n <= 1024; n *= 2) {
      if (!bitwise_equal(solve(f, a, {method, n, false}).final_state, b)) broken.push_back("straight field");
    }
    for (std::size_t n = 1; n <= 100; ++n) {
      const Tensor got = solve(rf, ra, {method, n, false}).final_state;
      for (std::size_t i = 0; i < got.size(); ++i) {
        if (std::fabs(got[i] - rb[i]) > 1e-12) broken.push_back("straight field");
      }
    }
  }

  // Noise-free path point on the chord.
  for (int k = 0; k < 100; ++k) {
    const double t = rng.uniform();
    const PathSample ps = sample_path_point(rng, ra, rb, t, 0.0);
    for (std::size_t i = 0; i < ra.size(); ++i) {
      if (ps.x_t[i] != t * rb[i] + (1.0 - t) * ra[i]) broken.push_back("path point");
    }
  }

  // Energy distance of a sample set with itself.
  const Tensor s = sample_standard_normal(rng, {200, 3});
  if (energy_distance(s, s) != 0.0) broken.push_back("energy distance");

  // Length regulator frame counts.
  for (int k = 0; k < 100; ++k) {
    const std::size_t len = 1 + static_cast<std::size_t>(rng.uniform_int(0, 9));
    std::vector<std::size_t> d(len);
    std::size_t total = 0;
    for (auto& v : d) total += (v = 1 + static_cast<std::size_t>(rng.uniform_int(0, 7)));
    const Condition rc = regulate_length(sample_standard_normal(rng, {len, 3}), d);
    if (rc.frames() != total || rc.y.rows() != total || rc.position.size() != total) broken.push_back("regulator");
  }

  const double secs = seconds_since(start);
  std::sort(broken.begin(), broken.end());
  broken.erase(std::unique(broken.begin(), broken.end()), broken.end());
  std::string detail = broken.empty() ? "all sanity checks exact" : "broken:";
  for (const auto& x : broken) detail += " " + x;
  return {broken.empty() && secs < 5.0, detail + fmt("; %.2f s", secs)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rflow acceptance suite"};
  std::vector<int> only;
  std::string workdir = (fs::temp_directory_path() / "rflow_acceptance").string();
  app.add_option("--only", only, "Criteria to run (default: all)")->delimiter(',')->check(CLI::Range(1, 8));
  app.add_option("--workdir", workdir, "Scratch directory for the CLI runs")->capture_default_str();
  CLI11_PARSE(app, argc, argv);
  std::set<int> selected(only.begin(), only.end());
  if (selected.empty()) selected = {1, 2, 3, 4, 5, 6, 7, 8};

  if (selected.count(1)) report(1, "gradient correctness", gradients());
  if (selected.count(2)) report(2, "solver orders", solver_orders());
  if (selected.count(3)) report(3, "marginal field oracle", oracle_field());
  if (selected.count(4) || selected.count(5) || selected.count(6)) rectified_flow(selected);
  if (selected.count(7)) report(7, "pipeline determinism", cli_determinism(workdir));
  if (selected.count(8)) report(8, "exactness sanities", exactness());
  return failures == 0 ? 0 : 1;
}
