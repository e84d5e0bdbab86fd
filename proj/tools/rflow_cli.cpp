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

// rflow command line: gen-data, train, rectify, sample, eval.
//
// Exit status 0 on success, 2 for usage and input errors, 3 for numerical
// and runtime failures. Errors are one stderr line:
//   rflow: error kind=<kind> [step=<n>] msg=<text>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rflow/rflow.h"

namespace fs = std::filesystem;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitRuntime = 3;

/// Thrown to leave a command with a given exit status and summary line.
struct Failure {
  int code;
  std::string kind;
  std::string message;
  size_t step = 0;
};

[[noreturn]] void usage_error(const std::string& message) { throw Failure{kExitUsage, "usage", message}; }

void check(rflow_status status) {
  if (status == RFLOW_OK) return;
  const bool runtime = status == RFLOW_ERR_DIVERGENCE || status == RFLOW_ERR_INTERNAL;
  throw Failure{runtime ? kExitRuntime : kExitUsage, rflow_status_name(status), rflow_last_error(),
                rflow_last_error_step()};
}

template <class T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using CorpusPtr = std::unique_ptr<rflow_corpus, Deleter<rflow_corpus, rflow_corpus_free>>;
using ModelPtr = std::unique_ptr<rflow_model, Deleter<rflow_model, rflow_model_free>>;
using PairsPtr = std::unique_ptr<rflow_pairset, Deleter<rflow_pairset, rflow_pairset_free>>;
using FramesPtr = std::unique_ptr<rflow_frames, Deleter<rflow_frames, rflow_frames_free>>;

CorpusPtr read_corpus(const std::string& path) {
  if (path.empty()) usage_error("--corpus is required");
  rflow_corpus* c = nullptr;
  check(rflow_corpus_read(path.c_str(), &c));
  return CorpusPtr(c);
}

ModelPtr load_model(const std::string& path) {
  rflow_model* m = nullptr;
  check(rflow_model_load(path.c_str(), &m));
  return ModelPtr(m);
}

rflow_solver parse_solver(const std::string& name) {
  rflow_solver s = RFLOW_SOLVER_EULER;
  check(rflow_solver_parse(name.c_str(), &s));
  return s;
}

void ensure_parent(const fs::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
}

// ---- config files ----------------------------------------------------

struct ConfigEntry {
  std::string key;
  std::string value;
  int line = 0;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

/// Flat `key=value` lines; `#` starts a comment.
std::vector<ConfigEntry> read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) usage_error("cannot open config '" + path + "'");
  std::vector<ConfigEntry> entries;
  std::set<std::string> seen;
  std::string raw;
  int n = 0;
  while (std::getline(in, raw)) {
    ++n;
    std::string line = raw.substr(0, raw.find('#'));
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = path + ":" + std::to_string(n) + ": ";
    if (eq == std::string::npos) usage_error(where + "expected key=value");
    ConfigEntry e{trim(line.substr(0, eq)), trim(line.substr(eq + 1)), n};
    if (e.key.empty()) usage_error(where + "empty key");
    if (e.value.empty()) usage_error(where + "empty value for '" + e.key + "'");
    for (auto& ch : e.key) {
      if (ch == '-') ch = '_';
    }
    if (!seen.insert(e.key).second) usage_error(where + "duplicate key '" + e.key + "'");
    entries.push_back(std::move(e));
  }
  return entries;
}

std::string option_key(const std::string& long_name) {
  std::string k = long_name;
  for (auto& ch : k) {
    if (ch == '-') ch = '_';
  }
  return k;
}

// ---- commands ------------------------------------------------------------

struct GenDataArgs {
  std::string out;
  std::uint64_t seed = 0;
  size_t n_utts = 500;
  size_t n_test = 100;
  size_t vocab_size = 16;
  size_t frame_dim = 8;
  size_t n_speakers = 4;
  double sigma_data = 0.05;
  double offset_scale = 0.5;
};

struct TrainArgs {
  std::string corpus;
  std::string out;
  std::string log;
  std::uint64_t seed = 0;
  size_t steps = 5000;
  size_t batch = 16;
  double lr = 1e-3;
  size_t embed_dim = 16;
  size_t cond_dim = 16;
  size_t hidden_dim = 128;
  size_t layers = 3;
  size_t time_embed_dim = 32;
  std::optional<size_t> speaker_embed_dim;
  double sigma = 1e-4;
};

struct RectifyArgs {
  std::string corpus;
  std::string checkpoint;
  std::string out_dir;
  std::uint64_t seed = 0;
  size_t rounds = 1;
  size_t steps = 5000;
  size_t batch = 16;
  double lr = 1e-4;
  std::string solver = "euler";
  size_t nfe = 100;
  bool reinit = false;
};

struct SampleArgs {
  std::string checkpoint;
  std::string phones;
  std::string utt;
  std::string corpus;
  size_t speaker = 0;
  bool gt_durations = false;
  std::string solver = "euler";
  size_t nfe = 10;
  std::uint64_t seed = 0;
  std::string out;
  std::string trajectory;
};

struct EvalArgs {
  std::string corpus;
  std::vector<std::string> checkpoints;
  std::vector<size_t> nfe{1, 2, 5, 10, 100};
  std::string solver = "euler";
  std::uint64_t seed = 0;
  std::string out;
  std::string predicted_out;
};

int cmd_gen_data(const GenDataArgs& a) {
  if (a.out.empty()) usage_error("--out is required");
  if (a.n_utts == 0) usage_error("--n-utts must be at least 1");
  if (a.n_test == 0) usage_error("--n-test must be at least 1");
  rflow_corpus_config cfg{a.vocab_size, a.frame_dim, a.n_speakers, a.sigma_data, a.offset_scale, a.seed};
  std::error_code ec;
  fs::create_directories(a.out, ec);
  const fs::path dir(a.out);
  size_t frames[2] = {0, 0};
  const std::pair<const char*, size_t> splits[2] = {{"train", a.n_utts}, {"test", a.n_test}};
  for (int i = 0; i < 2; ++i) {
    rflow_corpus* raw = nullptr;
    check(rflow_corpus_generate(&cfg, splits[i].second, splits[i].first, &raw));
    CorpusPtr c(raw);
    check(rflow_corpus_write(c.get(), (dir / (std::string(splits[i].first) + ".corpus")).string().c_str()));
    frames[i] = rflow_corpus_frame_count(c.get());
  }
  std::printf("gen-data: %s/train.corpus utterances=%zu frames=%zu; %s/test.corpus utterances=%zu frames=%zu\n",
              a.out.c_str(), a.n_utts, frames[0], a.out.c_str(), a.n_test, frames[1]);
  return 0;
}

int cmd_train(const TrainArgs& a) {
  if (a.out.empty()) usage_error("--out is required");
  auto corpus = read_corpus(a.corpus);
  rflow_corpus_config cc;
  check(rflow_corpus_get_config(corpus.get(), &cc));
  rflow_model_config mc;
  rflow_model_config_default(&mc);
  mc.vocab_size = cc.vocab_size;
  mc.frame_dim = cc.frame_dim;
  mc.n_speakers = cc.n_speakers;
  mc.embed_dim = a.embed_dim;
  mc.cond_dim = a.cond_dim;
  mc.hidden_dim = a.hidden_dim;
  mc.n_hidden_layers = a.layers;
  mc.time_embed_dim = a.time_embed_dim;
  mc.speaker_embed_dim = a.speaker_embed_dim.value_or(cc.n_speakers > 1 ? 4 : 0);
  mc.sigma = a.sigma;
  rflow_model* raw = nullptr;
  check(rflow_model_create(&mc, a.seed, &raw));
  ModelPtr model(raw);

  const std::string log = a.log.empty() ? a.out + ".log.csv" : a.log;
  ensure_parent(a.out);
  ensure_parent(log);
  rflow_train_options opts{a.steps, a.batch, a.lr, a.seed, log.c_str()};
  check(rflow_train(model.get(), corpus.get(), &opts));
  check(rflow_model_save(model.get(), a.out.c_str()));
  std::printf("train: steps=%zu params=%zu checkpoint=%s log=%s\n", a.steps, rflow_model_param_count(model.get()),
              a.out.c_str(), log.c_str());
  return 0;
}

int cmd_rectify(const RectifyArgs& a) {
  if (a.checkpoint.empty()) usage_error("--checkpoint is required");
  if (a.out_dir.empty()) usage_error("--out-dir is required");
  if (a.rounds == 0) usage_error("--rounds must be at least 1");
  auto corpus = read_corpus(a.corpus);
  auto model = load_model(a.checkpoint);
  std::error_code ec;
  fs::create_directories(a.out_dir, ec);
  const fs::path dir(a.out_dir);
  for (size_t r = 0; r < a.rounds; ++r) {
    const std::string stem = "round" + std::to_string(rflow_model_round(model.get()) + 1);
    const std::string log = (dir / (stem + ".log.csv")).string();
    rflow_rectify_options opts{parse_solver(a.solver), a.nfe, a.steps, a.batch, a.lr, a.seed,
                               a.reinit ? 1 : 0,       log.c_str()};
    rflow_pairset* raw = nullptr;
    check(rflow_rectify_round(model.get(), corpus.get(), &opts, &raw));
    PairsPtr pairs(raw);
    const std::string pairs_path = (dir / (stem + ".pairs")).string();
    const std::string ckpt_path = (dir / (stem + ".ckpt")).string();
    check(rflow_pairset_write(pairs.get(), pairs_path.c_str()));
    check(rflow_model_save(model.get(), ckpt_path.c_str()));
    std::printf("rectify: round=%u pairs=%zu excluded=%zu pairset=%s checkpoint=%s\n", rflow_model_round(model.get()),
                rflow_pairset_size(pairs.get()), rflow_pairset_excluded(pairs.get()), pairs_path.c_str(),
                ckpt_path.c_str());
  }
  return 0;
}

std::vector<size_t> parse_phone_list(const std::string& text) {
  std::istringstream is(text);
  std::vector<size_t> ids;
  std::string tok;
  while (is >> tok) {
    size_t pos = 0;
    unsigned long long v = 0;
    try {
      if (tok.find_first_not_of("0123456789") != std::string::npos) throw std::invalid_argument(tok);
      v = std::stoull(tok, &pos);
    } catch (const std::exception&) {
      usage_error("--phones: '" + tok + "' is not a phone id");
    }
    ids.push_back(static_cast<size_t>(v));
  }
  if (ids.empty()) usage_error("--phones: no phone ids given");
  return ids;
}

int cmd_sample(const SampleArgs& a) {
  if (a.checkpoint.empty()) usage_error("--checkpoint is required");
  if (a.out.empty()) usage_error("--out is required");
  if (a.phones.empty() == a.utt.empty()) usage_error("give exactly one of --phones or --utt");
  if (a.gt_durations && a.utt.empty()) usage_error("--gt-durations needs --utt");
  auto model = load_model(a.checkpoint);
  rflow_sample_options opts{parse_solver(a.solver), a.nfe, a.seed,
                            a.trajectory.empty() ? nullptr : a.trajectory.c_str()};
  if (!a.trajectory.empty()) ensure_parent(a.trajectory);
  rflow_frames* raw = nullptr;
  if (!a.utt.empty()) {
    auto corpus = read_corpus(a.corpus);
    check(rflow_sample_utterance(model.get(), corpus.get(), a.utt.c_str(), a.gt_durations ? 1 : 0, &opts, &raw));
  } else {
    const auto ids = parse_phone_list(a.phones);
    check(rflow_sample_phones(model.get(), ids.data(), ids.size(), a.speaker, nullptr, &opts, &raw));
  }
  FramesPtr frames(raw);
  ensure_parent(a.out);
  check(rflow_frames_write(frames.get(), a.out.c_str()));
  std::string durs;
  for (size_t i = 0; i < rflow_frames_duration_count(frames.get()); ++i) {
    durs += (i ? "," : "") + std::to_string(rflow_frames_durations(frames.get())[i]);
  }
  std::printf("sample: frames=%zu durations=%s solver=%s nfe=%zu out=%s\n", rflow_frames_rows(frames.get()),
              durs.c_str(), a.solver.c_str(), a.nfe, a.out.c_str());
  return 0;
}

int cmd_eval(const EvalArgs& a) {
  if (a.checkpoints.empty()) usage_error("at least one --checkpoint is required");
  if (a.out.empty()) usage_error("--out is required");
  auto corpus = read_corpus(a.corpus);
  std::vector<ModelPtr> owned;
  std::vector<const rflow_model*> models;
  std::vector<std::string> tag_storage;
  for (const auto& spec : a.checkpoints) {
    // `tag=path` or a bare path tagged by its file stem.
    const auto eq = spec.find('=');
    const std::string path = eq == std::string::npos ? spec : spec.substr(eq + 1);
    tag_storage.push_back(eq == std::string::npos ? fs::path(path).stem().string() : spec.substr(0, eq));
    owned.push_back(load_model(path));
    models.push_back(owned.back().get());
  }
  std::vector<const char*> tags;
  for (const auto& t : tag_storage) tags.push_back(t.c_str());
  ensure_parent(a.out);
  rflow_eval_options opts{parse_solver(a.solver), a.nfe.data(), a.nfe.size(), a.seed, a.out.c_str(),
                          a.predicted_out.empty() ? nullptr : a.predicted_out.c_str()};
  check(rflow_eval(models.data(), tags.data(), models.size(), corpus.get(), &opts));
  rflow_corpus_config cc;
  check(rflow_corpus_get_config(corpus.get(), &cc));
  std::printf("eval: models=%zu rows=%zu sigma_data=%g report=%s\n", models.size(), models.size() * a.nfe.size(),
              cc.sigma_data, a.out.c_str());
  return 0;
}

struct Cli {
  CLI::App app{"rflow: rectified conditional flow matching on synthetic text-to-frames data", "rflow"};
  std::string config;
  GenDataArgs gen;
  TrainArgs train;
  RectifyArgs rectify;
  SampleArgs sample;
  EvalArgs eval;
  CLI::App* gen_cmd = nullptr;
  CLI::App* train_cmd = nullptr;
  CLI::App* rectify_cmd = nullptr;
  CLI::App* sample_cmd = nullptr;
  CLI::App* eval_cmd = nullptr;

  Cli() {
    app.require_subcommand(1);
    app.set_version_flag("--version", rflow_version());

    gen_cmd = app.add_subcommand("gen-data", "Write train/test corpora with their phone templates");
    gen_cmd->add_option("--out", gen.out, "Output directory");
    gen_cmd->add_option("--seed", gen.seed, "Corpus seed")->capture_default_str();
    gen_cmd->add_option("--n-utts", gen.n_utts, "Training utterances")->capture_default_str();
    gen_cmd->add_option("--n-test", gen.n_test, "Test utterances")->capture_default_str();
    gen_cmd->add_option("--vocab-size", gen.vocab_size)->capture_default_str();
    gen_cmd->add_option("--frame-dim", gen.frame_dim)->capture_default_str();
    gen_cmd->add_option("--n-speakers", gen.n_speakers)->capture_default_str();
    gen_cmd->add_option("--sigma-data", gen.sigma_data)->capture_default_str();
    gen_cmd->add_option("--offset-scale", gen.offset_scale)->capture_default_str();

    train_cmd = app.add_subcommand("train", "Flow-matching training from a fresh initialization");
    train_cmd->add_option("--corpus", train.corpus, "Training corpus file");
    train_cmd->add_option("--out", train.out, "Checkpoint to write");
    train_cmd->add_option("--log", train.log, "Training log CSV (default <out>.log.csv)");
    train_cmd->add_option("--seed", train.seed, "Initialization and training seed")->capture_default_str();
    train_cmd->add_option("--steps", train.steps)->capture_default_str();
    train_cmd->add_option("--batch", train.batch)->capture_default_str();
    train_cmd->add_option("--lr", train.lr)->capture_default_str();
    train_cmd->add_option("--embed-dim", train.embed_dim)->capture_default_str();
    train_cmd->add_option("--cond-dim", train.cond_dim)->capture_default_str();
    train_cmd->add_option("--hidden-dim", train.hidden_dim)->capture_default_str();
    train_cmd->add_option("--layers", train.layers)->capture_default_str();
    train_cmd->add_option("--time-embed-dim", train.time_embed_dim)->capture_default_str();
    train_cmd->add_option("--speaker-embed-dim", train.speaker_embed_dim,
                          "Default 4 for multi-speaker corpora, else 0");
    train_cmd->add_option("--sigma", train.sigma, "Path standard deviation")->capture_default_str();

    rectify_cmd = app.add_subcommand("rectify", "Generate noise/sample pairs and retrain on them");
    rectify_cmd->add_option("--corpus", rectify.corpus, "Training corpus file");
    rectify_cmd->add_option("--checkpoint", rectify.checkpoint, "Model to rectify");
    rectify_cmd->add_option("--out-dir", rectify.out_dir, "Writes roundK.pairs, roundK.ckpt, roundK.log.csv");
    rectify_cmd->add_option("--seed", rectify.seed)->capture_default_str();
    rectify_cmd->add_option("--rounds", rectify.rounds)->capture_default_str();
    rectify_cmd->add_option("--steps", rectify.steps, "Retraining steps per round")->capture_default_str();
    rectify_cmd->add_option("--batch", rectify.batch)->capture_default_str();
    rectify_cmd->add_option("--lr", rectify.lr, "Retraining learning rate")->capture_default_str();
    rectify_cmd->add_option("--solver", rectify.solver, "Pair generation solver")->capture_default_str();
    rectify_cmd->add_option("--nfe", rectify.nfe, "Pair generation steps")->capture_default_str();
    rectify_cmd->add_flag("--reinit", rectify.reinit, "Retrain from a fresh initialization");

    sample_cmd = app.add_subcommand("sample", "Generate frames for one phone sequence");
    sample_cmd->add_option("--checkpoint", sample.checkpoint);
    sample_cmd->add_option("--phones", sample.phones, "Space-separated phone ids");
    sample_cmd->add_option("--utt", sample.utt, "Utterance id in --corpus");
    sample_cmd->add_option("--corpus", sample.corpus);
    sample_cmd->add_option("--speaker", sample.speaker, "Speaker for --phones")->capture_default_str();
    sample_cmd->add_flag("--gt-durations", sample.gt_durations, "Use the utterance's durations");
    sample_cmd->add_option("--solver", sample.solver)->capture_default_str();
    sample_cmd->add_option("--nfe", sample.nfe)->capture_default_str();
    sample_cmd->add_option("--seed", sample.seed)->capture_default_str();
    sample_cmd->add_option("--out", sample.out, "Frames file");
    sample_cmd->add_option("--trajectory", sample.trajectory, "Trajectory CSV");

    eval_cmd = app.add_subcommand("eval", "NFE sweep of one or more checkpoints on a test corpus");
    eval_cmd->add_option("--corpus", eval.corpus, "Test corpus file");
    eval_cmd->add_option("--checkpoint", eval.checkpoints, "[tag=]path; repeatable")->take_all();
    eval_cmd->add_option("--nfe", eval.nfe, "Comma-separated step budgets")->delimiter(',')->capture_default_str();
    eval_cmd->add_option("--solver", eval.solver)->capture_default_str();
    eval_cmd->add_option("--seed", eval.seed)->capture_default_str();
    eval_cmd->add_option("--out", eval.out, "Report CSV");
    eval_cmd->add_option("--predicted-out", eval.predicted_out, "CSV of energy distance with predicted durations");

    for (auto* sub : {gen_cmd, train_cmd, rectify_cmd, sample_cmd, eval_cmd}) {
      sub->add_option("--config", config, "key=value file; flags take precedence");
    }
  }

  CLI::App* selected() {
    for (auto* sub : {gen_cmd, train_cmd, rectify_cmd, sample_cmd, eval_cmd}) {
      if (sub->parsed()) return sub;
    }
    return nullptr;
  }

  /// Known keys across all commands; a shared pipeline config may hold keys
  /// meant for other commands.
  std::set<std::string> all_keys() {
    std::set<std::string> keys;
    for (auto* sub : {gen_cmd, train_cmd, rectify_cmd, sample_cmd, eval_cmd}) {
      for (const auto* opt : sub->get_options()) {
        for (const auto& ln : opt->get_lnames()) keys.insert(option_key(ln));
      }
    }
    keys.erase("config");
    keys.erase("help");
    return keys;
  }
};

int dispatch(Cli& cli) {
  if (cli.gen_cmd->parsed()) return cmd_gen_data(cli.gen);
  if (cli.train_cmd->parsed()) return cmd_train(cli.train);
  if (cli.rectify_cmd->parsed()) return cmd_rectify(cli.rectify);
  if (cli.sample_cmd->parsed()) return cmd_sample(cli.sample);
  if (cli.eval_cmd->parsed()) return cmd_eval(cli.eval);
  usage_error("no command given");
}

/// Parses `args` (program name excluded) into `cli`; returns an exit code
/// for help and version requests.
std::optional<int> parse(Cli& cli, const std::vector<std::string>& args) {
  // CLI11 consumes its vector from the back.
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    cli.app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return cli.app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return cli.app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return cli.app.exit(e);
  } catch (const CLI::ParseError& e) {
    usage_error(e.what());
  }
  return std::nullopt;
}

int run(int argc, char** argv) {
  const std::vector<std::string> args(argv + 1, argv + argc);
  auto cli = std::make_unique<Cli>();
  if (auto code = parse(*cli, args)) return *code;
  if (cli->config.empty()) return dispatch(*cli);

  // Config values are inserted right after the command name, skipping keys
  // already given as flags, and the command line is parsed again.
  CLI::App* sub = cli->selected();
  const auto known = cli->all_keys();
  std::vector<std::string> injected;
  for (const auto& e : read_config(cli->config)) {
    if (!known.count(e.key)) {
      usage_error(cli->config + ":" + std::to_string(e.line) + ": unknown key '" + e.key + "'");
    }
    std::string flag = "--" + e.key;
    for (auto& ch : flag) {
      if (ch == '_') ch = '-';
    }
    const CLI::Option* opt = sub->get_option_no_throw(flag);
    if (opt == nullptr || opt->count() > 0) continue;
    injected.push_back(flag + "=" + e.value);
  }
  std::vector<std::string> merged;
  bool inserted = false;
  for (const auto& a : args) {
    merged.push_back(a);
    if (!inserted && a == sub->get_name()) {
      merged.insert(merged.end(), injected.begin(), injected.end());
      inserted = true;
    }
  }
  const std::string config_path = cli->config;
  cli = std::make_unique<Cli>();
  try {
    if (auto code = parse(*cli, merged)) return *code;
  } catch (Failure& f) {
    f.message = "with config '" + config_path + "': " + f.message;
    throw;
  }
  return dispatch(*cli);
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const Failure& f) {
    std::string msg = f.message;
    for (auto& ch : msg) {
      if (ch == '\n') ch = ' ';
    }
    std::fprintf(stderr, "rflow: error kind=%s", f.kind.c_str());
    if (f.step) std::fprintf(stderr, " step=%zu", f.step);
    std::fprintf(stderr, " msg=%s\n", msg.c_str());
    return f.code;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "rflow: error kind=internal msg=%s\n", e.what());
    return kExitRuntime;
  }
}
