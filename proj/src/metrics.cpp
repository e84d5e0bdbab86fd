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

#include "rflow/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include "rflow/error.hpp"
#include "rflow/random.hpp"
#include "rflow/sampling.hpp"
#include "rflow/text_format.hpp"

namespace rflow {

StraightnessResult straightness(std::span<const Trajectory> trajectories) {
  StraightnessResult result;
  double total = 0.0;
  std::size_t used = 0;
  for (const auto& traj : trajectories) {
    const auto& s = traj.states;
    if (s.size() < 2) throw ValidationError("straightness: trajectory needs at least 2 states");
    const std::size_t n = s.size() - 1;
    const Tensor chord = s[n] - s[0];
    const double chord_norm2 = sum_squares(chord);
    if (chord_norm2 == 0.0) {
      ++result.excluded;
      continue;
    }
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      double dev = 0.0;
      for (std::size_t i = 0; i < chord.size(); ++i) {
        const double r = (s[k + 1][i] - s[k][i]) * static_cast<double>(n) - chord[i];
        dev += r * r;
      }
      acc += dev / chord_norm2;
    }
    total += acc / static_cast<double>(n);
    ++used;
  }
  result.value = used ? total / static_cast<double>(used) : 0.0;
  return result;
}

namespace {

double mean_pairwise_distance(const Tensor& a, const Tensor& b) {
  const std::size_t d = a.cols();
  double sum = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* ai = a.raw() + i * d;
    double row_sum = 0.0;
    for (std::size_t j = 0; j < b.rows(); ++j) {
      const double* bj = b.raw() + j * d;
      double s = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        const double r = ai[k] - bj[k];
        s += r * r;
      }
      row_sum += std::sqrt(s);
    }
    sum += row_sum;
  }
  return sum / (static_cast<double>(a.rows()) * static_cast<double>(b.rows()));
}

// Strict weak order on tensors so the argument order of energy_distance
// cannot change the summation order.
bool canonical_less(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) return a.shape() < b.shape();
  return std::lexicographical_compare(a.data().begin(), a.data().end(), b.data().begin(), b.data().end());
}

}  // namespace

double energy_distance(const Tensor& a_in, const Tensor& b_in) {
  if (a_in.rank() != 2 || b_in.rank() != 2 || a_in.cols() != b_in.cols()) {
    throw ShapeError("energy_distance: sample sets must be [n x d] with equal d");
  }
  if (a_in.rows() < 2 || b_in.rows() < 2) throw ValidationError("energy_distance: need at least 2 samples per set");
  const bool swap = canonical_less(b_in, a_in);
  const Tensor& a = swap ? b_in : a_in;
  const Tensor& b = swap ? a_in : b_in;
  const double cross = mean_pairwise_distance(a, b);
  const double within_a = mean_pairwise_distance(a, a);
  const double within_b = mean_pairwise_distance(b, b);
  // The V-statistic is nonnegative; clamp rounding residue around zero.
  return std::max(0.0, 2.0 * cross - within_a - within_b);
}

double cond_rmse(const Tensor& generated, const Tensor& oracle) {
  if (generated.shape() != oracle.shape()) {
    throw ShapeError("cond_rmse: " + shape_string(generated.shape()) + " vs " + shape_string(oracle.shape()));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < generated.size(); ++i) {
    const double r = generated[i] - oracle[i];
    s += r * r;
  }
  return std::sqrt(s / static_cast<double>(generated.size()));
}

namespace {

Tensor stack_rows(const std::vector<Tensor>& blocks, std::size_t d) {
  std::size_t rows = 0;
  for (const auto& b : blocks) rows += b.rows();
  std::vector<double> data;
  data.reserve(rows * d);
  for (const auto& b : blocks) data.insert(data.end(), b.data().begin(), b.data().end());
  return Tensor(Shape{rows, d}, std::move(data));
}

}  // namespace

EvalReport nfe_sweep(std::span<const TaggedModel> models, const Corpus& test, std::span<const std::size_t> nfe_list,
                     SolverMethod solver, std::uint64_t seed) {
  if (models.empty() || nfe_list.empty()) throw ValidationError("nfe_sweep: empty model or NFE list");
  if (test.utterances.empty()) throw ValidationError("nfe_sweep: empty test corpus");
  const std::size_t d = test.config.frame_dim;
  std::vector<Tensor> real_blocks;
  for (const auto& u : test.utterances) real_blocks.push_back(u.frames);
  const Tensor real = stack_rows(real_blocks, d);

  const Rng root(seed);
  EvalReport report;
  report.sigma_data = test.config.sigma_data;
  for (const auto& tagged : models) {
    const Model& model = *tagged.model;
    if (model.config.frame_dim != d) throw ShapeError("nfe_sweep: model frame_dim differs from the corpus");
    for (const auto nfe : nfe_list) {
      EvalRow row;
      row.model = tagged.tag;
      row.solver = solver;
      row.nfe = nfe;
      const SolverConfig cfg{solver, nfe, true};

      std::vector<Tensor> generated;
      std::vector<Trajectory> trajectories;
      double rmse_sum = 0.0;
      std::size_t frames = 0;
      const auto start = std::chrono::steady_clock::now();
      for (std::size_t i = 0; i < test.utterances.size(); ++i) {
        const Utterance& u = test.utterances[i];
        Rng rng = root.split(i);
        SampleRequest req{u.phone_ids, u.speaker_id, u.durations, cfg};
        SampleResult s = sample_frames(model, req, rng);
        frames += s.frames.rows();
        rmse_sum += cond_rmse(s.frames, oracle_frame_mean(test.config, test.templates, u.phone_ids, u.durations,
                                                          u.speaker_id));
        generated.push_back(std::move(s.frames));
        trajectories.push_back(std::move(*s.trajectory));
      }
      const double seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      row.frames_per_second = seconds > 0.0 ? static_cast<double>(frames) / seconds : 0.0;
      row.energy_distance = energy_distance(stack_rows(generated, d), real);
      row.cond_rmse = rmse_sum / static_cast<double>(test.utterances.size());
      row.straightness = straightness(trajectories).value;

      std::vector<Tensor> predicted;
      for (std::size_t i = 0; i < test.utterances.size(); ++i) {
        const Utterance& u = test.utterances[i];
        Rng rng = root.split(i);
        SampleRequest req{u.phone_ids, u.speaker_id, std::nullopt, {solver, nfe, false}};
        predicted.push_back(sample_frames(model, req, rng).frames);
      }
      row.energy_distance_predicted_durations = energy_distance(stack_rows(predicted, d), real);
      report.rows.push_back(std::move(row));
    }
  }
  return report;
}

std::string report_csv(const EvalReport& report) {
  std::ostringstream os;
  os << "model,solver,nfe,energy_distance,cond_rmse,straightness,frames_per_second\n";
  for (const auto& r : report.rows) {
    os << r.model << ',' << to_string(r.solver) << ',' << r.nfe << ',' << format_double(r.energy_distance) << ','
       << format_double(r.cond_rmse) << ',' << format_double(r.straightness) << ','
       << format_double(r.frames_per_second) << '\n';
  }
  return os.str();
}

std::string predicted_durations_csv(const EvalReport& report) {
  std::ostringstream os;
  os << "model,solver,nfe,energy_distance_predicted_durations\n";
  for (const auto& r : report.rows) {
    os << r.model << ',' << to_string(r.solver) << ',' << r.nfe << ','
       << format_double(r.energy_distance_predicted_durations) << '\n';
  }
  return os.str();
}

void write_text_file(const std::string& text, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

}  // namespace rflow
