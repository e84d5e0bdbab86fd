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

#include "rflow/sampling.hpp"

#include "rflow/error.hpp"

namespace rflow {

VectorField model_field(const Model& model, const Condition& cond) {
  return [&model, &cond](const Tensor& x, double t) { return vf_forward(model, x, cond, t); };
}

Condition build_condition(const Model& model, const std::vector<std::size_t>& phone_ids,
                          const std::vector<std::size_t>& durations, std::size_t speaker_id) {
  return regulate_length(encode_text(model, phone_ids, speaker_id), durations);
}

SampleResult sample_frames(const Model& model, const SampleRequest& request, Rng& rng) {
  const Tensor latents = encode_text(model, request.phone_ids, request.speaker_id);
  SampleResult result;
  if (request.durations) {
    if (request.durations->size() != request.phone_ids.size()) {
      throw ValidationError("sample: " + std::to_string(request.durations->size()) + " durations for " +
                            std::to_string(request.phone_ids.size()) + " phones");
    }
    result.durations = *request.durations;
  } else {
    result.durations = round_durations(predict_durations(model, latents));
  }
  const Condition cond = regulate_length(latents, result.durations);
  result.noise = sample_standard_normal(rng, {cond.frames(), model.config.frame_dim});
  SolveResult solved = solve(model_field(model, cond), result.noise, request.solver);
  result.frames = std::move(solved.final_state);
  result.trajectory = std::move(solved.trajectory);
  return result;
}

}  // namespace rflow
