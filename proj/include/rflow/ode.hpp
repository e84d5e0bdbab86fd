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

// Fixed-step solvers for dx = v(x, t) dt on t in [0, 1].

#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rflow/tensor.hpp"

namespace rflow {

enum class SolverMethod { euler, midpoint, rk4 };

std::string to_string(SolverMethod method);
/// Throws ValidationError for an unknown name.
SolverMethod parse_solver_method(std::string_view name);
/// Field evaluations per step.
std::size_t stages(SolverMethod method);

struct SolverConfig {
  SolverMethod method = SolverMethod::euler;
  std::size_t steps = 1;
  bool record_trajectory = false;

  friend bool operator==(const SolverConfig&, const SolverConfig&) = default;
};

struct Trajectory {
  std::vector<double> times;   // k / N, k = 0..N
  std::vector<Tensor> states;  // states[0] is the initial noise
};

using VectorField = std::function<Tensor(const Tensor& x, double t)>;

struct SolveResult {
  Tensor final_state;
  std::optional<Trajectory> trajectory;
};

/// Integrates from t = 0 to t = 1 on the grid t_k = k / N. Euler is
/// x_{k+1} = x_k + (1/N) v(x_k, t_k); midpoint and RK4 use their classical
/// tableaus. Throws DivergenceError naming the step that went non-finite.
SolveResult solve(const VectorField& field, const Tensor& x0, const SolverConfig& config);

struct OrderEstimate {
  /// Least-squares slope of log(error) against log(1/N); empty when some
  /// step count integrates exactly (zero error).
  std::optional<double> order;
  std::vector<double> errors;
};

/// Measures convergence order against a known exact x(1).
OrderEstimate empirical_order(SolverMethod method, const VectorField& field, const Tensor& x0,
                              const Tensor& exact_final, std::span<const std::size_t> steps);

/// CSV with header `t,frame,dim0..dim{d-1}`, one row per (time, frame).
std::string trajectory_csv(const Trajectory& trajectory);
void write_trajectory_csv(const Trajectory& trajectory, const std::filesystem::path& path);

}  // namespace rflow
