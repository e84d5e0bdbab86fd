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

#include "rflow/ode.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "rflow/error.hpp"
#include "rflow/text_format.hpp"

namespace rflow {

std::string to_string(SolverMethod method) {
  switch (method) {
    case SolverMethod::euler:
      return "euler";
    case SolverMethod::midpoint:
      return "midpoint";
    case SolverMethod::rk4:
      return "rk4";
  }
  return "unknown";
}

SolverMethod parse_solver_method(std::string_view name) {
  if (name == "euler") return SolverMethod::euler;
  if (name == "midpoint") return SolverMethod::midpoint;
  if (name == "rk4") return SolverMethod::rk4;
  throw ValidationError("unknown solver '" + std::string(name) + "' (expected euler, midpoint or rk4)");
}

std::size_t stages(SolverMethod method) {
  switch (method) {
    case SolverMethod::euler:
      return 1;
    case SolverMethod::midpoint:
      return 2;
    case SolverMethod::rk4:
      return 4;
  }
  return 0;
}

namespace {

// x + a * k, elementwise.
Tensor shifted(const Tensor& x, double a, const Tensor& k) {
  if (k.shape() != x.shape()) {
    throw ShapeError("vector field returned " + shape_string(k.shape()) + " for state " + shape_string(x.shape()));
  }
  Tensor out = x;
  axpy(a, k, out);
  return out;
}

}  // namespace

SolveResult solve(const VectorField& field, const Tensor& x0, const SolverConfig& config) {
  if (config.steps == 0) throw ValidationError("solve: number of steps must be at least 1");
  const std::size_t n = config.steps;
  const double h = 1.0 / static_cast<double>(n);
  SolveResult result;
  if (config.record_trajectory) {
    result.trajectory.emplace();
    result.trajectory->times.push_back(0.0);
    result.trajectory->states.push_back(x0);
  }
  Tensor x = x0;
  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) / static_cast<double>(n);
    switch (config.method) {
      case SolverMethod::euler: {
        x = shifted(x, h, field(x, t));
        break;
      }
      case SolverMethod::midpoint: {
        const Tensor k1 = field(x, t);
        const Tensor k2 = field(shifted(x, 0.5 * h, k1), t + 0.5 * h);
        x = shifted(x, h, k2);
        break;
      }
      case SolverMethod::rk4: {
        const Tensor k1 = field(x, t);
        const Tensor k2 = field(shifted(x, 0.5 * h, k1), t + 0.5 * h);
        const Tensor k3 = field(shifted(x, 0.5 * h, k2), t + 0.5 * h);
        const Tensor k4 = field(shifted(x, h, k3), (k + 1 == n) ? 1.0 : t + h);
        for (std::size_t i = 0; i < x.size(); ++i) {
          x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        break;
      }
    }
    if (!all_finite(x)) throw DivergenceError("ODE state became non-finite", k + 1);
    if (result.trajectory) {
      result.trajectory->times.push_back(static_cast<double>(k + 1) / static_cast<double>(n));
      result.trajectory->states.push_back(x);
    }
  }
  result.final_state = std::move(x);
  return result;
}

OrderEstimate empirical_order(SolverMethod method, const VectorField& field, const Tensor& x0,
                              const Tensor& exact_final, std::span<const std::size_t> steps) {
  if (steps.size() < 3) throw ValidationError("empirical_order: need at least 3 step counts");
  for (std::size_t i = 1; i < steps.size(); ++i) {
    if (steps[i] <= steps[i - 1]) throw ValidationError("empirical_order: step counts must increase");
  }
  OrderEstimate est;
  bool exact = false;
  for (auto n : steps) {
    const Tensor x1 = solve(field, x0, {method, n, false}).final_state;
    const double err = std::sqrt(sum_squares(x1 - exact_final));
    est.errors.push_back(err);
    if (err == 0.0) exact = true;
  }
  if (exact) return est;
  // Least squares slope of log(err) on log(1/N).
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double m = static_cast<double>(steps.size());
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const double lx = -std::log(static_cast<double>(steps[i]));
    const double ly = std::log(est.errors[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  est.order = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  return est;
}

std::string trajectory_csv(const Trajectory& trajectory) {
  std::ostringstream os;
  if (trajectory.states.empty()) throw ValidationError("trajectory_csv: empty trajectory");
  const Tensor& first = trajectory.states.front();
  const std::size_t d = first.rank() == 2 ? first.cols() : first.size();
  os << "t,frame";
  for (std::size_t i = 0; i < d; ++i) os << ",dim" << i;
  os << '\n';
  for (std::size_t k = 0; k < trajectory.states.size(); ++k) {
    const Tensor& s = trajectory.states[k];
    const std::size_t frames = s.size() / d;
    for (std::size_t j = 0; j < frames; ++j) {
      os << format_double(trajectory.times[k]) << ',' << j;
      for (std::size_t i = 0; i < d; ++i) os << ',' << format_double(s[j * d + i]);
      os << '\n';
    }
  }
  return os.str();
}

void write_trajectory_csv(const Trajectory& trajectory, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << trajectory_csv(trajectory);
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

}  // namespace rflow
