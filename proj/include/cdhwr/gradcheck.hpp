// Copyright 2026 The cdhwr Authors.
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

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include "cdhwr/tape.hpp"

namespace cdhwr {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_input = 0;
  std::size_t worst_index = 0;
  std::size_t checked = 0;
};

/// Builds a scalar on the tape from one Var per point.
using MultiFn = std::function<Var(Tape<double>&, const std::vector<Var>&)>;

/// Compares tape gradients of `f` against central finite differences.
/// The per-coordinate error is |g_ad - g_fd| / max(1, |g_ad|, |g_fd|).
/// `coords`, when given, restricts the check to those flat indices of each
/// point (useful for large parameter sets).
inline GradCheckResult grad_check(
    const MultiFn& f, std::vector<Tensor<double>> points, double step = 1e-6,
    const std::optional<std::vector<std::vector<std::size_t>>>& coords = {}) {
  auto evaluate = [&](const std::vector<Tensor<double>>& at) {
    Tape<double> tape;
    std::vector<Var> vars;
    for (const auto& p : at) vars.push_back(tape.leaf(p));
    Var out = f(tape, vars);
    if (tape.value(out).size() != 1) {
      throw ShapeError("grad_check: function output must be scalar, got " +
                       shape_str(tape.shape(out)));
    }
    return tape.value(out)[0];
  };

  std::vector<Tensor<double>> analytic;
  {
    Tape<double> tape;
    std::vector<Var> vars;
    for (const auto& p : points) vars.push_back(tape.leaf(p));
    Var out = f(tape, vars);
    if (tape.value(out).size() != 1) {
      throw ShapeError("grad_check: function output must be scalar, got " +
                       shape_str(tape.shape(out)));
    }
    tape.backward(out);
    for (const Var& v : vars) analytic.push_back(tape.grad(v));
  }

  GradCheckResult result;
  for (std::size_t p = 0; p < points.size(); ++p) {
    std::vector<std::size_t> indices;
    if (coords) {
      indices = (*coords)[p];
    } else {
      indices.resize(points[p].size());
      for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = i;
    }
    for (std::size_t i : indices) {
      const double orig = points[p][i];
      points[p][i] = orig + step;
      const double up = evaluate(points);
      points[p][i] = orig - step;
      const double down = evaluate(points);
      points[p][i] = orig;
      const double fd = (up - down) / (2.0 * step);
      const double ad = analytic[p][i];
      const double err =
          std::abs(ad - fd) / std::max({1.0, std::abs(ad), std::abs(fd)});
      ++result.checked;
      if (err > result.max_rel_error) {
        result.max_rel_error = err;
        result.worst_input = p;
        result.worst_index = i;
      }
    }
  }
  return result;
}

/// Single-tensor convenience form.
inline double grad_check(const std::function<Var(Tape<double>&, Var)>& f,
                         const Tensor<double>& point, double step = 1e-6) {
  MultiFn wrapped = [&](Tape<double>& t, const std::vector<Var>& v) {
    return f(t, v[0]);
  };
  return grad_check(wrapped, {point}, step).max_rel_error;
}

}  // namespace cdhwr
