// Copyright 2026 The genco Authors. All Rights Reserved.
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
#include <string>
#include <type_traits>
#include <vector>

#include "genco/diff/tape.hpp"

namespace genco::diff {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_parameter;
  Eigen::Index worst_index = -1;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t checked = 0;
};

struct GradCheckOptions {
  double eps = 1e-6;
  /// Denominator floor: rel = |a - n| / max(|a|, |n|, floor).
  double floor = 1e-6;
  /// Parameters to perturb; empty means every trainable parameter.
  std::vector<std::string> only;
};

/// Compares the tape gradient of a scalar loss with central finite
/// differences, element by element. Non-trainable state (batch-norm running
/// statistics) is restored after every evaluation.
template <typename Scalar>
GradCheckResult grad_check(const std::function<Var(Tape<Scalar>&)>& loss_fn,
                           ParameterStore<Scalar>& store, const GradCheckOptions& opt = {}) {
  static_assert(std::is_same_v<Scalar, double>, "grad_check runs in 64-bit mode");
  std::vector<std::pair<Parameter<Scalar>*, Tensor<Scalar>>> frozen;
  for (auto& [_, p] : store)
    if (!p.trainable) frozen.emplace_back(&p, p.value);
  auto restore = [&] {
    for (auto& [p, v] : frozen) p->value = v;
  };
  auto eval = [&] {
    Tape<Scalar> tape(true);
    Var loss = loss_fn(tape);
    const Scalar v = tape.scalar(loss);
    restore();
    return v;
  };

  store.zero_grad();
  {
    Tape<Scalar> tape(true);
    Var loss = loss_fn(tape);
    if (tape.value(loss).size() != 1)
      throw std::invalid_argument("grad_check: computation output is not a scalar");
    tape.backward(loss);
    restore();
  }

  GradCheckResult res;
  for (auto& [name, p] : store) {
    if (!p.trainable) continue;
    if (!opt.only.empty() && std::find(opt.only.begin(), opt.only.end(), name) == opt.only.end())
      continue;
    const Tensor<Scalar> analytic = p.grad;
    for (Eigen::Index i = 0; i < p.value.size(); ++i) {
      Scalar& w = p.value.data()[i];
      const Scalar saved = w;
      w = saved + opt.eps;
      const double up = eval();
      w = saved - opt.eps;
      const double down = eval();
      w = saved;
      const double numeric = (up - down) / (2.0 * opt.eps);
      const double a = analytic.data()[i];
      const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), opt.floor});
      ++res.checked;
      if (rel > res.max_rel_error) {
        res.max_rel_error = rel;
        res.worst_parameter = name;
        res.worst_index = i;
        res.analytic = a;
        res.numeric = numeric;
      }
    }
  }
  store.zero_grad();
  return res;
}

}  // namespace genco::diff
