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

#include <optional>
#include <vector>

#include "genco/domain.hpp"
#include "genco/rng.hpp"

namespace genco {

/// Categorical distribution over one component's padded slots.
struct ComponentDistribution {
  int component = 0;
  std::vector<double> probs;  // pad_size entries, 0 on padding
  std::vector<bool> valid;
  std::vector<double> scores;  // raw scores; 0 on padding
};

/// One distribution per component; nullopt where the ad lacks the component.
using Distributions = std::vector<std::optional<ComponentDistribution>>;

/// A combination as padded slot indices (-1 for absent components).
struct SampledCombination {
  std::vector<int> slots;
  double log_prob = 0.0;
};

/// Builds a distribution from raw scores of the valid slots via a
/// max-subtracted softmax.
ComponentDistribution make_distribution(int component, const std::vector<double>& valid_scores,
                                        std::size_t pad_size);

/// Draws K combinations, each component independently by inverse CDF.
std::vector<SampledCombination> sample_combinations(const Distributions& dists, int k, Engine& rng);

/// Per-component argmax; ties go to the lowest slot.
SampledCombination greedy_combination(const Distributions& dists);

/// sum_j log P(slot_j)
double combination_log_prob(const Distributions& dists, const std::vector<int>& slots);

CreativeCombination to_combination(const Ad& ad, const std::vector<int>& slots);

/// Slot indices of `c` within the ad's pools; -1 where absent or where the
/// exposed element lies beyond `pad_size`. nullopt if any exposed element is
/// not in its pool or is truncated.
std::optional<std::vector<int>> slots_of(const Ad& ad, const CreativeCombination& c,
                                         std::size_t pad_size);

}  // namespace genco
