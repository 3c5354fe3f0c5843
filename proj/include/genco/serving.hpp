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

#include <span>
#include <string>
#include <vector>

#include "genco/genmodel.hpp"
#include "genco/policy.hpp"
#include "genco/rewardmodel.hpp"

namespace genco {

enum class ServeMode {
  /// Sample K combinations from f_ele, keep the f_comb argmax.
  kPipeline,
  /// Per-component argmax of f_ele.
  kElement,
  /// f_comb argmax over every combination (falls back to kPipeline above the cap).
  kComb,
};

ServeMode parse_serve_mode(std::string_view name);
std::string_view serve_mode_name(ServeMode mode);

struct ServeConfig {
  ServeMode mode = ServeMode::kPipeline;
  int k = 16;
  /// Propose the greedy combination instead of K samples.
  bool greedy_proposals = false;
  std::uint64_t comb_cap = 10000;
};

/// The trained model behind the common selection interface.
class GencoPolicy : public SelectionPolicy {
 public:
  GencoPolicy(GencoModel<float>& model, ServeConfig config = {}, std::string name = "genco")
      : model_(&model), config_(config), name_(std::move(name)) {}

  std::string name() const override { return name_; }
  CreativeCombination select(const RequestContext& context, const Ad& ad, Engine& rng) override;

  /// Batched selection; one engine per request. Returns slot indices per
  /// component (-1 where absent). Rows depend on batch composition only through float rounding.
  std::vector<std::vector<int>> select_slots(std::span<const RequestInput> requests,
                                             std::span<Engine> rngs);

  std::size_t fallbacks() const { return fallbacks_; }
  const ServeConfig& config() const { return config_; }

 private:
  GencoModel<float>* model_;
  ServeConfig config_;
  std::string name_;
  std::size_t fallbacks_ = 0;
};

/// MIL weights of logged combinations: one row per record, one column per
/// component (0 where absent). Records whose exposure cannot be resolved are
/// returned as empty rows.
std::vector<std::vector<double>> mil_weights(GencoModel<float>& model,
                                             std::span<const ImpressionRecord> records,
                                             std::size_t batch_size = 512);

}  // namespace genco
