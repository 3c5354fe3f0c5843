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

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

#include "genco/baselines.hpp"
#include "genco/layout.hpp"
#include "genco/serving.hpp"
#include "genco/simulator.hpp"
#include "genco/training.hpp"

namespace genco {

struct EvalOptions {
  bool calibrated = true;
  /// How the trained model selects inside the replay: pipeline | element | comb.
  std::string selector = "pipeline";
  int bootstrap = 1000;
  /// Simulated requests for the oracle-gap statistics (0 disables).
  std::size_t gap_requests = 2000;
};

/// Every stage's settings. One top-level seed fans out to the stages: the
/// simulator, the model initialization, training and serving all derive
/// their streams from it unless a stage seed is given explicitly.
struct RunConfig {
  std::optional<std::uint64_t> seed;
  sim::SimConfig sim;
  ModelConfig model;
  TrainConfig train;
  ServeConfig serve;
  EvalOptions eval;
  MlpConfig mlp;
  DcoConfig dco;
  int mlp_batch_size = 256;
  double mlp_lr = 5e-3;

  /// Throws SchemaError when no seed was given anywhere.
  std::uint64_t require_seed() const;
  /// Copies the top-level seed into the stage configs.
  void apply_seed();
};

/// Reads a JSON config. Unknown keys are schema errors; absent keys keep
/// their defaults.
RunConfig load_run_config(const std::string& path);
RunConfig parse_run_config(const nlohmann::json& j);
nlohmann::ordered_json to_json(const RunConfig& config);

/// Seed file written next to a catalog: the simulator settings from which
/// the ground truth is re-derived.
void save_truth_file(const std::string& path, const sim::SimConfig& config);
sim::SimConfig load_truth_file(const std::string& path);
nlohmann::ordered_json sim_to_json(const sim::SimConfig& config);
sim::SimConfig sim_from_json(const nlohmann::json& j, sim::SimConfig base = {});

}  // namespace genco
