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
#include <vector>

#include "genco/baselines.hpp"
#include "genco/evaluation.hpp"
#include "genco/serving.hpp"
#include "genco/simulator.hpp"
#include "genco/training.hpp"

// Experiment drivers shared by the unit tests and the acceptance suite.
namespace genco::harness {

/// Batch size of the desk-scale experiment runs (see configs/desk.json).
inline constexpr int kDeskBatch = 8;

/// One ad, one component with two elements of true CTR 0.1 and 0.9 (the
/// better one in slot 1). SGD on the REINFORCE loss alone, on-policy.
struct BanditResult {
  double p_best = 0.0;       // mean over the probe contexts after the last step
  int first_step_above = -1;  // first step whose probe mean exceeded `target`
};
BanditResult bandit_run(std::uint64_t seed, int steps = 2000, int batch = 8, double target = 0.9);

struct PolicyOutcome {
  double realized_ctr = 0.0;
  double expected_ctr = 0.0;
  std::vector<double> clicks;  // per request, common random numbers
};

/// Train GenCO and the MLP on uniform logs of a synthetic catalog, then serve
/// fresh traffic with Uniform, MLP and GenCO on identical requests.
struct EndToEnd {
  PolicyOutcome uniform, mlp, genco;
  eval::BootstrapCI genco_vs_uniform, genco_vs_mlp;
  double train_seconds = 0.0;
};
EndToEnd end_to_end(const sim::SimConfig& sim, std::size_t train_logs, std::size_t eval_requests,
                    std::uint64_t seed, int batch = kDeskBatch);

/// Mean oracle gap of full GenCO and the three single ablations, trained on
/// the same logs.
struct AblationGaps {
  double full = 0.0, no_mil = 0.0, no_rl = 0.0, no_context = 0.0;
};
AblationGaps ablation_gaps(const sim::SimConfig& sim, std::size_t train_logs, std::size_t gap_requests,
                           std::uint64_t seed, int batch = kDeskBatch);

/// Calibrated-sCTR lift of a trained GenCO model per (component, bucket) on
/// held-out uniform logs.
std::vector<eval::LiftCell> bucket_lift(const sim::SimConfig& sim, std::size_t train_logs,
                                        std::size_t eval_logs, std::uint64_t seed, int batch = kDeskBatch);

/// Lifts of the present buckets are non-decreasing in bucket order.
bool non_decreasing(const std::vector<eval::LiftCell>& cells, int component);

/// One-sided sign test: P(X >= wins) for X ~ Binomial(n, 1/2).
double sign_test_p(int wins, int n);

}  // namespace genco::harness
