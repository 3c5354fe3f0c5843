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

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "genco/diff/ops.hpp"
#include "genco/diff/tape.hpp"
#include "genco/domain.hpp"
#include "genco/genmodel.hpp"
#include "genco/rewardmodel.hpp"

namespace genco {

struct TrainConfig {
  /// The production value is 1024; 256 suits desk-sized logs.
  int batch_size = 256;
  double lr = 5e-3;
  double lambda = 0.15;
  double reward_click = 1.0;
  double reward_nonclick = -0.1;
  std::uint64_t seed = 0;
  bool no_mil = false;
  bool no_rl = false;
  bool no_context = false;
  /// Write an intermediate checkpoint every N steps (0 = only at the end).
  int checkpoint_every = 0;
  std::string checkpoint_path;

  void validate() const;
  double effective_lambda() const { return no_rl ? 0.0 : lambda; }
};

double reward_of(const ImpressionRecord& record, const TrainConfig& config);

struct StepStats {
  std::int64_t step = 0;
  double l_comb = 0.0;
  double l_ele = 0.0;
  double l_rl = 0.0;
  double total = 0.0;
  double param_norm = 0.0;
  /// Log timestamp of the batch's last record.
  std::int64_t timestamp_ms = 0;
  int records = 0;
};

struct TrainReport {
  std::vector<StepStats> steps;
  std::int64_t records_used = 0;
  /// Exposed element cut off by the pad size, or not in the ad's pool.
  std::int64_t skipped_truncated = 0;
  std::int64_t skipped_unknown_ad = 0;
  /// Batches left with fewer than two usable records.
  std::int64_t skipped_batches = 0;
  std::int64_t out_of_order = 0;

  void write_csv(std::ostream& out) const;
  void write_csv_file(const std::string& path) const;
};

/// A record resolved against the catalog.
struct ResolvedRecord {
  const ImpressionRecord* record = nullptr;
  const Ad* ad = nullptr;
  std::vector<int> slots;
};

/// Looks up ads and exposed slots; counts and drops unusable records.
std::vector<ResolvedRecord> resolve_records(const Catalog& catalog,
                                            std::span<const ImpressionRecord> records,
                                            std::size_t pad_size, TrainReport* report);

/// Loss terms of one batch, recorded on a tape.
struct LossTerms {
  std::optional<Var> comb, ele, mil, rl, total;
};

/// L_RL = -mean_i r_i * log pi(c_i) with log pi = sum_j log P(c_ij).
template <typename Scalar>
Var reinforce_loss(diff::Tape<Scalar>& tape, Var log_probs, const Bags& bags,
                   const std::vector<double>& rewards) {
  std::vector<Scalar> w;
  w.reserve(bags.rows.size());
  const double n = static_cast<double>(bags.size());
  for (std::size_t b = 0; b < bags.size(); ++b)
    for (int i = 0; i < bags.segments[b].size; ++i) w.push_back(static_cast<Scalar>(-rewards[b] / n));
  Var lp = diff::gather_rows(tape, log_probs, bags.rows);
  return diff::weighted_sum(tape, lp, std::move(w));
}

/// Builds L = L_MIL + lambda * L_RL for a batch (with ablations applied).
/// Terms switched off are left out of the graph entirely.
template <typename Scalar>
LossTerms total_loss(diff::Tape<Scalar>& tape, GencoModel<Scalar>& model,
                     std::span<const ResolvedRecord> batch, const TrainConfig& config) {
  LossTerms t;
  const double lambda = config.effective_lambda();
  const bool use_mil = !config.no_mil;
  const bool use_rl = lambda != 0.0;
  if (!use_mil && !use_rl) return t;

  std::vector<RequestInput> inputs;
  inputs.reserve(batch.size());
  for (const auto& r : batch) inputs.push_back({r.ad, &r.record->context});
  auto fwd = model.forward(tape, inputs, Mode::kTrain);

  Bags bags;
  std::vector<Scalar> labels;
  std::vector<double> rewards;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    bags.add(fwd.layout, static_cast<int>(i), batch[i].slots);
    labels.push_back(batch[i].record->click ? Scalar(1) : Scalar(0));
    rewards.push_back(reward_of(*batch[i].record, config));
  }

  if (use_mil) {
    auto bag = reward_forward(tape, model, fwd.h, fwd.features, bags);
    t.comb = loss_comb(tape, bag.scores, labels);
    t.ele = loss_ele(tape, fwd.scores, bags, labels);
    t.mil = loss_mil(tape, *t.comb, *t.ele);
  }
  if (use_rl) t.rl = reinforce_loss(tape, fwd.log_probs, bags, rewards);

  if (t.mil && t.rl)
    t.total = diff::add(tape, *t.mil, diff::scale(tape, *t.rl, static_cast<Scalar>(lambda)));
  else if (t.mil)
    t.total = t.mil;
  else
    t.total = diff::scale(tape, *t.rl, static_cast<Scalar>(lambda));
  return t;
}

/// One SGD step on a batch. Returns the step's loss values; a batch with no
/// active loss term leaves the model untouched.
template <typename Scalar>
StepStats train_step(GencoModel<Scalar>& model, std::span<const ResolvedRecord> batch,
                     const TrainConfig& config) {
  StepStats s;
  s.records = static_cast<int>(batch.size());
  diff::Tape<Scalar> tape;
  auto terms = total_loss(tape, model, batch, config);
  auto value = [&](const std::optional<Var>& v) {
    return v ? static_cast<double>(tape.scalar(*v)) : 0.0;
  };
  s.l_comb = value(terms.comb);
  s.l_ele = value(terms.ele);
  s.l_rl = value(terms.rl);
  s.total = value(terms.total);
  if (!std::isfinite(s.total))
    throw diff::NonFiniteError("non-finite loss: comb=" + std::to_string(s.l_comb) +
                               " ele=" + std::to_string(s.l_ele) + " rl=" + std::to_string(s.l_rl));
  if (terms.total) {
    tape.backward(*terms.total);
    diff::sgd_step(model.params(), static_cast<Scalar>(config.lr));
  }
  s.param_norm = model.params().norm();
  return s;
}

/// Single chronological pass in consecutive batches. Records are taken in
/// the given order; nothing is sorted or shuffled.
template <typename Scalar>
TrainReport train(GencoModel<Scalar>& model, std::span<const ImpressionRecord> logs,
                  const TrainConfig& config,
                  const std::function<void(const StepStats&)>& on_step = {}) {
  config.validate();
  if (config.no_context == model.use_context())
    throw std::invalid_argument("model context switch does not match the no_context flag");
  TrainReport report;
  for (std::size_t i = 1; i < logs.size(); ++i)
    if (logs[i].context.timestamp_ms < logs[i - 1].context.timestamp_ms) ++report.out_of_order;

  const std::size_t bs = static_cast<std::size_t>(config.batch_size);
  std::int64_t step = 0;
  for (std::size_t begin = 0; begin < logs.size(); begin += bs) {
    const std::size_t n = std::min(bs, logs.size() - begin);
    auto chunk = logs.subspan(begin, n);
    auto batch = resolve_records(model.catalog(), chunk, model.config().pad_size, &report);
    if (batch.size() < 2) {
      ++report.skipped_batches;
      continue;
    }
    StepStats s = train_step(model, std::span<const ResolvedRecord>(batch), config);
    s.step = step++;
    s.timestamp_ms = chunk.back().context.timestamp_ms;
    report.records_used += static_cast<std::int64_t>(batch.size());
    report.steps.push_back(s);
    if (on_step) on_step(s);
    if (config.checkpoint_every > 0 && !config.checkpoint_path.empty() &&
        step % config.checkpoint_every == 0)
      model.save(config.checkpoint_path + ".step" + std::to_string(step));
  }
  if (!config.checkpoint_path.empty()) model.save(config.checkpoint_path);
  return report;
}

/// Model configuration matching a training configuration's switches.
ModelConfig model_config_for(const TrainConfig& config, ModelConfig base = {});

}  // namespace genco
