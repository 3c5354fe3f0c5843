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

#include "harness.hpp"

#include <chrono>
#include <cmath>

namespace genco::harness {

namespace {

RequestContext probe_context(std::uint64_t id) {
  RequestContext c;
  c.request_id = id;
  c.user = {id % 97, static_cast<int>(id % 8), static_cast<int>(id % 3)};
  c.query = {id % 13, {id % 7}};
  c.timestamp_ms = static_cast<std::int64_t>(id);
  return c;
}

template <typename Scalar>
double mean_p_best(GencoModel<Scalar>& model, const Catalog& catalog, const std::vector<RequestContext>& probes) {
  std::vector<RequestInput> in;
  for (const auto& c : probes) in.push_back({&catalog.ads()[0], &c});
  diff::Tape<Scalar> tape;
  auto f = model.forward(tape, in, Mode::kInference);
  double total = 0.0;
  for (std::size_t i = 0; i < probes.size(); ++i) total += model.distributions(tape, f, static_cast<int>(i))[0]->probs[1];
  return total / static_cast<double>(probes.size());
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

PolicyOutcome serve(SelectionPolicy& policy, const Catalog& catalog, const sim::GroundTruth& gt,
                    std::size_t requests, std::uint64_t seed) {
  auto res = sim::run_policy_simulation(policy, catalog, gt, requests, seed);
  PolicyOutcome out;
  out.realized_ctr = res.ctr;
  for (double p : res.expected_ctr) out.expected_ctr += p;
  out.expected_ctr /= static_cast<double>(requests);
  for (const auto& r : res.log) out.clicks.push_back(r.click);
  return out;
}

TrainConfig desk_train(std::uint64_t seed, int batch) {
  TrainConfig tc;
  tc.batch_size = batch;
  tc.seed = seed;
  return tc;
}

}  // namespace

BanditResult bandit_run(std::uint64_t seed, int steps, int batch, double target) {
  Ad ad;
  ad.ad_id = 1;
  ad.pools.resize(6);
  ad.pools[0] = CandidateSet{1, 0, {11, 12}};
  Catalog catalog(default_components(), {ad});
  const double ctr[2] = {0.1, 0.9};

  TrainConfig tc;
  tc.no_mil = true;
  tc.lambda = 1.0;
  tc.seed = seed;
  tc.batch_size = batch;
  ModelConfig mc = model_config_for(tc);
  mc.seed = seed;
  GencoModel<float> model(catalog, mc);

  std::vector<RequestContext> probes;
  for (std::uint64_t i = 0; i < 16; ++i) probes.push_back(probe_context(1'000'000 + i));
  Engine rng = make_stream(seed, "bandit");
  BanditResult out;
  std::uint64_t rid = 0;
  for (int step = 0; step < steps; ++step) {
    std::vector<RequestContext> ctx;
    for (int i = 0; i < batch; ++i) ctx.push_back(probe_context(++rid));
    std::vector<RequestInput> in;
    for (const auto& c : ctx) in.push_back({&catalog.ads()[0], &c});
    std::vector<ImpressionRecord> records(static_cast<std::size_t>(batch));
    {
      diff::Tape<float> tape;
      auto f = model.forward(tape, in, Mode::kInference);
      for (int i = 0; i < batch; ++i) {
        auto s = sample_combinations(model.distributions(tape, f, i), 1, rng).front();
        auto& r = records[static_cast<std::size_t>(i)];
        r.context = ctx[static_cast<std::size_t>(i)];
        r.ad_id = 1;
        r.exposed = to_combination(catalog.ads()[0], s.slots);
        r.click = sim::sample_click(rng, ctr[s.slots[0]]);
      }
    }
    auto resolved = resolve_records(catalog, records, mc.pad_size, nullptr);
    train_step(model, std::span<const ResolvedRecord>(resolved), tc);
    if (out.first_step_above < 0 && mean_p_best(model, catalog, probes) > target) out.first_step_above = step;
  }
  out.p_best = mean_p_best(model, catalog, probes);
  return out;
}

EndToEnd end_to_end(const sim::SimConfig& sim_config, std::size_t train_logs, std::size_t eval_requests,
                    std::uint64_t seed, int batch) {
  auto [catalog, gt] = sim::make_synthetic_catalog(sim_config);
  auto logs = sim::generate_random_policy_logs(catalog, gt, train_logs, derive_seed(seed, "train-logs"));
  EndToEnd out;
  const auto t0 = std::chrono::steady_clock::now();
  TrainConfig tc = desk_train(seed, batch);
  GencoModel<float> model(catalog, model_config_for(tc));
  train(model, std::span<const ImpressionRecord>(logs), tc);
  MlpConfig mc;
  mc.seed = seed;
  MlpModel mlp(catalog, mc);
  train_mlp(mlp, logs, batch, tc.lr);
  out.train_seconds = seconds_since(t0);

  const std::uint64_t traffic = derive_seed(seed, "eval-traffic");
  UniformPolicy uniform;
  MlpPolicy mlp_policy(mlp);
  GencoPolicy genco(model);
  out.uniform = serve(uniform, catalog, gt, eval_requests, traffic);
  out.mlp = serve(mlp_policy, catalog, gt, eval_requests, traffic);
  out.genco = serve(genco, catalog, gt, eval_requests, traffic);
  out.genco_vs_uniform = eval::paired_bootstrap(out.genco.clicks, out.uniform.clicks, 1000, seed);
  out.genco_vs_mlp = eval::paired_bootstrap(out.genco.clicks, out.mlp.clicks, 1000, seed + 1);
  return out;
}

AblationGaps ablation_gaps(const sim::SimConfig& sim_config, std::size_t train_logs, std::size_t gap_requests,
                           std::uint64_t seed, int batch) {
  auto [catalog, gt] = sim::make_synthetic_catalog(sim_config);
  auto logs = sim::generate_random_policy_logs(catalog, gt, train_logs, derive_seed(seed, "train-logs"));
  const std::uint64_t traffic = derive_seed(seed, "gap-traffic");
  auto gap = [&](bool no_mil, bool no_rl, bool no_context) {
    TrainConfig tc = desk_train(seed, batch);
    tc.no_mil = no_mil;
    tc.no_rl = no_rl;
    tc.no_context = no_context;
    GencoModel<float> model(catalog, model_config_for(tc));
    train(model, std::span<const ImpressionRecord>(logs), tc);
    GencoPolicy policy(model);
    return eval::oracle_gap(policy, catalog, gt, gap_requests, traffic).mean;
  };
  AblationGaps g;
  g.full = gap(false, false, false);
  g.no_mil = gap(true, false, false);
  g.no_rl = gap(false, true, false);
  g.no_context = gap(false, false, true);
  return g;
}

std::vector<eval::LiftCell> bucket_lift(const sim::SimConfig& sim_config, std::size_t train_logs,
                                        std::size_t eval_logs, std::uint64_t seed, int batch) {
  auto [catalog, gt] = sim::make_synthetic_catalog(sim_config);
  auto logs = sim::generate_random_policy_logs(catalog, gt, train_logs, derive_seed(seed, "train-logs"));
  auto held_out = sim::generate_random_policy_logs(catalog, gt, eval_logs, derive_seed(seed, "eval-logs"));
  TrainConfig tc = desk_train(seed, batch);
  GencoModel<float> model(catalog, model_config_for(tc));
  train(model, std::span<const ImpressionRecord>(logs), tc);
  GencoPolicy policy(model);
  auto sel = eval::select_for_logs(policy, catalog, held_out, seed);
  eval::LiftOptions lo;
  lo.bootstrap = 200;
  lo.seed = seed;
  return eval::lift_by_bucket(catalog, held_out, sel, lo);
}

bool non_decreasing(const std::vector<eval::LiftCell>& cells, int component) {
  double prev = -INFINITY;
  for (const auto& c : cells) {
    if (c.component != component || !c.present) continue;
    if (c.lift < prev) return false;
    prev = c.lift;
  }
  return true;
}

double sign_test_p(int wins, int n) {
  double p = 0.0;
  for (int k = wins; k <= n; ++k) p += std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) - n * std::log(2.0));
  return p;
}

}  // namespace genco::harness
