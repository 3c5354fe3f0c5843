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

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "fixtures.hpp"
#include "genco/simulator.hpp"
#include "genco/training.hpp"
#include "harness.hpp"

using namespace genco;
using genco::testing::make_catalog;
using genco::testing::record;
using genco::testing::tiny_config;

namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<ImpressionRecord> small_logs(const Catalog& cat, int n) {
  std::vector<ImpressionRecord> logs;
  for (int i = 0; i < n; ++i)
    logs.push_back(record(cat, 1 + i % 2, {i % 3, i % 2, i % 2, 0}, i % 3 == 0, static_cast<std::uint64_t>(i + 1)));
  return logs;
}

Catalog small_catalog() { return make_catalog({{3, 2, 2, 1}, {3, 4, 2, 2}}); }

}  // namespace

TEST_CASE("rewards follow the click label") {
  TrainConfig tc;
  auto cat = small_catalog();
  double sum = 0.0;
  for (int i = 0; i < 10; ++i) sum += reward_of(record(cat, 1, {0, 0, 0, 0}, i < 3), tc);
  CHECK(sum == doctest::Approx(2.3));
  CHECK(reward_of(record(cat, 1, {0, 0, 0, 0}, 1), tc) == 1.0);
  CHECK(reward_of(record(cat, 1, {0, 0, 0, 0}, 0), tc) == doctest::Approx(-0.1));
}

TEST_CASE("REINFORCE loss of one record is -r log pi") {
  diff::Tape<double> tape;
  diff::Tensor<double> lp(3, 1);
  lp << -5.0, -0.4, -0.293;
  Bags bags;
  bags.rows = {1, 2};
  bags.row_component = {0, 1};
  bags.segments = {{0, 2}};
  bags.bag_record = {0};
  Var l = reinforce_loss(tape, tape.constant(lp), bags, {1.0});
  CHECK(tape.scalar(l) == doctest::Approx(0.693));
}

TEST_CASE("total loss is L_MIL + lambda L_RL") {
  auto cat = small_catalog();
  GencoModel<double> model(cat, tiny_config());
  auto logs = small_logs(cat, 6);
  auto batch = resolve_records(cat, logs, 15, nullptr);
  std::span<const ResolvedRecord> span(batch);

  SUBCASE("full objective") {
    TrainConfig tc;
    diff::Tape<double> t;
    auto terms = total_loss(t, model, span, tc);
    REQUIRE(terms.mil);
    REQUIRE(terms.rl);
    CHECK(t.scalar(*terms.mil) == doctest::Approx(t.scalar(*terms.comb) + t.scalar(*terms.ele)).epsilon(1e-14));
    CHECK(t.scalar(*terms.total) ==
          doctest::Approx(t.scalar(*terms.mil) + 0.15 * t.scalar(*terms.rl)).epsilon(1e-14));
  }
  SUBCASE("no_rl leaves exactly L_MIL") {
    TrainConfig tc;
    tc.no_rl = true;
    diff::Tape<double> t;
    auto terms = total_loss(t, model, span, tc);
    CHECK_FALSE(terms.rl);
    CHECK(t.scalar(*terms.total) == t.scalar(*terms.mil));
  }
  SUBCASE("no_mil leaves lambda L_RL") {
    TrainConfig tc;
    tc.no_mil = true;
    diff::Tape<double> t;
    auto terms = total_loss(t, model, span, tc);
    CHECK_FALSE(terms.mil);
    CHECK(t.scalar(*terms.total) == doctest::Approx(0.15 * t.scalar(*terms.rl)));
  }
}

TEST_CASE("without cross-component context the loss stays finite and differentiable") {
  auto cat = small_catalog();
  TrainConfig tc;
  tc.no_context = true;
  GencoModel<double> model(cat, model_config_for(tc, tiny_config()));
  CHECK_FALSE(model.use_context());
  auto logs = small_logs(cat, 6);
  auto batch = resolve_records(cat, logs, 15, nullptr);
  diff::Tape<double> t;
  auto terms = total_loss(t, model, std::span<const ResolvedRecord>(batch), tc);
  CHECK(std::isfinite(t.scalar(*terms.total)));
  t.backward(*terms.total);
  double norm = 0.0;
  for (const auto& [name, p] : model.params()) {
    CHECK(p.grad.allFinite());
    norm += p.grad.squaredNorm();
  }
  CHECK(norm > 0.0);
}

TEST_CASE("lambda 0 with no_mil trains nothing") {
  auto cat = small_catalog();
  TrainConfig tc;
  tc.no_mil = true;
  tc.lambda = 0.0;
  tc.batch_size = 4;
  GencoModel<float> model(cat, tiny_config());
  std::ostringstream before, after;
  diff::save_checkpoint(before, model.params());
  auto report = train(model, std::span<const ImpressionRecord>(small_logs(cat, 20)), tc);
  diff::save_checkpoint(after, model.params());
  CHECK(before.str() == after.str());
  for (const auto& s : report.steps) CHECK(s.total == 0.0);
}

TEST_CASE("training is deterministic and order-sensitive") {
  sim::SimConfig sc;
  sc.num_ads = 20;
  sc.seed = 3;
  auto [cat, gt] = sim::make_synthetic_catalog(sc);
  auto logs = sim::generate_random_policy_logs(cat, gt, 2000, 4);
  TrainConfig tc;
  tc.batch_size = 16;
  tc.seed = 3;
  auto checkpoint = [&](const std::vector<ImpressionRecord>& data) {
    GencoModel<float> model(cat, model_config_for(tc));
    train(model, std::span<const ImpressionRecord>(data), tc);
    std::ostringstream out;
    diff::save_checkpoint(out, model.params());
    return out.str();
  };
  const auto a = checkpoint(logs);
  CHECK(a == checkpoint(logs));
  auto reversed = logs;
  std::reverse(reversed.begin(), reversed.end());
  CHECK(a != checkpoint(reversed));
}

TEST_CASE("train bookkeeping") {
  auto cat = small_catalog();
  TrainConfig tc;
  tc.batch_size = 4;
  auto logs = small_logs(cat, 9);  // the last batch has one record
  logs[2].context.timestamp_ms = 1;
  logs[5].ad_id = 99;

  SUBCASE("skips, unknown ads and ordering are counted") {
    GencoModel<float> model(cat, tiny_config());
    auto report = train(model, std::span<const ImpressionRecord>(logs), tc);
    CHECK(report.skipped_batches == 1);
    CHECK(report.skipped_unknown_ad == 1);
    CHECK(report.out_of_order == 1);
    CHECK(report.records_used == 7);
    CHECK(report.steps.size() == 2);
    CHECK(report.steps[1].timestamp_ms == logs[7].context.timestamp_ms);
    std::ostringstream csv;
    report.write_csv(csv);
    CHECK(csv.str().find('\n') != std::string::npos);
  }
  SUBCASE("context switch must match the flag") {
    GencoModel<float> model(cat, tiny_config());
    tc.no_context = true;
    CHECK_THROWS_AS(train(model, std::span<const ImpressionRecord>(logs), tc), std::invalid_argument);
  }
  SUBCASE("intermediate checkpoints") {
    const fs::path dir = fs::temp_directory_path() / "genco_train_ckpt";
    fs::create_directories(dir);
    tc.checkpoint_every = 1;
    tc.checkpoint_path = (dir / "m.ckpt").string();
    GencoModel<float> model(cat, tiny_config());
    train(model, std::span<const ImpressionRecord>(logs), tc);
    CHECK(fs::exists(dir / "m.ckpt.step1"));
    CHECK(fs::exists(dir / "m.ckpt.step2"));
    CHECK(slurp(dir / "m.ckpt") == slurp(dir / "m.ckpt.step2"));
    fs::remove_all(dir);
  }
  SUBCASE("invalid settings are rejected") {
    GencoModel<float> model(cat, tiny_config());
    tc.batch_size = 0;
    CHECK_THROWS(train(model, std::span<const ImpressionRecord>(logs), tc));
  }
}

TEST_CASE("training on simulator logs lowers the bag loss") {
  sim::SimConfig sc;
  sc.seed = 5;
  auto [cat, gt] = sim::make_synthetic_catalog(sc);
  auto logs = sim::generate_random_policy_logs(cat, gt, 100000, 6);
  TrainConfig tc;
  tc.seed = 5;
  GencoModel<float> model(cat, model_config_for(tc));
  auto report = train(model, std::span<const ImpressionRecord>(logs), tc);
  REQUIRE(report.steps.size() > 100);
  auto mean_comb = [&](std::size_t from, std::size_t to) {
    double s = 0.0;
    for (std::size_t i = from; i < to; ++i) s += report.steps[i].l_comb;
    return s / static_cast<double>(to - from);
  };
  const std::size_t n = report.steps.size();
  CHECK(mean_comb(n - 50, n) < mean_comb(0, 50));
}

TEST_CASE("policy gradient alone learns a two-armed bandit") {
  auto r = harness::bandit_run(1);
  CHECK(r.p_best > 0.9);
  CHECK(r.first_step_above >= 0);
}
