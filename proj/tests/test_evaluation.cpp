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

#include "fixtures.hpp"
#include "genco/baselines.hpp"
#include "genco/evaluation.hpp"
#include "genco/serving.hpp"

using namespace genco;
using genco::testing::make_catalog;
using genco::testing::record;
using genco::testing::tiny_config;

namespace {

namespace fs = std::filesystem;

struct SimWorld {
  Catalog catalog;
  sim::GroundTruth gt;
};

SimWorld sim_world(std::uint64_t seed, std::size_t ads = 200) {
  sim::SimConfig sc;
  sc.seed = seed;
  sc.num_ads = ads;
  auto [c, g] = sim::make_synthetic_catalog(sc);
  return {std::move(c), std::move(g)};
}

double plain_ctr(std::span<const ImpressionRecord> logs) {
  double c = 0.0;
  for (const auto& r : logs) c += r.click;
  return c / static_cast<double>(logs.size());
}

}  // namespace

TEST_CASE("calibrated sCTR hand trace") {
  auto cat = make_catalog({{2}, {3}, {4}});
  std::vector<ImpressionRecord> logs = {record(cat, 1, {1}, 1, 1), record(cat, 2, {0}, 1, 2), record(cat, 3, {2}, 0, 3)};
  eval::Selections sel = {{1, -1, -1, -1, -1, -1}, {2, -1, -1, -1, -1, -1}, {2, -1, -1, -1, -1, -1}};
  auto acc = eval::sctr_accumulate(cat, logs, sel, 0);
  CHECK(acc.exposure == 6);
  CHECK(acc.click == 2);
  CHECK(eval::calibrated_sctr(cat, logs, sel, 0) == doctest::Approx(1.0 / 3.0));
  CHECK(eval::calibrated_sctr(cat, logs, sel, 0, false) == doctest::Approx(0.5));
  // Component 1 is covered by no ad.
  CHECK_THROWS_AS(eval::calibrated_sctr(cat, logs, sel, 1), eval::NoMatchError);
  sel[0][0] = 0;
  sel[2][0] = 0;
  CHECK_THROWS_AS(eval::calibrated_sctr(cat, logs, sel, 0), eval::NoMatchError);
}

TEST_CASE("a policy that replays the logs on clicked records scores one") {
  auto cat = make_catalog({{3, 2}, {4, 1}});
  std::vector<ImpressionRecord> logs;
  for (int i = 0; i < 12; ++i) logs.push_back(record(cat, 1 + i % 2, {i % 3, 0}, 1, static_cast<std::uint64_t>(i + 1)));
  auto sel = eval::logged_selections(cat, logs);
  auto rep = eval::component_sctr(cat, logs, sel);
  for (const auto& c : rep.components) {
    if (c.component > 1) {
      CHECK_FALSE(c.sctr);
      continue;
    }
    REQUIRE(c.sctr);
    CHECK(*c.sctr == 1.0);
  }
  CHECK(*rep.overall_sctr == 1.0);
}

TEST_CASE("uniform selection on uniform logs recovers the log CTR") {
  auto w = sim_world(21);
  auto logs = sim::generate_random_policy_logs(w.catalog, w.gt, 100000, 22);
  UniformPolicy uniform;
  auto sel = eval::select_for_logs(uniform, w.catalog, logs, 23);
  auto rep = eval::component_sctr(w.catalog, logs, sel);
  CHECK(rep.log_ctr == doctest::Approx(plain_ctr(logs)));
  for (const auto& c : rep.components) {
    REQUIRE(c.sctr);
    INFO(c.name);
    CHECK(std::abs(*c.sctr - rep.log_ctr) < 0.01);
  }

  SUBCASE("lift over uniform is near zero in every bucket") {
    eval::LiftOptions lo;
    lo.bootstrap = 50;
    lo.seed = 1;
    for (const auto& cell : eval::lift_by_bucket(w.catalog, logs, sel, lo)) {
      if (!cell.present || cell.records < 5000) continue;
      INFO(cell.component_name, " ", cell.bucket);
      CHECK(std::abs(cell.lift) < 0.15);
      CHECK(cell.ci_low <= cell.lift);
      CHECK(cell.lift <= cell.ci_high);
    }
  }
}

TEST_CASE("single-candidate components always match") {
  auto cat = make_catalog({{3, 1}, {2, 1}});
  std::vector<ImpressionRecord> logs;
  for (int i = 0; i < 9; ++i) logs.push_back(record(cat, 1 + i % 2, {0, 0}, i % 4 == 0, static_cast<std::uint64_t>(i + 1)));
  eval::Selections sel(logs.size(), std::vector<int>{1, 0, -1, -1, -1, -1});
  CHECK(eval::calibrated_sctr(cat, logs, sel, 1) == doctest::Approx(plain_ctr(logs)));
}

TEST_CASE("bucket edges") {
  auto title = eval::default_buckets("title");
  REQUIRE(title.size() == 3);
  CHECK(title[0].hi == 2);
  CHECK(title[1].lo == 3);
  CHECK(title[1].hi == 5);
  CHECK(title[2].lo == 6);
  auto attr = eval::default_buckets("attribute");
  REQUIRE(attr.size() == 3);
  CHECK(attr[0].hi == 3);
  CHECK(attr[1].lo == 4);
  CHECK(attr[1].hi == 8);
  CHECK(attr[2].lo == 9);
  CHECK(eval::default_buckets("image")[0].hi == 2);
  CHECK(eval::default_buckets("structure_attribute")[0].hi == 3);

  auto cat = make_catalog({{2}, {4}});
  std::vector<ImpressionRecord> logs = {record(cat, 1, {0}, 1, 1), record(cat, 2, {1}, 0, 2)};
  auto cells = eval::lift_by_bucket(cat, logs, eval::logged_selections(cat, logs), {0, 0, {}});
  int absent = 0;
  for (const auto& c : cells)
    if (c.component == 0) absent += !c.present;
  // Bucket "3-5" holds a record without clicks, ">5" holds none.
  CHECK(absent == 2);
}

TEST_CASE("component importance") {
  SUBCASE("single-component ads put all weight on that component") {
    auto cat = make_catalog({{3}, {2}});
    std::vector<ImpressionRecord> logs = {record(cat, 1, {0}, 1, 1), record(cat, 2, {1}, 0, 2)};
    GencoModel<float> model(cat, tiny_config());
    auto w = mil_weights(model, logs);
    auto t = eval::component_importance(cat, logs, w);
    for (const auto& [category, row] : t.rows) {
      CHECK(row[0] == doctest::Approx(1.0));
      for (std::size_t j = 1; j < row.size(); ++j) CHECK(row[j] == 0.0);
    }
  }
  SUBCASE("rows are normalized") {
    auto w = sim_world(24, 40);
    auto logs = sim::generate_random_policy_logs(w.catalog, w.gt, 500, 25);
    GencoModel<float> model(w.catalog, tiny_config());
    auto weights = mil_weights(model, logs);
    for (const auto& row : weights)
      if (!row.empty()) CHECK(std::accumulate(row.begin(), row.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-5));
    auto t = eval::component_importance(w.catalog, logs, weights);
    CHECK(t.rows.size() > 1);
    for (const auto& [category, row] : t.rows) CHECK(std::accumulate(row.begin(), row.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("oracle gap") {
  auto w = sim_world(26, 30);
  SUBCASE("the oracle has no regret") {
    sim::OraclePolicy oracle(w.gt);
    auto g = eval::oracle_gap(oracle, w.catalog, w.gt, 500, 27);
    CHECK(g.requests + g.skipped == 500);
    CHECK(g.mean == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(g.max == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("uniform regret is the best-minus-mean spread") {
    UniformPolicy uniform;
    const std::size_t n = 20000;
    auto g = eval::oracle_gap(uniform, w.catalog, w.gt, n, 28);
    double spread = 0.0;
    std::size_t used = 0;
    for (std::uint64_t rid = 1; rid <= n; ++rid) {
      const Ad& ad = sim::draw_ad(w.catalog, 28, rid);
      if (combination_count(ad) > kDefaultEnumerationCap) continue;
      auto s = sim::oracle_stats(w.gt, ad, sim::draw_context(w.gt, 28, rid).user.age_bucket);
      spread += s.best_ctr - s.mean_ctr;
      ++used;
    }
    REQUIRE(used == g.requests);
    CHECK(g.mean == doctest::Approx(spread / static_cast<double>(used)).epsilon(0.03));
    CHECK(g.p50 <= g.p90);
    CHECK(g.p90 <= g.p99);
    CHECK(g.p99 <= g.max);
  }
}

TEST_CASE("paired bootstrap") {
  std::vector<double> a = {1, 2, 3, 4, 5}, b = {0, 1, 2, 3, 4};
  auto ci = eval::paired_bootstrap(a, b, 200, 1);
  CHECK(ci.mean == doctest::Approx(1.0));
  CHECK(ci.low == doctest::Approx(1.0));
  CHECK(ci.high == doctest::Approx(1.0));

  std::vector<double> x(400), y(400, 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = (i % 4 == 0) ? 1.0 : 0.0;
  auto c1 = eval::paired_bootstrap(x, y, 500, 7);
  auto c2 = eval::paired_bootstrap(x, y, 500, 7);
  CHECK(c1.low == c2.low);
  CHECK(c1.high == c2.high);
  CHECK(c1.low < 0.25);
  CHECK(c1.high > 0.25);
  CHECK(c1.low > 0.15);
  CHECK(c1.high < 0.35);
}

TEST_CASE("report files") {
  const fs::path dir = fs::temp_directory_path() / "genco_eval_report";
  fs::create_directories(dir);
  auto cat = make_catalog({{2, 3}, {4, 1}});
  std::vector<ImpressionRecord> logs;
  for (int i = 0; i < 20; ++i) logs.push_back(record(cat, 1 + i % 2, {i % 2, 0}, i % 3 == 0, static_cast<std::uint64_t>(i + 1)));
  eval::EvalReport rep;
  rep.policy = "uniform";
  auto sel = eval::logged_selections(cat, logs);
  rep.sctr = eval::component_sctr(cat, logs, sel);
  rep.lift = eval::lift_by_bucket(cat, logs, sel, {20, 3, {}});
  const auto path = (dir / "r.json").string();
  eval::write_json(rep, path);
  auto back = eval::read_json(path);
  CHECK(back.policy == "uniform");
  CHECK(back.sctr.overall == rep.sctr.overall);
  REQUIRE(back.sctr.components.size() == rep.sctr.components.size());
  for (std::size_t j = 0; j < back.sctr.components.size(); ++j) {
    CHECK(back.sctr.components[j].acc == rep.sctr.components[j].acc);
    CHECK(back.sctr.components[j].sctr == rep.sctr.components[j].sctr);
  }
  CHECK(back.lift.size() == rep.lift.size());
  CHECK_FALSE(back.gap);

  eval::write_csv(rep, (dir / "r").string());
  CHECK(fs::exists(dir / "r.sctr.csv"));
  CHECK(fs::exists(dir / "r.lift.csv"));
  CHECK_FALSE(fs::exists(dir / "r.gap.csv"));

  std::ofstream(dir / "bad.json") << "{\"schema_version\": 99}";
  CHECK_THROWS_AS(eval::read_json((dir / "bad.json").string()), SchemaError);
  std::ofstream(dir / "broken.json") << "{";
  CHECK_THROWS_AS(eval::read_json((dir / "broken.json").string()), SchemaError);
  fs::remove_all(dir);
}
