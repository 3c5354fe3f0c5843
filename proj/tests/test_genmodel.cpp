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
#include <cstdio>
#include <map>

#include "fixtures.hpp"
#include "genco/diff/gradcheck.hpp"
#include "genco/genmodel.hpp"
#include "genco/sampling.hpp"

using namespace genco;
using genco::testing::context;
using genco::testing::make_catalog;
using genco::testing::tiny_config;

namespace {

template <typename Scalar>
std::vector<double> column(const diff::Tape<Scalar>& tape, Var v) {
  const auto& t = tape.value(v);
  std::vector<double> out;
  for (Eigen::Index i = 0; i < t.rows(); ++i) out.push_back(static_cast<double>(t(i, 0)));
  return out;
}

Distributions dist_of(std::vector<std::vector<double>> probs) {
  Distributions d;
  for (std::size_t j = 0; j < probs.size(); ++j) {
    std::vector<double> logits;
    for (double p : probs[j]) logits.push_back(std::log(p));
    d.push_back(make_distribution(static_cast<int>(j), logits, 15));
  }
  return d;
}

}  // namespace

TEST_CASE("context embedding has width 8 and is deterministic in inference") {
  auto cat = make_catalog({{3, 2, 1, 4, 2, 5}, {2, 2}});
  GencoModel<double> model(cat, tiny_config());
  auto c1 = context(1), c2 = context(2, 3);
  std::vector<RequestInput> in = {{&cat.ads()[0], &c1}, {&cat.ads()[1], &c2}};
  diff::Tape<double> t1, t2;
  auto f1 = model.forward(t1, in, Mode::kInference);
  auto f2 = model.forward(t2, in, Mode::kInference);
  CHECK(t1.value(f1.h).cols() == 8);
  CHECK(t1.value(f1.h).rows() == 2);
  CHECK(t1.value(f1.h) == t2.value(f2.h));
  CHECK(t1.value(f1.features).cols() == 12);
}

TEST_CASE("distributions sum to one with zero mass on padding") {
  auto cat = make_catalog({{3, 2, 1, 4, 2, 5}, {2, 0, 0, 7}, {20, 1}});
  GencoModel<float> model(cat, tiny_config(3));
  std::vector<RequestContext> ctx = {context(1), context(2), context(3)};
  std::vector<RequestInput> in;
  for (std::size_t i = 0; i < 3; ++i) in.push_back({&cat.ads()[i], &ctx[i]});
  diff::Tape<float> tape;
  auto f = model.forward(tape, in, Mode::kInference);
  for (int r = 0; r < 3; ++r) {
    auto d = model.distributions(tape, f, r);
    for (int j = 0; j < 6; ++j) {
      const Ad& ad = cat.ads()[static_cast<std::size_t>(r)];
      CHECK(d[j].has_value() == ad.covers(j));
      if (!d[j]) continue;
      double total = 0;
      for (std::size_t k = 0; k < 15; ++k) {
        total += d[j]->probs[k];
        if (k >= ad.pools[j]->size()) CHECK(d[j]->probs[k] == 0.0);
      }
      CHECK(std::abs(total - 1.0) < 1e-9);
    }
  }
}

TEST_CASE("single candidates and duplicate candidates") {
  auto cat = make_catalog({{1, 2}});
  // Same element listed twice: the model must treat the slots symmetrically.
  auto ads = cat.ads();
  ads[0].pools[1]->elements[1] = ads[0].pools[1]->elements[0];
  Catalog dup(cat.components(), ads);
  GencoModel<double> model(dup, tiny_config());
  auto c = context(4);
  std::vector<RequestInput> in = {{&dup.ads()[0], &c}};
  diff::Tape<double> tape;
  auto f = model.forward(tape, in, Mode::kInference);
  auto d = model.distributions(tape, f, 0);
  CHECK(d[0]->probs[0] == 1.0);
  CHECK(d[1]->probs[0] == doctest::Approx(0.5));
  CHECK(d[1]->probs[1] == doctest::Approx(0.5));
}

TEST_CASE("softmax is shift invariant") {
  auto a = make_distribution(0, {0.3, -1.2, 2.0}, 15);
  auto b = make_distribution(0, {10.3, 8.8, 12.0}, 15);
  for (std::size_t k = 0; k < 15; ++k) CHECK(a.probs[k] == doctest::Approx(b.probs[k]).epsilon(1e-12));
  CHECK_THROWS_AS(make_distribution(0, {}, 15), std::invalid_argument);
}

TEST_CASE("cross-component context against a hand computation") {
  auto cat = make_catalog({{2, 2}});
  GencoModel<double> model(cat, tiny_config(5));
  auto c = context(1);
  std::vector<RequestInput> in = {{&cat.ads()[0], &c}};
  diff::Tape<double> tape;
  auto f = model.forward(tape, in, Mode::kInference);
  const auto& feats = tape.value(f.features);
  REQUIRE(feats.rows() == 4);
  const auto& E = feats.leftCols(4);
  const auto& P = model.params();
  Eigen::MatrixXd q = E * P.at("attn.query.weight").value;
  Eigen::MatrixXd k = E * P.at("attn.key.weight").value;
  Eigen::MatrixXd v = E * P.at("attn.value.weight").value;
  const int comp[4] = {0, 0, 1, 1};
  for (int a = 0; a < 4; ++a) {
    Eigen::RowVectorXd z = Eigen::RowVectorXd::Zero(4);
    double total = 0;
    for (int b = 0; b < 4; ++b) {
      if (a != b && comp[a] == comp[b]) continue;
      const double w = std::exp(q.row(a).dot(k.row(b)) / 2.0);
      z += w * v.row(b);
      total += w;
    }
    z /= total;
    for (int d = 0; d < 4; ++d) CHECK(feats(a, 8 + d) == doctest::Approx(z(d)).epsilon(1e-12));
  }
}

TEST_CASE("one candidate alone attends only to itself") {
  auto cat = make_catalog({{1}});
  GencoModel<double> model(cat, tiny_config(6));
  auto c = context(1);
  std::vector<RequestInput> in = {{&cat.ads()[0], &c}};
  diff::Tape<double> tape;
  auto f = model.forward(tape, in, Mode::kInference);
  const auto& feats = tape.value(f.features);
  Eigen::RowVectorXd want = feats.row(0).leftCols(4) * model.params().at("attn.value.weight").value;
  CHECK(feats.row(0).rightCols(4).isApprox(want));
}

TEST_CASE("truncated candidates do not change the distribution") {
  auto cat = make_catalog({{15, 3}, {20, 3}}, 1);
  GencoModel<float> model(cat, tiny_config(2));
  auto c = context(9);
  // Ad ids differ, so compare with the ad embedding pinned to the same row.
  auto& ad_emb = model.params().at("emb.ad").value;
  ad_emb.row(2) = ad_emb.row(1);
  std::vector<RequestInput> in = {{&cat.ads()[0], &c}, {&cat.ads()[1], &c}};
  diff::Tape<float> tape;
  auto f = model.forward(tape, in, Mode::kInference);
  auto a = model.distributions(tape, f, 0), b = model.distributions(tape, f, 1);
  for (int j = 0; j < 2; ++j) CHECK(a[j]->probs == b[j]->probs);
}

TEST_CASE("inference rows do not depend on batch composition") {
  auto cat = make_catalog({{3, 2, 1, 4, 2, 5}, {2, 3}, {4, 1, 2}});
  GencoModel<float> model(cat, tiny_config(4));
  std::vector<RequestContext> ctx = {context(1), context(2), context(3)};
  std::vector<RequestInput> all;
  for (std::size_t i = 0; i < 3; ++i) all.push_back({&cat.ads()[i], &ctx[i]});
  diff::Tape<float> big;
  auto fb = model.forward(big, all, Mode::kInference);
  for (int r = 0; r < 3; ++r) {
    diff::Tape<float> one;
    auto f1 = model.forward(one, std::span<const RequestInput>(&all[static_cast<std::size_t>(r)], 1),
                            Mode::kInference);
    auto d1 = model.distributions(one, f1, 0), db = model.distributions(big, fb, r);
    for (int j = 0; j < 6; ++j)
      if (d1[j])
        for (std::size_t k = 0; k < 15; ++k) CHECK(d1[j]->scores[k] == doctest::Approx(db[j]->scores[k]).epsilon(1e-5));
  }
}

TEST_CASE("checkpoint round trip restores scores and the context switch") {
  auto cat = make_catalog({{3, 2, 1}});
  ModelConfig cfg = tiny_config(8);
  cfg.use_context = false;
  GencoModel<float> a(cat, cfg);
  const std::string path = "genmodel_roundtrip.ckpt";
  a.save(path);
  GencoModel<float> b(cat, tiny_config(99));
  CHECK(b.use_context());
  b.load(path);
  CHECK_FALSE(b.use_context());
  auto c = context(1);
  std::vector<RequestInput> in = {{&cat.ads()[0], &c}};
  diff::Tape<float> ta, tb;
  auto fa = a.forward(ta, in, Mode::kInference);
  auto fb = b.forward(tb, in, Mode::kInference);
  CHECK(ta.value(fa.scores) == tb.value(fb.scores));
  GencoModel<double> wide(cat, tiny_config());
  CHECK_THROWS_AS(wide.load(path), diff::CheckpointError);
  std::remove(path.c_str());
}

TEST_CASE("gradient check: embeddings through the full element score") {
  auto cat = make_catalog({{3, 2, 1, 4}, {2, 3, 0, 1, 2}, {1, 1, 2}});
  GencoModel<double> model(cat, tiny_config(10));
  std::vector<RequestContext> ctx = {context(1), context(2, 2), context(3, 3)};
  std::vector<RequestInput> in;
  for (std::size_t i = 0; i < 3; ++i) in.push_back({&cat.ads()[i], &ctx[i]});
  diff::GradCheckOptions opt;
  opt.eps = 1e-5;
  opt.only = {"emb.element", "emb.component", "emb.ad", "emb.user", "emb.segment", "attn.key.weight"};
  auto res = diff::grad_check<double>(
      [&](diff::Tape<double>& t) {
        auto f = model.forward(t, in, Mode::kTrain);
        std::vector<double> w(static_cast<std::size_t>(t.value(f.log_probs).rows()));
        for (std::size_t i = 0; i < w.size(); ++i) w[i] = (i % 3 == 0) ? -1.0 : 0.25;
        return diff::add(t, diff::weighted_sum(t, f.log_probs, w),
                         diff::sigmoid_bce_mean(t, f.scores, std::vector<double>(w.size(), 1.0)));
      },
      model.params(), opt);
  INFO(res.worst_parameter, " ", res.worst_index, " ", res.analytic, " ", res.numeric);
  CHECK(res.checked > 0);
  CHECK(res.max_rel_error < 1e-4);
}

TEST_CASE("point masses sample deterministically") {
  auto d = dist_of({{1.0}, {1.0}});
  d[1] = make_distribution(1, {0.0, -1e9}, 15);
  Engine rng(1);
  for (const auto& s : sample_combinations(d, 16, rng)) {
    CHECK(s.slots == std::vector<int>{0, 0});
    CHECK(s.log_prob == doctest::Approx(0.0));
  }
  CHECK_THROWS_AS(sample_combinations(d, 0, rng), std::invalid_argument);
}

TEST_CASE("uniform 2x2 sampling frequencies") {
  auto d = dist_of({{0.5, 0.5}, {0.5, 0.5}});
  Engine rng(2);
  std::map<std::vector<int>, double> freq;
  for (const auto& s : sample_combinations(d, 100000, rng)) freq[s.slots] += 1e-5;
  CHECK(freq.size() == 4);
  for (const auto& [_, f] : freq) CHECK(std::abs(f - 0.25) < 0.01);
}

TEST_CASE("sampling follows a frozen model's distribution and factorizes") {
  auto cat = make_catalog({{3, 4}});
  GencoModel<float> model(cat, tiny_config(12));
  // Spread the scores so the test is not trivially uniform.
  model.params().at("phi.3.weight").value *= 40.0f;
  auto c = context(5);
  std::vector<RequestInput> in = {{&cat.ads()[0], &c}};
  diff::Tape<float> tape;
  auto f = model.forward(tape, in, Mode::kInference);
  auto d = model.distributions(tape, f, 0);
  Engine rng(3);
  const int n = 100000;
  std::map<std::pair<int, int>, double> joint;
  std::vector<double> m0(3, 0.0), m1(4, 0.0);
  for (const auto& s : sample_combinations(d, n, rng)) {
    joint[{s.slots[0], s.slots[1]}] += 1.0 / n;
    m0[static_cast<std::size_t>(s.slots[0])] += 1.0 / n;
    m1[static_cast<std::size_t>(s.slots[1])] += 1.0 / n;
  }
  for (int a = 0; a < 3; ++a) {
    CHECK(std::abs(m0[a] - d[0]->probs[a]) < 0.01);
    for (int b = 0; b < 4; ++b) CHECK(std::abs(joint[{a, b}] - m0[a] * m1[b]) < 0.01);
  }
  for (int b = 0; b < 4; ++b) CHECK(std::abs(m1[b] - d[1]->probs[b]) < 0.01);

  auto g = greedy_combination(d);
  auto mode0 = std::max_element(m0.begin(), m0.end()) - m0.begin();
  auto mode1 = std::max_element(m1.begin(), m1.end()) - m1.begin();
  CHECK(g.slots[0] == mode0);
  CHECK(g.slots[1] == mode1);
  CHECK(g.log_prob == doctest::Approx(combination_log_prob(d, g.slots)));
}

TEST_CASE("greedy selection and ties") {
  auto g = greedy_combination(dist_of({{0.2, 0.8}, {0.6, 0.4}}));
  CHECK(g.slots == std::vector<int>{1, 0});
  CHECK(greedy_combination(dist_of({{0.5, 0.5}})).slots == std::vector<int>{0});
  Distributions with_gap = dist_of({{0.3, 0.7}});
  with_gap.push_back(std::nullopt);
  CHECK(greedy_combination(with_gap).slots == std::vector<int>{1, -1});
}

TEST_CASE("slot and combination conversions") {
  auto cat = make_catalog({{3, 0, 20}});
  const Ad& ad = cat.ads()[0];
  auto c = to_combination(ad, {2, -1, 7});
  CHECK(validate_combination(cat, c).empty());
  CHECK(slots_of(ad, c, 15) == std::vector<int>{2, -1, 7, -1, -1, -1});
  auto far = testing::combo(ad, {0, -1, 17});
  CHECK_FALSE(slots_of(ad, far, 15).has_value());
  far.selections[0] = 5;
  CHECK_FALSE(slots_of(ad, far, 15).has_value());
}
