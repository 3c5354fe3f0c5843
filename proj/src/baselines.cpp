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

#include "genco/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "genco/diff/checkpoint.hpp"
#include "genco/diff/ops.hpp"

namespace genco {

CreativeCombination UniformPolicy::select(const RequestContext&, const Ad& ad, Engine& rng) {
  CreativeCombination c;
  c.ad_id = ad.ad_id;
  c.selections.assign(ad.pools.size(), std::nullopt);
  for (std::size_t j = 0; j < ad.pools.size(); ++j) {
    if (!ad.pools[j]) continue;
    const auto& e = ad.pools[j]->elements;
    c.selections[j] = e[uniform_index(rng, e.size())];
  }
  return c;
}

// MLP ------------------------------------------------------------------------

namespace {

using diff::Var;

constexpr int kContextParts = 6;  // ad, query, segments, user, age, gender

int clamp_row(int v, int rows) { return std::clamp(v, 0, rows - 1); }

}  // namespace

MlpModel::MlpModel(const Catalog& catalog, MlpConfig config)
    : catalog_(&catalog), config_(std::move(config)), vocab_(catalog) {
  const int d = config_.embedding_dim;
  auto embedding = [&](const std::string& name, int rows) -> Param& {
    Engine rng = make_stream(config_.seed, "init/" + name);
    std::uniform_real_distribution<double> u(-0.05, 0.05);
    Tensor t(rows, d);
    for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = static_cast<float>(u(rng));
    return store_.add(name, std::move(t));
  };
  emb_ad_ = &embedding("mlp.emb.ad", vocab_.num_ad_rows());
  emb_element_ = &embedding("mlp.emb.element", vocab_.num_element_rows());
  emb_query_ = &embedding("mlp.emb.query", config_.query_buckets);
  emb_segment_ = &embedding("mlp.emb.segment", config_.segment_buckets);
  emb_user_ = &embedding("mlp.emb.user", config_.user_buckets);
  emb_age_ = &embedding("mlp.emb.age", config_.age_buckets);
  emb_gender_ = &embedding("mlp.emb.gender", config_.gender_buckets);

  int in = context_width() + static_cast<int>(catalog.num_components()) * d;
  std::vector<int> widths = config_.hidden;
  widths.push_back(1);
  for (std::size_t l = 0; l < widths.size(); ++l) {
    const std::string name = "mlp.fc." + std::to_string(l);
    const bool head = l + 1 == widths.size();
    Tensor w = Tensor::Zero(in, widths[l]);
    if (!(head && config_.zero_head)) {
      Engine rng = make_stream(config_.seed, "init/" + name);
      std::normal_distribution<double> n(0.0, std::sqrt(2.0 / in));
      for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = static_cast<float>(n(rng));
    }
    Layer layer;
    layer.w = &store_.add(name + ".weight", std::move(w));
    layer.b = &store_.add(name + ".bias", Tensor::Zero(1, widths[l]));
    layers_.push_back(layer);
    in = widths[l];
  }
}

int MlpModel::context_width() const { return kContextParts * config_.embedding_dim; }

MlpModel::Tensor MlpModel::context_row(const RequestContext& ctx, const Ad& ad) const {
  const int d = config_.embedding_dim;
  Tensor row = Tensor::Zero(1, context_width());
  row.block(0, 0, 1, d) = emb_ad_->value.row(vocab_.ad_row(ad.ad_id));
  row.block(0, d, 1, d) = emb_query_->value.row(hash_bucket(ctx.query.query_id, config_.query_buckets));
  if (!ctx.query.segments.empty()) {
    for (auto s : ctx.query.segments)
      row.block(0, 2 * d, 1, d) += emb_segment_->value.row(hash_bucket(s, config_.segment_buckets));
    row.block(0, 2 * d, 1, d) /= static_cast<float>(ctx.query.segments.size());
  }
  row.block(0, 3 * d, 1, d) = emb_user_->value.row(hash_bucket(ctx.user.user_id, config_.user_buckets));
  row.block(0, 4 * d, 1, d) = emb_age_->value.row(clamp_row(ctx.user.age_bucket, config_.age_buckets));
  row.block(0, 5 * d, 1, d) = emb_gender_->value.row(clamp_row(ctx.user.gender, config_.gender_buckets));
  return row;
}

std::optional<double> MlpModel::train_step(std::span<const ImpressionRecord> batch, double lr) {
  const std::size_t m = catalog_->num_components();
  std::vector<int> ad_rows, query_rows, user_rows, age_rows, gender_rows, seg_rows;
  std::vector<diff::Segment> seg_groups;
  std::vector<std::vector<int>> element_rows(m);
  std::vector<float> labels;
  for (const auto& r : batch) {
    const Ad* ad = catalog_->find(r.ad_id);
    if (!ad) continue;
    std::vector<int> rows(m, -1);
    bool ok = true;
    for (std::size_t j = 0; j < m; ++j) {
      if (!ad->covers(static_cast<int>(j))) continue;
      if (j >= r.exposed.selections.size() || !r.exposed.selections[j] ||
          !ad->pools[j]->index_of(*r.exposed.selections[j])) {
        ok = false;
        break;
      }
      rows[j] = vocab_.element_row(static_cast<int>(j), *r.exposed.selections[j]);
    }
    if (!ok) continue;
    for (std::size_t j = 0; j < m; ++j) element_rows[j].push_back(rows[j]);
    ad_rows.push_back(vocab_.ad_row(ad->ad_id));
    query_rows.push_back(hash_bucket(r.context.query.query_id, config_.query_buckets));
    user_rows.push_back(hash_bucket(r.context.user.user_id, config_.user_buckets));
    age_rows.push_back(clamp_row(r.context.user.age_bucket, config_.age_buckets));
    gender_rows.push_back(clamp_row(r.context.user.gender, config_.gender_buckets));
    const int begin = static_cast<int>(seg_rows.size());
    for (auto s : r.context.query.segments) seg_rows.push_back(hash_bucket(s, config_.segment_buckets));
    seg_groups.push_back({begin, static_cast<int>(seg_rows.size()) - begin});
    labels.push_back(r.click ? 1.0f : 0.0f);
  }
  if (labels.empty()) return std::nullopt;

  diff::Tape<float> tape;
  using std::span;
  std::vector<Var> parts;
  parts.push_back(diff::embed_lookup(tape, *emb_ad_, span<const int>(ad_rows)));
  parts.push_back(diff::embed_lookup(tape, *emb_query_, span<const int>(query_rows)));
  parts.push_back(diff::segment_mean(
      tape, diff::embed_lookup(tape, *emb_segment_, span<const int>(seg_rows)), seg_groups));
  parts.push_back(diff::embed_lookup(tape, *emb_user_, span<const int>(user_rows)));
  parts.push_back(diff::embed_lookup(tape, *emb_age_, span<const int>(age_rows)));
  parts.push_back(diff::embed_lookup(tape, *emb_gender_, span<const int>(gender_rows)));
  for (std::size_t j = 0; j < m; ++j)
    parts.push_back(diff::embed_lookup(tape, *emb_element_, span<const int>(element_rows[j])));
  Var x = diff::concat_cols(tape, parts);
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    x = diff::dense(tape, x, tape.param(*layers_[l].w), tape.param(*layers_[l].b));
    if (l + 1 < layers_.size()) x = diff::relu(tape, x);
  }
  Var loss = diff::sigmoid_bce_mean(tape, x, std::move(labels));
  const double value = tape.scalar(loss);
  tape.backward(loss);
  diff::sgd_step(store_, static_cast<float>(lr));
  return value;
}

std::vector<float> MlpModel::score(const RequestContext& context, const Ad& ad,
                                   const std::vector<std::vector<int>>& combinations) const {
  const int d = config_.embedding_dim;
  const std::size_t m = catalog_->num_components();
  const auto& W1 = layers_[0].w->value;
  const int h1 = static_cast<int>(W1.cols());
  const int cw = context_width();
  // First layer splits into a context part and one part per component.
  Eigen::RowVectorXf base = context_row(context, ad) * W1.topRows(cw) + layers_[0].b->value;
  std::vector<Tensor> part(m);
  for (std::size_t j = 0; j < m; ++j) {
    if (!ad.pools[j]) continue;
    const auto& e = ad.pools[j]->elements;
    Tensor E(static_cast<Eigen::Index>(e.size()), d);
    for (std::size_t k = 0; k < e.size(); ++k)
      E.row(static_cast<Eigen::Index>(k)) =
          emb_element_->value.row(vocab_.element_row(static_cast<int>(j), e[k]));
    part[j] = E * W1.middleRows(cw + static_cast<Eigen::Index>(j) * d, d);
  }
  for (const auto& c : combinations) {
    if (c.size() != m) throw std::invalid_argument("combination width differs from the component count");
    for (std::size_t j = 0; j < m; ++j)
      if (c[j] >= 0 && (!ad.pools[j] || c[j] >= part[j].rows()))
        throw std::invalid_argument("combination slot outside the ad's pool");
  }
  std::vector<float> out;
  out.reserve(combinations.size());
  constexpr std::size_t kChunk = 2048;
  for (std::size_t b = 0; b < combinations.size(); b += kChunk) {
    const std::size_t n = std::min(kChunk, combinations.size() - b);
    Tensor x(static_cast<Eigen::Index>(n), h1);
    for (std::size_t i = 0; i < n; ++i) {
      auto row = x.row(static_cast<Eigen::Index>(i));
      row = base;
      const auto& c = combinations[b + i];
      for (std::size_t j = 0; j < m; ++j)
        if (c[j] >= 0) row += part[j].row(c[j]);
    }
    for (std::size_t l = 1; l < layers_.size(); ++l) {
      x = x.cwiseMax(0.0f);
      Tensor y = x * layers_[l].w->value;
      y.rowwise() += layers_[l].b->value.row(0);
      x = std::move(y);
    }
    for (std::size_t i = 0; i < n; ++i) out.push_back(x(static_cast<Eigen::Index>(i), 0));
  }
  return out;
}

void MlpModel::save(const std::string& path) const { diff::save_checkpoint_file(path, store_); }
void MlpModel::load(const std::string& path) { diff::load_checkpoint_file(path, store_); }

MlpTrainReport train_mlp(MlpModel& model, std::span<const ImpressionRecord> logs, int batch_size,
                         double lr) {
  if (batch_size < 1) throw std::invalid_argument("batch_size must be positive");
  MlpTrainReport rep;
  const auto bs = static_cast<std::size_t>(batch_size);
  for (std::size_t b = 0; b < logs.size(); b += bs) {
    auto loss = model.train_step(logs.subspan(b, std::min(bs, logs.size() - b)), lr);
    if (loss)
      rep.losses.push_back(*loss);
    else
      ++rep.skipped;
  }
  return rep;
}

CreativeCombination MlpPolicy::select(const RequestContext& context, const Ad& ad, Engine&) {
  ++selections_;
  std::uint64_t count = 0;
  try {
    count = combination_count(ad);
  } catch (const StructuralError&) {
    count = cap_ + 1;
  }
  std::vector<int> best;
  if (count <= cap_) {
    std::vector<std::vector<int>> combos;
    combos.reserve(count);
    for (CombinationEnumerator en(ad, cap_); !en.done(); en.next()) combos.push_back(en.slots());
    auto s = model_->score(context, ad, combos);
    const auto it = std::max_element(s.begin(), s.end());  // first maximum
    best = combos[static_cast<std::size_t>(it - s.begin())];
  } else {
    ++fallbacks_;
    best.assign(ad.pools.size(), -1);
    for (std::size_t j = 0; j < ad.pools.size(); ++j)
      if (ad.pools[j]) best[j] = 0;
    for (std::size_t j = 0; j < ad.pools.size(); ++j) {
      if (!ad.pools[j]) continue;
      std::vector<std::vector<int>> combos;
      for (std::size_t k = 0; k < ad.pools[j]->elements.size(); ++k) {
        combos.push_back(best);
        combos.back()[j] = static_cast<int>(k);
      }
      auto s = model_->score(context, ad, combos);
      best[j] = static_cast<int>(std::max_element(s.begin(), s.end()) - s.begin());
    }
  }
  CreativeCombination c;
  c.ad_id = ad.ad_id;
  c.selections.assign(ad.pools.size(), std::nullopt);
  for (std::size_t j = 0; j < ad.pools.size(); ++j)
    if (ad.pools[j]) c.selections[j] = ad.pools[j]->elements[static_cast<std::size_t>(best[j])];
  return c;
}

// Successive elimination ----------------------------------------------------------

SuccessiveElimination::SuccessiveElimination(std::size_t arms, std::uint64_t horizon, double delta)
    : horizon_(horizon), delta_(delta), pulls_(arms, 0), rewards_(arms, 0.0), played_(arms, false) {
  if (arms == 0) throw std::invalid_argument("successive elimination needs an arm");
  if (horizon == 0) throw std::invalid_argument("horizon must be positive");
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("delta must lie in (0, 1)");
  survivors_.resize(arms);
  for (std::size_t a = 0; a < arms; ++a) survivors_[a] = a;
}

std::size_t SuccessiveElimination::next() const {
  for (std::size_t a : survivors_)
    if (!played_[a]) return a;
  return survivors_.front();
}

double SuccessiveElimination::mean(std::size_t arm) const {
  return pulls_.at(arm) == 0 ? 0.0 : rewards_[arm] / static_cast<double>(pulls_[arm]);
}

double SuccessiveElimination::radius(std::uint64_t pulls) const {
  if (pulls == 0) return std::numeric_limits<double>::infinity();
  const double n = static_cast<double>(pulls_.size());
  return std::sqrt(std::log(2.0 * static_cast<double>(horizon_) * n / delta_) /
                   (2.0 * static_cast<double>(pulls)));
}

void SuccessiveElimination::update(std::size_t arm, double reward) {
  if (arm >= pulls_.size()) throw std::out_of_range("arm out of range");
  ++pulls_[arm];
  rewards_[arm] += reward;
  if (converged()) return;
  played_[arm] = true;
  for (std::size_t a : survivors_)
    if (!played_[a]) return;
  end_round();
}

void SuccessiveElimination::end_round() {
  double best_lower = -std::numeric_limits<double>::infinity();
  for (std::size_t a : survivors_) best_lower = std::max(best_lower, mean(a) - radius(pulls_[a]));
  std::vector<std::size_t> keep;
  for (std::size_t a : survivors_)
    if (mean(a) + radius(pulls_[a]) >= best_lower) keep.push_back(a);
  survivors_ = std::move(keep);
  for (std::size_t a : survivors_) played_[a] = false;
}

DcoPolicy::AdState& DcoPolicy::state_for(const Ad& ad) {
  auto [it, inserted] = states_.try_emplace(ad.ad_id);
  AdState& s = it->second;
  if (!inserted) return s;
  s.ad = &ad;
  s.covered = ad.covered_components();
  std::uint64_t count = 0;
  try {
    count = combination_count(ad);
  } catch (const StructuralError&) {
    count = config_.cap + 1;
  }
  if (count <= config_.cap) {
    s.joint = std::make_unique<SuccessiveElimination>(count, config_.horizon, config_.delta);
  } else {
    s.per_component = true;
    for (int j : s.covered)
      s.parts.push_back(std::make_unique<SuccessiveElimination>(
          ad.pools[static_cast<std::size_t>(j)]->elements.size(), config_.horizon, config_.delta));
  }
  return s;
}

CreativeCombination DcoPolicy::select(const RequestContext&, const Ad& ad, Engine&) {
  AdState& s = state_for(ad);
  std::vector<int> slots(ad.pools.size(), -1);
  if (!s.per_component) {
    // Mixed-radix decode in enumeration order (last covered component fastest).
    std::size_t arm = s.joint->next();
    for (auto it = s.covered.rbegin(); it != s.covered.rend(); ++it) {
      const std::size_t n = ad.pools[static_cast<std::size_t>(*it)]->elements.size();
      slots[static_cast<std::size_t>(*it)] = static_cast<int>(arm % n);
      arm /= n;
    }
  } else {
    for (std::size_t i = 0; i < s.covered.size(); ++i)
      slots[static_cast<std::size_t>(s.covered[i])] = static_cast<int>(s.parts[i]->next());
  }
  CreativeCombination c;
  c.ad_id = ad.ad_id;
  c.selections.assign(ad.pools.size(), std::nullopt);
  for (std::size_t j = 0; j < ad.pools.size(); ++j)
    if (slots[j] >= 0) c.selections[j] = ad.pools[j]->elements[static_cast<std::size_t>(slots[j])];
  return c;
}

void DcoPolicy::update(const ImpressionRecord& record) {
  auto it = states_.find(record.ad_id);
  if (it == states_.end()) return;
  AdState& s = it->second;
  const Ad& ad = *s.ad;
  std::vector<std::size_t> idx;
  for (int j : s.covered) {
    const auto& sel = record.exposed.selections;
    if (static_cast<std::size_t>(j) >= sel.size() || !sel[static_cast<std::size_t>(j)]) return;
    auto k = ad.pools[static_cast<std::size_t>(j)]->index_of(*sel[static_cast<std::size_t>(j)]);
    if (!k) return;
    idx.push_back(*k);
  }
  const double reward = record.click ? 1.0 : 0.0;
  if (!s.per_component) {
    std::size_t arm = 0;
    for (std::size_t i = 0; i < s.covered.size(); ++i)
      arm = arm * ad.pools[static_cast<std::size_t>(s.covered[i])]->elements.size() + idx[i];
    s.joint->update(arm, reward);
  } else {
    for (std::size_t i = 0; i < s.covered.size(); ++i) s.parts[i]->update(idx[i], reward);
  }
}

std::size_t DcoPolicy::fallback_ads() const {
  std::size_t n = 0;
  for (const auto& [_, s] : states_) n += s.per_component ? 1 : 0;
  return n;
}

const SuccessiveElimination* DcoPolicy::state(AdId ad) const {
  auto it = states_.find(ad);
  return it == states_.end() || it->second.per_component ? nullptr : it->second.joint.get();
}

std::unique_ptr<SelectionPolicy> make_baseline(std::string_view name, const DcoConfig& dco) {
  if (name == "uniform") return std::make_unique<UniformPolicy>();
  if (name == "dco") return std::make_unique<DcoPolicy>(dco);
  throw std::invalid_argument("no model-free baseline named " + std::string(name));
}

}  // namespace genco
