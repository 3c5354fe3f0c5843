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
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "genco/diff/checkpoint.hpp"
#include "genco/diff/ops.hpp"
#include "genco/diff/tape.hpp"
#include "genco/domain.hpp"
#include "genco/layout.hpp"
#include "genco/rng.hpp"
#include "genco/sampling.hpp"

namespace genco {

using diff::Mode;
using diff::Segment;
using diff::Var;

/// Parameters and forward building blocks of the element model f_ele and the
/// shared scorer phi. The combination-level reward model reuses phi (see
/// rewardmodel.hpp); both read the same Parameter objects from `params()`.
template <typename Scalar>
class GencoModel {
 public:
  using Tape = diff::Tape<Scalar>;
  using Param = diff::Parameter<Scalar>;
  using Tensor = diff::Tensor<Scalar>;

  GencoModel(const Catalog& catalog, ModelConfig config)
      : catalog_(&catalog), config_(std::move(config)), vocab_(catalog) {
    if (config_.encoder_layers.empty() || config_.phi_layers.empty())
      throw std::invalid_argument("encoder and phi need at least one layer");
    if (config_.embedding_dim % config_.attention_heads != 0)
      throw std::invalid_argument("attention heads must divide the embedding dimension");
    build();
  }
  GencoModel(const GencoModel&) = delete;
  GencoModel& operator=(const GencoModel&) = delete;

  const Catalog& catalog() const { return *catalog_; }
  const ModelConfig& config() const { return config_; }
  const Vocabulary& vocab() const { return vocab_; }
  diff::ParameterStore<Scalar>& params() { return store_; }
  const diff::ParameterStore<Scalar>& params() const { return store_; }
  std::size_t num_components() const { return catalog_->num_components(); }

  BatchLayout layout(std::span<const RequestInput> requests) const {
    return make_layout(config_, vocab_, num_components(), requests);
  }

  /// The shared scorer: [64, 32, 8] ReLU MLP followed by a linear width-1
  /// output, applied row-wise.
  Var phi(Tape& tape, Var input) {
    Var x = input;
    for (std::size_t l = 0; l < phi_.size(); ++l) {
      x = diff::dense(tape, x, tape.param(*phi_[l].w), tape.param(*phi_[l].b));
      if (l + 1 < phi_.size()) x = diff::relu(tape, x);
    }
    return x;
  }

  /// Element and component-type embeddings for every valid slot row.
  std::pair<Var, Var> embed_elements(Tape& tape, const BatchLayout& L) {
    Var e = diff::embed_lookup(tape, *emb_element_, std::span<const int>(L.slot_vocab));
    Var c = diff::embed_lookup(tape, *emb_component_, std::span<const int>(L.slot_component));
    return {e, c};
  }

  /// Encoder input: ad, query, mean query segment, user, age and gender
  /// embeddings, then stat(S_j) = [mean valid element embedding,
  /// log(1+n)/log(16)] for each component (zeros when absent).
  Var encoder_input(Tape& tape, const BatchLayout& L, Var element_emb) {
    const int B = L.num_records;
    const int m = L.num_components;
    Var ad = diff::embed_lookup(tape, *emb_ad_, std::span<const int>(L.ad_rows));
    Var query = diff::embed_lookup(tape, *emb_query_, std::span<const int>(L.query_rows));
    Var seg_rows = diff::embed_lookup(tape, *emb_segment_, std::span<const int>(L.segment_rows));
    Var seg = diff::segment_mean(tape, seg_rows, L.segment_groups);
    Var user = diff::embed_lookup(tape, *emb_user_, std::span<const int>(L.user_rows));
    Var age = diff::embed_lookup(tape, *emb_age_, std::span<const int>(L.age_rows));
    Var gender = diff::embed_lookup(tape, *emb_gender_, std::span<const int>(L.gender_rows));

    Var pooled = diff::segment_mean(tape, element_emb, L.group_rows);  // (B*m) x d
    Tensor size_feature = Tensor::Zero(static_cast<Eigen::Index>(B) * m, 1);
    const Scalar norm = std::log(Scalar(16));
    for (std::size_t g = 0; g < L.group_rows.size(); ++g)
      size_feature(static_cast<Eigen::Index>(g), 0) =
          std::log1p(static_cast<Scalar>(L.group_rows[g].size)) / norm;
    Var stat = diff::concat_cols(tape, {pooled, tape.constant(std::move(size_feature))});
    Var stats = diff::reshape(tape, stat, B, static_cast<Eigen::Index>(m) * (config_.embedding_dim + 1));
    return diff::concat_cols(tape, {ad, query, seg, user, age, gender, stats});
  }

  /// h = Enc(...): dense -> batch norm -> ReLU for hidden layers, linear
  /// output of width context_dim().
  Var encode(Tape& tape, Var input, Mode mode) {
    Var x = input;
    for (std::size_t l = 0; l < encoder_.size(); ++l) {
      const auto& layer = encoder_[l];
      x = diff::dense(tape, x, tape.param(*layer.w), tape.param(*layer.b));
      if (l + 1 == encoder_.size()) break;
      diff::BatchNormOptions opt{config_.bn_eps, config_.bn_momentum};
      x = diff::batch_norm(tape, x, tape.param(*layer.bn_scale), tape.param(*layer.bn_shift),
                           *layer.bn_mean, *layer.bn_var, mode, opt);
      x = diff::relu(tape, x);
    }
    return x;
  }

  /// Attention masks per record: slot a may attend to b iff a == b or the
  /// two slots belong to different components.
  std::vector<diff::Mask> attention_masks(const BatchLayout& L) const {
    std::vector<diff::Mask> masks;
    masks.reserve(L.record_rows.size());
    for (const auto& rec : L.record_rows) {
      diff::Mask m(rec.size, rec.size);
      for (int a = 0; a < rec.size; ++a)
        for (int b = 0; b < rec.size; ++b)
          m(a, b) = a == b || L.slot_component[rec.begin + a] != L.slot_component[rec.begin + b];
      masks.push_back(std::move(m));
    }
    return masks;
  }

  /// z for every slot row; all zeros when cross-component attention is off.
  Var cross_component_context(Tape& tape, const BatchLayout& L, Var element_emb) {
    if (!use_context()) {
      return tape.constant(Tensor::Zero(L.num_rows(), config_.embedding_dim));
    }
    Var q = diff::matmul(tape, element_emb, tape.param(*attn_query_));
    Var k = diff::matmul(tape, element_emb, tape.param(*attn_key_));
    Var v = diff::matmul(tape, element_emb, tape.param(*attn_value_));
    return diff::grouped_attention(tape, q, k, v, L.record_rows, attention_masks(L),
                                   config_.attention_heads);
  }

  /// phi([h_record(row); features_row]) for each row.
  Var score_rows(Tape& tape, Var h, std::vector<int> row_record, Var features) {
    Var hr = diff::gather_rows(tape, h, std::move(row_record));
    return phi(tape, diff::concat_cols(tape, {hr, features}));
  }

  struct Forward {
    BatchLayout layout;
    Var h;          // B x context_dim
    Var features;   // R x 12: emb(e) | emb(C_j) | z
    Var scores;     // R x 1 raw p_k
    Var log_probs;  // R x 1, normalized within each (record, component)
  };

  /// Element-model forward pass over a batch of requests.
  Forward forward(Tape& tape, std::span<const RequestInput> requests, Mode mode) {
    Forward f;
    f.layout = layout(requests);
    const auto& L = f.layout;
    auto [e, c] = embed_elements(tape, L);
    f.h = encode(tape, encoder_input(tape, L, e), mode);
    Var z = cross_component_context(tape, L, e);
    f.features = diff::concat_cols(tape, {e, c, z});
    f.scores = score_rows(tape, f.h, L.slot_record, f.features);
    f.log_probs = diff::segment_log_softmax(tape, f.scores, L.group_rows);
    return f;
  }

  /// Per-component distributions of one record of a forward pass,
  /// normalized in double precision from the raw scores.
  Distributions distributions(const Tape& tape, const Forward& f, int record) const {
    const auto& L = f.layout;
    const auto& S = tape.value(f.scores);
    Distributions out(static_cast<std::size_t>(L.num_components));
    for (int j = 0; j < L.num_components; ++j) {
      const auto& g = L.group(record, j);
      if (g.size == 0) continue;
      std::vector<double> s(static_cast<std::size_t>(g.size));
      for (int k = 0; k < g.size; ++k) s[static_cast<std::size_t>(k)] = static_cast<double>(S(g.begin + k, 0));
      out[static_cast<std::size_t>(j)] = make_distribution(j, s, L.pad_size);
    }
    return out;
  }

  Param& mil_weight() { return *mil_w_; }
  Param& mil_bias() { return *mil_b_; }
  /// phi's weights, in layer order; used to assert sharing.
  std::vector<const Param*> phi_parameters() const {
    std::vector<const Param*> out;
    for (const auto& l : phi_) {
      out.push_back(l.w);
      out.push_back(l.b);
    }
    return out;
  }

  bool use_context() const { return meta_use_context_->value(0, 0) != Scalar(0); }

  void save(const std::string& path) const { diff::save_checkpoint_file(path, store_); }
  void load(const std::string& path) {
    diff::load_checkpoint_file(path, store_);
    config_.use_context = use_context();
  }

 private:
  struct Dense {
    Param* w = nullptr;
    Param* b = nullptr;
    Param* bn_scale = nullptr;
    Param* bn_shift = nullptr;
    Param* bn_mean = nullptr;
    Param* bn_var = nullptr;
  };

  Param& embedding(const std::string& name, int rows) {
    Engine rng = make_stream(config_.seed, "init/" + name);
    std::uniform_real_distribution<double> u(-0.05, 0.05);
    Tensor t(rows, config_.embedding_dim);
    for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = static_cast<Scalar>(u(rng));
    return store_.add(name, std::move(t));
  }

  Dense dense_layer(const std::string& name, int in, int out, bool with_bn, bool with_bias = true) {
    Engine rng = make_stream(config_.seed, "init/" + name);
    std::normal_distribution<double> n(0.0, std::sqrt(2.0 / in));
    Tensor w(in, out);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = static_cast<Scalar>(n(rng));
    Dense d;
    d.w = &store_.add(name + ".weight", std::move(w));
    if (with_bias) d.b = &store_.add(name + ".bias", Tensor::Zero(1, out));
    if (with_bn) {
      d.bn_scale = &store_.add(name + ".bn.scale", Tensor::Ones(1, out));
      d.bn_shift = &store_.add(name + ".bn.shift", Tensor::Zero(1, out));
      d.bn_mean = &store_.add(name + ".bn.running_mean", Tensor::Zero(1, out), false);
      d.bn_var = &store_.add(name + ".bn.running_var", Tensor::Ones(1, out), false);
    }
    return d;
  }

  void build() {
    const int d = config_.embedding_dim;
    const int m = static_cast<int>(num_components());
    emb_ad_ = &embedding("emb.ad", vocab_.num_ad_rows());
    emb_element_ = &embedding("emb.element", vocab_.num_element_rows());
    emb_component_ = &embedding("emb.component", m);
    emb_query_ = &embedding("emb.query", config_.query_buckets);
    emb_segment_ = &embedding("emb.segment", config_.segment_buckets);
    emb_user_ = &embedding("emb.user", config_.user_buckets);
    emb_age_ = &embedding("emb.age", config_.age_buckets);
    emb_gender_ = &embedding("emb.gender", config_.gender_buckets);

    int in = 6 * d + m * (d + 1);
    for (std::size_t l = 0; l < config_.encoder_layers.size(); ++l) {
      const bool last = l + 1 == config_.encoder_layers.size();
      encoder_.push_back(dense_layer("enc." + std::to_string(l), in, config_.encoder_layers[l], !last));
      in = config_.encoder_layers[l];
    }

    attn_query_ = dense_layer("attn.query", d, d, false, false).w;
    attn_key_ = dense_layer("attn.key", d, d, false, false).w;
    attn_value_ = dense_layer("attn.value", d, d, false, false).w;

    in = config_.context_dim() + config_.element_feature_dim();
    for (std::size_t l = 0; l < config_.phi_layers.size(); ++l) {
      phi_.push_back(dense_layer("phi." + std::to_string(l), in, config_.phi_layers[l], false));
      in = config_.phi_layers[l];
    }
    phi_.push_back(dense_layer("phi." + std::to_string(config_.phi_layers.size()), in, 1, false));

    auto mil = dense_layer("mil", config_.context_dim() + config_.element_feature_dim(), 1, false);
    mil_w_ = mil.w;
    mil_b_ = mil.b;

    Tensor flag(1, 1);
    flag(0, 0) = config_.use_context ? Scalar(1) : Scalar(0);
    meta_use_context_ = &store_.add("meta.use_context", std::move(flag), false);
  }

  const Catalog* catalog_;
  ModelConfig config_;
  Vocabulary vocab_;
  diff::ParameterStore<Scalar> store_;
  Param *emb_ad_ = nullptr, *emb_element_ = nullptr, *emb_component_ = nullptr;
  Param *emb_query_ = nullptr, *emb_segment_ = nullptr, *emb_user_ = nullptr;
  Param *emb_age_ = nullptr, *emb_gender_ = nullptr;
  std::vector<Dense> encoder_;
  Param *attn_query_ = nullptr, *attn_key_ = nullptr, *attn_value_ = nullptr;
  std::vector<Dense> phi_;
  Param *mil_w_ = nullptr, *mil_b_ = nullptr;
  Param* meta_use_context_ = nullptr;
};

}  // namespace genco
