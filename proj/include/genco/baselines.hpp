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
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "genco/diff/tape.hpp"
#include "genco/domain.hpp"
#include "genco/layout.hpp"
#include "genco/policy.hpp"

namespace genco {

/// Independent uniform draw per component.
class UniformPolicy : public SelectionPolicy {
 public:
  std::string name() const override { return "uniform"; }
  CreativeCombination select(const RequestContext& context, const Ad& ad, Engine& rng) override;
};

// MLP baseline ----------------------------------------------------------------

struct MlpConfig {
  int embedding_dim = 4;
  std::vector<int> hidden = {32, 16};
  int user_buckets = 4096;
  int query_buckets = 1024;
  int segment_buckets = 1024;
  int age_buckets = 16;
  int gender_buckets = 4;
  /// Output layer starts at zero, so an untrained model ties everywhere.
  bool zero_head = true;
  std::uint64_t seed = 0;
};

/// CTR of a whole combination from [emb(ad); context embeddings; one
/// element embedding per component (zeros where absent)].
class MlpModel {
 public:
  using Param = diff::Parameter<float>;
  using Tensor = diff::Tensor<float>;

  MlpModel(const Catalog& catalog, MlpConfig config);
  MlpModel(const MlpModel&) = delete;
  MlpModel& operator=(const MlpModel&) = delete;

  const Catalog& catalog() const { return *catalog_; }
  const MlpConfig& config() const { return config_; }
  diff::ParameterStore<float>& params() { return store_; }

  /// One SGD step of mean BCE on logged (context, ad, combination, click)
  /// records. Records whose ad or exposure is unknown are skipped; returns
  /// the loss, or nullopt if nothing was usable.
  std::optional<double> train_step(std::span<const ImpressionRecord> batch, double lr);

  /// Raw scores (logits) of pool-index combinations for one request.
  std::vector<float> score(const RequestContext& context, const Ad& ad,
                           const std::vector<std::vector<int>>& combinations) const;

  void save(const std::string& path) const;
  void load(const std::string& path);

 private:
  struct Layer {
    Param* w = nullptr;
    Param* b = nullptr;
  };
  int context_width() const;
  Tensor context_row(const RequestContext& context, const Ad& ad) const;

  const Catalog* catalog_;
  MlpConfig config_;
  Vocabulary vocab_;
  diff::ParameterStore<float> store_;
  Param *emb_ad_, *emb_element_, *emb_query_, *emb_segment_, *emb_user_, *emb_age_, *emb_gender_;
  std::vector<Layer> layers_;
};

struct MlpTrainReport {
  std::vector<double> losses;
  std::size_t skipped = 0;
};

/// Chronological single pass in consecutive batches.
MlpTrainReport train_mlp(MlpModel& model, std::span<const ImpressionRecord> logs, int batch_size,
                         double lr);

/// Argmax of the MLP over every combination (ties: enumeration order). Ads
/// above the cap use one coordinate-ascent sweep instead, and are counted.
class MlpPolicy : public SelectionPolicy {
 public:
  MlpPolicy(const MlpModel& model, std::uint64_t cap = 100000) : model_(&model), cap_(cap) {}
  std::string name() const override { return "mlp"; }
  CreativeCombination select(const RequestContext& context, const Ad& ad, Engine& rng) override;
  std::size_t fallbacks() const { return fallbacks_; }
  std::size_t selections() const { return selections_; }

 private:
  const MlpModel* model_;
  std::uint64_t cap_;
  std::size_t fallbacks_ = 0;
  std::size_t selections_ = 0;
};

// Successive elimination ----------------------------------------------------------

/// Round-based successive elimination with Hoeffding radii
/// r = sqrt(ln(2 T |arms| / delta) / (2 pulls)).
class SuccessiveElimination {
 public:
  SuccessiveElimination(std::size_t arms, std::uint64_t horizon, double delta = 0.05);

  /// Next surviving arm not yet played this round.
  std::size_t next() const;
  void update(std::size_t arm, double reward);

  std::size_t num_arms() const { return pulls_.size(); }
  const std::vector<std::size_t>& survivors() const { return survivors_; }
  bool converged() const { return survivors_.size() == 1; }
  std::uint64_t pulls(std::size_t arm) const { return pulls_.at(arm); }
  double mean(std::size_t arm) const;
  double radius(std::uint64_t pulls) const;

 private:
  void end_round();

  std::uint64_t horizon_;
  double delta_;
  std::vector<std::uint64_t> pulls_;
  std::vector<double> rewards_;
  std::vector<std::size_t> survivors_;
  std::vector<bool> played_;  // this round, indexed by arm
};

struct DcoConfig {
  std::uint64_t horizon = 1000;  // expected pulls per ad
  double delta = 0.05;
  std::uint64_t cap = 100000;
};

/// Per-ad successive elimination over whole combinations; ads above the cap
/// run one eliminator per component instead (counted as fallbacks).
class DcoPolicy : public SelectionPolicy {
 public:
  explicit DcoPolicy(DcoConfig config = {}) : config_(config) {}
  std::string name() const override { return "dco"; }
  CreativeCombination select(const RequestContext& context, const Ad& ad, Engine& rng) override;
  void update(const ImpressionRecord& record) override;

  std::size_t fallback_ads() const;
  /// Nullopt until the ad has been seen.
  const SuccessiveElimination* state(AdId ad) const;

 private:
  struct AdState {
    const Ad* ad = nullptr;
    bool per_component = false;
    std::vector<int> covered;
    std::unique_ptr<SuccessiveElimination> joint;
    std::vector<std::unique_ptr<SuccessiveElimination>> parts;  // per covered component
  };
  AdState& state_for(const Ad& ad);

  DcoConfig config_;
  std::unordered_map<AdId, AdState> states_;
};

/// Builds a baseline by name: "uniform", "dco" (MLP policies need a model).
std::unique_ptr<SelectionPolicy> make_baseline(std::string_view name, const DcoConfig& dco = {});

}  // namespace genco
