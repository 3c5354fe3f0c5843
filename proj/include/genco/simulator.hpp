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
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "genco/domain.hpp"
#include "genco/policy.hpp"
#include "genco/rng.hpp"

namespace genco::sim {

struct ComponentSpec {
  std::string name;
  double mean_candidates = 1.0;
  double coverage = 1.0;
  /// Multiplier on the element-effect scale for this component.
  double effect_scale = 1.0;
};

/// Candidate-count means and coverage of the production dataset the model
/// was designed for: title, image, marketing, highlight, attribute,
/// structure_attribute.
std::vector<ComponentSpec> reference_components();

struct SimConfig {
  std::size_t num_ads = 200;
  std::vector<ComponentSpec> components = reference_components();
  /// Elements per component shared by all ads; pools are subsets.
  std::size_t vocab_per_component = 32;
  std::size_t max_candidates = 30;
  std::size_t num_requests = 100000;
  std::size_t num_users = 2000;
  std::size_t num_queries = 500;
  std::size_t num_segments = 200;
  int age_buckets = 8;
  int gender_codes = 3;
  int num_categories = 5;
  double base_ctr = 0.0684;
  double base_scale = 0.3;
  double element_scale = 0.5;
  double interaction_density = 0.1;
  double interaction_scale = 0.5;
  double context_scale = 0.2;
  std::uint64_t seed = 1;
  std::int64_t start_timestamp_ms = 1'750'000'000'000;
  std::int64_t request_interval_ms = 1000;

  /// Half of all cross-component pairs interact, with larger magnitude.
  static SimConfig interaction_dense();
  /// Throws std::invalid_argument on an unusable configuration.
  void validate() const;
};

/// Hidden click model. CTR = sigmoid(base(ad) + sum of element effects +
/// pairwise cross-component interactions + age-bucket x element terms).
struct GroundTruth {
  SimConfig config;
  std::size_t vocab = 0;  // per component
  std::unordered_map<AdId, double> base_logit;
  /// Global element index = component * vocab + position in the vocabulary.
  std::unordered_map<ElementId, int> global_index;
  Eigen::VectorXd effect;       // (m * vocab)
  Eigen::MatrixXd interaction;  // (m * vocab) x (m * vocab), symmetric
  Eigen::MatrixXd context;      // age_buckets x (m * vocab)
  std::vector<UserFeatures> users;
  std::vector<QueryFeatures> queries;

  int index_of(ElementId e) const;
  /// Logit from global element indices (negative entries are skipped).
  double logit(AdId ad, const std::vector<int>& elements, int age_bucket) const;
};

/// External id of the k-th vocabulary element of a component.
ElementId element_id(std::string_view component, std::size_t k);
AdId ad_id(std::size_t i);

std::pair<Catalog, GroundTruth> make_synthetic_catalog(const SimConfig& config);

double sigmoid(double x);
double logit(double p);

/// Throws StructuralError when the combination is not valid for the ad.
double true_ctr(const GroundTruth& gt, const Ad& ad, const CreativeCombination& combination,
                const RequestContext& context);

/// Bernoulli(p). Throws std::invalid_argument when p is outside [0, 1].
int sample_click(Engine& rng, double p);

/// Brute-force statistics of true CTR over all combinations of an ad for one
/// age bucket.
struct OracleStats {
  double best_ctr = 0.0;
  double mean_ctr = 0.0;
  std::vector<int> best_slots;  // slot per component, -1 where uncovered
  std::uint64_t count = 0;
};
OracleStats oracle_stats(const GroundTruth& gt, const Ad& ad, int age_bucket,
                         std::uint64_t cap = kDefaultEnumerationCap);

/// Memoized oracle_stats keyed by (ad, age bucket).
class OracleCache {
 public:
  OracleCache(const GroundTruth& gt, std::uint64_t cap = kDefaultEnumerationCap)
      : gt_(&gt), cap_(cap) {}
  /// Throws OracleTooLarge when the ad is above the cap.
  const OracleStats& get(const Ad& ad, int age_bucket);

 private:
  const GroundTruth* gt_;
  std::uint64_t cap_;
  std::unordered_map<std::uint64_t, OracleStats> cache_;
};

/// Context for request `request_id` (1-based) of a run seeded with `seed`.
RequestContext draw_context(const GroundTruth& gt, std::uint64_t seed, std::uint64_t request_id);
const Ad& draw_ad(const Catalog& catalog, std::uint64_t seed, std::uint64_t request_id);

/// Uniform logging policy: ad uniform, each component's element uniform.
std::vector<ImpressionRecord> generate_random_policy_logs(const Catalog& catalog,
                                                          const GroundTruth& gt,
                                                          std::size_t num_requests,
                                                          std::uint64_t seed);

struct SimulationResult {
  std::vector<ImpressionRecord> log;
  /// True CTR of each served combination, aligned with `log`.
  std::vector<double> expected_ctr;
  std::uint64_t clicks = 0;
  double ctr = 0.0;
};

/// Serves `num_requests` requests with `policy`. Ads, contexts and click
/// uniforms are keyed by request id, so two policies run with the same
/// seed face identical traffic (common random numbers).
SimulationResult run_policy_simulation(SelectionPolicy& policy, const Catalog& catalog,
                                       const GroundTruth& gt, std::size_t num_requests,
                                       std::uint64_t seed);

/// Argmax of true CTR by enumeration.
class OraclePolicy : public SelectionPolicy {
 public:
  OraclePolicy(const GroundTruth& gt, std::uint64_t cap = kDefaultEnumerationCap)
      : cache_(gt, cap) {}
  std::string name() const override { return "oracle"; }
  CreativeCombination select(const RequestContext& context, const Ad& ad, Engine& rng) override;

 private:
  OracleCache cache_;
};

}  // namespace genco::sim
