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

#include "genco/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace genco::sim {

std::vector<ComponentSpec> reference_components() {
  return {{"title", 6.3, 1.000},     {"image", 3.4, 1.000},     {"marketing", 2.2, 0.390},
          {"highlight", 7.0, 0.956}, {"attribute", 2.3, 0.583}, {"structure_attribute", 8.1, 0.678}};
}

SimConfig SimConfig::interaction_dense() {
  SimConfig c;
  c.interaction_density = 0.5;
  c.interaction_scale = 0.5;
  return c;
}

void SimConfig::validate() const {
  if (num_ads == 0) throw std::invalid_argument("num_ads must be >= 1");
  if (components.empty()) throw std::invalid_argument("at least one component is required");
  if (vocab_per_component == 0 || max_candidates == 0)
    throw std::invalid_argument("vocab_per_component and max_candidates must be >= 1");
  if (num_users == 0 || num_queries == 0 || num_segments == 0)
    throw std::invalid_argument("population sizes must be >= 1");
  if (age_buckets < 1 || gender_codes < 1 || num_categories < 1)
    throw std::invalid_argument("bucket counts must be >= 1");
  if (!(base_ctr > 0.0 && base_ctr < 1.0)) throw std::invalid_argument("base_ctr must be in (0,1)");
  if (!(interaction_density >= 0.0 && interaction_density <= 1.0))
    throw std::invalid_argument("interaction_density must be in [0,1]");
  for (const auto& c : components) {
    if (c.mean_candidates < 1.0)
      throw std::invalid_argument("component '" + c.name + "': mean_candidates must be >= 1");
    if (!(c.coverage >= 0.0 && c.coverage <= 1.0))
      throw std::invalid_argument("component '" + c.name + "': coverage must be in [0,1]");
  }
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double logit(double p) { return std::log(p / (1.0 - p)); }

ElementId element_id(std::string_view component, std::size_t k) {
  return fnv1a64(std::string(component) + "/" + std::to_string(k));
}

AdId ad_id(std::size_t i) { return fnv1a64("ad/" + std::to_string(i)); }

int GroundTruth::index_of(ElementId e) const {
  auto it = global_index.find(e);
  return it == global_index.end() ? -1 : it->second;
}

double GroundTruth::logit(AdId ad, const std::vector<int>& elements, int age_bucket) const {
  auto it = base_logit.find(ad);
  if (it == base_logit.end()) throw StructuralError("ground truth has no ad " + std::to_string(ad));
  double z = it->second;
  const bool has_context = context.rows() > 0 && age_bucket >= 0 && age_bucket < context.rows();
  for (std::size_t a = 0; a < elements.size(); ++a) {
    const int ga = elements[a];
    if (ga < 0) continue;
    z += effect[ga];
    if (has_context) z += context(age_bucket, ga);
    for (std::size_t b = a + 1; b < elements.size(); ++b)
      if (elements[b] >= 0) z += interaction(ga, elements[b]);
  }
  return z;
}

namespace {

double standard_normal(Engine& rng) { return std::normal_distribution<double>(0.0, 1.0)(rng); }

std::size_t draw_count(Engine& rng, double mean, std::size_t cap) {
  std::size_t n = 1;
  if (mean > 1.0) n += std::poisson_distribution<std::size_t>(mean - 1.0)(rng);
  return std::min(n, cap);
}

std::vector<int> global_indices(const GroundTruth& gt, const Ad& ad,
                                const CreativeCombination& c) {
  std::vector<int> out;
  for (std::size_t j = 0; j < ad.pools.size(); ++j) {
    if (!ad.pools[j]) continue;
    out.push_back(gt.index_of(*c.selections[j]));
  }
  return out;
}

// Offset added to every base logit so the uniform-policy CTR of the catalog
// matches config.base_ctr. Solved by bisection over a fixed Monte-Carlo
// sample of (ad, combination, age bucket).
double calibrate_offset(const GroundTruth& gt, const Catalog& catalog,
                        const std::vector<double>& raw_base) {
  Engine rng = make_stream(gt.config.seed, "calibration");
  constexpr int kPerAd = 32;
  std::vector<double> partial;
  partial.reserve(catalog.ads().size() * kPerAd);
  std::vector<int> idx;
  for (std::size_t i = 0; i < catalog.ads().size(); ++i) {
    const Ad& ad = catalog.ads()[i];
    for (int s = 0; s < kPerAd; ++s) {
      idx.clear();
      for (const auto& pool : ad.pools) {
        if (!pool) continue;
        idx.push_back(gt.index_of(pool->elements[uniform_index(rng, pool->size())]));
      }
      const int age = static_cast<int>(uniform_index(rng, gt.config.age_buckets));
      partial.push_back(gt.logit(ad.ad_id, idx, age) + raw_base[i]);
    }
  }
  auto mean_ctr = [&](double offset) {
    double acc = 0.0;
    for (double z : partial) acc += sigmoid(z + offset);
    return acc / static_cast<double>(partial.size());
  };
  double lo = -30.0, hi = 30.0;
  for (int it = 0; it < 100; ++it) {
    const double mid = 0.5 * (lo + hi);
    (mean_ctr(mid) < gt.config.base_ctr ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

std::pair<Catalog, GroundTruth> make_synthetic_catalog(const SimConfig& config) {
  config.validate();
  const std::size_t m = config.components.size();
  const std::size_t vocab = config.vocab_per_component;
  const std::size_t cap = std::min(vocab, config.max_candidates);

  std::vector<ComponentKind> kinds;
  for (std::size_t j = 0; j < m; ++j) kinds.push_back({static_cast<int>(j), config.components[j].name});

  GroundTruth gt;
  gt.config = config;
  gt.vocab = vocab;
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t k = 0; k < vocab; ++k)
      gt.global_index.emplace(element_id(config.components[j].name, k),
                              static_cast<int>(j * vocab + k));

  // Catalog: coverage, pool size and pool membership per ad.
  Engine cat_rng = make_stream(config.seed, "catalog");
  std::vector<Ad> ads;
  ads.reserve(config.num_ads);
  std::vector<std::size_t> perm(vocab);
  for (std::size_t i = 0; i < config.num_ads; ++i) {
    Ad ad{ad_id(i), static_cast<int>(uniform_index(cat_rng, config.num_categories)),
          std::vector<std::optional<CandidateSet>>(m)};
    bool any = false;
    for (std::size_t j = 0; j < m; ++j) {
      const auto& spec = config.components[j];
      const bool covered = uniform01(cat_rng) < spec.coverage;
      const std::size_t n = draw_count(cat_rng, spec.mean_candidates, cap);
      if (!covered) continue;
      any = true;
      std::iota(perm.begin(), perm.end(), 0);
      CandidateSet pool{ad.ad_id, static_cast<int>(j), {}};
      for (std::size_t k = 0; k < n; ++k) {
        const std::size_t pick = k + uniform_index(cat_rng, vocab - k);
        std::swap(perm[k], perm[pick]);
        pool.elements.push_back(element_id(spec.name, perm[k]));
      }
      ad.pools[j] = std::move(pool);
    }
    if (!any) {
      // Every ad shows at least its first component.
      const std::size_t n = draw_count(cat_rng, config.components[0].mean_candidates, cap);
      CandidateSet pool{ad.ad_id, 0, {}};
      for (std::size_t k = 0; k < n; ++k) pool.elements.push_back(element_id(config.components[0].name, k));
      ad.pools[0] = std::move(pool);
    }
    ads.push_back(std::move(ad));
  }
  Catalog catalog(std::move(kinds), std::move(ads));

  // Effects.
  Engine fx = make_stream(config.seed, "effects");
  const std::size_t total = m * vocab;
  gt.effect.resize(static_cast<Eigen::Index>(total));
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t k = 0; k < vocab; ++k)
      gt.effect[static_cast<Eigen::Index>(j * vocab + k)] =
          standard_normal(fx) * config.element_scale * config.components[j].effect_scale;
  gt.interaction = Eigen::MatrixXd::Zero(total, total);
  for (std::size_t a = 0; a < total; ++a) {
    for (std::size_t b = a + 1; b < total; ++b) {
      if (a / vocab == b / vocab) continue;
      const double z = standard_normal(fx);
      const bool active = uniform01(fx) < config.interaction_density;
      const double v = active ? z * config.interaction_scale : 0.0;
      gt.interaction(a, b) = v;
      gt.interaction(b, a) = v;
    }
  }
  gt.context.resize(config.age_buckets, static_cast<Eigen::Index>(total));
  for (Eigen::Index r = 0; r < gt.context.rows(); ++r)
    for (Eigen::Index c = 0; c < gt.context.cols(); ++c)
      gt.context(r, c) = standard_normal(fx) * config.context_scale;
  std::vector<double> raw_base(catalog.ads().size());
  for (auto& b : raw_base) b = standard_normal(fx) * config.base_scale;
  for (const auto& ad : catalog.ads()) gt.base_logit[ad.ad_id] = 0.0;
  const double offset = calibrate_offset(gt, catalog, raw_base);
  for (std::size_t i = 0; i < catalog.ads().size(); ++i)
    gt.base_logit[catalog.ads()[i].ad_id] = raw_base[i] + offset;

  // Population.
  Engine pop = make_stream(config.seed, "population");
  gt.users.reserve(config.num_users);
  for (std::size_t u = 0; u < config.num_users; ++u)
    gt.users.push_back({fnv1a64("user/" + std::to_string(u)),
                        static_cast<int>(uniform_index(pop, config.age_buckets)),
                        static_cast<int>(uniform_index(pop, config.gender_codes))});
  gt.queries.reserve(config.num_queries);
  for (std::size_t q = 0; q < config.num_queries; ++q) {
    QueryFeatures query{fnv1a64("query/" + std::to_string(q)), {}};
    const std::size_t segs = 1 + uniform_index(pop, 3);
    for (std::size_t s = 0; s < segs; ++s)
      query.segments.push_back(
          fnv1a64("seg/" + std::to_string(uniform_index(pop, config.num_segments))));
    gt.queries.push_back(std::move(query));
  }
  return {std::move(catalog), std::move(gt)};
}

double true_ctr(const GroundTruth& gt, const Ad& ad, const CreativeCombination& combination,
                const RequestContext& context) {
  if (combination.ad_id != ad.ad_id)
    throw StructuralError("combination belongs to ad " + std::to_string(combination.ad_id));
  if (combination.selections.size() != ad.pools.size())
    throw StructuralError("combination has the wrong number of components");
  for (std::size_t j = 0; j < ad.pools.size(); ++j) {
    const auto& sel = combination.selections[j];
    if (ad.pools[j].has_value() != sel.has_value() || (sel && !ad.pools[j]->index_of(*sel)))
      throw StructuralError("combination is not valid for ad " + std::to_string(ad.ad_id) +
                            " at component " + std::to_string(j));
  }
  return sigmoid(gt.logit(ad.ad_id, global_indices(gt, ad, combination), context.user.age_bucket));
}

int sample_click(Engine& rng, double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("click probability outside [0,1]");
  return uniform01(rng) < p ? 1 : 0;
}

OracleStats oracle_stats(const GroundTruth& gt, const Ad& ad, int age_bucket, std::uint64_t cap) {
  CombinationEnumerator it(ad, cap);
  const auto covered = ad.covered_components();
  std::vector<std::vector<int>> pool_index(covered.size());
  for (std::size_t c = 0; c < covered.size(); ++c)
    for (ElementId e : ad.pools[covered[c]]->elements) pool_index[c].push_back(gt.index_of(e));

  OracleStats out;
  out.count = it.count();
  out.best_ctr = -1.0;
  double total = 0.0;
  std::vector<int> idx(covered.size());
  for (; !it.done(); it.next()) {
    for (std::size_t c = 0; c < covered.size(); ++c) idx[c] = pool_index[c][it.slots()[covered[c]]];
    const double p = sigmoid(gt.logit(ad.ad_id, idx, age_bucket));
    total += p;
    if (p > out.best_ctr) {
      out.best_ctr = p;
      out.best_slots = it.slots();
    }
  }
  out.mean_ctr = total / static_cast<double>(out.count);
  return out;
}

const OracleStats& OracleCache::get(const Ad& ad, int age_bucket) {
  const std::uint64_t key = mix64(ad.ad_id) ^ static_cast<std::uint64_t>(age_bucket);
  auto it = cache_.find(key);
  if (it != cache_.end()) return it->second;
  return cache_.emplace(key, oracle_stats(*gt_, ad, age_bucket, cap_)).first->second;
}

RequestContext draw_context(const GroundTruth& gt, std::uint64_t seed, std::uint64_t request_id) {
  Engine rng = make_stream(seed, "context", request_id);
  RequestContext ctx;
  ctx.request_id = request_id;
  ctx.user = gt.users[uniform_index(rng, gt.users.size())];
  ctx.query = gt.queries[uniform_index(rng, gt.queries.size())];
  ctx.timestamp_ms = gt.config.start_timestamp_ms +
                     static_cast<std::int64_t>(request_id - 1) * gt.config.request_interval_ms;
  return ctx;
}

const Ad& draw_ad(const Catalog& catalog, std::uint64_t seed, std::uint64_t request_id) {
  Engine rng = make_stream(seed, "ads", request_id);
  return catalog.ads()[uniform_index(rng, catalog.ads().size())];
}

namespace {

class UniformLoggingPolicy : public SelectionPolicy {
 public:
  std::string name() const override { return "uniform"; }
  CreativeCombination select(const RequestContext&, const Ad& ad, Engine& rng) override {
    CreativeCombination c{ad.ad_id, std::vector<std::optional<ElementId>>(ad.pools.size())};
    for (std::size_t j = 0; j < ad.pools.size(); ++j)
      if (ad.pools[j]) c.selections[j] = ad.pools[j]->elements[uniform_index(rng, ad.pools[j]->size())];
    return c;
  }
};

// Policy streams differ between the logging policy and served policies so a
// served policy's internal randomness never aliases the logged exposure draw.
SimulationResult simulate(SelectionPolicy& policy, std::string_view policy_stream,
                          const Catalog& catalog, const GroundTruth& gt,
                          std::size_t num_requests, std::uint64_t seed) {
  SimulationResult out;
  out.log.reserve(num_requests);
  out.expected_ctr.reserve(num_requests);
  for (std::uint64_t rid = 1; rid <= num_requests; ++rid) {
    const Ad& ad = draw_ad(catalog, seed, rid);
    RequestContext ctx = draw_context(gt, seed, rid);
    Engine policy_rng = make_stream(seed, policy_stream, rid);
    CreativeCombination combo = policy.select(ctx, ad, policy_rng);
    const double p = true_ctr(gt, ad, combo, ctx);
    Engine click_rng = make_stream(seed, "clicks", rid);
    ImpressionRecord rec{std::move(ctx), ad.ad_id, std::move(combo), sample_click(click_rng, p),
                         policy.name()};
    policy.update(rec);
    out.clicks += static_cast<std::uint64_t>(rec.click);
    out.expected_ctr.push_back(p);
    out.log.push_back(std::move(rec));
  }
  out.ctr = num_requests ? static_cast<double>(out.clicks) / static_cast<double>(num_requests) : 0.0;
  return out;
}

}  // namespace

std::vector<ImpressionRecord> generate_random_policy_logs(const Catalog& catalog,
                                                          const GroundTruth& gt,
                                                          std::size_t num_requests,
                                                          std::uint64_t seed) {
  UniformLoggingPolicy uniform;
  return simulate(uniform, "elements", catalog, gt, num_requests, seed).log;
}

SimulationResult run_policy_simulation(SelectionPolicy& policy, const Catalog& catalog,
                                       const GroundTruth& gt, std::size_t num_requests,
                                       std::uint64_t seed) {
  return simulate(policy, "policy", catalog, gt, num_requests, seed);
}

CreativeCombination OraclePolicy::select(const RequestContext& context, const Ad& ad, Engine&) {
  const auto& stats = cache_.get(ad, context.user.age_bucket);
  CreativeCombination c{ad.ad_id, std::vector<std::optional<ElementId>>(ad.pools.size())};
  for (std::size_t j = 0; j < ad.pools.size(); ++j)
    if (ad.pools[j]) c.selections[j] = ad.pools[j]->elements[stats.best_slots[j]];
  return c;
}

}  // namespace genco::sim
