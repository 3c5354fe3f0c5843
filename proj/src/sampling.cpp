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

#include "genco/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace genco {

ComponentDistribution make_distribution(int component, const std::vector<double>& valid_scores,
                                        std::size_t pad_size) {
  if (valid_scores.empty()) throw std::invalid_argument("distribution needs a valid slot");
  if (valid_scores.size() > pad_size) throw std::invalid_argument("more scores than slots");
  ComponentDistribution d;
  d.component = component;
  d.probs.assign(pad_size, 0.0);
  d.valid.assign(pad_size, false);
  d.scores.assign(pad_size, 0.0);
  const double mx = *std::max_element(valid_scores.begin(), valid_scores.end());
  double total = 0.0;
  for (std::size_t k = 0; k < valid_scores.size(); ++k) {
    d.valid[k] = true;
    d.scores[k] = valid_scores[k];
    d.probs[k] = std::exp(valid_scores[k] - mx);
    total += d.probs[k];
  }
  for (std::size_t k = 0; k < valid_scores.size(); ++k) d.probs[k] /= total;
  return d;
}

namespace {

int draw_slot(const ComponentDistribution& d, Engine& rng) {
  const double u = uniform01(rng);
  double acc = 0.0;
  int last = -1;
  for (std::size_t k = 0; k < d.probs.size(); ++k) {
    if (!d.valid[k]) continue;
    last = static_cast<int>(k);
    acc += d.probs[k];
    if (u < acc) return last;
  }
  return last;  // rounding left u beyond the accumulated mass
}

}  // namespace

std::vector<SampledCombination> sample_combinations(const Distributions& dists, int k, Engine& rng) {
  if (k < 1) throw std::invalid_argument("K must be at least 1");
  std::vector<SampledCombination> out(static_cast<std::size_t>(k));
  for (auto& s : out) {
    s.slots.assign(dists.size(), -1);
    for (std::size_t j = 0; j < dists.size(); ++j) {
      if (!dists[j]) continue;
      const int slot = draw_slot(*dists[j], rng);
      s.slots[j] = slot;
      s.log_prob += std::log(dists[j]->probs[static_cast<std::size_t>(slot)]);
    }
  }
  return out;
}

SampledCombination greedy_combination(const Distributions& dists) {
  SampledCombination s;
  s.slots.assign(dists.size(), -1);
  for (std::size_t j = 0; j < dists.size(); ++j) {
    if (!dists[j]) continue;
    const auto& d = *dists[j];
    int best = -1;
    for (std::size_t k = 0; k < d.probs.size(); ++k)
      if (d.valid[k] && (best < 0 || d.probs[k] > d.probs[static_cast<std::size_t>(best)]))
        best = static_cast<int>(k);
    s.slots[j] = best;
    s.log_prob += std::log(d.probs[static_cast<std::size_t>(best)]);
  }
  return s;
}

double combination_log_prob(const Distributions& dists, const std::vector<int>& slots) {
  if (slots.size() != dists.size()) throw std::invalid_argument("slot count mismatch");
  double lp = 0.0;
  for (std::size_t j = 0; j < dists.size(); ++j) {
    if (!dists[j]) continue;
    const auto& d = *dists[j];
    const int s = slots[j];
    if (s < 0 || static_cast<std::size_t>(s) >= d.probs.size() || !d.valid[static_cast<std::size_t>(s)])
      throw std::invalid_argument("slot is not a valid candidate");
    lp += std::log(d.probs[static_cast<std::size_t>(s)]);
  }
  return lp;
}

CreativeCombination to_combination(const Ad& ad, const std::vector<int>& slots) {
  CreativeCombination c;
  c.ad_id = ad.ad_id;
  c.selections.assign(ad.pools.size(), std::nullopt);
  for (std::size_t j = 0; j < ad.pools.size() && j < slots.size(); ++j) {
    if (!ad.pools[j] || slots[j] < 0) continue;
    c.selections[j] = ad.pools[j]->elements.at(static_cast<std::size_t>(slots[j]));
  }
  return c;
}

std::optional<std::vector<int>> slots_of(const Ad& ad, const CreativeCombination& c,
                                         std::size_t pad_size) {
  std::vector<int> slots(ad.pools.size(), -1);
  for (std::size_t j = 0; j < ad.pools.size(); ++j) {
    if (!ad.pools[j]) continue;
    if (j >= c.selections.size() || !c.selections[j]) return std::nullopt;
    auto k = ad.pools[j]->index_of(*c.selections[j]);
    if (!k || *k >= pad_size) return std::nullopt;
    slots[j] = static_cast<int>(*k);
  }
  return slots;
}

}  // namespace genco
