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

#include "genco/layout.hpp"

#include <algorithm>

#include "genco/rng.hpp"

namespace genco {

Vocabulary::Vocabulary(const Catalog& catalog) : elements_(catalog.num_components()) {
  for (const auto& ad : catalog.ads()) {
    if (ads_.emplace(ad.ad_id, num_ad_rows_).second) ++num_ad_rows_;
    for (std::size_t j = 0; j < ad.pools.size(); ++j) {
      if (!ad.pools[j]) continue;
      for (ElementId e : ad.pools[j]->elements)
        if (elements_[j].emplace(e, num_element_rows_).second) ++num_element_rows_;
    }
  }
}

int Vocabulary::ad_row(AdId id) const {
  auto it = ads_.find(id);
  return it == ads_.end() ? 0 : it->second;
}

int Vocabulary::element_row(int component, ElementId id) const {
  if (component < 0 || component >= static_cast<int>(elements_.size())) return 0;
  auto it = elements_[component].find(id);
  return it == elements_[component].end() ? 0 : it->second;
}

int hash_bucket(std::uint64_t id, int buckets) {
  return static_cast<int>(mix64(id) % static_cast<std::uint64_t>(buckets));
}

namespace {
int clamp_bucket(int v, int buckets) { return std::clamp(v, 0, buckets - 1); }
}  // namespace

BatchLayout make_layout(const ModelConfig& config, const Vocabulary& vocab,
                        std::size_t num_components, std::span<const RequestInput> requests) {
  BatchLayout L;
  L.num_records = static_cast<int>(requests.size());
  L.num_components = static_cast<int>(num_components);
  L.pad_size = config.pad_size;
  L.group_rows.resize(requests.size() * num_components);
  L.pool_size.assign(requests.size() * num_components, 0);
  for (std::size_t r = 0; r < requests.size(); ++r) {
    const Ad& ad = *requests[r].ad;
    const RequestContext& ctx = *requests[r].context;
    const int rec_begin = L.num_rows();
    for (std::size_t j = 0; j < num_components; ++j) {
      auto& g = L.group_rows[r * num_components + j];
      g.begin = L.num_rows();
      if (j >= ad.pools.size() || !ad.pools[j]) continue;
      const auto& elems = ad.pools[j]->elements;
      L.pool_size[r * num_components + j] = static_cast<int>(elems.size());
      const std::size_t n = std::min(elems.size(), config.pad_size);
      g.size = static_cast<int>(n);
      for (std::size_t k = 0; k < n; ++k) {
        L.slot_record.push_back(static_cast<int>(r));
        L.slot_component.push_back(static_cast<int>(j));
        L.slot_index.push_back(static_cast<int>(k));
        L.slot_vocab.push_back(vocab.element_row(static_cast<int>(j), elems[k]));
      }
    }
    L.record_rows.push_back({rec_begin, L.num_rows() - rec_begin});

    L.ad_rows.push_back(vocab.ad_row(ad.ad_id));
    L.query_rows.push_back(hash_bucket(ctx.query.query_id, config.query_buckets));
    L.user_rows.push_back(hash_bucket(ctx.user.user_id, config.user_buckets));
    L.age_rows.push_back(clamp_bucket(ctx.user.age_bucket, config.age_buckets));
    L.gender_rows.push_back(clamp_bucket(ctx.user.gender, config.gender_buckets));
    const int seg_begin = static_cast<int>(L.segment_rows.size());
    for (auto s : ctx.query.segments) L.segment_rows.push_back(hash_bucket(s, config.segment_buckets));
    L.segment_groups.push_back({seg_begin, static_cast<int>(L.segment_rows.size()) - seg_begin});
  }
  return L;
}

}  // namespace genco
