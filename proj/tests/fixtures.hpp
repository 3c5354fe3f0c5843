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

#include <optional>
#include <vector>

#include "genco/domain.hpp"
#include "genco/genmodel.hpp"

namespace genco::testing {

/// Element id of pool position k of component j (shared across ads).
inline ElementId elem(int component, int k) {
  return static_cast<ElementId>(1000 * (component + 1) + k);
}

/// One ad per row of `sizes`; sizes[a][j] == 0 leaves component j uncovered.
inline Catalog make_catalog(const std::vector<std::vector<int>>& sizes, int first_ad = 1) {
  std::vector<Ad> ads;
  for (std::size_t a = 0; a < sizes.size(); ++a) {
    Ad ad;
    ad.ad_id = static_cast<AdId>(first_ad + static_cast<int>(a));
    ad.category = static_cast<int>(a % 3);
    ad.pools.resize(6);
    for (std::size_t j = 0; j < sizes[a].size() && j < 6; ++j) {
      if (sizes[a][j] == 0) continue;
      CandidateSet s{ad.ad_id, static_cast<int>(j), {}};
      for (int k = 0; k < sizes[a][j]; ++k) s.elements.push_back(elem(static_cast<int>(j), k));
      ad.pools[j] = std::move(s);
    }
    ads.push_back(std::move(ad));
  }
  return Catalog(default_components(), std::move(ads));
}

inline CreativeCombination combo(const Ad& ad, const std::vector<int>& slots) {
  CreativeCombination c;
  c.ad_id = ad.ad_id;
  c.selections.resize(ad.pools.size());
  for (std::size_t j = 0; j < ad.pools.size() && j < slots.size(); ++j)
    if (ad.pools[j] && slots[j] >= 0) c.selections[j] = ad.pools[j]->elements[static_cast<std::size_t>(slots[j])];
  return c;
}

inline RequestContext context(std::uint64_t request_id, int age = 1, std::int64_t ts = 0) {
  RequestContext c;
  c.request_id = request_id;
  c.user = {request_id * 7 + 1, age, 1};
  c.query = {request_id % 5 + 1, {request_id % 3 + 1, request_id + 9}};
  c.timestamp_ms = ts ? ts : static_cast<std::int64_t>(request_id) * 1000;
  return c;
}

inline ImpressionRecord record(const Catalog& catalog, AdId ad, const std::vector<int>& slots,
                               int click, std::uint64_t request_id = 1) {
  ImpressionRecord r;
  r.context = context(request_id);
  r.ad_id = ad;
  r.exposed = combo(catalog.at(ad), slots);
  r.click = click;
  r.policy_id = "uniform";
  return r;
}

/// Small hash tables so tests stay fast.
inline ModelConfig tiny_config(std::uint64_t seed = 1) {
  ModelConfig c;
  c.user_buckets = 8;
  c.query_buckets = 8;
  c.segment_buckets = 8;
  c.age_buckets = 4;
  c.gender_buckets = 2;
  c.seed = seed;
  return c;
}

}  // namespace genco::testing
