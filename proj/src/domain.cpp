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

#include "genco/domain.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

namespace genco {

using nlohmann::json;

std::optional<std::size_t> CandidateSet::index_of(ElementId id) const {
  auto it = std::find(elements.begin(), elements.end(), id);
  if (it == elements.end()) return std::nullopt;
  return static_cast<std::size_t>(it - elements.begin());
}

std::vector<int> Ad::covered_components() const {
  std::vector<int> out;
  for (int j = 0; j < static_cast<int>(pools.size()); ++j)
    if (pools[j]) out.push_back(j);
  return out;
}

Catalog::Catalog(std::vector<ComponentKind> components, std::vector<Ad> ads)
    : components_(std::move(components)), ads_(std::move(ads)) {
  index_.reserve(ads_.size());
  for (std::size_t i = 0; i < ads_.size(); ++i) {
    ads_[i].pools.resize(components_.size());
    index_.emplace(ads_[i].ad_id, i);
  }
}

const Ad* Catalog::find(AdId id) const {
  auto it = index_.find(id);
  return it == index_.end() ? nullptr : &ads_[it->second];
}

const Ad& Catalog::at(AdId id) const {
  const Ad* ad = find(id);
  if (!ad) throw StructuralError("unknown ad id " + std::to_string(id));
  return *ad;
}

std::optional<int> Catalog::component_id(std::string_view name) const {
  for (const auto& c : components_)
    if (c.name == name) return c.id;
  return std::nullopt;
}

std::vector<ComponentKind> default_components() {
  std::vector<ComponentKind> out;
  for (std::size_t j = 0; j < kDefaultComponentNames.size(); ++j)
    out.push_back({static_cast<int>(j), std::string(kDefaultComponentNames[j])});
  return out;
}

std::uint64_t combination_count(const Ad& ad) {
  std::uint64_t total = 1;
  bool any = false;
  for (const auto& pool : ad.pools) {
    if (!pool) continue;
    any = true;
    if (pool->elements.empty())
      throw StructuralError("ad " + std::to_string(ad.ad_id) + ": empty candidate set for component " +
                            std::to_string(pool->component));
    const std::uint64_t n = pool->elements.size();
    if (total > std::numeric_limits<std::uint64_t>::max() / n)
      total = std::numeric_limits<std::uint64_t>::max();
    else
      total *= n;
  }
  if (!any) throw StructuralError("ad " + std::to_string(ad.ad_id) + " covers no component");
  return total;
}

std::uint64_t combination_count(const Catalog& catalog, AdId ad) {
  return combination_count(catalog.at(ad));
}

CombinationEnumerator::CombinationEnumerator(const Ad& ad, std::uint64_t cap)
    : ad_(&ad), slots_(ad.pools.size(), -1) {
  count_ = combination_count(ad);
  if (count_ > cap)
    throw OracleTooLarge("ad " + std::to_string(ad.ad_id) + " has " + std::to_string(count_) +
                         " combinations, above the enumeration cap " + std::to_string(cap));
  covered_ = ad.covered_components();
  for (int j : covered_) slots_[j] = 0;
}

CreativeCombination CombinationEnumerator::combination() const {
  CreativeCombination c{ad_->ad_id, std::vector<std::optional<ElementId>>(slots_.size())};
  for (int j : covered_) c.selections[j] = ad_->pools[j]->elements[slots_[j]];
  return c;
}

void CombinationEnumerator::next() {
  for (auto it = covered_.rbegin(); it != covered_.rend(); ++it) {
    const int j = *it;
    if (++slots_[j] < static_cast<int>(ad_->pools[j]->elements.size())) return;
    slots_[j] = 0;
  }
  done_ = true;
}

std::vector<CreativeCombination> enumerate_combinations(const Ad& ad, std::uint64_t cap) {
  CombinationEnumerator it(ad, cap);
  std::vector<CreativeCombination> out;
  out.reserve(it.count());
  for (; !it.done(); it.next()) out.push_back(it.combination());
  return out;
}

std::size_t PaddedSet::num_valid() const {
  return static_cast<std::size_t>(std::count(valid.begin(), valid.end(), true));
}

PaddedSet pad_or_truncate(const PaddedSet& set, std::size_t size) {
  PaddedSet out;
  out.ids.assign(size, 0);
  out.valid.assign(size, false);
  const std::size_t keep = std::min(size, set.size());
  for (std::size_t k = 0; k < keep; ++k) {
    out.ids[k] = set.ids[k];
    out.valid[k] = set.valid[k];
  }
  return out;
}

PaddedSet pad_or_truncate(const CandidateSet& set, std::size_t size) {
  PaddedSet all{set.elements, std::vector<bool>(set.elements.size(), true)};
  return pad_or_truncate(all, size);
}

std::vector<Violation> validate_catalog(const Catalog& catalog) {
  std::vector<Violation> out;
  const auto& comps = catalog.components();
  if (comps.empty()) out.push_back({0, -1, "catalog has no components"});
  for (std::size_t j = 0; j < comps.size(); ++j)
    if (comps[j].id != static_cast<int>(j))
      out.push_back({0, static_cast<int>(j), "component ids are not dense"});

  std::unordered_set<AdId> seen_ads;
  for (const auto& ad : catalog.ads()) {
    if (!seen_ads.insert(ad.ad_id).second) out.push_back({ad.ad_id, -1, "duplicate ad id"});
    bool any = false;
    for (std::size_t j = 0; j < ad.pools.size(); ++j) {
      const auto& pool = ad.pools[j];
      if (!pool) continue;
      any = true;
      const int cj = static_cast<int>(j);
      if (pool->component != cj) out.push_back({ad.ad_id, cj, "pool component id mismatch"});
      if (pool->ad_id != ad.ad_id) out.push_back({ad.ad_id, cj, "pool ad id mismatch"});
      if (pool->elements.empty()) out.push_back({ad.ad_id, cj, "empty candidate set"});
      std::unordered_set<ElementId> ids;
      for (ElementId e : pool->elements) {
        if (!ids.insert(e).second) {
          out.push_back({ad.ad_id, cj,
                         "duplicate element id " + std::to_string(e) + " in component " +
                             (cj < static_cast<int>(comps.size()) ? comps[cj].name : "?")});
          break;
        }
      }
    }
    if (!any) out.push_back({ad.ad_id, -1, "ad covers no component"});
  }
  return out;
}

std::vector<Violation> validate_combination(const Catalog& catalog,
                                            const CreativeCombination& c) {
  std::vector<Violation> out;
  const Ad* ad = catalog.find(c.ad_id);
  if (!ad) {
    out.push_back({c.ad_id, -1, "unknown ad id"});
    return out;
  }
  if (c.selections.size() != catalog.num_components()) {
    out.push_back({c.ad_id, -1, "selection vector has wrong length"});
    return out;
  }
  for (std::size_t j = 0; j < c.selections.size(); ++j) {
    const int cj = static_cast<int>(j);
    const auto& sel = c.selections[j];
    if (ad->covers(cj) && !sel) {
      out.push_back({c.ad_id, cj, "missing selection for covered component"});
    } else if (!ad->covers(cj) && sel) {
      out.push_back({c.ad_id, cj, "selection for a component the ad lacks"});
    } else if (sel && !ad->pools[j]->index_of(*sel)) {
      out.push_back({c.ad_id, cj, "element " + std::to_string(*sel) + " is not a candidate"});
    }
  }
  return out;
}

void require_valid(const Catalog& catalog, const CreativeCombination& combination) {
  auto v = validate_combination(catalog, combination);
  if (!v.empty())
    throw StructuralError("invalid combination for ad " + std::to_string(v.front().ad_id) + ": " +
                          v.front().message);
}

// ---------------------------------------------------------------------------
// JSON Lines

namespace {

std::vector<ComponentKind> order_components(const std::vector<std::string>& seen) {
  // The six standard components always keep ids 0..5, covered or not.
  std::vector<std::string> names(kDefaultComponentNames.begin(), kDefaultComponentNames.end());
  for (const auto& n : seen)
    if (std::find(names.begin(), names.end(), n) == names.end()) names.push_back(n);
  std::vector<ComponentKind> out;
  for (std::size_t j = 0; j < names.size(); ++j) out.push_back({static_cast<int>(j), names[j]});
  return out;
}

[[noreturn]] void schema_fail(std::size_t line, const std::string& what) {
  throw SchemaError("line " + std::to_string(line) + ": " + what);
}

json parse_line(const std::string& text, std::size_t line) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    schema_fail(line, e.what());
  }
}

}  // namespace

void write_catalog(std::ostream& out, const Catalog& catalog) {
  for (const auto& ad : catalog.ads()) {
    json comps = json::array();
    for (int j : ad.covered_components())
      comps.push_back({{"name", catalog.components()[j].name}, {"elements", ad.pools[j]->elements}});
    json line = {{"ad_id", ad.ad_id}, {"category", ad.category}, {"components", comps}};
    out << line.dump() << '\n';
  }
}

Catalog read_catalog(std::istream& in) {
  struct RawAd {
    AdId id;
    int category;
    std::vector<std::pair<std::string, std::vector<ElementId>>> pools;
  };
  std::vector<RawAd> raw;
  std::vector<std::string> seen;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j = parse_line(text, line);
    try {
      RawAd ad{j.at("ad_id").get<AdId>(), j.value("category", 0), {}};
      for (const auto& c : j.at("components")) {
        auto name = c.at("name").get<std::string>();
        if (std::find(seen.begin(), seen.end(), name) == seen.end()) seen.push_back(name);
        for (const auto& [prev, _] : ad.pools)
          if (prev == name) schema_fail(line, "component '" + name + "' listed twice");
        ad.pools.emplace_back(name, c.at("elements").get<std::vector<ElementId>>());
      }
      raw.push_back(std::move(ad));
    } catch (const json::exception& e) {
      schema_fail(line, e.what());
    }
  }
  auto components = order_components(seen);
  std::vector<Ad> ads;
  ads.reserve(raw.size());
  for (auto& r : raw) {
    Ad ad{r.id, r.category, std::vector<std::optional<CandidateSet>>(components.size())};
    for (auto& [name, elems] : r.pools) {
      int j = 0;
      while (components[j].name != name) ++j;
      ad.pools[j] = CandidateSet{r.id, j, std::move(elems)};
    }
    ads.push_back(std::move(ad));
  }
  return Catalog(std::move(components), std::move(ads));
}

void write_impressions(std::ostream& out, const std::vector<ImpressionRecord>& records,
                       const Catalog& catalog) {
  for (const auto& r : records) {
    json exposed = json::array();
    for (std::size_t j = 0; j < r.exposed.selections.size(); ++j)
      if (r.exposed.selections[j])
        exposed.push_back(
            {{"component", catalog.components().at(j).name}, {"element", *r.exposed.selections[j]}});
    json line = {
        {"request_id", r.context.request_id},
        {"timestamp_ms", r.context.timestamp_ms},
        {"user",
         {{"user_id", r.context.user.user_id},
          {"age_bucket", r.context.user.age_bucket},
          {"gender", r.context.user.gender}}},
        {"query", {{"query_id", r.context.query.query_id}, {"segments", r.context.query.segments}}},
        {"ad_id", r.ad_id},
        {"exposed", exposed},
        {"click", r.click},
        {"policy_id", r.policy_id}};
    out << line.dump() << '\n';
  }
}

std::vector<ImpressionRecord> read_impressions(std::istream& in, const Catalog& catalog) {
  std::vector<ImpressionRecord> out;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j = parse_line(text, line);
    ImpressionRecord r;
    try {
      r.context.request_id = j.at("request_id").get<std::uint64_t>();
      r.context.timestamp_ms = j.at("timestamp_ms").get<std::int64_t>();
      const auto& u = j.at("user");
      r.context.user = {u.at("user_id").get<std::uint64_t>(), u.at("age_bucket").get<int>(),
                        u.at("gender").get<int>()};
      const auto& q = j.at("query");
      r.context.query = {q.at("query_id").get<std::uint64_t>(),
                         q.at("segments").get<std::vector<std::uint64_t>>()};
      r.ad_id = j.at("ad_id").get<AdId>();
      r.exposed = {r.ad_id, std::vector<std::optional<ElementId>>(catalog.num_components())};
      for (const auto& e : j.at("exposed")) {
        auto name = e.at("component").get<std::string>();
        auto cid = catalog.component_id(name);
        if (!cid) schema_fail(line, "unknown component '" + name + "'");
        r.exposed.selections[*cid] = e.at("element").get<ElementId>();
      }
      r.click = j.at("click").get<int>();
      r.policy_id = j.at("policy_id").get<std::string>();
    } catch (const json::exception& e) {
      schema_fail(line, e.what());
    }
    if (r.click != 0 && r.click != 1) schema_fail(line, "click must be 0 or 1");
    out.push_back(std::move(r));
  }
  return out;
}

bool is_chronological(const std::vector<ImpressionRecord>& records) {
  return std::is_sorted(records.begin(), records.end(), [](const auto& a, const auto& b) {
    return a.context.timestamp_ms < b.context.timestamp_ms;
  });
}

Catalog load_catalog_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open catalog file " + path);
  return read_catalog(in);
}

void save_catalog_file(const std::string& path, const Catalog& catalog) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  write_catalog(out, catalog);
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<ImpressionRecord> load_impressions_file(const std::string& path,
                                                    const Catalog& catalog) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open impression log " + path);
  return read_impressions(in, catalog);
}

void save_impressions_file(const std::string& path,
                           const std::vector<ImpressionRecord>& records,
                           const Catalog& catalog) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  write_impressions(out, records, catalog);
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace genco
