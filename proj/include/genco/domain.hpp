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

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace genco {

using AdId = std::uint64_t;
using ElementId = std::uint64_t;

/// Thrown when a catalog, combination or record violates a structural
/// invariant (unknown ad, empty pool, foreign element, ...).
class StructuralError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Thrown when a brute-force oracle is asked to enumerate more than its cap.
class OracleTooLarge : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Thrown by file readers on malformed input.
class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::array<std::string_view, 6> kDefaultComponentNames = {
    "title", "image", "marketing", "highlight", "attribute", "structure_attribute"};

inline constexpr std::size_t kDefaultPadSize = 15;
inline constexpr std::uint64_t kDefaultEnumerationCap = 1'000'000;

struct ComponentKind {
  int id = 0;
  std::string name;

  bool operator==(const ComponentKind&) const = default;
};

struct Element {
  ElementId element_id = 0;
  int component = 0;
};

/// Candidate pool of one ad for one component. Order is significant: it
/// defines enumeration order and every tie-break.
struct CandidateSet {
  AdId ad_id = 0;
  int component = 0;
  std::vector<ElementId> elements;

  std::size_t size() const { return elements.size(); }
  /// Position of `id` in the pool, or nullopt.
  std::optional<std::size_t> index_of(ElementId id) const;

  bool operator==(const CandidateSet&) const = default;
};

struct Ad {
  AdId ad_id = 0;
  int category = 0;
  /// Indexed by component id; nullopt where the ad lacks the component.
  std::vector<std::optional<CandidateSet>> pools;

  bool covers(int component) const {
    return component >= 0 && component < static_cast<int>(pools.size()) &&
           pools[component].has_value();
  }
  std::vector<int> covered_components() const;

  bool operator==(const Ad&) const = default;
};

/// One element per covered component; nullopt for components the ad lacks.
struct CreativeCombination {
  AdId ad_id = 0;
  std::vector<std::optional<ElementId>> selections;

  bool operator==(const CreativeCombination&) const = default;
};

struct UserFeatures {
  std::uint64_t user_id = 0;
  int age_bucket = 0;
  int gender = 0;

  bool operator==(const UserFeatures&) const = default;
};

struct QueryFeatures {
  std::uint64_t query_id = 0;
  std::vector<std::uint64_t> segments;

  bool operator==(const QueryFeatures&) const = default;
};

struct RequestContext {
  std::uint64_t request_id = 0;
  UserFeatures user;
  QueryFeatures query;
  std::int64_t timestamp_ms = 0;

  bool operator==(const RequestContext&) const = default;
};

class Catalog {
 public:
  Catalog() = default;
  Catalog(std::vector<ComponentKind> components, std::vector<Ad> ads);

  const std::vector<ComponentKind>& components() const { return components_; }
  const std::vector<Ad>& ads() const { return ads_; }
  std::size_t num_components() const { return components_.size(); }

  /// nullptr when the ad is unknown.
  const Ad* find(AdId id) const;
  /// Throws StructuralError when the ad is unknown.
  const Ad& at(AdId id) const;
  std::optional<int> component_id(std::string_view name) const;

  bool operator==(const Catalog& other) const {
    return components_ == other.components_ && ads_ == other.ads_;
  }

 private:
  std::vector<ComponentKind> components_;
  std::vector<Ad> ads_;
  std::unordered_map<AdId, std::size_t> index_;
};

struct ImpressionRecord {
  RequestContext context;
  AdId ad_id = 0;
  CreativeCombination exposed;
  int click = 0;
  std::string policy_id;

  bool operator==(const ImpressionRecord&) const = default;
};

/// Default six components, ids 0..5.
std::vector<ComponentKind> default_components();

/// Product of pool sizes over the covered components. Saturates at
/// UINT64_MAX. Throws StructuralError on an empty pool or an ad that covers
/// nothing.
std::uint64_t combination_count(const Ad& ad);
std::uint64_t combination_count(const Catalog& catalog, AdId ad);

/// Odometer over the Cartesian product of an ad's pools, last component
/// fastest. Yields slot indices; use `combination()` for element ids.
class CombinationEnumerator {
 public:
  CombinationEnumerator(const Ad& ad, std::uint64_t cap = kDefaultEnumerationCap);

  std::uint64_t count() const { return count_; }
  /// Slot index per component (-1 for uncovered components).
  const std::vector<int>& slots() const { return slots_; }
  CreativeCombination combination() const;
  bool done() const { return done_; }
  void next();

 private:
  const Ad* ad_;
  std::vector<int> covered_;
  std::vector<int> slots_;
  std::uint64_t count_ = 0;
  bool done_ = false;
};

std::vector<CreativeCombination> enumerate_combinations(
    const Ad& ad, std::uint64_t cap = kDefaultEnumerationCap);

/// Fixed-size candidate slots with a validity mask.
struct PaddedSet {
  std::vector<ElementId> ids;
  std::vector<bool> valid;

  std::size_t size() const { return ids.size(); }
  std::size_t num_valid() const;
  bool operator==(const PaddedSet&) const = default;
};

/// Keeps the first `size` candidates in order and pads with masked slots.
PaddedSet pad_or_truncate(const CandidateSet& set, std::size_t size = kDefaultPadSize);
PaddedSet pad_or_truncate(const PaddedSet& set, std::size_t size = kDefaultPadSize);

struct Violation {
  AdId ad_id = 0;
  int component = -1;
  std::string message;
};

std::vector<Violation> validate_catalog(const Catalog& catalog);
std::vector<Violation> validate_combination(const Catalog& catalog,
                                            const CreativeCombination& combination);
/// Throws StructuralError listing the first violation.
void require_valid(const Catalog& catalog, const CreativeCombination& combination);

// JSON Lines I/O. Readers throw SchemaError with the offending line number.
void write_catalog(std::ostream& out, const Catalog& catalog);
Catalog read_catalog(std::istream& in);
void write_impressions(std::ostream& out, const std::vector<ImpressionRecord>& records,
                       const Catalog& catalog);
std::vector<ImpressionRecord> read_impressions(std::istream& in, const Catalog& catalog);
/// True when timestamps never decrease.
bool is_chronological(const std::vector<ImpressionRecord>& records);

Catalog load_catalog_file(const std::string& path);
void save_catalog_file(const std::string& path, const Catalog& catalog);
std::vector<ImpressionRecord> load_impressions_file(const std::string& path,
                                                    const Catalog& catalog);
void save_impressions_file(const std::string& path,
                           const std::vector<ImpressionRecord>& records,
                           const Catalog& catalog);

}  // namespace genco
