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
#include <span>
#include <unordered_map>
#include <vector>

#include "genco/diff/kernels.hpp"
#include "genco/domain.hpp"

namespace genco {

/// Hashed-id feature sizes and network widths.
struct ModelConfig {
  std::size_t pad_size = kDefaultPadSize;
  int embedding_dim = 4;
  /// Hidden widths of the context encoder; the last entry is dim(h).
  std::vector<int> encoder_layers = {32, 16, 8};
  /// Hidden widths of the shared scorer phi; a width-1 output layer follows.
  std::vector<int> phi_layers = {64, 32, 8};
  int attention_heads = 1;
  int user_buckets = 4096;
  int query_buckets = 1024;
  int segment_buckets = 1024;
  int age_buckets = 16;
  int gender_buckets = 4;
  double bn_eps = 1e-5;
  double bn_momentum = 0.99;
  /// Cross-component attention on; off replaces z with zeros.
  bool use_context = true;
  std::uint64_t seed = 0;

  int context_dim() const { return encoder_layers.back(); }
  /// emb(e) | emb(C_j) | z
  int element_feature_dim() const { return 3 * embedding_dim; }
};

/// Dense row ids for the catalog's ads and per-component elements. Row 0 of
/// each table is reserved for ids outside the catalog.
class Vocabulary {
 public:
  explicit Vocabulary(const Catalog& catalog);

  int ad_row(AdId id) const;
  int element_row(int component, ElementId id) const;
  int num_ad_rows() const { return num_ad_rows_; }
  int num_element_rows() const { return num_element_rows_; }

 private:
  std::unordered_map<AdId, int> ads_;
  std::vector<std::unordered_map<ElementId, int>> elements_;
  int num_ad_rows_ = 1;
  int num_element_rows_ = 1;
};

struct RequestInput {
  const Ad* ad = nullptr;
  const RequestContext* context = nullptr;
};

/// Flattened view of a batch: one row per valid (unpadded) candidate slot,
/// grouped by record and by (record, component).
struct BatchLayout {
  int num_records = 0;
  int num_components = 0;
  std::size_t pad_size = kDefaultPadSize;

  std::vector<int> slot_record;
  std::vector<int> slot_component;
  std::vector<int> slot_index;
  std::vector<int> slot_vocab;

  std::vector<diff::Segment> record_rows;  // per record
  std::vector<diff::Segment> group_rows;   // per record * num_components + j; empty if absent
  std::vector<int> pool_size;              // untruncated n_{i,j}; 0 if absent

  std::vector<int> ad_rows, query_rows, user_rows, age_rows, gender_rows;
  std::vector<int> segment_rows;
  std::vector<diff::Segment> segment_groups;  // per record

  int num_rows() const { return static_cast<int>(slot_record.size()); }
  const diff::Segment& group(int record, int component) const {
    return group_rows[static_cast<std::size_t>(record * num_components + component)];
  }
  /// Row of a slot, or -1 when the slot is padding or the component absent.
  int row_of(int record, int component, int slot) const {
    const auto& g = group(record, component);
    return slot >= 0 && slot < g.size ? g.begin + slot : -1;
  }
};

/// Row of a hashed id feature in a table of `buckets` rows.
int hash_bucket(std::uint64_t id, int buckets);

BatchLayout make_layout(const ModelConfig& config, const Vocabulary& vocab,
                        std::size_t num_components, std::span<const RequestInput> requests);

}  // namespace genco
