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

#include <vector>

#include "genco/diff/ops.hpp"
#include "genco/genmodel.hpp"

namespace genco {

/// Multi-instance bags: each bag is one combination for one record, holding
/// the slot rows of its exposed (or sampled) elements.
struct Bags {
  std::vector<int> rows;                  // slot rows, bag after bag
  std::vector<diff::Segment> segments;    // per bag, into `rows`
  std::vector<int> bag_record;            // record of each bag
  std::vector<int> row_component;         // component of each entry of `rows`

  std::size_t size() const { return segments.size(); }

  /// Appends a bag from per-component slot indices (-1 skipped).
  void add(const BatchLayout& L, int record, const std::vector<int>& slots) {
    const int begin = static_cast<int>(rows.size());
    for (std::size_t j = 0; j < slots.size(); ++j) {
      const int row = L.row_of(record, static_cast<int>(j), slots[j]);
      if (row < 0) continue;
      rows.push_back(row);
      row_component.push_back(static_cast<int>(j));
    }
    const int n = static_cast<int>(rows.size()) - begin;
    if (n == 0) throw std::invalid_argument("bag has no exposed element");
    segments.push_back({begin, n});
    bag_record.push_back(record);
  }
};

struct BagForward {
  Var weights;  // rows.size() x 1, softmax within each bag
  Var fc;       // bags x 12
  Var scores;   // bags x 1, s = phi([h; f_c])
};

/// w = softmax over the bag's elements of a([h; f_e]); f_c = sum w f_e.
template <typename Scalar>
std::pair<Var, Var> mil_aggregate(diff::Tape<Scalar>& tape, GencoModel<Scalar>& model, Var h,
                                  Var features, const Bags& bags) {
  std::vector<int> row_bag_record;
  row_bag_record.reserve(bags.rows.size());
  for (std::size_t b = 0; b < bags.size(); ++b)
    for (int i = 0; i < bags.segments[b].size; ++i) row_bag_record.push_back(bags.bag_record[b]);
  Var fe = diff::gather_rows(tape, features, bags.rows);
  Var hr = diff::gather_rows(tape, h, std::move(row_bag_record));
  Var a = diff::dense(tape, diff::concat_cols(tape, {hr, fe}), tape.param(model.mil_weight()),
                      tape.param(model.mil_bias()));
  Var w = diff::segment_softmax(tape, a, bags.segments);
  Var fc = diff::segment_weighted_sum(tape, w, fe, bags.segments);
  return {w, fc};
}

/// s = phi([h; f_c]) with the element scorer's weights.
template <typename Scalar>
Var combination_score(diff::Tape<Scalar>& tape, GencoModel<Scalar>& model, Var h, Var fc,
                      const std::vector<int>& bag_record) {
  return model.score_rows(tape, h, bag_record, fc);
}

template <typename Scalar>
BagForward reward_forward(diff::Tape<Scalar>& tape, GencoModel<Scalar>& model, Var h, Var features,
                          const Bags& bags) {
  BagForward out;
  std::tie(out.weights, out.fc) = mil_aggregate(tape, model, h, features, bags);
  out.scores = combination_score(tape, model, h, out.fc, bags.bag_record);
  return out;
}

/// Mean BCE of combination scores against one label per bag.
template <typename Scalar>
Var loss_comb(diff::Tape<Scalar>& tape, Var scores, std::vector<Scalar> labels) {
  return diff::sigmoid_bce_mean(tape, scores, std::move(labels));
}

/// Mean BCE over every exposed element, each taking its bag's label.
template <typename Scalar>
Var loss_ele(diff::Tape<Scalar>& tape, Var element_scores, const Bags& bags,
             const std::vector<Scalar>& bag_labels) {
  std::vector<Scalar> labels;
  labels.reserve(bags.rows.size());
  for (std::size_t b = 0; b < bags.size(); ++b)
    for (int i = 0; i < bags.segments[b].size; ++i) labels.push_back(bag_labels[b]);
  Var exposed = diff::gather_rows(tape, element_scores, bags.rows);
  return diff::sigmoid_bce_mean(tape, exposed, std::move(labels));
}

/// L_MIL = L_comb + L_ele
template <typename Scalar>
Var loss_mil(diff::Tape<Scalar>& tape, Var comb, Var ele) {
  return diff::add(tape, comb, ele);
}

}  // namespace genco
