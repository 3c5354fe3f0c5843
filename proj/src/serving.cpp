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

#include "genco/serving.hpp"

#include <stdexcept>

namespace genco {

ServeMode parse_serve_mode(std::string_view name) {
  if (name == "pipeline") return ServeMode::kPipeline;
  if (name == "element") return ServeMode::kElement;
  if (name == "comb") return ServeMode::kComb;
  throw std::invalid_argument("unknown serve mode: " + std::string(name));
}

std::string_view serve_mode_name(ServeMode mode) {
  switch (mode) {
    case ServeMode::kPipeline: return "pipeline";
    case ServeMode::kElement: return "element";
    case ServeMode::kComb: return "comb";
  }
  return "pipeline";
}

CreativeCombination GencoPolicy::select(const RequestContext& context, const Ad& ad, Engine& rng) {
  RequestInput in{&ad, &context};
  auto slots = select_slots(std::span<const RequestInput>(&in, 1), std::span<Engine>(&rng, 1));
  return to_combination(ad, slots.front());
}

std::vector<std::vector<int>> GencoPolicy::select_slots(std::span<const RequestInput> requests,
                                                        std::span<Engine> rngs) {
  if (rngs.size() != requests.size()) throw std::invalid_argument("one engine per request");
  std::vector<std::vector<int>> out(requests.size());
  if (requests.empty()) return out;
  diff::Tape<float> tape(false);
  auto fwd = model_->forward(tape, requests, Mode::kInference);

  // Proposals per record; the element mode needs no reward model.
  std::vector<std::vector<std::vector<int>>> proposals(requests.size());
  for (std::size_t r = 0; r < requests.size(); ++r) {
    auto dists = model_->distributions(tape, fwd, static_cast<int>(r));
    if (config_.mode == ServeMode::kElement) {
      out[r] = greedy_combination(dists).slots;
      continue;
    }
    if (config_.mode == ServeMode::kComb) {
      const Ad& ad = *requests[r].ad;
      bool fits = false;
      try {
        fits = combination_count(ad) <= config_.comb_cap;
      } catch (const StructuralError&) {
        fits = false;
      }
      bool truncated = false;
      for (const auto& p : ad.pools)
        if (p && p->elements.size() > model_->config().pad_size) truncated = true;
      if (fits && !truncated) {
        for (CombinationEnumerator en(ad, config_.comb_cap); !en.done(); en.next())
          proposals[r].push_back(en.slots());
        continue;
      }
      ++fallbacks_;
    }
    if (config_.greedy_proposals) {
      proposals[r].push_back(greedy_combination(dists).slots);
    } else {
      for (auto& s : sample_combinations(dists, config_.k, rngs[r])) proposals[r].push_back(std::move(s.slots));
    }
  }
  if (config_.mode == ServeMode::kElement) return out;

  Bags bags;
  std::vector<std::pair<std::size_t, std::size_t>> owner;
  for (std::size_t r = 0; r < requests.size(); ++r)
    for (std::size_t i = 0; i < proposals[r].size(); ++i) {
      bags.add(fwd.layout, static_cast<int>(r), proposals[r][i]);
      owner.emplace_back(r, i);
    }
  auto bag = reward_forward(tape, *model_, fwd.h, fwd.features, bags);
  const auto& S = tape.value(bag.scores);
  std::vector<float> best(requests.size(), 0.0f);
  std::vector<int> best_index(requests.size(), -1);
  for (std::size_t b = 0; b < owner.size(); ++b) {
    const auto [r, i] = owner[b];
    const float s = S(static_cast<Eigen::Index>(b), 0);
    if (best_index[r] < 0 || s > best[r]) {
      best[r] = s;
      best_index[r] = static_cast<int>(i);
    }
  }
  for (std::size_t r = 0; r < requests.size(); ++r)
    out[r] = proposals[r][static_cast<std::size_t>(best_index[r])];
  return out;
}

std::vector<std::vector<double>> mil_weights(GencoModel<float>& model,
                                             std::span<const ImpressionRecord> records,
                                             std::size_t batch_size) {
  std::vector<std::vector<double>> out(records.size());
  const std::size_t m = model.num_components();
  for (std::size_t begin = 0; begin < records.size(); begin += batch_size) {
    const std::size_t end = std::min(records.size(), begin + batch_size);
    std::vector<RequestInput> inputs;
    std::vector<std::vector<int>> slots;
    std::vector<std::size_t> index;
    for (std::size_t i = begin; i < end; ++i) {
      const Ad* ad = model.catalog().find(records[i].ad_id);
      if (!ad) continue;
      auto s = slots_of(*ad, records[i].exposed, model.config().pad_size);
      if (!s) continue;
      inputs.push_back({ad, &records[i].context});
      slots.push_back(std::move(*s));
      index.push_back(i);
    }
    if (inputs.empty()) continue;
    diff::Tape<float> tape(false);
    auto fwd = model.forward(tape, inputs, Mode::kInference);
    Bags bags;
    for (std::size_t r = 0; r < inputs.size(); ++r) bags.add(fwd.layout, static_cast<int>(r), slots[r]);
    auto [w, fc] = mil_aggregate(tape, model, fwd.h, fwd.features, bags);
    const auto& W = tape.value(w);
    for (std::size_t b = 0; b < bags.size(); ++b) {
      auto& row = out[index[b]];
      row.assign(m, 0.0);
      const auto& seg = bags.segments[b];
      for (int t = seg.begin; t < seg.end(); ++t)
        row[static_cast<std::size_t>(bags.row_component[static_cast<std::size_t>(t)])] = W(t, 0);
    }
  }
  return out;
}

}  // namespace genco
