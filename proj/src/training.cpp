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

#include "genco/training.hpp"

#include <fstream>
#include <iomanip>
#include <stdexcept>

namespace genco {

void TrainConfig::validate() const {
  if (batch_size < 2) throw std::invalid_argument("batch_size must be at least 2");
  if (!(lr > 0.0)) throw std::invalid_argument("lr must be positive");
  if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be nonnegative");
  if (checkpoint_every < 0) throw std::invalid_argument("checkpoint_every must be nonnegative");
}

double reward_of(const ImpressionRecord& record, const TrainConfig& config) {
  return record.click ? config.reward_click : config.reward_nonclick;
}

std::vector<ResolvedRecord> resolve_records(const Catalog& catalog,
                                            std::span<const ImpressionRecord> records,
                                            std::size_t pad_size, TrainReport* report) {
  std::vector<ResolvedRecord> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    const Ad* ad = catalog.find(r.ad_id);
    if (ad == nullptr) {
      if (report) ++report->skipped_unknown_ad;
      continue;
    }
    auto slots = slots_of(*ad, r.exposed, pad_size);
    if (!slots) {
      if (report) ++report->skipped_truncated;
      continue;
    }
    out.push_back({&r, ad, std::move(*slots)});
  }
  return out;
}

void TrainReport::write_csv(std::ostream& out) const {
  out << "step,timestamp_ms,records,L_comb,L_ele,L_RL,total,param_norm\n";
  out << std::setprecision(9);
  for (const auto& s : steps)
    out << s.step << ',' << s.timestamp_ms << ',' << s.records << ',' << s.l_comb << ','
        << s.l_ele << ',' << s.l_rl << ',' << s.total << ',' << s.param_norm << '\n';
}

void TrainReport::write_csv_file(const std::string& path) const {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  write_csv(f);
  if (!f) throw std::runtime_error("failed writing " + path);
}

ModelConfig model_config_for(const TrainConfig& config, ModelConfig base) {
  base.use_context = !config.no_context;
  base.seed = config.seed;
  return base;
}

}  // namespace genco
