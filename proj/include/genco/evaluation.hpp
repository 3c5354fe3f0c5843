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
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "genco/domain.hpp"
#include "genco/policy.hpp"
#include "genco/simulator.hpp"

namespace genco::eval {

inline constexpr int kSchemaVersion = 1;

/// Thrown when no record matched, so the ratio would be 0/0.
class NoMatchError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Pool index selected per component for each record (-1 where absent).
using Selections = std::vector<std::vector<int>>;

/// Runs `policy` once per record on the record's own context and ad. Each
/// request's randomness comes from a stream keyed by its request id.
Selections select_for_logs(SelectionPolicy& policy, const Catalog& catalog,
                           std::span<const ImpressionRecord> logs, std::uint64_t seed);

/// Pool index of the logged element per component (-1 where absent).
Selections logged_selections(const Catalog& catalog, std::span<const ImpressionRecord> logs);

struct Accumulator {
  std::uint64_t exposure = 0;
  std::uint64_t click = 0;
  bool operator==(const Accumulator&) const = default;
  /// click / exposure; NoMatchError when exposure is 0.
  double ratio() const;
};

/// The replay accumulation for one component: on a match, exposure grows by
/// n_{r,j} (by 1 when `calibrated` is false) and click by that times y_r.
/// Records whose ad lacks the component are skipped. `subset` restricts the
/// pass to the listed record indices.
Accumulator sctr_accumulate(const Catalog& catalog, std::span<const ImpressionRecord> logs,
                            const Selections& selections, int component, bool calibrated = true,
                            const std::vector<std::size_t>* subset = nullptr);

double calibrated_sctr(const Catalog& catalog, std::span<const ImpressionRecord> logs,
                       const Selections& selections, int component, bool calibrated = true);

struct ComponentSctr {
  int component = 0;
  std::string name;
  Accumulator acc;
  /// nullopt when no record of this component matched.
  std::optional<double> sctr;
};

/// One replay per component. The overall value pools every component's
/// accumulators.
struct SctrReport {
  std::vector<ComponentSctr> components;
  Accumulator overall;
  std::optional<double> overall_sctr;
  double log_ctr = 0.0;
  std::size_t records = 0;
};

SctrReport component_sctr(const Catalog& catalog, std::span<const ImpressionRecord> logs,
                          const Selections& selections, bool calibrated = true);

/// Candidate-count bucket edges: a bucket is [lo, hi] inclusive.
struct Bucket {
  std::string label;
  int lo = 1;
  int hi = 1 << 30;
};

/// [<3, 3-5, >5] for title, image and marketing; [<4, 4-8, >8] elsewhere.
std::vector<Bucket> default_buckets(std::string_view component);

struct LiftCell {
  int component = 0;
  std::string component_name;
  std::string bucket;
  std::size_t records = 0;
  Accumulator model;
  double model_sctr = 0.0;
  /// The uniform policy's expected calibrated sCTR on the bucket, which is
  /// the plain CTR of its records.
  double uniform_sctr = 0.0;
  double lift = 0.0;  // model / uniform - 1
  double ci_low = 0.0, ci_high = 0.0;
  bool present = false;  // false: empty bucket or no match
};

struct LiftOptions {
  int bootstrap = 1000;
  std::uint64_t seed = 0;
  /// Custom edges per component name; default_buckets otherwise.
  std::map<std::string, std::vector<Bucket>> buckets;
};

std::vector<LiftCell> lift_by_bucket(const Catalog& catalog, std::span<const ImpressionRecord> logs,
                                     const Selections& selections, const LiftOptions& options = {});

/// Mean MIL weight per component within each category, rows normalized to 1.
struct ImportanceTable {
  std::vector<std::string> components;
  std::map<int, std::vector<double>> rows;  // category -> weights
  std::map<int, std::size_t> counts;
};

ImportanceTable component_importance(const Catalog& catalog, std::span<const ImpressionRecord> logs,
                                     const std::vector<std::vector<double>>& weights);

struct GapStats {
  std::size_t requests = 0;
  std::size_t skipped = 0;  // ads above the enumeration cap
  double mean = 0.0, p50 = 0.0, p90 = 0.0, p99 = 0.0, max = 0.0;
  double mean_policy_ctr = 0.0;
  double mean_best_ctr = 0.0;
};

/// Regret of `policy` against the enumeration oracle on `num_requests`
/// simulated requests drawn with `seed`.
GapStats oracle_gap(SelectionPolicy& policy, const Catalog& catalog, const sim::GroundTruth& gt,
                    std::size_t num_requests, std::uint64_t seed,
                    std::uint64_t cap = kDefaultEnumerationCap);

struct BootstrapCI {
  double mean = 0.0;
  double low = 0.0, high = 0.0;
};

/// Percentile bootstrap (95%) of mean(a - b) over paired samples.
BootstrapCI paired_bootstrap(std::span<const double> a, std::span<const double> b, int resamples,
                             std::uint64_t seed);

struct EvalReport {
  std::string policy;
  SctrReport sctr;
  std::vector<LiftCell> lift;
  std::optional<ImportanceTable> importance;
  std::optional<GapStats> gap;
};

void write_json(const EvalReport& report, const std::string& path);
EvalReport read_json(const std::string& path);
/// One CSV per analysis: <prefix>.sctr.csv, <prefix>.lift.csv and, when
/// present, <prefix>.importance.csv and <prefix>.gap.csv.
void write_csv(const EvalReport& report, const std::string& prefix);

}  // namespace genco::eval
