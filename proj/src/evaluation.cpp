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

#include "genco/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>

#include <json.hpp>

#include "genco/serving.hpp"

namespace genco::eval {

namespace {

constexpr std::size_t kSelectBatch = 256;

// Batches GenCO requests through one forward pass; other policies are
// called one request at a time.
std::vector<CreativeCombination> select_many(SelectionPolicy& policy,
                                             const std::vector<RequestInput>& inputs,
                                             std::vector<Engine>& rngs) {
  std::vector<CreativeCombination> out;
  out.reserve(inputs.size());
  if (auto* g = dynamic_cast<GencoPolicy*>(&policy)) {
    for (std::size_t b = 0; b < inputs.size(); b += kSelectBatch) {
      const std::size_t n = std::min(kSelectBatch, inputs.size() - b);
      auto slots = g->select_slots(std::span<const RequestInput>(inputs).subspan(b, n),
                                   std::span<Engine>(rngs).subspan(b, n));
      for (std::size_t i = 0; i < n; ++i) out.push_back(to_combination(*inputs[b + i].ad, slots[i]));
    }
    return out;
  }
  for (std::size_t i = 0; i < inputs.size(); ++i)
    out.push_back(policy.select(*inputs[i].context, *inputs[i].ad, rngs[i]));
  return out;
}

std::vector<int> pool_indices(const Ad& ad, const CreativeCombination& c) {
  std::vector<int> idx(ad.pools.size(), -1);
  for (std::size_t j = 0; j < ad.pools.size(); ++j) {
    if (!ad.pools[j]) continue;
    if (j >= c.selections.size() || !c.selections[j])
      throw StructuralError("combination misses a covered component");
    auto k = ad.pools[j]->index_of(*c.selections[j]);
    if (!k) throw StructuralError("combination selects an element outside the pool");
    idx[j] = static_cast<int>(*k);
  }
  return idx;
}

double percentile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return 0.0;
  const double rank = std::ceil(q * static_cast<double>(sorted.size()));
  const std::size_t i = static_cast<std::size_t>(std::max(1.0, rank)) - 1;
  return sorted[std::min(i, sorted.size() - 1)];
}

}  // namespace

Selections select_for_logs(SelectionPolicy& policy, const Catalog& catalog,
                           std::span<const ImpressionRecord> logs, std::uint64_t seed) {
  std::vector<RequestInput> inputs;
  std::vector<Engine> rngs;
  inputs.reserve(logs.size());
  rngs.reserve(logs.size());
  for (const auto& r : logs) {
    inputs.push_back({&catalog.at(r.ad_id), &r.context});
    rngs.push_back(make_stream(seed, "eval", r.context.request_id));
  }
  auto combos = select_many(policy, inputs, rngs);
  Selections out;
  out.reserve(logs.size());
  for (std::size_t i = 0; i < logs.size(); ++i) out.push_back(pool_indices(*inputs[i].ad, combos[i]));
  return out;
}

Selections logged_selections(const Catalog& catalog, std::span<const ImpressionRecord> logs) {
  Selections out;
  out.reserve(logs.size());
  for (const auto& r : logs) out.push_back(pool_indices(catalog.at(r.ad_id), r.exposed));
  return out;
}

double Accumulator::ratio() const {
  if (exposure == 0) throw NoMatchError("no record matched the logged exposure");
  return static_cast<double>(click) / static_cast<double>(exposure);
}

Accumulator sctr_accumulate(const Catalog& catalog, std::span<const ImpressionRecord> logs,
                            const Selections& selections, int component, bool calibrated,
                            const std::vector<std::size_t>* subset) {
  if (selections.size() != logs.size()) throw std::invalid_argument("one selection per record");
  if (component < 0 || component >= static_cast<int>(catalog.num_components()))
    throw std::out_of_range("component out of range");
  const auto j = static_cast<std::size_t>(component);
  Accumulator acc;
  auto visit = [&](std::size_t r) {
    const Ad& ad = catalog.at(logs[r].ad_id);
    if (!ad.covers(component)) return;
    const auto& pool = *ad.pools[j];
    const auto& exposed = logs[r].exposed.selections;
    if (j >= exposed.size() || !exposed[j]) throw StructuralError("logged exposure misses a component");
    const int sel = selections[r].at(j);
    if (sel < 0 || pool.elements.at(static_cast<std::size_t>(sel)) != *exposed[j]) return;
    const std::uint64_t n = calibrated ? pool.elements.size() : 1;
    acc.exposure += n;
    acc.click += n * static_cast<std::uint64_t>(logs[r].click);
  };
  if (subset) {
    for (std::size_t r : *subset) visit(r);
  } else {
    for (std::size_t r = 0; r < logs.size(); ++r) visit(r);
  }
  return acc;
}

double calibrated_sctr(const Catalog& catalog, std::span<const ImpressionRecord> logs,
                       const Selections& selections, int component, bool calibrated) {
  return sctr_accumulate(catalog, logs, selections, component, calibrated).ratio();
}

SctrReport component_sctr(const Catalog& catalog, std::span<const ImpressionRecord> logs,
                          const Selections& selections, bool calibrated) {
  SctrReport rep;
  rep.records = logs.size();
  std::uint64_t clicks = 0;
  for (const auto& r : logs) clicks += static_cast<std::uint64_t>(r.click);
  rep.log_ctr = logs.empty() ? 0.0 : static_cast<double>(clicks) / static_cast<double>(logs.size());
  for (std::size_t j = 0; j < catalog.num_components(); ++j) {
    ComponentSctr c;
    c.component = static_cast<int>(j);
    c.name = catalog.components()[j].name;
    c.acc = sctr_accumulate(catalog, logs, selections, c.component, calibrated);
    if (c.acc.exposure > 0) c.sctr = c.acc.ratio();
    rep.overall.exposure += c.acc.exposure;
    rep.overall.click += c.acc.click;
    rep.components.push_back(std::move(c));
  }
  if (rep.overall.exposure > 0) rep.overall_sctr = rep.overall.ratio();
  return rep;
}

std::vector<Bucket> default_buckets(std::string_view component) {
  if (component == "title" || component == "image" || component == "marketing")
    return {{"<3", 1, 2}, {"3-5", 3, 5}, {">5", 6, 1 << 30}};
  return {{"<4", 1, 3}, {"4-8", 4, 8}, {">8", 9, 1 << 30}};
}

std::vector<LiftCell> lift_by_bucket(const Catalog& catalog, std::span<const ImpressionRecord> logs,
                                     const Selections& selections, const LiftOptions& options) {
  std::vector<LiftCell> out;
  for (std::size_t j = 0; j < catalog.num_components(); ++j) {
    const auto& name = catalog.components()[j].name;
    auto it = options.buckets.find(name);
    const auto buckets = it != options.buckets.end() ? it->second : default_buckets(name);
    for (const auto& b : buckets) {
      LiftCell cell;
      cell.component = static_cast<int>(j);
      cell.component_name = name;
      cell.bucket = b.label;
      std::vector<std::size_t> idx;
      for (std::size_t r = 0; r < logs.size(); ++r) {
        const Ad& ad = catalog.at(logs[r].ad_id);
        if (!ad.covers(static_cast<int>(j))) continue;
        const int n = static_cast<int>(ad.pools[j]->elements.size());
        if (n >= b.lo && n <= b.hi) idx.push_back(r);
      }
      cell.records = idx.size();
      auto plain_ctr = [&](const std::vector<std::size_t>& rows) {
        std::uint64_t c = 0;
        for (auto r : rows) c += static_cast<std::uint64_t>(logs[r].click);
        return static_cast<double>(c) / static_cast<double>(rows.size());
      };
      if (!idx.empty()) {
        cell.model = sctr_accumulate(catalog, logs, selections, cell.component, true, &idx);
        cell.uniform_sctr = plain_ctr(idx);
      }
      cell.present = cell.model.exposure > 0 && cell.uniform_sctr > 0.0;
      if (cell.present) {
        cell.model_sctr = cell.model.ratio();
        cell.lift = cell.model_sctr / cell.uniform_sctr - 1.0;
        Engine rng = make_stream(options.seed, "bootstrap/" + name + "/" + b.label);
        std::vector<double> lifts;
        std::vector<std::size_t> sample(idx.size());
        for (int s = 0; s < options.bootstrap; ++s) {
          for (auto& v : sample) v = idx[uniform_index(rng, idx.size())];
          auto acc = sctr_accumulate(catalog, logs, selections, cell.component, true, &sample);
          const double u = plain_ctr(sample);
          if (acc.exposure == 0 || u == 0.0) continue;
          lifts.push_back(acc.ratio() / u - 1.0);
        }
        std::sort(lifts.begin(), lifts.end());
        cell.ci_low = percentile(lifts, 0.025);
        cell.ci_high = percentile(lifts, 0.975);
      }
      out.push_back(std::move(cell));
    }
  }
  return out;
}

ImportanceTable component_importance(const Catalog& catalog, std::span<const ImpressionRecord> logs,
                                     const std::vector<std::vector<double>>& weights) {
  if (weights.size() != logs.size()) throw std::invalid_argument("one weight row per record");
  ImportanceTable t;
  const std::size_t m = catalog.num_components();
  for (const auto& c : catalog.components()) t.components.push_back(c.name);
  for (std::size_t r = 0; r < logs.size(); ++r) {
    if (weights[r].empty()) continue;
    if (weights[r].size() != m) throw std::invalid_argument("weight row width mismatch");
    const int cat = catalog.at(logs[r].ad_id).category;
    auto& row = t.rows[cat];
    row.resize(m, 0.0);
    for (std::size_t j = 0; j < m; ++j) row[j] += weights[r][j];
    ++t.counts[cat];
  }
  for (auto& [cat, row] : t.rows) {
    const double total = std::accumulate(row.begin(), row.end(), 0.0);
    if (total > 0.0)
      for (auto& v : row) v /= total;
  }
  return t;
}

GapStats oracle_gap(SelectionPolicy& policy, const Catalog& catalog, const sim::GroundTruth& gt,
                    std::size_t num_requests, std::uint64_t seed, std::uint64_t cap) {
  sim::OracleCache cache(gt, cap);
  std::vector<RequestContext> contexts;
  std::vector<RequestInput> inputs;
  std::vector<Engine> rngs;
  GapStats st;
  contexts.reserve(num_requests);
  for (std::uint64_t rid = 1; rid <= num_requests; ++rid) {
    const Ad& ad = sim::draw_ad(catalog, seed, rid);
    std::uint64_t count = 0;
    try {
      count = combination_count(ad);
    } catch (const StructuralError&) {
      count = cap + 1;
    }
    if (count > cap) {
      ++st.skipped;
      continue;
    }
    contexts.push_back(sim::draw_context(gt, seed, rid));
    inputs.push_back({&ad, nullptr});
    rngs.push_back(make_stream(seed, "policy", rid));
  }
  for (std::size_t i = 0; i < inputs.size(); ++i) inputs[i].context = &contexts[i];
  auto combos = select_many(policy, inputs, rngs);
  std::vector<double> gaps;
  gaps.reserve(combos.size());
  double policy_sum = 0.0, best_sum = 0.0;
  for (std::size_t i = 0; i < combos.size(); ++i) {
    const double p = sim::true_ctr(gt, *inputs[i].ad, combos[i], contexts[i]);
    const double best = cache.get(*inputs[i].ad, contexts[i].user.age_bucket).best_ctr;
    gaps.push_back(std::max(0.0, best - p));
    policy_sum += p;
    best_sum += best;
  }
  st.requests = gaps.size();
  if (!gaps.empty()) {
    const double n = static_cast<double>(gaps.size());
    st.mean = std::accumulate(gaps.begin(), gaps.end(), 0.0) / n;
    st.mean_policy_ctr = policy_sum / n;
    st.mean_best_ctr = best_sum / n;
    std::sort(gaps.begin(), gaps.end());
    st.p50 = percentile(gaps, 0.5);
    st.p90 = percentile(gaps, 0.9);
    st.p99 = percentile(gaps, 0.99);
    st.max = gaps.back();
  }
  return st;
}

BootstrapCI paired_bootstrap(std::span<const double> a, std::span<const double> b, int resamples,
                             std::uint64_t seed) {
  if (a.size() != b.size() || a.empty()) throw std::invalid_argument("paired samples must align");
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  BootstrapCI ci;
  ci.mean = std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(d.size());
  Engine rng = make_stream(seed, "paired_bootstrap");
  std::vector<double> means;
  means.reserve(static_cast<std::size_t>(resamples));
  for (int s = 0; s < resamples; ++s) {
    double sum = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) sum += d[uniform_index(rng, d.size())];
    means.push_back(sum / static_cast<double>(d.size()));
  }
  std::sort(means.begin(), means.end());
  ci.low = percentile(means, 0.025);
  ci.high = percentile(means, 0.975);
  return ci;
}

// Reports ------------------------------------------------------------------

namespace {

using nlohmann::ordered_json;

ordered_json acc_json(const Accumulator& a) {
  return {{"exposure", a.exposure}, {"click", a.click}};
}

Accumulator acc_from(const ordered_json& j) {
  return {j.at("exposure").get<std::uint64_t>(), j.at("click").get<std::uint64_t>()};
}

ordered_json optional_json(const std::optional<double>& v) {
  return v ? ordered_json(*v) : ordered_json(nullptr);
}

std::optional<double> optional_from(const ordered_json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << std::setprecision(10);
  return f;
}

}  // namespace

void write_json(const EvalReport& report, const std::string& path) {
  ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["policy"] = report.policy;
  auto& s = j["sctr"];
  s["records"] = report.sctr.records;
  s["log_ctr"] = report.sctr.log_ctr;
  s["overall"] = acc_json(report.sctr.overall);
  s["overall_sctr"] = optional_json(report.sctr.overall_sctr);
  s["components"] = ordered_json::array();
  for (const auto& c : report.sctr.components) {
    auto cj = acc_json(c.acc);
    cj["component"] = c.name;
    cj["sctr"] = optional_json(c.sctr);
    s["components"].push_back(std::move(cj));
  }
  j["lift"] = ordered_json::array();
  for (const auto& c : report.lift) {
    ordered_json cj{{"component", c.component_name}, {"bucket", c.bucket}, {"records", c.records},
                    {"present", c.present}};
    if (c.present) {
      cj["model"] = acc_json(c.model);
      cj["model_sctr"] = c.model_sctr;
      cj["uniform_sctr"] = c.uniform_sctr;
      cj["lift"] = c.lift;
      cj["ci_low"] = c.ci_low;
      cj["ci_high"] = c.ci_high;
    }
    j["lift"].push_back(std::move(cj));
  }
  if (report.importance) {
    auto& im = j["importance"];
    im["components"] = report.importance->components;
    im["categories"] = ordered_json::array();
    for (const auto& [cat, row] : report.importance->rows)
      im["categories"].push_back(
          {{"category", cat}, {"records", report.importance->counts.at(cat)}, {"weights", row}});
  }
  if (report.gap) {
    const auto& g = *report.gap;
    j["oracle_gap"] = {{"requests", g.requests}, {"skipped", g.skipped},     {"mean", g.mean},
                       {"p50", g.p50},           {"p90", g.p90},             {"p99", g.p99},
                       {"max", g.max},           {"mean_policy_ctr", g.mean_policy_ctr},
                       {"mean_best_ctr", g.mean_best_ctr}};
  }
  auto f = open_out(path);
  f << j.dump(2) << '\n';
  if (!f) throw std::runtime_error("failed writing " + path);
}

EvalReport read_json(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path);
  ordered_json j;
  try {
    j = ordered_json::parse(f);
  } catch (const std::exception& e) {
    throw SchemaError(path + ": " + e.what());
  }
  if (!j.contains("schema_version") || j["schema_version"] != kSchemaVersion)
    throw SchemaError(path + ": unsupported report schema");
  try {
    EvalReport r;
    r.policy = j.at("policy").get<std::string>();
    const auto& s = j.at("sctr");
    r.sctr.records = s.at("records").get<std::size_t>();
    r.sctr.log_ctr = s.at("log_ctr").get<double>();
    r.sctr.overall = acc_from(s.at("overall"));
    r.sctr.overall_sctr = optional_from(s.at("overall_sctr"));
    int idx = 0;
    for (const auto& cj : s.at("components")) {
      ComponentSctr c;
      c.component = idx++;
      c.name = cj.at("component").get<std::string>();
      c.acc = acc_from(cj);
      c.sctr = optional_from(cj.at("sctr"));
      r.sctr.components.push_back(std::move(c));
    }
    for (const auto& cj : j.at("lift")) {
      LiftCell c;
      c.component_name = cj.at("component").get<std::string>();
      c.bucket = cj.at("bucket").get<std::string>();
      c.records = cj.at("records").get<std::size_t>();
      c.present = cj.at("present").get<bool>();
      if (c.present) {
        c.model = acc_from(cj.at("model"));
        c.model_sctr = cj.at("model_sctr").get<double>();
        c.uniform_sctr = cj.at("uniform_sctr").get<double>();
        c.lift = cj.at("lift").get<double>();
        c.ci_low = cj.at("ci_low").get<double>();
        c.ci_high = cj.at("ci_high").get<double>();
      }
      r.lift.push_back(std::move(c));
    }
    if (j.contains("importance")) {
      ImportanceTable t;
      t.components = j["importance"].at("components").get<std::vector<std::string>>();
      for (const auto& cj : j["importance"].at("categories")) {
        const int cat = cj.at("category").get<int>();
        t.rows[cat] = cj.at("weights").get<std::vector<double>>();
        t.counts[cat] = cj.at("records").get<std::size_t>();
      }
      r.importance = std::move(t);
    }
    if (j.contains("oracle_gap")) {
      const auto& g = j["oracle_gap"];
      GapStats st;
      st.requests = g.at("requests").get<std::size_t>();
      st.skipped = g.at("skipped").get<std::size_t>();
      st.mean = g.at("mean").get<double>();
      st.p50 = g.at("p50").get<double>();
      st.p90 = g.at("p90").get<double>();
      st.p99 = g.at("p99").get<double>();
      st.max = g.at("max").get<double>();
      st.mean_policy_ctr = g.at("mean_policy_ctr").get<double>();
      st.mean_best_ctr = g.at("mean_best_ctr").get<double>();
      r.gap = st;
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(path + ": " + e.what());
  }
}

void write_csv(const EvalReport& report, const std::string& prefix) {
  {
    auto f = open_out(prefix + ".sctr.csv");
    f << "schema_version,policy,component,exposure,click,sctr\n";
    for (const auto& c : report.sctr.components) {
      f << kSchemaVersion << ',' << report.policy << ',' << c.name << ',' << c.acc.exposure << ','
        << c.acc.click << ',';
      if (c.sctr) f << *c.sctr;
      f << '\n';
    }
    f << kSchemaVersion << ',' << report.policy << ",overall," << report.sctr.overall.exposure << ','
      << report.sctr.overall.click << ',';
    if (report.sctr.overall_sctr) f << *report.sctr.overall_sctr;
    f << '\n';
  }
  {
    auto f = open_out(prefix + ".lift.csv");
    f << "schema_version,policy,component,bucket,records,present,model_sctr,uniform_sctr,lift,ci_low,ci_high\n";
    for (const auto& c : report.lift) {
      f << kSchemaVersion << ',' << report.policy << ',' << c.component_name << ',' << c.bucket << ','
        << c.records << ',' << (c.present ? 1 : 0) << ',';
      if (c.present)
        f << c.model_sctr << ',' << c.uniform_sctr << ',' << c.lift << ',' << c.ci_low << ',' << c.ci_high;
      else
        f << ",,,,";
      f << '\n';
    }
  }
  if (report.importance) {
    auto f = open_out(prefix + ".importance.csv");
    f << "schema_version,policy,category,records";
    for (const auto& c : report.importance->components) f << ',' << c;
    f << '\n';
    for (const auto& [cat, row] : report.importance->rows) {
      f << kSchemaVersion << ',' << report.policy << ',' << cat << ',' << report.importance->counts.at(cat);
      for (double v : row) f << ',' << v;
      f << '\n';
    }
  }
  if (report.gap) {
    const auto& g = *report.gap;
    auto f = open_out(prefix + ".gap.csv");
    f << "schema_version,policy,requests,skipped,mean,p50,p90,p99,max,mean_policy_ctr,mean_best_ctr\n";
    f << kSchemaVersion << ',' << report.policy << ',' << g.requests << ',' << g.skipped << ',' << g.mean
      << ',' << g.p50 << ',' << g.p90 << ',' << g.p99 << ',' << g.max << ',' << g.mean_policy_ctr << ','
      << g.mean_best_ctr << '\n';
  }
}

}  // namespace genco::eval
