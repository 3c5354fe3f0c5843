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

#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iomanip>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "genco/baselines.hpp"
#include "genco/config.hpp"
#include "genco/diff/checkpoint.hpp"
#include "genco/evaluation.hpp"
#include "genco/serving.hpp"
#include "genco/simulator.hpp"
#include "genco/training.hpp"

namespace genco::cli {

namespace {

using nlohmann::ordered_json;

/// Options shared by every command. Flags win over the config file, which
/// wins over built-in defaults.
struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  int threads = 1;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
    cmd->add_option("--seed", seed, "Top-level seed (required here or in the config)");
    cmd->add_option("--threads", threads, "Parallelism cap; every command runs on one thread")
        ->check(CLI::PositiveNumber);
  }
  RunConfig load() const {
    RunConfig c = config_path.empty() ? RunConfig{} : load_run_config(config_path);
    if (seed) c.seed = seed;
    c.apply_seed();
    return c;
  }
};

void check_catalog(const Catalog& catalog) {
  const auto v = validate_catalog(catalog);
  if (!v.empty())
    throw StructuralError("catalog invalid (" + std::to_string(v.size()) + " violations), ad " +
                          std::to_string(v.front().ad_id) + ": " + v.front().message);
}

struct World {
  Catalog catalog;
  std::optional<sim::GroundTruth> truth;
};

World load_world(const std::string& catalog_path, const std::string& truth_path) {
  World w;
  w.catalog = load_catalog_file(catalog_path);
  check_catalog(w.catalog);
  if (!truth_path.empty()) {
    auto [cat, gt] = sim::make_synthetic_catalog(load_truth_file(truth_path));
    if (!(cat == w.catalog))
      throw SchemaError("ground-truth file " + truth_path + " does not regenerate " + catalog_path);
    w.truth = std::move(gt);
  }
  return w;
}

const sim::GroundTruth& need_truth(const World& w) {
  if (!w.truth) throw std::invalid_argument("this command needs --truth");
  return *w.truth;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << text;
  if (!f) throw std::runtime_error("failed writing " + path);
}

bool is_mlp_checkpoint(const std::string& path) {
  return diff::checkpoint_first_tensor(path).rfind("mlp.", 0) == 0;
}

/// Parses "genco", "genco:no_mil", "genco:no_rl" or "genco:no_context" into
/// training switches; returns false for other names.
bool genco_variant(std::string_view name, TrainConfig& train) {
  if (name == "genco") return true;
  if (name == "genco:no_mil") return train.no_mil = true;
  if (name == "genco:no_rl") return train.no_rl = true;
  if (name == "genco:no_context") return train.no_context = true;
  return false;
}

/// A selection policy plus whatever model it borrows.
struct LoadedPolicy {
  std::unique_ptr<GencoModel<float>> genco;
  std::unique_ptr<MlpModel> mlp;
  std::unique_ptr<SelectionPolicy> policy;
};

LoadedPolicy load_policy(const std::string& name, const std::string& checkpoint, const Catalog& catalog,
                         const RunConfig& cfg, std::optional<ServeMode> mode = std::nullopt) {
  LoadedPolicy lp;
  TrainConfig variant = cfg.train;
  if (name == "uniform" || name == "dco") {
    lp.policy = make_baseline(name, cfg.dco);
    return lp;
  }
  if (checkpoint.empty()) throw std::invalid_argument("policy '" + name + "' needs --checkpoint");
  if (name == "mlp") {
    if (!is_mlp_checkpoint(checkpoint)) throw diff::CheckpointError(checkpoint + " is not an MLP checkpoint");
    lp.mlp = std::make_unique<MlpModel>(catalog, cfg.mlp);
    lp.mlp->load(checkpoint);
    lp.policy = std::make_unique<MlpPolicy>(*lp.mlp, cfg.dco.cap);
    return lp;
  }
  if (!genco_variant(name, variant)) throw std::invalid_argument("unknown policy '" + name + "'");
  if (is_mlp_checkpoint(checkpoint)) throw diff::CheckpointError(checkpoint + " is an MLP checkpoint");
  lp.genco = std::make_unique<GencoModel<float>>(catalog, model_config_for(variant, cfg.model));
  lp.genco->load(checkpoint);
  ServeConfig serve = cfg.serve;
  if (mode) serve.mode = *mode;
  lp.policy = std::make_unique<GencoPolicy>(*lp.genco, serve, name);
  return lp;
}

std::vector<ImpressionRecord> load_logs(const std::string& path, const Catalog& catalog) {
  auto logs = load_impressions_file(path, catalog);
  return logs;
}

// gen-catalog ----------------------------------------------------------------

struct GenCatalog {
  Common common;
  std::optional<std::size_t> num_ads;
  bool dense = false;
  std::string out, truth;

  void attach(CLI::App& app) {
    auto* cmd = app.add_subcommand("gen-catalog", "Generate a synthetic catalog and its ground truth");
    common.attach(cmd);
    cmd->add_option("--num-ads", num_ads, "Number of ads");
    cmd->add_flag("--dense", dense, "Interaction-dense ground truth");
    cmd->add_option("--out", out, "Catalog JSONL path")->required();
    cmd->add_option("--truth", truth, "Ground-truth seed file (default: <out>.truth.json)");
  }

  int run(std::ostream& os) {
    RunConfig cfg = common.load();
    if (num_ads) cfg.sim.num_ads = *num_ads;
    if (dense) {
      const auto d = sim::SimConfig::interaction_dense();
      cfg.sim.interaction_density = d.interaction_density;
      cfg.sim.interaction_scale = d.interaction_scale;
    }
    cfg.sim.validate();
    auto [catalog, gt] = sim::make_synthetic_catalog(cfg.sim);
    check_catalog(catalog);
    save_catalog_file(out, catalog);
    save_truth_file(truth.empty() ? out + ".truth.json" : truth, cfg.sim);

    os << std::left << std::setw(22) << "component" << std::right << std::setw(8) << "ids"
       << std::setw(10) << "coverage" << std::setw(16) << "avg_candidates" << '\n';
    for (std::size_t j = 0; j < catalog.num_components(); ++j) {
      std::set<ElementId> ids;
      std::size_t covered = 0, total = 0;
      for (const auto& ad : catalog.ads()) {
        if (!ad.pools[j]) continue;
        ++covered;
        total += ad.pools[j]->elements.size();
        ids.insert(ad.pools[j]->elements.begin(), ad.pools[j]->elements.end());
      }
      const double cov = static_cast<double>(covered) / static_cast<double>(catalog.ads().size());
      const double avg = covered ? static_cast<double>(total) / static_cast<double>(covered) : 0.0;
      os << std::left << std::setw(22) << catalog.components()[j].name << std::right << std::setw(8)
         << ids.size() << std::setw(10) << std::fixed << std::setprecision(3) << cov << std::setw(16)
         << std::setprecision(2) << avg << '\n';
    }
    os << "ads " << catalog.ads().size() << '\n';
    return 0;
  }
};

// simulate -------------------------------------------------------------------

struct Simulate {
  Common common;
  std::string catalog, truth, policy = "uniform", checkpoint, out;
  std::optional<std::size_t> requests;
  std::optional<std::uint64_t> traffic_seed;

  void attach(CLI::App& app) {
    auto* cmd = app.add_subcommand("simulate", "Serve simulated traffic with a policy and log impressions");
    common.attach(cmd);
    cmd->add_option("--catalog", catalog, "Catalog JSONL")->required()->check(CLI::ExistingFile);
    cmd->add_option("--truth", truth, "Ground-truth seed file")->required()->check(CLI::ExistingFile);
    cmd->add_option("--policy", policy, "uniform|mlp|dco|genco|genco:no_mil|genco:no_rl|genco:no_context");
    cmd->add_option("--checkpoint", checkpoint, "Model checkpoint for mlp/genco policies");
    cmd->add_option("--requests", requests, "Number of requests (default: sim.num_requests)");
    cmd->add_option("--traffic-seed", traffic_seed, "Seed of the request stream (default: --seed)");
    cmd->add_option("--out", out, "Impression log JSONL")->required();
  }

  int run(std::ostream& os) {
    RunConfig cfg = common.load();
    World w = load_world(catalog, truth);
    const auto& gt = need_truth(w);
    const std::size_t n = requests.value_or(cfg.sim.num_requests);
    const std::uint64_t ts = traffic_seed.value_or(cfg.require_seed());
    std::vector<ImpressionRecord> log;
    std::uint64_t clicks = 0;
    if (policy == "uniform") {
      log = sim::generate_random_policy_logs(w.catalog, gt, n, ts);
      for (const auto& r : log) clicks += static_cast<std::uint64_t>(r.click);
    } else {
      auto lp = load_policy(policy, checkpoint, w.catalog, cfg);
      auto res = sim::run_policy_simulation(*lp.policy, w.catalog, gt, n, ts);
      log = std::move(res.log);
      clicks = res.clicks;
    }
    save_impressions_file(out, log, w.catalog);
    os << "policy " << policy << " requests " << log.size() << " clicks " << clicks << " ctr "
       << std::setprecision(6) << (log.empty() ? 0.0 : static_cast<double>(clicks) / static_cast<double>(log.size()))
       << '\n';
    return 0;
  }
};

// train ----------------------------------------------------------------------

struct Train {
  Common common;
  std::string catalog, logs, model = "genco", out, report;
  std::optional<int> batch_size, checkpoint_every;
  std::optional<double> lr, lambda;
  bool no_mil = false, no_rl = false, no_context = false;

  void attach(CLI::App& app) {
    auto* cmd = app.add_subcommand("train", "Train a model on an impression log (single chronological pass)");
    common.attach(cmd);
    cmd->add_option("--catalog", catalog, "Catalog JSONL")->required()->check(CLI::ExistingFile);
    cmd->add_option("--logs", logs, "Impression log JSONL")->required()->check(CLI::ExistingFile);
    cmd->add_option("--model", model, "genco|genco:no_mil|genco:no_rl|genco:no_context|mlp");
    cmd->add_option("--out", out, "Checkpoint path")->required();
    cmd->add_option("--report", report, "Per-step loss CSV (default: <out>.csv)");
    cmd->add_option("--batch-size", batch_size, "Mini-batch size");
    cmd->add_option("--lr", lr, "SGD learning rate");
    cmd->add_option("--lambda", lambda, "Weight of the policy-gradient loss");
    cmd->add_option("--checkpoint-every", checkpoint_every, "Intermediate checkpoint interval in steps");
    cmd->add_flag("--no-mil", no_mil, "Drop the multi-instance losses");
    cmd->add_flag("--no-rl", no_rl, "Drop the policy-gradient loss");
    cmd->add_flag("--no-context", no_context, "Replace cross-component context with zeros");
  }

  int run(std::ostream& os, std::ostream& es) {
    RunConfig cfg = common.load();
    World w = load_world(catalog, "");
    auto records = load_logs(logs, w.catalog);
    if (!is_chronological(records))
      es << "warning: " << logs << " is not in timestamp order; training uses the file order\n";
    const std::string report_path = report.empty() ? out + ".csv" : report;

    if (model == "mlp") {
      if (batch_size) cfg.mlp_batch_size = *batch_size;
      if (lr) cfg.mlp_lr = *lr;
      MlpModel m(w.catalog, cfg.mlp);
      auto rep = train_mlp(m, records, cfg.mlp_batch_size, cfg.mlp_lr);
      m.save(out);
      std::ofstream f(report_path);
      if (!f) throw std::runtime_error("cannot write " + report_path);
      f << "step,loss\n" << std::setprecision(9);
      for (std::size_t i = 0; i < rep.losses.size(); ++i) f << i << ',' << rep.losses[i] << '\n';
      os << "mlp steps " << rep.losses.size() << " final_loss "
         << (rep.losses.empty() ? 0.0 : rep.losses.back()) << '\n';
      return 0;
    }

    TrainConfig tc = cfg.train;
    if (!genco_variant(model, tc)) throw std::invalid_argument("unknown model '" + model + "'");
    if (batch_size) tc.batch_size = *batch_size;
    if (lr) tc.lr = *lr;
    if (lambda) tc.lambda = *lambda;
    if (checkpoint_every) tc.checkpoint_every = *checkpoint_every;
    tc.no_mil = tc.no_mil || no_mil;
    tc.no_rl = tc.no_rl || no_rl;
    tc.no_context = tc.no_context || no_context;
    tc.checkpoint_path = out;
    GencoModel<float> m(w.catalog, model_config_for(tc, cfg.model));
    auto rep = train(m, std::span<const ImpressionRecord>(records), tc);
    rep.write_csv_file(report_path);
    if (rep.skipped_truncated > 0)
      es << "warning: skipped " << rep.skipped_truncated << " records whose exposure lies beyond the pad size\n";
    os << "steps " << rep.steps.size() << " records " << rep.records_used << " skipped_truncated "
       << rep.skipped_truncated << " skipped_batches " << rep.skipped_batches;
    if (!rep.steps.empty())
      os << " first_total " << rep.steps.front().total << " last_total " << rep.steps.back().total;
    os << '\n';
    return 0;
  }
};

// evaluate ---------------------------------------------------------------------

struct Evaluate {
  Common common;
  std::string catalog, truth, logs, checkpoint, policy = "genco", out, selector;
  bool plain = false;
  std::optional<int> bootstrap;
  std::optional<std::size_t> gap_requests;

  void attach(CLI::App& app) {
    auto* cmd = app.add_subcommand("evaluate", "Replay evaluation on uniform-policy logs");
    common.attach(cmd);
    cmd->add_option("--catalog", catalog, "Catalog JSONL")->required()->check(CLI::ExistingFile);
    cmd->add_option("--truth", truth, "Ground-truth seed file (enables oracle gap)")->check(CLI::ExistingFile);
    cmd->add_option("--logs", logs, "Uniform-policy impression log")->required()->check(CLI::ExistingFile);
    cmd->add_option("--checkpoint", checkpoint, "Model checkpoint");
    cmd->add_option("--policy", policy, "uniform|mlp|dco|genco|genco:no_mil|genco:no_rl|genco:no_context");
    cmd->add_option("--selector", selector, "pipeline|element|comb for GenCO models");
    cmd->add_flag("--plain", plain, "Uncalibrated sCTR (each match counts once)");
    cmd->add_option("--bootstrap", bootstrap, "Bootstrap resamples for lift CIs");
    cmd->add_option("--gap-requests", gap_requests, "Simulated requests for oracle gap (0 disables)");
    cmd->add_option("--out", out, "Output prefix (<out>.json, <out>.*.csv)")->required();
  }

  int run(std::ostream& os) {
    RunConfig cfg = common.load();
    if (!selector.empty()) cfg.eval.selector = selector;
    if (bootstrap) cfg.eval.bootstrap = *bootstrap;
    if (gap_requests) cfg.eval.gap_requests = *gap_requests;
    if (plain) cfg.eval.calibrated = false;
    World w = load_world(catalog, truth);
    auto records = load_logs(logs, w.catalog);
    for (const auto& r : records)
      if (r.policy_id != "uniform")
        throw SchemaError("replay evaluation needs uniform-policy logs; found policy '" + r.policy_id + "'");
    auto lp = load_policy(policy, checkpoint, w.catalog, cfg, parse_serve_mode(cfg.eval.selector));
    const std::uint64_t seed = cfg.require_seed();

    eval::EvalReport rep;
    rep.policy = policy;
    auto sel = eval::select_for_logs(*lp.policy, w.catalog, records, seed);
    rep.sctr = eval::component_sctr(w.catalog, records, sel, cfg.eval.calibrated);
    eval::LiftOptions lo;
    lo.bootstrap = cfg.eval.bootstrap;
    lo.seed = seed;
    rep.lift = eval::lift_by_bucket(w.catalog, records, sel, lo);
    if (lp.genco) rep.importance = eval::component_importance(w.catalog, records, mil_weights(*lp.genco, records));
    if (w.truth && cfg.eval.gap_requests > 0) {
      // Fresh policy state so online baselines start from scratch.
      auto gp = load_policy(policy, checkpoint, w.catalog, cfg, parse_serve_mode(cfg.eval.selector));
      rep.gap = eval::oracle_gap(*gp.policy, w.catalog, *w.truth, cfg.eval.gap_requests, seed);
    }
    eval::write_json(rep, out + ".json");
    eval::write_csv(rep, out);
    os << "policy " << policy << " records " << records.size();
    if (rep.sctr.overall_sctr) os << " sctr " << std::setprecision(6) << *rep.sctr.overall_sctr;
    os << " log_ctr " << rep.sctr.log_ctr;
    if (rep.gap) os << " oracle_gap " << rep.gap->mean;
    os << '\n';
    return 0;
  }
};

// serve-sim --------------------------------------------------------------------

struct ServeSim {
  Common common;
  std::string catalog, truth, checkpoint, out, mode, policy = "genco";
  std::optional<std::size_t> requests;
  std::optional<int> k;
  std::optional<std::uint64_t> traffic_seed;
  bool greedy = false;

  void attach(CLI::App& app) {
    auto* cmd = app.add_subcommand("serve-sim", "Two-stage serving against the simulator with latency stats");
    common.attach(cmd);
    cmd->add_option("--catalog", catalog, "Catalog JSONL")->required()->check(CLI::ExistingFile);
    cmd->add_option("--truth", truth, "Ground-truth seed file")->required()->check(CLI::ExistingFile);
    cmd->add_option("--checkpoint", checkpoint, "GenCO checkpoint")->required()->check(CLI::ExistingFile);
    cmd->add_option("--policy", policy, "Name recorded in the log (genco variants)");
    cmd->add_option("--requests", requests, "Number of requests (default: sim.num_requests)");
    cmd->add_option("--traffic-seed", traffic_seed, "Seed of the request stream (default: --seed)");
    cmd->add_option("-k,--k", k, "Sampled proposals per request");
    cmd->add_option("--mode", mode, "pipeline|element|comb");
    cmd->add_flag("--greedy", greedy, "Propose the greedy combination instead of sampling");
    cmd->add_option("--out", out, "Output prefix (<out>.json, <out>.latency.json, <out>.log.jsonl)")->required();
  }

  int run(std::ostream& os) {
    RunConfig cfg = common.load();
    if (k) cfg.serve.k = *k;
    if (!mode.empty()) cfg.serve.mode = parse_serve_mode(mode);
    if (greedy) cfg.serve.greedy_proposals = true;
    World w = load_world(catalog, truth);
    auto lp = load_policy(policy, checkpoint, w.catalog, cfg);
    if (!lp.genco) throw std::invalid_argument("serve-sim runs GenCO checkpoints");

    // Wrap the policy to time each selection.
    struct Timed : SelectionPolicy {
      SelectionPolicy* inner;
      std::vector<double> micros;
      std::string name() const override { return inner->name(); }
      CreativeCombination select(const RequestContext& c, const Ad& a, Engine& r) override {
        const auto t0 = std::chrono::steady_clock::now();
        auto out = inner->select(c, a, r);
        micros.push_back(std::chrono::duration<double, std::micro>(std::chrono::steady_clock::now() - t0).count());
        return out;
      }
    } timed;
    timed.inner = lp.policy.get();
    const std::size_t n = requests.value_or(cfg.sim.num_requests);
    auto res = sim::run_policy_simulation(timed, w.catalog, *w.truth, n,
                                          traffic_seed.value_or(cfg.require_seed()));
    double expected = 0.0;
    for (double p : res.expected_ctr) expected += p;
    ordered_json j{{"schema_version", eval::kSchemaVersion},
                   {"policy", policy},
                   {"mode", serve_mode_name(cfg.serve.mode)},
                   {"k", cfg.serve.k},
                   {"greedy_proposals", cfg.serve.greedy_proposals},
                   {"requests", res.log.size()},
                   {"clicks", res.clicks},
                   {"ctr", res.ctr},
                   {"expected_ctr", res.log.empty() ? 0.0 : expected / static_cast<double>(res.log.size())}};
    write_text(out + ".json", j.dump(2) + "\n");
    save_impressions_file(out + ".log.jsonl", res.log, w.catalog);
    auto lat = timed.micros;
    std::sort(lat.begin(), lat.end());
    auto pct = [&](double q) {
      if (lat.empty()) return 0.0;
      return lat[std::min(lat.size() - 1, static_cast<std::size_t>(q * static_cast<double>(lat.size())))];
    };
    ordered_json l{{"schema_version", eval::kSchemaVersion},
                   {"requests", lat.size()},
                   {"p50_us", pct(0.5)},
                   {"p90_us", pct(0.9)},
                   {"p99_us", pct(0.99)},
                   {"max_us", lat.empty() ? 0.0 : lat.back()}};
    write_text(out + ".latency.json", l.dump(2) + "\n");
    os << "requests " << res.log.size() << " ctr " << std::setprecision(6) << res.ctr << " p50_us " << pct(0.5)
       << " p99_us " << pct(0.99) << '\n';
    return 0;
  }
};

// report -----------------------------------------------------------------------

struct Report {
  std::vector<std::string> inputs;
  std::string out;

  void attach(CLI::App& app) {
    auto* cmd = app.add_subcommand("report", "Merge evaluation reports into policy-by-metric tables");
    cmd->add_option("inputs", inputs, "Evaluation JSON files")->required()->check(CLI::ExistingFile);
    cmd->add_option("--out", out, "Output prefix (<out>.csv, <out>.json)")->required();
  }

  int run(std::ostream& os) {
    std::vector<eval::EvalReport> reps;
    for (const auto& p : inputs) reps.push_back(eval::read_json(p));
    // Rows are metrics in first-seen order; columns are policies.
    std::vector<std::string> metrics;
    std::map<std::string, std::map<std::string, double>> table;  // metric -> policy -> value
    std::vector<std::string> policies;
    auto component_list = [](const eval::EvalReport& r) {
      std::vector<std::string> names;
      for (const auto& c : r.sctr.components) names.push_back(c.name);
      return names;
    };
    const auto components = component_list(reps.front());
    for (const auto& r : reps) {
      if (component_list(r) != components) throw SchemaError("reports cover different components");
      if (std::find(policies.begin(), policies.end(), r.policy) != policies.end())
        throw SchemaError("policy '" + r.policy + "' appears twice");
      policies.push_back(r.policy);
      auto put = [&](const std::string& metric, double v) {
        if (!table.count(metric)) metrics.push_back(metric);
        table[metric][r.policy] = v;
      };
      if (r.sctr.overall_sctr) put("sctr.overall", *r.sctr.overall_sctr);
      for (const auto& c : r.sctr.components)
        if (c.sctr) put("sctr." + c.name, *c.sctr);
      for (const auto& c : r.lift)
        if (c.present) put("bucket_sctr." + c.component_name + "." + c.bucket, c.model_sctr);
      if (r.gap) {
        put("oracle_gap.mean", r.gap->mean);
        put("realized_true_ctr", r.gap->mean_policy_ctr);
      }
    }
    const bool has_uniform = std::find(policies.begin(), policies.end(), "uniform") != policies.end();
    std::ostringstream csv;
    csv << std::setprecision(10) << "metric";
    for (const auto& p : policies) csv << ',' << p;
    if (has_uniform)
      for (const auto& p : policies) csv << ',' << p << "_lift_vs_uniform";
    csv << '\n';
    ordered_json j{{"schema_version", eval::kSchemaVersion}, {"policies", policies}, {"rows", ordered_json::array()}};
    for (const auto& m : metrics) {
      csv << m;
      ordered_json row{{"metric", m}};
      for (const auto& p : policies) {
        csv << ',';
        auto it = table[m].find(p);
        if (it != table[m].end()) {
          csv << it->second;
          row[p] = it->second;
        }
      }
      if (has_uniform) {
        auto u = table[m].find("uniform");
        for (const auto& p : policies) {
          csv << ',';
          auto it = table[m].find(p);
          // Lift is only meaningful for rates; oracle gap rows get a difference instead.
          if (u == table[m].end() || it == table[m].end() || u->second == 0.0) continue;
          const double lift = m.rfind("oracle_gap", 0) == 0 ? it->second - u->second : it->second / u->second - 1.0;
          csv << lift;
          row[p + "_lift_vs_uniform"] = lift;
        }
      }
      csv << '\n';
      j["rows"].push_back(std::move(row));
    }
    write_text(out + ".csv", csv.str());
    write_text(out + ".json", j.dump(2) + "\n");
    os << "merged " << reps.size() << " reports, " << metrics.size() << " metrics\n";
    return 0;
  }
};

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"genco: creative-combination selection with a simulated click environment"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "genco 1.0");
  GenCatalog gen;
  Simulate simulate;
  Train train_cmd;
  Evaluate evaluate;
  ServeSim serve;
  Report report;
  gen.attach(app);
  simulate.attach(app);
  train_cmd.attach(app);
  evaluate.attach(app);
  serve.attach(app);
  report.attach(app);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }
  try {
    if (app.got_subcommand("gen-catalog")) return gen.run(out);
    if (app.got_subcommand("simulate")) return simulate.run(out);
    if (app.got_subcommand("train")) return train_cmd.run(out, err);
    if (app.got_subcommand("evaluate")) return evaluate.run(out);
    if (app.got_subcommand("serve-sim")) return serve.run(out);
    if (app.got_subcommand("report")) return report.run(out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace genco::cli
