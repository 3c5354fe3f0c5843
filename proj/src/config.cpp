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

#include "genco/config.hpp"

#include <fstream>
#include <set>

namespace genco {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

// Reads known keys from an object and rejects the rest.
class Reader {
 public:
  Reader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j.is_object()) throw SchemaError(where_ + ": expected an object");
  }
  ~Reader() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (const auto& [k, _] : j_.items())
      if (!seen_.count(k)) throw SchemaError(where_ + ": unknown key '" + k + "'");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw SchemaError(where_ + "." + key + ": " + e.what());
    }
  }
  const json* child(const char* key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

}  // namespace

ordered_json sim_to_json(const sim::SimConfig& c) {
  ordered_json comps = ordered_json::array();
  for (const auto& s : c.components)
    comps.push_back({{"name", s.name},
                     {"mean_candidates", s.mean_candidates},
                     {"coverage", s.coverage},
                     {"effect_scale", s.effect_scale}});
  return {{"num_ads", c.num_ads},
          {"components", comps},
          {"vocab_per_component", c.vocab_per_component},
          {"max_candidates", c.max_candidates},
          {"num_requests", c.num_requests},
          {"num_users", c.num_users},
          {"num_queries", c.num_queries},
          {"num_segments", c.num_segments},
          {"age_buckets", c.age_buckets},
          {"gender_codes", c.gender_codes},
          {"num_categories", c.num_categories},
          {"base_ctr", c.base_ctr},
          {"base_scale", c.base_scale},
          {"element_scale", c.element_scale},
          {"interaction_density", c.interaction_density},
          {"interaction_scale", c.interaction_scale},
          {"context_scale", c.context_scale},
          {"seed", c.seed},
          {"start_timestamp_ms", c.start_timestamp_ms},
          {"request_interval_ms", c.request_interval_ms}};
}

sim::SimConfig sim_from_json(const json& j, sim::SimConfig c) {
  Reader r(j, "sim");
  bool dense = false;
  r.get("interaction_dense", dense);
  if (dense) {
    const auto d = sim::SimConfig::interaction_dense();
    c.interaction_density = d.interaction_density;
    c.interaction_scale = d.interaction_scale;
  }
  r.get("num_ads", c.num_ads);
  if (const json* comps = r.child("components")) {
    if (!comps->is_array()) throw SchemaError("sim.components: expected an array");
    c.components.clear();
    for (const auto& cj : *comps) {
      Reader cr(cj, "sim.components[]");
      sim::ComponentSpec s;
      cr.get("name", s.name);
      cr.get("mean_candidates", s.mean_candidates);
      cr.get("coverage", s.coverage);
      cr.get("effect_scale", s.effect_scale);
      c.components.push_back(std::move(s));
    }
  }
  r.get("vocab_per_component", c.vocab_per_component);
  r.get("max_candidates", c.max_candidates);
  r.get("num_requests", c.num_requests);
  r.get("num_users", c.num_users);
  r.get("num_queries", c.num_queries);
  r.get("num_segments", c.num_segments);
  r.get("age_buckets", c.age_buckets);
  r.get("gender_codes", c.gender_codes);
  r.get("num_categories", c.num_categories);
  r.get("base_ctr", c.base_ctr);
  r.get("base_scale", c.base_scale);
  r.get("element_scale", c.element_scale);
  r.get("interaction_density", c.interaction_density);
  r.get("interaction_scale", c.interaction_scale);
  r.get("context_scale", c.context_scale);
  r.get("seed", c.seed);
  r.get("start_timestamp_ms", c.start_timestamp_ms);
  r.get("request_interval_ms", c.request_interval_ms);
  return c;
}

std::uint64_t RunConfig::require_seed() const {
  if (!seed) throw SchemaError("a seed is required (config key 'seed' or --seed)");
  return *seed;
}

void RunConfig::apply_seed() {
  const std::uint64_t s = require_seed();
  sim.seed = s;
  model.seed = s;
  train.seed = s;
  mlp.seed = s;
}

RunConfig parse_run_config(const json& j) {
  RunConfig c;
  Reader r(j, "config");
  if (j.contains("seed")) {
    std::uint64_t s = 0;
    r.get("seed", s);
    c.seed = s;
  } else {
    r.get("seed", c.sim.seed);  // marks the key as known
  }
  if (const json* s = r.child("sim")) c.sim = sim_from_json(*s, c.sim);
  if (const json* m = r.child("model")) {
    Reader mr(*m, "model");
    mr.get("pad_size", c.model.pad_size);
    mr.get("embedding_dim", c.model.embedding_dim);
    mr.get("encoder_layers", c.model.encoder_layers);
    mr.get("phi_layers", c.model.phi_layers);
    mr.get("attention_heads", c.model.attention_heads);
    mr.get("user_buckets", c.model.user_buckets);
    mr.get("query_buckets", c.model.query_buckets);
    mr.get("segment_buckets", c.model.segment_buckets);
    mr.get("age_buckets", c.model.age_buckets);
    mr.get("gender_buckets", c.model.gender_buckets);
    mr.get("bn_eps", c.model.bn_eps);
    mr.get("bn_momentum", c.model.bn_momentum);
  }
  if (const json* t = r.child("train")) {
    Reader tr(*t, "train");
    tr.get("batch_size", c.train.batch_size);
    tr.get("lr", c.train.lr);
    tr.get("lambda", c.train.lambda);
    tr.get("reward_click", c.train.reward_click);
    tr.get("reward_nonclick", c.train.reward_nonclick);
    tr.get("no_mil", c.train.no_mil);
    tr.get("no_rl", c.train.no_rl);
    tr.get("no_context", c.train.no_context);
    tr.get("checkpoint_every", c.train.checkpoint_every);
  }
  if (const json* s = r.child("serve")) {
    Reader sr(*s, "serve");
    std::string mode(serve_mode_name(c.serve.mode));
    sr.get("mode", mode);
    c.serve.mode = parse_serve_mode(mode);
    sr.get("k", c.serve.k);
    sr.get("greedy_proposals", c.serve.greedy_proposals);
    sr.get("comb_cap", c.serve.comb_cap);
  }
  if (const json* e = r.child("eval")) {
    Reader er(*e, "eval");
    er.get("calibrated", c.eval.calibrated);
    er.get("selector", c.eval.selector);
    er.get("bootstrap", c.eval.bootstrap);
    er.get("gap_requests", c.eval.gap_requests);
    parse_serve_mode(c.eval.selector);
  }
  if (const json* m = r.child("mlp")) {
    Reader mr(*m, "mlp");
    mr.get("embedding_dim", c.mlp.embedding_dim);
    mr.get("hidden", c.mlp.hidden);
    mr.get("zero_head", c.mlp.zero_head);
    mr.get("batch_size", c.mlp_batch_size);
    mr.get("lr", c.mlp_lr);
  }
  if (const json* d = r.child("dco")) {
    Reader dr(*d, "dco");
    dr.get("horizon", c.dco.horizon);
    dr.get("delta", c.dco.delta);
    dr.get("cap", c.dco.cap);
  }
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path);
  json j;
  try {
    j = json::parse(f);
  } catch (const json::exception& e) {
    throw SchemaError(path + ": " + e.what());
  }
  return parse_run_config(j);
}

ordered_json to_json(const RunConfig& c) {
  ordered_json j;
  if (c.seed) j["seed"] = *c.seed;
  j["sim"] = sim_to_json(c.sim);
  j["sim"].erase("seed");
  j["model"] = {{"pad_size", c.model.pad_size},
                {"embedding_dim", c.model.embedding_dim},
                {"encoder_layers", c.model.encoder_layers},
                {"phi_layers", c.model.phi_layers},
                {"attention_heads", c.model.attention_heads},
                {"user_buckets", c.model.user_buckets},
                {"query_buckets", c.model.query_buckets},
                {"segment_buckets", c.model.segment_buckets},
                {"age_buckets", c.model.age_buckets},
                {"gender_buckets", c.model.gender_buckets},
                {"bn_eps", c.model.bn_eps},
                {"bn_momentum", c.model.bn_momentum}};
  j["train"] = {{"batch_size", c.train.batch_size},
                {"lr", c.train.lr},
                {"lambda", c.train.lambda},
                {"reward_click", c.train.reward_click},
                {"reward_nonclick", c.train.reward_nonclick},
                {"no_mil", c.train.no_mil},
                {"no_rl", c.train.no_rl},
                {"no_context", c.train.no_context},
                {"checkpoint_every", c.train.checkpoint_every}};
  j["serve"] = {{"mode", serve_mode_name(c.serve.mode)},
                {"k", c.serve.k},
                {"greedy_proposals", c.serve.greedy_proposals},
                {"comb_cap", c.serve.comb_cap}};
  j["eval"] = {{"calibrated", c.eval.calibrated},
               {"selector", c.eval.selector},
               {"bootstrap", c.eval.bootstrap},
               {"gap_requests", c.eval.gap_requests}};
  j["mlp"] = {{"embedding_dim", c.mlp.embedding_dim},
              {"hidden", c.mlp.hidden},
              {"zero_head", c.mlp.zero_head},
              {"batch_size", c.mlp_batch_size},
              {"lr", c.mlp_lr}};
  j["dco"] = {{"horizon", c.dco.horizon}, {"delta", c.dco.delta}, {"cap", c.dco.cap}};
  return j;
}

void save_truth_file(const std::string& path, const sim::SimConfig& config) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  ordered_json j{{"schema_version", 1}, {"simulator", sim_to_json(config)}};
  f << j.dump(2) << '\n';
  if (!f) throw std::runtime_error("failed writing " + path);
}

sim::SimConfig load_truth_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path);
  try {
    json j = json::parse(f);
    if (j.at("schema_version") != 1) throw SchemaError(path + ": unsupported truth schema");
    return sim_from_json(j.at("simulator"));
  } catch (const json::exception& e) {
    throw SchemaError(path + ": " + e.what());
  }
}

}  // namespace genco
