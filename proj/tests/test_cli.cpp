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

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cli.hpp"

namespace {

namespace fs = std::filesystem;

struct Result {
  int code = 0;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  std::vector<const char*> argv = {"genco"};
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Result r;
  r.code = genco::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const char* name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const char* f) const { return (path / f).string(); }
};

}  // namespace

TEST_CASE("cli pipeline on a tiny world") {
  TempDir d("genco_cli_test");
  const auto cat = d / "cat.jsonl", truth = d / "cat.jsonl.truth.json";
  auto r = run({"gen-catalog", "--seed", "3", "--num-ads", "12", "--out", cat});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("title") != std::string::npos);
  CHECK(fs::exists(truth));

  REQUIRE(run({"simulate", "--seed", "3", "--catalog", cat, "--truth", truth, "--requests", "800", "--out",
               d / "logs.jsonl"})
              .code == 0);
  r = run({"train", "--seed", "3", "--catalog", cat, "--logs", d / "logs.jsonl", "--batch-size", "16", "--out",
           d / "m.ckpt"});
  REQUIRE(r.code == 0);
  CHECK(fs::exists(d / "m.ckpt"));
  CHECK(fs::exists(d / "m.ckpt.csv"));

  r = run({"evaluate", "--seed", "3", "--catalog", cat, "--truth", truth, "--logs", d / "logs.jsonl", "--checkpoint",
           d / "m.ckpt", "--bootstrap", "20", "--gap-requests", "100", "--out", d / "genco"});
  REQUIRE(r.code == 0);
  r = run({"evaluate", "--seed", "3", "--catalog", cat, "--logs", d / "logs.jsonl", "--policy", "uniform",
           "--bootstrap", "20", "--out", d / "uniform"});
  REQUIRE(r.code == 0);
  CHECK(fs::exists(d / "genco.importance.csv"));
  CHECK(fs::exists(d / "genco.gap.csv"));

  r = run({"report", d / "genco.json", d / "uniform.json", "--out", d / "summary"});
  REQUIRE(r.code == 0);
  std::ifstream in(d / "summary.json");
  auto j = nlohmann::json::parse(in);
  CHECK(j.dump().find("genco") != std::string::npos);
  CHECK(j.dump().find("uniform") != std::string::npos);

  r = run({"serve-sim", "--seed", "3", "--catalog", cat, "--truth", truth, "--checkpoint", d / "m.ckpt", "--requests",
           "50", "--out", d / "serve"});
  REQUIRE(r.code == 0);
  CHECK(fs::exists(d / "serve.latency.json"));
  CHECK(fs::exists(d / "serve.log.jsonl"));
}

TEST_CASE("cli errors") {
  TempDir d("genco_cli_errors");
  SUBCASE("no seed anywhere") {
    auto r = run({"gen-catalog", "--num-ads", "5", "--out", d / "c.jsonl"});
    CHECK(r.code != 0);
    CHECK(r.err.find("seed") != std::string::npos);
  }
  SUBCASE("an empty catalog is refused") {
    auto r = run({"gen-catalog", "--seed", "1", "--num-ads", "0", "--out", d / "c.jsonl"});
    CHECK(r.code != 0);
  }
  SUBCASE("the command-line seed overrides the config file") {
    std::ofstream(d / "cfg.json") << R"({"seed": 1, "sim": {"num_ads": 4}})";
    REQUIRE(run({"gen-catalog", "--config", d / "cfg.json", "--out", d / "a.jsonl"}).code == 0);
    REQUIRE(run({"gen-catalog", "--config", d / "cfg.json", "--seed", "1", "--out", d / "b.jsonl"}).code == 0);
    REQUIRE(run({"gen-catalog", "--config", d / "cfg.json", "--seed", "2", "--out", d / "c.jsonl"}).code == 0);
    auto read = [](const std::string& p) {
      std::ifstream f(p);
      std::stringstream s;
      s << f.rdbuf();
      return s.str();
    };
    CHECK(read(d / "a.jsonl") == read(d / "b.jsonl"));
    CHECK(read(d / "a.jsonl") != read(d / "c.jsonl"));
  }
  SUBCASE("unknown config keys and subcommands") {
    std::ofstream(d / "cfg.json") << R"({"seed": 1, "bogus": 2})";
    CHECK(run({"gen-catalog", "--config", d / "cfg.json", "--out", d / "a.jsonl"}).code != 0);
    CHECK(run({"fly"}).code != 0);
    CHECK(run({}).code != 0);
  }
  SUBCASE("evaluation needs uniform-policy logs") {
    REQUIRE(run({"gen-catalog", "--seed", "1", "--num-ads", "5", "--out", d / "c.jsonl"}).code == 0);
    REQUIRE(run({"simulate", "--seed", "1", "--catalog", d / "c.jsonl", "--truth", d / "c.jsonl.truth.json",
                 "--policy", "dco", "--requests", "50", "--out", d / "dco.jsonl"})
                .code == 0);
    auto r = run({"evaluate", "--seed", "1", "--catalog", d / "c.jsonl", "--logs", d / "dco.jsonl", "--policy",
                  "uniform", "--out", d / "e"});
    CHECK(r.code != 0);
  }
  SUBCASE("version") {
    auto r = run({"--version"});
    CHECK(r.code == 0);
    CHECK(r.out.find("genco") != std::string::npos);
  }
}
