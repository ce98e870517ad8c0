// Copyright 2026 The mst Authors
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

#include <nlohmann/json.hpp>

#include "mst/cli.hpp"
#include "mst/manifest.hpp"

using namespace mst;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path workdir() {
  const fs::path p = fs::temp_directory_path() / "mst_test_cli";
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string tiny_config(const fs::path& dir) {
  const nlohmann::json j = {{"profile", "toy"},
                            {"languages", {"eng", "cmn", "deu"}},
                            {"utterances_per_lang", 6},
                            {"llm_pretrain_steps", 2},
                            {"llm_pretrain_batch", 2},
                            {"phase1_steps_per_stage", 1},
                            {"phase2_steps", 1},
                            {"phase3_smt_steps", 1},
                            {"phase3_srt_steps", 1},
                            {"phase4_steps", 1},
                            {"batch_size", 2}};
  const std::string path = (dir / "tiny.json").string();
  std::ofstream(path) << j.dump();
  return path;
}

}  // namespace

TEST_CASE("usage errors exit with 2") {
  CHECK(cli({}).code == kExitUsage);
  CHECK(cli({"frobnicate"}).code == kExitUsage);
  CHECK(cli({"gen-data"}).code == kExitUsage);
  CHECK(cli({"count-params", "--lora", "maybe"}).code == kExitUsage);
  const Run r = cli({"count-params", "--config", "/nonexistent/cfg.json"});
  CHECK(r.code == kExitUsage);
  CHECK(r.err.find("not found") != std::string::npos);
  CHECK(cli({"--help"}).code == kExitOk);
}

TEST_CASE("count-params reports the budget and the compression") {
  const Run r = cli({"count-params"});
  REQUIRE(r.code == kExitOk);
  CHECK(r.out.find("Encoder") != std::string::npos);
  CHECK(r.out.find("total") != std::string::npos);
  CHECK(r.out.find("audio prompt tokens: 30 (vs 750 uncompressed") != std::string::npos);
}

TEST_CASE("gen-data writes manifests and refuses to overwrite") {
  const fs::path dir = workdir();
  const std::string cfg = tiny_config(dir);
  const std::string out = (dir / "data").string();
  const Run r = cli({"gen-data", "--config", cfg, "--out", out});
  REQUIRE(r.code == kExitOk);
  const auto train = load_manifest(out + "/train.jsonl", LanguageRegistry::builtin());
  const auto test = load_manifest(out + "/test.jsonl", LanguageRegistry::builtin());
  const auto all = load_manifest(out + "/corpus.jsonl", LanguageRegistry::builtin());
  CHECK(all.size() == 18);
  CHECK(train.size() + test.size() == all.size());

  const Run again = cli({"gen-data", "--config", cfg, "--out", out});
  CHECK(again.code == kExitUsage);
  CHECK(again.err.find("--force") != std::string::npos);
  CHECK(cli({"gen-data", "--config", cfg, "--out", out, "--force"}).code == kExitOk);
  fs::remove_all(dir);
}

TEST_CASE("train, evaluate and bench chain through checkpoints") {
  const fs::path dir = workdir();
  const std::string cfg = tiny_config(dir);
  const std::string data = (dir / "data").string();
  REQUIRE(cli({"gen-data", "--config", cfg, "--out", data}).code == kExitOk);
  const std::string train = data + "/train.jsonl", test = data + "/test.jsonl";

  REQUIRE(cli({"train", "--config", cfg, "--phase", "init", "--manifest", train, "--out", (dir / "m0").string()})
              .code == kExitOk);
  const Run p1 = cli({"train", "--config", cfg, "--phase", "1", "--from", (dir / "m0").string(), "--manifest", train,
                      "--out", (dir / "p1").string()});
  REQUIRE(p1.code == kExitOk);
  CHECK(p1.out.find("phase 1 (from init)") != std::string::npos);
  CHECK(fs::exists(dir / "p1" / "metrics.csv"));

  const Run bad = cli({"train", "--config", cfg, "--phase", "9", "--from", (dir / "m0").string(), "--manifest",
                       train, "--out", (dir / "p9").string()});
  CHECK(bad.code != kExitOk);
  CHECK(cli({"evaluate", "--ckpt", (dir / "missing").string(), "--manifest", test, "--out", (dir / "e0").string()})
            .code == kExitFailure);

  const Run ev = cli({"evaluate", "--config", cfg, "--ckpt", (dir / "p1").string(), "--manifest", test, "--out",
                      (dir / "eval").string()});
  REQUIRE(ev.code == kExitOk);
  std::ifstream mf(dir / "eval" / "matrix.json");
  const auto matrix = nlohmann::json::parse(mf);
  CHECK(matrix.contains("spbleu"));
  CHECK(fs::exists(dir / "eval" / "bins.csv"));

  const Run pl = cli({"plot", "--matrix", (dir / "eval" / "matrix.json").string(), "--out", (dir / "plots").string()});
  CHECK(pl.code == kExitOk);
  CHECK(fs::exists(dir / "plots" / "spbleu_heatmap.svg"));

  const Run bn = cli({"bench", "--config", cfg, "--ckpt", (dir / "p1").string(), "--manifest", test, "--samples", "2",
                      "--batch", "2", "--repeats", "1", "--decode-tokens", "2", "--long-tokens", "60", "--out",
                      (dir / "bench.json").string()});
  REQUIRE(bn.code == kExitOk);
  std::ifstream bf(dir / "bench.json");
  const auto bench = nlohmann::json::parse(bf);
  CHECK(bench.contains("speedup"));
  CHECK(cli({"bench", "--config", cfg, "--ckpt", (dir / "p1").string(), "--manifest", test, "--samples", "0"}).code ==
        kExitUsage);
  fs::remove_all(dir);
}
