// Copyright 2026 The promptbo Authors. All Rights Reserved.
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
// =============================================================================

#include <doctest.h>

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "promptbo/config.hpp"
#include "promptbo/error.hpp"

using namespace promptbo;
using nlohmann::json;

namespace {

json minimal() {
  return json::parse(R"({
    "dataset": {"format": "liar", "path": "data.jsonl", "control_size": 4, "eval_size": 2},
    "backend": {"kind": "simulated",
                "oracle": {"feature_keywords": [{"keyword": "evidence", "weight": 1.0}]}},
    "run": {"rounds": 2, "seeds": ["Is it true?"]}
  })");
}

std::string key_of(const json& doc) {
  try {
    parse_config(doc, ".");
  } catch (const ConfigError& e) {
    return e.key_path();
  }
  return "";
}

}  // namespace

TEST_CASE("minimal config parses with defaults") {
  const auto cfg = parse_config(minimal(), "/base");
  CHECK(cfg.dataset.path == "/base/data.jsonl");
  CHECK(cfg.run.rounds == 2);
  CHECK(cfg.run.acquisition.kappa_start == 2.0);
  CHECK(cfg.run.expansion.n_gradients == 4);
  CHECK(cfg.oracle.feature_keywords.size() == 1);
  CHECK(cfg.output.run_dir == "/base/run");
}

TEST_CASE("strict keys and types") {
  auto doc = minimal();
  doc["run"]["round"] = 3;
  CHECK(key_of(doc) == "run.round");
  doc = minimal();
  doc["run"]["acquisition"] = {{"kappa", 1.0}};
  CHECK(key_of(doc) == "run.acquisition.kappa");
  doc = minimal();
  doc["run"]["rounds"] = "ten";
  CHECK(key_of(doc) == "run.rounds");
  doc = minimal();
  doc["dataset"]["format"] = "csv";
  CHECK(key_of(doc) == "dataset.format");
  doc = minimal();
  doc["run"]["rounds"] = 0;
  CHECK(key_of(doc) == "run.rounds");
  doc = minimal();
  doc.erase("run");
  CHECK_FALSE(key_of(doc).empty());
}

TEST_CASE("overrides") {
  auto doc = minimal();
  apply_override(doc, "run.rounds=5");
  apply_override(doc, "run.acquisition.kind=ei");
  apply_override(doc, "output.run_dir=elsewhere");
  CHECK(doc["run"]["rounds"] == 5);
  CHECK(doc["run"]["acquisition"]["kind"] == "ei");
  CHECK(doc["output"]["run_dir"] == "elsewhere");
  const auto cfg = parse_config(doc, "/b");
  CHECK(cfg.run.rounds == 5);
  CHECK(cfg.run.acquisition.kind == AcquisitionKind::ei);
  CHECK_THROWS_AS(apply_override(doc, "no-equals-sign"), ConfigError);
}

TEST_CASE("load_config and dataset loading") {
  const auto dir = std::filesystem::temp_directory_path() / "promptbo_config_test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  {
    std::ofstream f(dir / "cfg.json");
    f << minimal().dump(2);
  }
  const auto cfg = load_config((dir / "cfg.json").string(), {"run.rounds=4"});
  CHECK(cfg.run.rounds == 4);
  CHECK(cfg.snapshot["run"]["rounds"] == 4);
  try {
    load_dataset(cfg.dataset);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.key_path() == "dataset.path");
  }
  {
    std::ofstream f(dir / "data.jsonl");
    for (int i = 0; i < 10; ++i) f << json{{"label", i % 2}, {"text", "claim " + std::to_string(i)}}.dump() << "\n";
  }
  const auto xs = load_dataset(cfg.dataset);
  CHECK(xs.size() == 10);
  const auto part = partition_for(cfg.dataset, xs);
  CHECK(part.control.size() == 4);
  CHECK(part.eval.size() == 2);
  CHECK(part.test.size() == 4);
  std::filesystem::remove_all(dir);
}
