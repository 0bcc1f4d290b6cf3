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

#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "promptbo/annotator.hpp"
#include "promptbo/dataset.hpp"
#include "promptbo/optimizer.hpp"

namespace promptbo {

enum class DatasetFormat { liar, ethos, clarification };

const char* to_string(DatasetFormat f);

struct DatasetSection {
  DatasetFormat format = DatasetFormat::liar;
  std::string path;  // resolved against the config file's directory
  std::size_t control_size = 75;
  std::size_t eval_size = 50;
  std::uint64_t partition_seed = 0;
};

struct OutputSection {
  std::string run_dir = "run";
  std::string cache_path;  // empty: <run_dir>/cache.jsonl
};

struct CliConfigFile {
  DatasetSection dataset;
  BackendConfig backend;
  SimulatedOracle oracle;
  ExtractionRules extraction;
  RunConfig run;
  std::string role_templates;  // optional path
  OutputSection output;
  nlohmann::json snapshot;  // effective document after overrides
};

/// Sets `key.path=value` inside `doc`. The value is parsed as JSON when
/// possible and taken as a plain string otherwise.
void apply_override(nlohmann::json& doc, const std::string& assignment);

/// Strict parse: unknown keys and wrong types throw ConfigError naming the
/// key path. Relative paths are resolved against `base_dir`.
CliConfigFile parse_config(const nlohmann::json& doc, const std::string& base_dir);

/// Reads a JSON config file, applies overrides in order, then parses.
CliConfigFile load_config(const std::string& path, const std::vector<std::string>& overrides = {});

/// Parses the dataset file named by the section. A missing file throws
/// ConfigError("dataset.path").
std::vector<Example> load_dataset(const DatasetSection& section);

/// Partition for the section; clarification queries are not stratified.
Partition partition_for(const DatasetSection& section, const std::vector<Example>& examples);

/// The configured backend; clarification mode wraps it so that the
/// clarifying-question score becomes the accuracy.
class BackendStack {
 public:
  explicit BackendStack(const CliConfigFile& cfg);
  Backend& top() noexcept { return *top_; }
  Backend& base() noexcept { return *base_; }

 private:
  std::unique_ptr<Backend> base_;
  std::unique_ptr<Backend> wrapper_;
  Backend* top_ = nullptr;
};

}  // namespace promptbo
