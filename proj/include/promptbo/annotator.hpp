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

#include <atomic>
#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "promptbo/dataset.hpp"

namespace promptbo {

enum class PromptOrigin { seed, gradient_edit, mc_paraphrase };

const char* to_string(PromptOrigin origin);
PromptOrigin origin_from_string(const std::string& s);

/// An instruction text. The id is a content hash of the text, so equal
/// texts deduplicate.
class Prompt {
 public:
  Prompt() = default;
  explicit Prompt(std::string text, PromptOrigin origin = PromptOrigin::seed,
                  std::optional<std::string> parent_id = std::nullopt);

  const std::string& text() const noexcept { return text_; }
  const std::string& id() const noexcept { return id_; }
  PromptOrigin origin() const noexcept { return origin_; }
  const std::optional<std::string>& parent_id() const noexcept { return parent_id_; }

  static std::string id_for(const std::string& text);

 private:
  std::string text_;
  std::string id_;
  PromptOrigin origin_ = PromptOrigin::seed;
  std::optional<std::string> parent_id_;
};

enum class BackendKind { simulated, http };

struct BackendConfig {
  BackendKind kind = BackendKind::simulated;
  std::string endpoint;
  std::string model_name;
  std::string api_key_env;
  double temperature = 0.0;
  std::chrono::milliseconds request_timeout{30000};
  int max_retries = 3;
  std::chrono::milliseconds retry_backoff{500};
  int max_in_flight = 8;
  std::uint64_t rng_seed = 0;

  /// Throws ConfigError when an http config lacks endpoint or model.
  void validate() const;
};

/// Deterministic stand-in for the classifier LLM. Prompt quality is the
/// clipped sum of weights of the feature keywords it mentions; correctness
/// probability rises linearly from base to max accuracy with quality.
struct SimulatedOracle {
  std::vector<std::pair<std::string, double>> feature_keywords;
  double base_accuracy = 0.5;
  double max_accuracy = 0.95;
  std::vector<std::string> reversal_keywords;
  std::uint64_t rng_seed = 0;

  void validate() const;

  double quality(const std::string& prompt_text) const;
  double correctness_probability(const std::string& prompt_text) const;
  bool is_reversal(const std::string& prompt_text) const;
  /// Expected accuracy over an infinite dataset: c, or 1-c for reversal prompts.
  double expected_accuracy(const std::string& prompt_text) const;
  /// Keywords (in declaration order) absent from the text.
  std::vector<std::string> missing_keywords(const std::string& prompt_text) const;
  std::vector<std::string> present_keywords(const std::string& prompt_text) const;
};

/// Case-insensitive substring test used for keyword detection.
bool contains_keyword(const std::string& text, const std::string& keyword);

/// The three expansion roles plus the free-form response role used by the
/// clarification objective.
enum class Role { gradient, edit, paraphrase, respond };

const char* to_string(Role role);

/// A rendered completion request. `system` and `user` are what a live
/// model sees; the structured fields let the simulated backend act on the
/// request without parsing the rendered text.
struct CompletionRequest {
  Role role = Role::respond;
  std::string system;
  std::string user;
  std::string subject_text;   // prompt being critiqued / edited / paraphrased / used
  std::string critique;       // edit role only
  std::vector<std::string> error_ids;
  int sample_index = 0;       // distinguishes repeated calls with the same inputs

  /// Hash of every field; memoization key.
  std::string cache_key() const;
};

struct CallCounts {
  std::uint64_t classify = 0;
  std::uint64_t complete = 0;
};

/// LLM behind a classifier and a text completer. Implementations must be
/// safe under concurrent classify calls.
class Backend {
 public:
  virtual ~Backend() = default;

  /// Label of `example` under `prompt`, in {0,1}.
  int classify(const Prompt& prompt, const Example& example);
  std::string complete(const CompletionRequest& request);

  CallCounts counts() const noexcept {
    return {classify_calls_.load(), complete_calls_.load()};
  }

 protected:
  virtual int do_classify(const Prompt& prompt, const Example& example) = 0;
  virtual std::string do_complete(const CompletionRequest& request) = 0;

 private:
  std::atomic<std::uint64_t> classify_calls_{0};
  std::atomic<std::uint64_t> complete_calls_{0};
};

/// Token sets for answer extraction. Matching is case-insensitive on whole
/// alphanumeric tokens.
struct ExtractionRules {
  std::vector<std::string> positive{"yes", "1", "true"};
  std::vector<std::string> negative{"no", "0", "false"};
};

/// First positive or negative token in the response decides the label.
int extract_label(const std::string& response_text, const ExtractionRules& rules = {});

}  // namespace promptbo
