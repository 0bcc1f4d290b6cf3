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

#include "promptbo/annotator.hpp"

#include <algorithm>
#include <cctype>

#include "promptbo/error.hpp"
#include "promptbo/hash.hpp"

namespace promptbo {

const char* to_string(PromptOrigin origin) {
  switch (origin) {
    case PromptOrigin::seed: return "seed";
    case PromptOrigin::gradient_edit: return "gradient_edit";
    case PromptOrigin::mc_paraphrase: return "mc_paraphrase";
  }
  return "seed";
}

PromptOrigin origin_from_string(const std::string& s) {
  if (s == "seed") return PromptOrigin::seed;
  if (s == "gradient_edit") return PromptOrigin::gradient_edit;
  if (s == "mc_paraphrase") return PromptOrigin::mc_paraphrase;
  throw ValidationError("unknown prompt origin: " + s);
}

Prompt::Prompt(std::string text, PromptOrigin origin, std::optional<std::string> parent_id)
    : text_(std::move(text)), id_(id_for(text_)), origin_(origin), parent_id_(std::move(parent_id)) {
  if (text_.empty()) throw ContractError("prompt text must be non-empty");
}

std::string Prompt::id_for(const std::string& text) { return to_hex(fnv1a64(text)); }

void BackendConfig::validate() const {
  if (temperature < 0.0) throw ConfigError("backend.temperature", "must be >= 0");
  if (max_retries < 0) throw ConfigError("backend.max_retries", "must be >= 0");
  if (max_in_flight < 1) throw ConfigError("backend.max_in_flight", "must be >= 1");
  if (kind == BackendKind::http) {
    if (endpoint.empty()) throw ConfigError("backend.endpoint", "required for http backend");
    if (model_name.empty()) throw ConfigError("backend.model_name", "required for http backend");
  }
}

bool contains_keyword(const std::string& text, const std::string& keyword) {
  if (keyword.empty()) return false;
  auto it = std::search(text.begin(), text.end(), keyword.begin(), keyword.end(),
                        [](char a, char b) {
                          return std::tolower(static_cast<unsigned char>(a)) ==
                                 std::tolower(static_cast<unsigned char>(b));
                        });
  return it != text.end();
}

void SimulatedOracle::validate() const {
  if (!(0.0 <= base_accuracy && base_accuracy <= max_accuracy && max_accuracy <= 1.0))
    throw ConfigError("backend.oracle", "need 0 <= base_accuracy <= max_accuracy <= 1");
  for (const auto& [kw, w] : feature_keywords) {
    if (kw.empty()) throw ConfigError("backend.oracle.feature_keywords", "empty keyword");
    if (w < 0.0 || w > 1.0)
      throw ConfigError("backend.oracle.feature_keywords." + kw, "weight outside [0,1]");
  }
}

double SimulatedOracle::quality(const std::string& prompt_text) const {
  double q = 0.0;
  for (const auto& [kw, w] : feature_keywords)
    if (contains_keyword(prompt_text, kw)) q += w;
  return std::clamp(q, 0.0, 1.0);
}

double SimulatedOracle::correctness_probability(const std::string& prompt_text) const {
  return base_accuracy + (max_accuracy - base_accuracy) * quality(prompt_text);
}

bool SimulatedOracle::is_reversal(const std::string& prompt_text) const {
  return std::any_of(reversal_keywords.begin(), reversal_keywords.end(),
                     [&](const std::string& kw) { return contains_keyword(prompt_text, kw); });
}

double SimulatedOracle::expected_accuracy(const std::string& prompt_text) const {
  const double c = correctness_probability(prompt_text);
  return is_reversal(prompt_text) ? 1.0 - c : c;
}

std::vector<std::string> SimulatedOracle::missing_keywords(const std::string& prompt_text) const {
  std::vector<std::string> out;
  for (const auto& [kw, w] : feature_keywords)
    if (!contains_keyword(prompt_text, kw)) out.push_back(kw);
  return out;
}

std::vector<std::string> SimulatedOracle::present_keywords(const std::string& prompt_text) const {
  std::vector<std::string> out;
  for (const auto& [kw, w] : feature_keywords)
    if (contains_keyword(prompt_text, kw)) out.push_back(kw);
  return out;
}

const char* to_string(Role role) {
  switch (role) {
    case Role::gradient: return "gradient";
    case Role::edit: return "edit";
    case Role::paraphrase: return "paraphrase";
    case Role::respond: return "respond";
  }
  return "respond";
}

std::string CompletionRequest::cache_key() const {
  std::uint64_t h = fnv1a64(to_string(role));
  h = hash_combine(h, fnv1a64(system));
  h = hash_combine(h, fnv1a64(user));
  h = hash_combine(h, fnv1a64(subject_text));
  h = hash_combine(h, fnv1a64(critique));
  for (const auto& id : error_ids) h = hash_combine(h, fnv1a64(id));
  h = hash_combine(h, static_cast<std::uint64_t>(sample_index));
  return to_hex(h);
}

int Backend::classify(const Prompt& prompt, const Example& example) {
  classify_calls_.fetch_add(1, std::memory_order_relaxed);
  return do_classify(prompt, example);
}

std::string Backend::complete(const CompletionRequest& request) {
  complete_calls_.fetch_add(1, std::memory_order_relaxed);
  return do_complete(request);
}

int extract_label(const std::string& response_text, const ExtractionRules& rules) {
  auto matches = [](const std::string& token, const std::vector<std::string>& set) {
    return std::find(set.begin(), set.end(), token) != set.end();
  };
  std::string token;
  auto flush = [&]() -> int {
    int label = -1;
    if (!token.empty()) {
      if (matches(token, rules.positive)) label = 1;
      else if (matches(token, rules.negative)) label = 0;
    }
    token.clear();
    return label;
  };
  for (char ch : response_text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c)) {
      token.push_back(static_cast<char>(std::tolower(c)));
    } else if (int label = flush(); label >= 0) {
      return label;
    }
  }
  if (int label = flush(); label >= 0) return label;
  throw ExtractionError(response_text);
}

}  // namespace promptbo
