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

#include <map>
#include <set>
#include <string>
#include <vector>

#include "promptbo/annotator.hpp"
#include "promptbo/scorer.hpp"

namespace promptbo {

struct ErrorItem {
  Example example;
  int predicted = 0;
  int truth = 0;
};

/// Misclassified evaluation examples of one prompt, in batch order.
struct ErrorSet {
  std::string prompt_id;
  std::vector<ErrorItem> items;

  bool empty() const noexcept { return items.empty(); }
  std::size_t size() const noexcept { return items.size(); }
};

struct ExpansionConfig {
  int n_gradients = 4;
  int steps_per_gradient = 1;
  int mc_per_edit = 2;
  int n_seeds = 3;
  int errors_per_gradient = 1;
  int max_error_chars = 400;

  void validate() const;
};

/// System and user message templates of one role. Slots: {prompt},
/// {errors}, {critique}.
struct RoleTemplate {
  std::string system;
  std::string user;
};

struct RoleTemplates {
  RoleTemplate gradient;
  RoleTemplate edit;
  RoleTemplate paraphrase;

  static RoleTemplates defaults();
  /// Reads a JSON object with keys gradient/edit/paraphrase, each
  /// {"system": ..., "user": ...}. Missing roles keep their defaults;
  /// unknown keys are rejected.
  static RoleTemplates from_json_text(const std::string& text);
  static RoleTemplates load(const std::string& path);
};

/// Replaces every {name} whose name is a key of `slots`.
std::string render(const std::string& tmpl, const std::map<std::string, std::string>& slots);

/// Errors of `prompt` on the evaluation batch (repeat-0 labels, cached).
ErrorSet collect_errors(const Prompt& prompt, const std::vector<Example>& eval_batch, Scorer& scorer);

/// Indices into an error list of length `n_errors` shown to gradient call
/// `gradient_index`: stride = ceil(n / (n_gradients * per_gradient)), item
/// j of call g is ((g * per_gradient + j) * stride) mod n.
std::vector<std::size_t> stride_indices(std::size_t n_errors, int gradient_index, const ExpansionConfig& cfg);

/// Error excerpt block sent to the gradient and edit roles.
std::string format_errors(const ErrorSet& errors, const std::vector<std::size_t>& indices, int max_chars);

/// Up to n_gradients non-empty critiques. Empty error set gives no
/// critiques. Failing calls are skipped; if every call fails, throws
/// ExpansionError.
std::vector<std::string> gradients(const Prompt& seed, const ErrorSet& errors, const ExpansionConfig& cfg,
                                   Scorer& scorer, const RoleTemplates& templates = RoleTemplates::defaults());

/// One edited prompt (origin gradient_edit, parent = seed). The response is
/// trimmed; an empty response throws EditError.
Prompt apply_edit(const Prompt& seed, const std::string& critique, const ErrorSet& errors, Scorer& scorer,
                  const RoleTemplates& templates = RoleTemplates::defaults(), int sample_index = 0,
                  int max_error_chars = 400);

/// Up to `count` paraphrases (origin mc_paraphrase, parent = prompt).
/// Failed or empty responses are skipped.
std::vector<Prompt> mc_paraphrase(const Prompt& prompt, int count, Scorer& scorer,
                                  const RoleTemplates& templates = RoleTemplates::defaults());

struct ExpansionResult {
  std::vector<Prompt> candidates;
  std::size_t generated = 0;  // before dedup and seed exclusion
  std::vector<std::string> warnings;
};

/// Candidate set from the seeds: errors -> critiques -> edits -> paraphrases
/// of each edit; seeds with no errors contribute paraphrases of themselves.
/// Output is deduplicated by id and excludes the seeds and `excluded_ids`.
/// Throws ExpansionExhausted when nothing survives.
ExpansionResult expand(const std::vector<Prompt>& seeds, const std::vector<Example>& eval_batch,
                       const ExpansionConfig& cfg, Scorer& scorer, const std::set<std::string>& excluded_ids = {},
                       const RoleTemplates& templates = RoleTemplates::defaults());

}  // namespace promptbo
