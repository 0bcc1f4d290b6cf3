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
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "promptbo/acquisition.hpp"
#include "promptbo/dataset.hpp"
#include "promptbo/expansion.hpp"
#include "promptbo/scorer.hpp"
#include "promptbo/surrogate.hpp"

namespace promptbo {

/// How a round picks prompts from its candidate set. `random` is the
/// uniform baseline used by the benchmark.
enum class SelectionPolicy { acquisition, random };

struct RunConfig {
  int rounds = 10;
  std::vector<std::string> seeds;
  AcquisitionConfig acquisition;
  ExpansionConfig expansion;
  KernelParams kernel_init{1.0, 0.01};
  double sigma_min = 0.02;
  double repeat_margin = 0.02;
  int max_repeats = 3;
  bool optimize_hypers = true;
  HyperoptOptions hyperopt;
  double reversal_threshold = 0.15;
  std::uint64_t rng_seed = 0;
  SelectionPolicy policy = SelectionPolicy::acquisition;
  /// Replaces the annealed kappa in every round when set (negative controls).
  std::optional<double> kappa_override;
  Exec exec = Exec::parallel;

  void validate() const;
};

struct CandidateRecord {
  std::string prompt_id;
  std::string text;
  PromptOrigin origin = PromptOrigin::seed;
  std::string parent_id;
  double prior_mean = 0.0;
  double mean = 0.0;
  double std = 0.0;
  double variance = 0.0;
  double score = 0.0;
};

struct SelectedRecord {
  std::string prompt_id;
  std::string text;
  PromptOrigin origin = PromptOrigin::seed;
  std::string parent_id;
  double mean = 0.0;
  double std = 0.0;
  double score = 0.0;
  double measured_accuracy = 0.0;
  int repeats = 1;
  double control_accuracy = 0.0;
  bool flagged = false;
};

struct ReversalEvent {
  int round = 0;
  std::string prompt_id;
  std::string text;
  double eval_accuracy = 0.0;
  ReversalStats stats;
};

struct CallTotals {
  std::uint64_t classify = 0;
  std::uint64_t complete = 0;
  std::uint64_t control = 0;
  std::uint64_t eval = 0;
  std::uint64_t test = 0;
};

/// Round 0: every initial seed measured on both batches.
struct BootstrapRecord {
  std::vector<SelectedRecord> seeds;
  std::string reference_id;
  double best_so_far = 0.0;
  std::vector<std::string> seed_pool;
  std::vector<ReversalEvent> reversals;
  CallTotals calls;
};

struct RoundRecord {
  int round_index = 0;
  double kappa = 0.0;
  KernelParams params;
  double lml = 0.0;
  std::size_t generated = 0;
  std::vector<CandidateRecord> candidates;
  std::vector<SelectedRecord> selected;
  bool repeat_triggered = false;
  double best_so_far = 0.0;
  std::string best_prompt_id;
  std::vector<std::string> seed_pool_after;
  bool seed_fallback = false;
  std::vector<ReversalEvent> reversals;
  std::vector<std::string> warnings;
  CallTotals calls;
};

enum class Termination { completed, expansion_exhausted, backend_failure };

const char* to_string(Termination t);

struct Summary {
  Termination termination = Termination::completed;
  std::string reason;
  int rounds_completed = 0;
  std::string best_prompt_id;
  std::string best_prompt_text;
  double best_eval_accuracy = 0.0;
  std::optional<double> test_accuracy;
  CallTotals calls;
  std::uint64_t cache_hits = 0;
  std::uint64_t cache_misses = 0;
};

struct Trajectory {
  nlohmann::json config;
  std::string partition_hash;
  BootstrapRecord bootstrap;
  std::vector<RoundRecord> rounds;
  Summary summary;
};

/// Top n_seeds prompts by observed accuracy, skipping flagged ones. Ties:
/// earlier round first, then smaller prompt id. May return fewer than
/// n_seeds (including none, when everything is flagged).
std::vector<Prompt> update_seeds(const std::vector<Observation>& cache, int n_seeds,
                                 const std::set<std::string>& flagged);

struct RunHooks {
  /// Called with each trajectory line as soon as it is final.
  std::function<void(const nlohmann::json&)> on_record;
  /// Called once per round with surrogate diagnostics.
  std::function<void(const nlohmann::json&)> on_surrogate;
  RoleTemplates templates = RoleTemplates::defaults();
  /// Run config snapshot stored in the header; defaults to the RunConfig fields.
  std::optional<nlohmann::json> config_snapshot;
};

/// The optimization loop. Backend failures and exhausted expansion end the
/// run early; the returned trajectory records why.
Trajectory run(const RunConfig& config, const Partition& partition, Backend& backend, EvalCache& cache,
               const RunHooks& hooks = {});

/// Trajectory lines (header, bootstrap, rounds, summary) as JSON.
nlohmann::json header_json(const Trajectory& t);
nlohmann::json to_json(const BootstrapRecord& r);
nlohmann::json to_json(const RoundRecord& r);
nlohmann::json to_json(const Summary& s);
nlohmann::json to_json(const RunConfig& c);

/// Whole trajectory as line-delimited JSON.
std::string to_jsonl(const Trajectory& t);

}  // namespace promptbo
