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
#include <fstream>
#include <iosfwd>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <tuple>
#include <vector>

#include "promptbo/annotator.hpp"
#include "promptbo/dataset.hpp"
#include "promptbo/kernels.hpp"

namespace promptbo {

/// Correctness bits of one prompt on the control batch, in control order,
/// together with the raw predicted labels.
struct PredictionVector {
  std::string prompt_id;
  BitVector bits;
  std::vector<std::uint8_t> predicted_labels;

  std::size_t size() const noexcept { return bits.size(); }
  /// Fraction of correct bits: the prompt's prior mean.
  double mean() const;
};

/// A prompt measured on the evaluation batch.
struct Observation {
  Prompt prompt;
  double accuracy = 0.0;
  int n_repeats = 1;
  PredictionVector prediction_vector;
  int round = 0;
};

/// Memo of classification results and role completions.
///
/// Labels are keyed by (prompt id, example id, repeat); a full pass over a
/// batch is also recorded under (prompt id, batch id, repeat). Entries are
/// never overwritten. When a record file is attached, each completed batch
/// pass and each completion is appended to it as one JSON line, and
/// load() replays such a file to warm-start a run.
class EvalCache {
 public:
  EvalCache() = default;
  EvalCache(const EvalCache&) = delete;
  EvalCache& operator=(const EvalCache&) = delete;

  /// Loads records; returns the number of records read.
  std::size_t load(std::istream& in);
  void load_file(const std::string& path);
  /// Appends future records to `path` (created if missing).
  void attach(const std::string& path);

  std::optional<int> label(const std::string& prompt_id, const std::string& example_id, int repeat) const;
  /// Missing entries are inserted; present ones are left untouched.
  void put_labels(const std::string& prompt_id, const std::vector<Example>& batch, int repeat,
                  const std::vector<std::optional<int>>& labels);

  std::optional<std::string> completion(const std::string& key) const;
  void put_completion(const std::string& key, const std::string& text);

  /// Number of complete passes over `batch` cached for `prompt_id`
  /// (contiguous from repeat 0).
  int repeats(const std::string& prompt_id, const std::vector<Example>& batch) const;

  std::uint64_t hits() const noexcept { return hits_.load(); }
  std::uint64_t misses() const noexcept { return misses_.load(); }
  void count_hit() { hits_.fetch_add(1, std::memory_order_relaxed); }
  void count_miss() { misses_.fetch_add(1, std::memory_order_relaxed); }
  std::size_t label_count() const;

 private:
  using LabelKey = std::tuple<std::string, std::string, int>;
  bool batch_complete_locked(const std::string& prompt_id, const std::vector<Example>& batch, int repeat) const;

  mutable std::shared_mutex mutex_;
  std::map<LabelKey, std::int8_t> labels_;
  std::map<std::string, std::string> completions_;
  std::set<std::string> batches_written_;
  std::ofstream sink_;
  std::atomic<std::uint64_t> hits_{0};
  std::atomic<std::uint64_t> misses_{0};
};

/// Cached 0/1 scorer over a backend. Per-example classify calls of one
/// batch run concurrently under Exec::parallel.
class Scorer {
 public:
  Scorer(Backend& backend, EvalCache& cache, Exec exec = Exec::parallel, int threads = 0);

  /// Predicted labels for one full pass; cached per (prompt, example, repeat).
  /// Throws EvaluationError naming the first failing example; successful
  /// labels of the pass stay cached.
  std::vector<int> labels(const Prompt& prompt, const std::vector<Example>& batch, int repeat = 0);

  PredictionVector predict_vector(const Prompt& prompt, const std::vector<Example>& control);

  /// Mean accuracy over `repeats` full passes (repeat indices 0..repeats-1).
  double accuracy(const Prompt& prompt, const std::vector<Example>& batch, int repeats = 1);

  /// Memoized completion.
  std::string complete(const CompletionRequest& request);

  Backend& backend() noexcept { return backend_; }
  EvalCache& cache() noexcept { return cache_; }

  /// Classify calls issued against examples of `batch` so far.
  std::uint64_t calls_on(const std::vector<Example>& batch) const;

 private:
  Backend& backend_;
  EvalCache& cache_;
  Exec exec_;
  int threads_;
  mutable std::mutex counts_mutex_;
  std::map<std::string, std::uint64_t> calls_by_batch_;
};

/// True when the candidate looks like a label-swapped prompt: its
/// complemented predictions beat its own by more than `threshold`, and it
/// disagrees with the reference on more than half of the control batch.
bool detect_label_reversal(const PredictionVector& candidate, const PredictionVector& reference,
                           double threshold = 0.15);

/// Components of the reversal test, for reporting.
struct ReversalStats {
  double accuracy = 0.0;
  double flipped_accuracy = 0.0;
  double disagreement = 0.0;
};
ReversalStats reversal_stats(const PredictionVector& candidate, const PredictionVector& reference);

/// Clarifying-question detector: the response ends with '?' (ignoring
/// trailing whitespace/quotes) and contains one of the cue words.
struct ClarificationPattern {
  std::vector<std::string> cue_words{"what",    "which",     "who",     "where",   "when",
                                     "why",     "how",       "could you", "can you", "do you",
                                     "would you", "are you", "did you", "is it"};
  bool matches(const std::string& response) const;
};

/// Mean of s(p, q) over queries, where s = 1 iff the first response turn
/// is a clarifying question.
double clarification_score(const Prompt& prompt, const std::vector<std::string>& queries, Backend& backend,
                           const ClarificationPattern& pattern = {});

/// Adapter presenting the clarification objective as a classifier: the
/// "label" is 1 iff the wrapped backend's response to the query (with the
/// prompt as system message) is a clarifying question. Completions are
/// forwarded unchanged.
class ClarifyingClassifier final : public Backend {
 public:
  explicit ClarifyingClassifier(Backend& inner, ClarificationPattern pattern = {})
      : inner_(inner), pattern_(std::move(pattern)) {}

 protected:
  int do_classify(const Prompt& prompt, const Example& example) override;
  std::string do_complete(const CompletionRequest& request) override { return inner_.complete(request); }

 private:
  Backend& inner_;
  ClarificationPattern pattern_;
};

}  // namespace promptbo
