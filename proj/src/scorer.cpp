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

#include "promptbo/scorer.hpp"

#include <algorithm>
#include <cctype>
#include <istream>

#include <json.hpp>
#include <omp.h>

#include "promptbo/error.hpp"

namespace promptbo {

using nlohmann::json;

double PredictionVector::mean() const {
  if (bits.size() == 0) throw ContractError("empty prediction vector");
  return static_cast<double>(bits.count()) / static_cast<double>(bits.size());
}

// ---------------------------------------------------------------------------
// EvalCache

std::size_t EvalCache::load(std::istream& in) {
  std::unique_lock lock(mutex_);
  std::map<std::string, std::vector<std::string>> batches;
  std::string line;
  std::size_t lineno = 0;
  std::size_t records = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
      const auto kind = rec.at("kind").get<std::string>();
      if (kind == "batch") {
        const auto id = rec.at("batch_id").get<std::string>();
        batches[id] = rec.at("example_ids").get<std::vector<std::string>>();
        batches_written_.insert(id);
      } else if (kind == "labels") {
        const auto prompt_id = rec.at("prompt_id").get<std::string>();
        const auto batch = rec.at("batch_id").get<std::string>();
        const int repeat = rec.at("repeat").get<int>();
        const auto values = rec.at("labels").get<std::vector<int>>();
        const auto it = batches.find(batch);
        if (it == batches.end() || it->second.size() != values.size())
          throw ParseError(lineno, "labels record references unknown batch " + batch);
        for (std::size_t i = 0; i < values.size(); ++i)
          labels_.emplace(LabelKey{prompt_id, it->second[i], repeat}, static_cast<std::int8_t>(values[i]));
      } else if (kind == "completion") {
        completions_.emplace(rec.at("key").get<std::string>(), rec.at("text").get<std::string>());
      } else {
        throw ParseError(lineno, "unknown record kind " + kind);
      }
    } catch (const json::exception& e) {
      throw ParseError(lineno, std::string("malformed cache record: ") + e.what());
    }
    ++records;
  }
  return records;
}

void EvalCache::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open cache file " + path);
  load(in);
}

void EvalCache::attach(const std::string& path) {
  std::unique_lock lock(mutex_);
  sink_.open(path, std::ios::app);
  if (!sink_) throw Error("cannot open cache file for append: " + path);
}

std::optional<int> EvalCache::label(const std::string& prompt_id, const std::string& example_id,
                                    int repeat) const {
  std::shared_lock lock(mutex_);
  auto it = labels_.find(LabelKey{prompt_id, example_id, repeat});
  if (it == labels_.end()) return std::nullopt;
  return it->second;
}

bool EvalCache::batch_complete_locked(const std::string& prompt_id, const std::vector<Example>& batch,
                                      int repeat) const {
  return std::all_of(batch.begin(), batch.end(), [&](const Example& e) {
    return labels_.count(LabelKey{prompt_id, e.id, repeat}) > 0;
  });
}

void EvalCache::put_labels(const std::string& prompt_id, const std::vector<Example>& batch, int repeat,
                           const std::vector<std::optional<int>>& labels) {
  if (labels.size() != batch.size()) throw ContractError("label count does not match batch size");
  std::unique_lock lock(mutex_);
  bool inserted = false;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (!labels[i]) continue;
    inserted |= labels_.emplace(LabelKey{prompt_id, batch[i].id, repeat},
                                static_cast<std::int8_t>(*labels[i])).second;
  }
  if (!inserted || !sink_.is_open() || !batch_complete_locked(prompt_id, batch, repeat)) return;

  const std::string bid = batch_id(batch);
  if (batches_written_.insert(bid).second) {
    json ids = json::array();
    for (const auto& e : batch) ids.push_back(e.id);
    sink_ << json{{"kind", "batch"}, {"batch_id", bid}, {"example_ids", ids}}.dump() << '\n';
  }
  json values = json::array();
  for (const auto& e : batch) values.push_back(labels_.at(LabelKey{prompt_id, e.id, repeat}));
  sink_ << json{{"kind", "labels"}, {"prompt_id", prompt_id}, {"batch_id", bid}, {"repeat", repeat},
                {"labels", values}}
               .dump()
        << '\n';
  sink_.flush();
}

std::optional<std::string> EvalCache::completion(const std::string& key) const {
  std::shared_lock lock(mutex_);
  auto it = completions_.find(key);
  if (it == completions_.end()) return std::nullopt;
  return it->second;
}

void EvalCache::put_completion(const std::string& key, const std::string& text) {
  std::unique_lock lock(mutex_);
  if (!completions_.emplace(key, text).second) return;
  if (sink_.is_open()) {
    sink_ << json{{"kind", "completion"}, {"key", key}, {"text", text}}.dump() << '\n';
    sink_.flush();
  }
}

int EvalCache::repeats(const std::string& prompt_id, const std::vector<Example>& batch) const {
  std::shared_lock lock(mutex_);
  int r = 0;
  while (batch_complete_locked(prompt_id, batch, r)) ++r;
  return r;
}

std::size_t EvalCache::label_count() const {
  std::shared_lock lock(mutex_);
  return labels_.size();
}

// ---------------------------------------------------------------------------
// Scorer

Scorer::Scorer(Backend& backend, EvalCache& cache, Exec exec, int threads)
    : backend_(backend), cache_(cache), exec_(exec), threads_(threads) {}

std::vector<int> Scorer::labels(const Prompt& prompt, const std::vector<Example>& batch, int repeat) {
  const std::size_t n = batch.size();
  std::vector<std::optional<int>> result(n);
  std::vector<std::size_t> missing;
  for (std::size_t i = 0; i < n; ++i) {
    result[i] = cache_.label(prompt.id(), batch[i].id, repeat);
    if (!result[i]) missing.push_back(i);
  }
  if (missing.empty()) {
    cache_.count_hit();
  } else {
    cache_.count_miss();
    std::vector<std::string> failures(n);
    const auto m = static_cast<std::ptrdiff_t>(missing.size());
    auto evaluate = [&](std::ptrdiff_t k) {
      const std::size_t i = missing[static_cast<std::size_t>(k)];
      try {
        const int label = backend_.classify(prompt, batch[i]);
        if (label != 0 && label != 1) throw BackendError("label outside {0,1}");
        result[i] = label;
      } catch (const std::exception& e) {
        failures[i] = e.what();
      }
    };
    if (exec_ == Exec::parallel) {
      const int threads = threads_ > 0 ? threads_ : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(threads)
      for (std::ptrdiff_t k = 0; k < m; ++k) evaluate(k);
    } else {
      for (std::ptrdiff_t k = 0; k < m; ++k) evaluate(k);
    }
    {
      std::lock_guard lock(counts_mutex_);
      calls_by_batch_[batch_id(batch)] += missing.size();
    }
    cache_.put_labels(prompt.id(), batch, repeat, result);
    for (std::size_t i : missing)
      if (!result[i]) throw EvaluationError(batch[i].id, failures[i]);
  }
  std::vector<int> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = *result[i];
  return out;
}

PredictionVector Scorer::predict_vector(const Prompt& prompt, const std::vector<Example>& control) {
  if (control.empty()) throw ContractError("control batch is empty");
  const auto predicted = labels(prompt, control, 0);
  PredictionVector v;
  v.prompt_id = prompt.id();
  v.bits = BitVector(control.size());
  v.predicted_labels.resize(control.size());
  for (std::size_t i = 0; i < control.size(); ++i) {
    v.predicted_labels[i] = static_cast<std::uint8_t>(predicted[i]);
    v.bits.set(i, predicted[i] == control[i].label);
  }
  return v;
}

double Scorer::accuracy(const Prompt& prompt, const std::vector<Example>& batch, int repeats) {
  if (repeats < 1) throw ContractError("repeats must be >= 1");
  if (batch.empty()) throw ContractError("evaluation batch is empty");
  double total = 0.0;
  for (int r = 0; r < repeats; ++r) {
    const auto predicted = labels(prompt, batch, r);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < batch.size(); ++i) correct += predicted[i] == batch[i].label;
    total += static_cast<double>(correct) / static_cast<double>(batch.size());
  }
  return total / repeats;
}

std::string Scorer::complete(const CompletionRequest& request) {
  const auto key = request.cache_key();
  if (auto hit = cache_.completion(key)) {
    cache_.count_hit();
    return *hit;
  }
  cache_.count_miss();
  auto text = backend_.complete(request);
  cache_.put_completion(key, text);
  return text;
}

std::uint64_t Scorer::calls_on(const std::vector<Example>& batch) const {
  std::lock_guard lock(counts_mutex_);
  auto it = calls_by_batch_.find(batch_id(batch));
  return it == calls_by_batch_.end() ? 0 : it->second;
}

// ---------------------------------------------------------------------------
// Reversal detection

ReversalStats reversal_stats(const PredictionVector& candidate, const PredictionVector& reference) {
  if (candidate.size() != reference.size() ||
      candidate.predicted_labels.size() != reference.predicted_labels.size() ||
      candidate.predicted_labels.size() != candidate.size())
    throw ContractError("prediction vectors cover different control batches");
  const auto n = static_cast<double>(candidate.size());
  ReversalStats s;
  s.accuracy = candidate.mean();
  // Complementing a binary prediction flips its correctness bit.
  s.flipped_accuracy = static_cast<double>(candidate.size() - candidate.bits.count()) / n;
  std::size_t disagree = 0;
  for (std::size_t i = 0; i < candidate.size(); ++i)
    disagree += candidate.predicted_labels[i] != reference.predicted_labels[i];
  s.disagreement = static_cast<double>(disagree) / n;
  return s;
}

bool detect_label_reversal(const PredictionVector& candidate, const PredictionVector& reference,
                           double threshold) {
  const auto s = reversal_stats(candidate, reference);
  return s.flipped_accuracy - s.accuracy > threshold && s.disagreement > 0.5;
}

// ---------------------------------------------------------------------------
// Clarification objective

bool ClarificationPattern::matches(const std::string& response) const {
  std::string trimmed = response;
  while (!trimmed.empty() &&
         (std::isspace(static_cast<unsigned char>(trimmed.back())) || trimmed.back() == '"' ||
          trimmed.back() == '\''))
    trimmed.pop_back();
  if (trimmed.empty() || trimmed.back() != '?') return false;
  std::string lower;
  lower.reserve(trimmed.size() + 2);
  lower.push_back(' ');
  for (char c : trimmed) {
    const auto u = static_cast<unsigned char>(c);
    lower.push_back(std::isalnum(u) ? static_cast<char>(std::tolower(u)) : ' ');
  }
  lower.push_back(' ');
  return std::any_of(cue_words.begin(), cue_words.end(), [&](const std::string& cue) {
    return lower.find(' ' + cue + ' ') != std::string::npos;
  });
}

double clarification_score(const Prompt& prompt, const std::vector<std::string>& queries, Backend& backend,
                           const ClarificationPattern& pattern) {
  if (queries.empty()) throw ContractError("clarification queries must be non-empty");
  std::size_t matched = 0;
  for (const auto& q : queries) {
    CompletionRequest req;
    req.role = Role::respond;
    req.system = prompt.text();
    req.user = q;
    req.subject_text = prompt.text();
    matched += pattern.matches(backend.complete(req)) ? 1 : 0;
  }
  return static_cast<double>(matched) / static_cast<double>(queries.size());
}

int ClarifyingClassifier::do_classify(const Prompt& prompt, const Example& example) {
  CompletionRequest req;
  req.role = Role::respond;
  req.system = prompt.text();
  req.user = example.text;
  req.subject_text = prompt.text();
  return pattern_.matches(inner_.complete(req)) ? 1 : 0;
}

}  // namespace promptbo
