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
#include <iosfwd>
#include <string>
#include <vector>

namespace promptbo {

/// One labeled item. Labels are binary; id is unique within a dataset.
struct Example {
  std::string id;
  std::string text;
  int label = 0;

  friend bool operator==(const Example&, const Example&) = default;
};

/// Control batch (prediction-vector coordinates), evaluation batch and
/// held-out test set. The three lists are disjoint by id.
struct Partition {
  std::vector<Example> control;
  std::vector<Example> eval;
  std::vector<Example> test;
  std::uint64_t rng_seed = 0;

  friend bool operator==(const Partition&, const Partition&) = default;
};

/// Reads line-delimited JSON objects `{"label": <int>, "text": <string>}`.
/// An optional string `id` field is honored; otherwise ids are
/// `liar-<line>`. Blank lines are skipped.
std::vector<Example> parse_liar(std::istream& source);

/// Reads `text;score` lines. The separator is the last `;` on the line and
/// label = score >= 0.5. Ids are `ethos-<line>`.
std::vector<Example> parse_ethos(std::istream& source);

/// Reads one query per line for the clarification objective. Every query
/// gets label 1 (the desired behavior is a clarifying first turn).
std::vector<Example> parse_queries(std::istream& source);

void write_liar(std::ostream& out, const std::vector<Example>& examples);
void write_ethos(std::ostream& out, const std::vector<Example>& examples, double positive_score = 1.0);

/// Stratified control batch (largest-remainder per-class counts), uniform
/// eval batch from the remainder, test = everything else. Batches keep the
/// input order of the examples. With stratify=false the control batch is
/// drawn uniformly and single-class inputs are accepted.
Partition partition(const std::vector<Example>& examples, std::size_t control_size,
                    std::size_t eval_size, std::uint64_t rng_seed, bool stratify = true);

/// Per-class counts for a stratified draw of `total` items, largest remainder.
/// Ties in the remainder go to the lower label.
std::vector<std::size_t> stratified_counts(const std::vector<std::size_t>& class_sizes,
                                           std::size_t total);

/// Partition manifest: the three id lists and the seed, as JSON text.
std::string partition_manifest(const Partition& p);

/// Content hash of the manifest text (hex).
std::string manifest_hash(const Partition& p);

/// Stable id of a batch: hash of its id list.
std::string batch_id(const std::vector<Example>& batch);

}  // namespace promptbo
