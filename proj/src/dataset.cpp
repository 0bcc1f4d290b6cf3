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

#include "promptbo/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>

#include <json.hpp>

#include "promptbo/error.hpp"
#include "promptbo/hash.hpp"

namespace promptbo {

namespace {

using nlohmann::json;

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

bool is_blank(const std::string& line) {
  return std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); });
}

void check_unique_ids(const std::vector<Example>& examples) {
  std::set<std::string> seen;
  for (const auto& e : examples) {
    if (!seen.insert(e.id).second) throw ValidationError("duplicate example id: " + e.id);
  }
}

}  // namespace

std::vector<Example> parse_liar(std::istream& source) {
  std::vector<Example> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(source, line)) {
    ++lineno;
    strip_cr(line);
    if (is_blank(line)) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(lineno, std::string("malformed record: ") + e.what());
    }
    if (!record.is_object()) throw ParseError(lineno, "record is not an object");
    auto label_it = record.find("label");
    auto text_it = record.find("text");
    if (label_it == record.end() || !label_it->is_number_integer())
      throw ParseError(lineno, "missing integer field 'label'");
    if (text_it == record.end() || !text_it->is_string())
      throw ParseError(lineno, "missing string field 'text'");
    const auto label = label_it->get<long long>();
    if (label != 0 && label != 1)
      throw ValidationError("line " + std::to_string(lineno) + ": label " + std::to_string(label) +
                            " outside {0,1}");
    Example ex;
    ex.label = static_cast<int>(label);
    ex.text = text_it->get<std::string>();
    if (auto id_it = record.find("id"); id_it != record.end() && id_it->is_string()) {
      ex.id = id_it->get<std::string>();
    } else {
      ex.id = "liar-" + std::to_string(lineno);
    }
    out.push_back(std::move(ex));
  }
  check_unique_ids(out);
  return out;
}

std::vector<Example> parse_ethos(std::istream& source) {
  std::vector<Example> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(source, line)) {
    ++lineno;
    strip_cr(line);
    if (is_blank(line)) continue;
    const auto sep = line.rfind(';');
    if (sep == std::string::npos) throw ParseError(lineno, "missing ';' separator");
    std::string score_text = line.substr(sep + 1);
    while (!score_text.empty() && std::isspace(static_cast<unsigned char>(score_text.back())))
      score_text.pop_back();
    std::size_t start = 0;
    while (start < score_text.size() && std::isspace(static_cast<unsigned char>(score_text[start])))
      ++start;
    double score = 0.0;
    const char* first = score_text.data() + start;
    const char* last = score_text.data() + score_text.size();
    auto [ptr, ec] = std::from_chars(first, last, score);
    if (ec != std::errc() || ptr != last || first == last)
      throw ParseError(lineno, "non-numeric score '" + score_text + "'");
    if (score < 0.0 || score > 1.0)
      throw ValidationError("line " + std::to_string(lineno) + ": score outside [0,1]");
    Example ex;
    ex.id = "ethos-" + std::to_string(lineno);
    ex.text = line.substr(0, sep);
    ex.label = score >= 0.5 ? 1 : 0;
    out.push_back(std::move(ex));
  }
  return out;
}

std::vector<Example> parse_queries(std::istream& source) {
  std::vector<Example> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(source, line)) {
    ++lineno;
    strip_cr(line);
    if (is_blank(line)) continue;
    out.push_back(Example{"query-" + std::to_string(lineno), line, 1});
  }
  return out;
}

void write_liar(std::ostream& out, const std::vector<Example>& examples) {
  for (const auto& e : examples) {
    json record = {{"id", e.id}, {"label", e.label}, {"text", e.text}};
    out << record.dump() << '\n';
  }
}

void write_ethos(std::ostream& out, const std::vector<Example>& examples, double positive_score) {
  for (const auto& e : examples) {
    out << e.text << ';' << (e.label == 1 ? positive_score : 0.0) << '\n';
  }
}

std::vector<std::size_t> stratified_counts(const std::vector<std::size_t>& class_sizes,
                                           std::size_t total) {
  const std::size_t n = std::accumulate(class_sizes.begin(), class_sizes.end(), std::size_t{0});
  std::vector<std::size_t> counts(class_sizes.size(), 0);
  if (n == 0) return counts;
  std::vector<std::pair<std::size_t, std::size_t>> remainders;  // (remainder numerator, class)
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < class_sizes.size(); ++c) {
    // Exact integer arithmetic: quota = class_size * total / n.
    const std::size_t num = class_sizes[c] * total;
    counts[c] = num / n;
    assigned += counts[c];
    remainders.emplace_back(num % n, c);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; assigned < total && i < remainders.size(); ++i) {
    const std::size_t c = remainders[i].second;
    if (counts[c] < class_sizes[c]) {
      ++counts[c];
      ++assigned;
    }
  }
  return counts;
}

namespace {

// Partial Fisher-Yates: returns `k` indices drawn uniformly from `pool`.
std::vector<std::size_t> draw(std::vector<std::size_t> pool, std::size_t k, SplitMix64& rng) {
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  return pool;
}

}  // namespace

Partition partition(const std::vector<Example>& examples, std::size_t control_size,
                    std::size_t eval_size, std::uint64_t rng_seed, bool stratify) {
  if (control_size + eval_size > examples.size())
    throw PartitionError("control_size + eval_size = " + std::to_string(control_size + eval_size) +
                         " exceeds dataset size " + std::to_string(examples.size()));
  check_unique_ids(examples);

  std::vector<std::vector<std::size_t>> by_class(2);
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const int label = examples[i].label;
    if (label != 0 && label != 1) throw ValidationError("label outside {0,1} for " + examples[i].id);
    by_class[static_cast<std::size_t>(label)].push_back(i);
  }

  SplitMix64 rng(rng_seed);
  std::vector<char> taken(examples.size(), 0);
  std::vector<std::size_t> control_idx;
  if (stratify) {
    if (by_class[0].empty() || by_class[1].empty())
      throw PartitionError("stratification needs both classes present");
    const auto counts = stratified_counts({by_class[0].size(), by_class[1].size()}, control_size);
    for (std::size_t c = 0; c < 2; ++c) {
      auto picked = draw(by_class[c], counts[c], rng);
      control_idx.insert(control_idx.end(), picked.begin(), picked.end());
    }
  } else {
    std::vector<std::size_t> all(examples.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    control_idx = draw(std::move(all), control_size, rng);
  }
  for (auto i : control_idx) taken[i] = 1;

  std::vector<std::size_t> rest;
  for (std::size_t i = 0; i < examples.size(); ++i)
    if (!taken[i]) rest.push_back(i);
  auto eval_idx = draw(rest, eval_size, rng);
  for (auto i : eval_idx) taken[i] = 2;

  Partition p;
  p.rng_seed = rng_seed;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    switch (taken[i]) {
      case 1: p.control.push_back(examples[i]); break;
      case 2: p.eval.push_back(examples[i]); break;
      default: p.test.push_back(examples[i]); break;
    }
  }
  return p;
}

std::string partition_manifest(const Partition& p) {
  auto ids = [](const std::vector<Example>& batch) {
    json arr = json::array();
    for (const auto& e : batch) arr.push_back(e.id);
    return arr;
  };
  json manifest = {{"format_version", 1},
                   {"rng_seed", p.rng_seed},
                   {"control", ids(p.control)},
                   {"eval", ids(p.eval)},
                   {"test", ids(p.test)}};
  return manifest.dump(2) + "\n";
}

std::string manifest_hash(const Partition& p) { return to_hex(fnv1a64(partition_manifest(p))); }

std::string batch_id(const std::vector<Example>& batch) {
  std::uint64_t h = fnv1a64("batch");
  for (const auto& e : batch) h = hash_combine(h, fnv1a64(e.id));
  return to_hex(h);
}

}  // namespace promptbo
