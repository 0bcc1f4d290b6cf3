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

#include "promptbo/simulated_backend.hpp"

#include <array>

#include "promptbo/hash.hpp"

namespace promptbo {

namespace {

struct Synonym {
  const char* from;
  const char* to;
};

constexpr std::array<Synonym, 10> kSynonyms{{
    {"Determine", "Decide"},
    {"determine", "decide"},
    {"whether", "if"},
    {"statement", "claim"},
    {"Answer", "Reply"},
    {"answer", "reply"},
    {"text", "passage"},
    {"Classify", "Categorize"},
    {"carefully", "attentively"},
    {"input", "example"},
}};

std::uint64_t request_hash(const CompletionRequest& r, std::uint64_t seed) {
  std::uint64_t h = hash_combine(mix64(seed), fnv1a64(r.subject_text));
  for (const auto& id : r.error_ids) h = hash_combine(h, fnv1a64(id));
  return hash_combine(h, static_cast<std::uint64_t>(r.sample_index));
}

}  // namespace

SimulatedBackend::SimulatedBackend(SimulatedOracle oracle) : oracle_(std::move(oracle)) {
  oracle_.validate();
}

double SimulatedBackend::draw(const std::string& prompt_id, const std::string& example_id) const {
  std::uint64_t h = hash_combine(mix64(oracle_.rng_seed), fnv1a64(prompt_id));
  h = hash_combine(h, fnv1a64(example_id));
  return unit_interval(h);
}

int SimulatedBackend::do_classify(const Prompt& prompt, const Example& example) {
  const double c = oracle_.correctness_probability(prompt.text());
  const bool correct = draw(prompt.id(), example.id) < c;
  int label = correct ? example.label : 1 - example.label;
  if (oracle_.is_reversal(prompt.text())) label = 1 - label;
  return label;
}

std::string SimulatedBackend::do_complete(const CompletionRequest& request) {
  switch (request.role) {
    case Role::gradient: return critique(request);
    case Role::edit: return edit(request);
    case Role::paraphrase: return paraphrase(request);
    case Role::respond: return respond(request);
  }
  return {};
}

std::string SimulatedBackend::critique(const CompletionRequest& request) const {
  const auto missing = oracle_.missing_keywords(request.subject_text);
  if (missing.empty()) return kNoMissingFeatures;
  const auto pick = request_hash(request, oracle_.rng_seed) % missing.size();
  return "The prompt ignores the " + missing[pick] +
         " of the input; the misclassified examples hinge on it.";
}

std::string SimulatedBackend::edit(const CompletionRequest& request) const {
  for (const auto& kw : oracle_.missing_keywords(request.subject_text)) {
    if (contains_keyword(request.critique, kw))
      return request.subject_text + " Consider the " + kw + ".";
  }
  return request.subject_text;
}

std::string SimulatedBackend::paraphrase(const CompletionRequest& request) const {
  const std::string& parent = request.subject_text;
  const std::uint64_t h = request_hash(request, oracle_.rng_seed);
  std::string text = parent;
  for (std::size_t k = 0; k < kSynonyms.size(); ++k) {
    const auto& syn = kSynonyms[(h + k) % kSynonyms.size()];
    const auto pos = text.find(syn.from);
    if (pos == std::string::npos) continue;
    std::string swapped = text;
    swapped.replace(pos, std::char_traits<char>::length(syn.from), syn.to);
    if (oracle_.present_keywords(swapped) == oracle_.present_keywords(parent) &&
        oracle_.is_reversal(swapped) == oracle_.is_reversal(parent)) {
      text = std::move(swapped);
      break;
    }
  }
  return text + " (variant " + to_hex(h).substr(0, 4) + ")";
}

std::string SimulatedBackend::respond(const CompletionRequest& request) const {
  const double c = oracle_.correctness_probability(request.subject_text);
  std::uint64_t h = hash_combine(mix64(oracle_.rng_seed), fnv1a64(Prompt::id_for(request.subject_text)));
  h = hash_combine(h, fnv1a64(request.user));
  h = hash_combine(h, static_cast<std::uint64_t>(request.sample_index));
  if (unit_interval(h) < c) return "Which aspect of \"" + request.user + "\" do you mean?";
  return "Here is an overview of " + request.user + ".";
}

}  // namespace promptbo
