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

#include "promptbo/expansion.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "promptbo/error.hpp"

namespace promptbo {

void ExpansionConfig::validate() const {
  auto positive = [](int v, const char* key) {
    if (v < 1) throw ConfigError(std::string("run.expansion.") + key, "must be >= 1");
  };
  positive(n_gradients, "n_gradients");
  positive(steps_per_gradient, "steps_per_gradient");
  positive(mc_per_edit, "mc_per_edit");
  positive(n_seeds, "n_seeds");
  positive(errors_per_gradient, "errors_per_gradient");
  positive(max_error_chars, "max_error_chars");
}

RoleTemplates RoleTemplates::defaults() {
  RoleTemplates t;
  t.gradient.system = "You are an expert prompt engineer reviewing a zero-shot classification prompt.";
  t.gradient.user =
      "My current prompt is:\n\"{prompt}\"\n\n"
      "But this prompt gets the following examples wrong:\n{errors}\n\n"
      "Give one reason why the prompt could have gotten these examples wrong. "
      "Reply with the reason only.";
  t.edit.system = "You are an expert prompt engineer improving a zero-shot classification prompt.";
  t.edit.user =
      "My current prompt is:\n\"{prompt}\"\n\n"
      "But it gets the following examples wrong:\n{errors}\n\n"
      "Based on these examples the problem with this prompt is:\n{critique}\n\n"
      "Write one improved prompt that fixes this problem. Reply with the new prompt only.";
  t.paraphrase.system = "You rewrite instructions without changing their meaning.";
  t.paraphrase.user =
      "Generate a variation of the following instruction while keeping its semantic meaning.\n\n"
      "Input: {prompt}\n\nReply with the new instruction only.";
  return t;
}

RoleTemplates RoleTemplates::from_json_text(const std::string& text) {
  using nlohmann::json;
  RoleTemplates t = defaults();
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("role_templates", std::string("malformed JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("role_templates", "expected an object");
  for (auto& [role, body] : doc.items()) {
    RoleTemplate* target = role == "gradient"     ? &t.gradient
                           : role == "edit"       ? &t.edit
                           : role == "paraphrase" ? &t.paraphrase
                                                  : nullptr;
    if (!target) throw ConfigError("role_templates." + role, "unknown role");
    if (!body.is_object()) throw ConfigError("role_templates." + role, "expected an object");
    for (auto& [key, value] : body.items()) {
      if (!value.is_string()) throw ConfigError("role_templates." + role + "." + key, "expected a string");
      if (key == "system") target->system = value.get<std::string>();
      else if (key == "user") target->user = value.get<std::string>();
      else throw ConfigError("role_templates." + role + "." + key, "unknown key");
    }
  }
  return t;
}

RoleTemplates RoleTemplates::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("run.role_templates", "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

std::string render(const std::string& tmpl, const std::map<std::string, std::string>& slots) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      const auto close = tmpl.find('}', i + 1);
      if (close != std::string::npos) {
        auto it = slots.find(tmpl.substr(i + 1, close - i - 1));
        if (it != slots.end()) {
          out += it->second;
          i = close + 1;
          continue;
        }
      }
    }
    out.push_back(tmpl[i++]);
  }
  return out;
}

ErrorSet collect_errors(const Prompt& prompt, const std::vector<Example>& eval_batch, Scorer& scorer) {
  if (eval_batch.empty()) throw ContractError("evaluation batch is empty");
  const auto predicted = scorer.labels(prompt, eval_batch, 0);
  ErrorSet errors;
  errors.prompt_id = prompt.id();
  for (std::size_t i = 0; i < eval_batch.size(); ++i)
    if (predicted[i] != eval_batch[i].label) errors.items.push_back({eval_batch[i], predicted[i], eval_batch[i].label});
  return errors;
}

std::vector<std::size_t> stride_indices(std::size_t n_errors, int gradient_index, const ExpansionConfig& cfg) {
  std::vector<std::size_t> out;
  if (n_errors == 0) return out;
  const auto per = static_cast<std::size_t>(cfg.errors_per_gradient);
  const auto slots = static_cast<std::size_t>(cfg.n_gradients) * per;
  const std::size_t stride = std::max<std::size_t>(1, (n_errors + slots - 1) / slots);
  for (std::size_t j = 0; j < per && j < n_errors; ++j)
    out.push_back(((static_cast<std::size_t>(gradient_index) * per + j) * stride) % n_errors);
  return out;
}

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::vector<std::string> ids_of(const ErrorSet& errors, const std::vector<std::size_t>& indices) {
  std::vector<std::string> ids;
  for (auto i : indices) ids.push_back(errors.items[i].example.id);
  return ids;
}

std::vector<std::size_t> all_indices(const ErrorSet& errors) {
  std::vector<std::size_t> idx(errors.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  return idx;
}

}  // namespace

std::string format_errors(const ErrorSet& errors, const std::vector<std::size_t>& indices, int max_chars) {
  std::string out;
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const auto& item = errors.items.at(indices[k]);
    std::string text = item.example.text;
    if (text.size() > static_cast<std::size_t>(max_chars)) text = text.substr(0, static_cast<std::size_t>(max_chars)) + "...";
    out += "## Example " + std::to_string(k + 1) + "\nText: \"" + text + "\"\nLabel: " +
           std::to_string(item.truth) + "\nPrediction: " + std::to_string(item.predicted) + "\n";
  }
  return out;
}

std::vector<std::string> gradients(const Prompt& seed, const ErrorSet& errors, const ExpansionConfig& cfg,
                                   Scorer& scorer, const RoleTemplates& templates) {
  std::vector<std::string> critiques;
  if (errors.empty()) return critiques;
  int failures = 0;
  std::string last_failure;
  for (int g = 0; g < cfg.n_gradients; ++g) {
    const auto indices = stride_indices(errors.size(), g, cfg);
    const std::string block = format_errors(errors, indices, cfg.max_error_chars);
    CompletionRequest req;
    req.role = Role::gradient;
    req.system = templates.gradient.system;
    req.user = render(templates.gradient.user, {{"prompt", seed.text()}, {"errors", block}});
    req.subject_text = seed.text();
    req.error_ids = ids_of(errors, indices);
    req.sample_index = g;
    try {
      auto text = trim(scorer.complete(req));
      if (!text.empty()) critiques.push_back(std::move(text));
    } catch (const Error& e) {
      ++failures;
      last_failure = e.what();
    }
  }
  if (failures == cfg.n_gradients)
    throw ExpansionError("every gradient call failed for prompt " + seed.id() + ": " + last_failure);
  return critiques;
}

Prompt apply_edit(const Prompt& seed, const std::string& critique, const ErrorSet& errors, Scorer& scorer,
                  const RoleTemplates& templates, int sample_index, int max_error_chars) {
  if (trim(critique).empty()) throw ContractError("critique must be non-empty");
  const auto indices = all_indices(errors);
  CompletionRequest req;
  req.role = Role::edit;
  req.system = templates.edit.system;
  req.user = render(templates.edit.user, {{"prompt", seed.text()},
                                          {"errors", format_errors(errors, indices, max_error_chars)},
                                          {"critique", critique}});
  req.subject_text = seed.text();
  req.critique = critique;
  req.error_ids = ids_of(errors, indices);
  req.sample_index = sample_index;
  auto text = trim(scorer.complete(req));
  if (text.empty()) throw EditError("edit role returned an empty prompt");
  return Prompt(std::move(text), PromptOrigin::gradient_edit, seed.id());
}

std::vector<Prompt> mc_paraphrase(const Prompt& prompt, int count, Scorer& scorer, const RoleTemplates& templates) {
  if (count < 1) throw ContractError("paraphrase count must be >= 1");
  std::vector<Prompt> out;
  for (int j = 0; j < count; ++j) {
    CompletionRequest req;
    req.role = Role::paraphrase;
    req.system = templates.paraphrase.system;
    req.user = render(templates.paraphrase.user, {{"prompt", prompt.text()}});
    req.subject_text = prompt.text();
    req.sample_index = j;
    try {
      auto text = trim(scorer.complete(req));
      if (!text.empty()) out.emplace_back(std::move(text), PromptOrigin::mc_paraphrase, prompt.id());
    } catch (const Error&) {
      // Skipped; the remaining samples still count.
    }
  }
  return out;
}

ExpansionResult expand(const std::vector<Prompt>& seeds, const std::vector<Example>& eval_batch,
                       const ExpansionConfig& cfg, Scorer& scorer, const std::set<std::string>& excluded_ids,
                       const RoleTemplates& templates) {
  if (seeds.empty()) throw ContractError("expand needs at least one seed");
  ExpansionResult result;
  std::vector<Prompt> pool;

  for (const auto& seed : seeds) {
    const auto errors = collect_errors(seed, eval_batch, scorer);
    if (errors.empty()) {
      auto paraphrases = mc_paraphrase(seed, cfg.mc_per_edit, scorer, templates);
      pool.insert(pool.end(), paraphrases.begin(), paraphrases.end());
      continue;
    }
    std::vector<std::string> critiques;
    try {
      critiques = gradients(seed, errors, cfg, scorer, templates);
    } catch (const ExpansionError& e) {
      result.warnings.push_back(e.what());
      continue;
    }
    for (const auto& critique : critiques) {
      for (int step = 0; step < cfg.steps_per_gradient; ++step) {
        try {
          Prompt edited = apply_edit(seed, critique, errors, scorer, templates, step, cfg.max_error_chars);
          auto paraphrases = mc_paraphrase(edited, cfg.mc_per_edit, scorer, templates);
          pool.push_back(std::move(edited));
          pool.insert(pool.end(), paraphrases.begin(), paraphrases.end());
        } catch (const Error& e) {
          result.warnings.push_back(std::string("edit skipped: ") + e.what());
        }
      }
    }
  }

  result.generated = pool.size();
  std::set<std::string> seen = excluded_ids;
  for (const auto& s : seeds) seen.insert(s.id());
  for (auto& p : pool)
    if (seen.insert(p.id()).second) result.candidates.push_back(std::move(p));
  if (result.candidates.empty())
    throw ExpansionExhausted("expansion produced no new candidates from " + std::to_string(seeds.size()) + " seeds");
  return result;
}

}  // namespace promptbo
