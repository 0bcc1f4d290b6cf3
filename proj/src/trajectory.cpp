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

#include "promptbo/optimizer.hpp"

namespace promptbo {

using nlohmann::json;

namespace {

json calls_json(const CallTotals& c) {
  return {{"classify", c.classify}, {"complete", c.complete}, {"control", c.control},
          {"eval", c.eval},         {"test", c.test}};
}

json selected_json(const SelectedRecord& s) {
  return {{"prompt_id", s.prompt_id},
          {"text", s.text},
          {"origin", to_string(s.origin)},
          {"parent_id", s.parent_id},
          {"mu", s.mean},
          {"sigma", s.std},
          {"acquisition", s.score},
          {"measured_accuracy", s.measured_accuracy},
          {"repeats", s.repeats},
          {"control_accuracy", s.control_accuracy},
          {"flagged", s.flagged}};
}

json reversal_json(const ReversalEvent& e) {
  return {{"round", e.round},
          {"prompt_id", e.prompt_id},
          {"text", e.text},
          {"eval_accuracy", e.eval_accuracy},
          {"control_accuracy", e.stats.accuracy},
          {"flipped_accuracy", e.stats.flipped_accuracy},
          {"disagreement", e.stats.disagreement}};
}

template <typename T, typename F>
json array_of(const std::vector<T>& items, F&& f) {
  json arr = json::array();
  for (const auto& item : items) arr.push_back(f(item));
  return arr;
}

const char* kind_name(AcquisitionKind k) { return k == AcquisitionKind::ucb ? "ucb" : "ei"; }

}  // namespace

json header_json(const Trajectory& t) {
  return {{"record", "header"},
          {"format", "promptbo-trajectory"},
          {"version", 1},
          {"config", t.config},
          {"partition_manifest_hash", t.partition_hash}};
}

json to_json(const BootstrapRecord& r) {
  return {{"record", "bootstrap"},
          {"round", 0},
          {"reference_id", r.reference_id},
          {"seeds", array_of(r.seeds, selected_json)},
          {"best_so_far", r.best_so_far},
          {"seed_pool", r.seed_pool},
          {"reversals", array_of(r.reversals, reversal_json)},
          {"calls", calls_json(r.calls)}};
}

json to_json(const RoundRecord& r) {
  json candidates = array_of(r.candidates, [](const CandidateRecord& c) {
    return json{{"prompt_id", c.prompt_id}, {"text", c.text},     {"origin", to_string(c.origin)},
                {"parent_id", c.parent_id}, {"prior_mean", c.prior_mean}, {"mu", c.mean},
                {"sigma", c.std},           {"variance", c.variance},     {"acquisition", c.score}};
  });
  return {{"record", "round"},
          {"round", r.round_index},
          {"kappa", r.kappa},
          {"length_scale", r.params.length_scale},
          {"noise_variance", r.params.noise_variance},
          {"lml", r.lml},
          {"generated", r.generated},
          {"candidates", std::move(candidates)},
          {"selected", array_of(r.selected, selected_json)},
          {"repeat_triggered", r.repeat_triggered},
          {"best_so_far", r.best_so_far},
          {"best_prompt_id", r.best_prompt_id},
          {"seed_pool_after", r.seed_pool_after},
          {"seed_fallback", r.seed_fallback},
          {"reversals", array_of(r.reversals, reversal_json)},
          {"warnings", r.warnings},
          {"calls", calls_json(r.calls)}};
}

json to_json(const Summary& s) {
  json out = {{"record", "summary"},
              {"termination", to_string(s.termination)},
              {"reason", s.reason},
              {"rounds_completed", s.rounds_completed},
              {"best_prompt_id", s.best_prompt_id},
              {"best_prompt_text", s.best_prompt_text},
              {"best_eval_accuracy", s.best_eval_accuracy},
              {"test_accuracy", nullptr},
              {"calls", calls_json(s.calls)},
              {"cache_hits", s.cache_hits},
              {"cache_misses", s.cache_misses}};
  if (s.test_accuracy) out["test_accuracy"] = *s.test_accuracy;
  return out;
}

json to_json(const RunConfig& c) {
  json out = {
      {"rounds", c.rounds},
      {"seeds", c.seeds},
      {"acquisition",
       {{"kind", kind_name(c.acquisition.kind)},
        {"kappa_start", c.acquisition.kappa_start},
        {"kappa_end", c.acquisition.kappa_end},
        {"xi", c.acquisition.xi},
        {"batch_m", c.acquisition.batch_m}}},
      {"expansion",
       {{"n_gradients", c.expansion.n_gradients},
        {"steps_per_gradient", c.expansion.steps_per_gradient},
        {"mc_per_edit", c.expansion.mc_per_edit},
        {"n_seeds", c.expansion.n_seeds},
        {"errors_per_gradient", c.expansion.errors_per_gradient},
        {"max_error_chars", c.expansion.max_error_chars}}},
      {"kernel_init", {{"length_scale", c.kernel_init.length_scale}, {"noise_variance", c.kernel_init.noise_variance}}},
      {"sigma_min", c.sigma_min},
      {"repeat_margin", c.repeat_margin},
      {"max_repeats", c.max_repeats},
      {"optimize_hypers", c.optimize_hypers},
      {"hyperopt", {{"steps", c.hyperopt.steps}, {"learning_rate", c.hyperopt.learning_rate}}},
      {"reversal_threshold", c.reversal_threshold},
      {"rng_seed", c.rng_seed},
      {"policy", c.policy == SelectionPolicy::acquisition ? "acquisition" : "random"}};
  if (c.kappa_override) out["kappa_override"] = *c.kappa_override;
  return out;
}

std::string to_jsonl(const Trajectory& t) {
  std::string out = header_json(t).dump() + "\n";
  out += to_json(t.bootstrap).dump() + "\n";
  for (const auto& r : t.rounds) out += to_json(r).dump() + "\n";
  out += to_json(t.summary).dump() + "\n";
  return out;
}

}  // namespace promptbo
