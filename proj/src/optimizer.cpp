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

#include <algorithm>
#include <limits>
#include <map>

#include "promptbo/error.hpp"
#include "promptbo/hash.hpp"

namespace promptbo {

void RunConfig::validate() const {
  if (rounds < 1) throw ConfigError("run.rounds", "must be >= 1");
  if (seeds.empty()) throw ConfigError("run.seeds", "at least one seed prompt is required");
  for (std::size_t i = 0; i < seeds.size(); ++i)
    if (seeds[i].empty()) throw ConfigError("run.seeds[" + std::to_string(i) + "]", "empty prompt");
  acquisition.validate();
  expansion.validate();
  try {
    kernel_init.validate();
  } catch (const ContractError& e) {
    throw ConfigError("run.kernel_init", e.what());
  }
  if (sigma_min < 0.0) throw ConfigError("run.sigma_min", "must be >= 0");
  if (repeat_margin < 0.0) throw ConfigError("run.repeat_margin", "must be >= 0");
  if (max_repeats < 1) throw ConfigError("run.max_repeats", "must be >= 1");
  if (hyperopt.steps < 0) throw ConfigError("run.hyperopt.steps", "must be >= 0");
  if (!(hyperopt.learning_rate > 0.0)) throw ConfigError("run.hyperopt.learning_rate", "must be > 0");
}

std::vector<Prompt> update_seeds(const std::vector<Observation>& cache, int n_seeds,
                                 const std::set<std::string>& flagged) {
  std::vector<const Observation*> eligible;
  for (const auto& o : cache)
    if (!flagged.count(o.prompt.id())) eligible.push_back(&o);
  std::stable_sort(eligible.begin(), eligible.end(), [](const Observation* a, const Observation* b) {
    if (a->accuracy != b->accuracy) return a->accuracy > b->accuracy;
    if (a->round != b->round) return a->round < b->round;
    return a->prompt.id() < b->prompt.id();
  });
  std::vector<Prompt> out;
  std::set<std::string> taken;
  for (const auto* o : eligible) {
    if (static_cast<int>(out.size()) >= n_seeds) break;
    if (taken.insert(o->prompt.id()).second) out.push_back(o->prompt);
  }
  return out;
}

namespace {

class Loop {
 public:
  Loop(const RunConfig& config, const Partition& partition, Backend& backend, EvalCache& cache,
       const RunHooks& hooks)
      : cfg_(config),
        part_(partition),
        backend_(backend),
        cache_(cache),
        hooks_(hooks),
        scorer_(backend, cache, config.exec),
        start_counts_(backend.counts()),
        params_(config.kernel_init) {}

  Trajectory run();

 private:
  void emit(const nlohmann::json& record) {
    if (hooks_.on_record) hooks_.on_record(record);
  }

  CallTotals totals() const {
    const auto now = backend_.counts();
    CallTotals t;
    t.classify = now.classify - start_counts_.classify;
    t.complete = now.complete - start_counts_.complete;
    t.control = scorer_.calls_on(part_.control);
    t.eval = scorer_.calls_on(part_.eval);
    t.test = part_.test.empty() ? 0 : scorer_.calls_on(part_.test);
    return t;
  }

  double best_so_far() const {
    double best = 0.0;
    for (const auto& o : observations_)
      if (!flagged_.count(o.prompt.id())) best = std::max(best, o.accuracy);
    return best;
  }

  const Observation* best_observation() const {
    const auto top = update_seeds(observations_, 1, flagged_);
    if (top.empty()) return nullptr;
    for (const auto& o : observations_)
      if (o.prompt.id() == top.front().id()) return &o;
    return nullptr;
  }

  double best_raw_accuracy() const {
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& o : observations_) best = std::max(best, o.accuracy);
    return best;
  }

  SelectedRecord measure(const Prompt& prompt, int repeats, int round, Observation& out_obs);
  void refresh_seed_pool(bool& fallback);
  FittedSurrogate fit_surrogate(double& lml);
  std::vector<Prompt> candidates_for_round(RoundRecord& record);
  void finish(Trajectory& t);

  const RunConfig& cfg_;
  const Partition& part_;
  Backend& backend_;
  EvalCache& cache_;
  const RunHooks& hooks_;
  Scorer scorer_;
  CallCounts start_counts_;

  KernelParams params_;
  std::optional<FittedSurrogate> incremental_;
  std::vector<Observation> observations_;
  std::set<std::string> observed_ids_;
  std::set<std::string> flagged_;
  std::set<std::string> seed_history_;
  std::vector<Prompt> initial_seeds_;
  std::vector<Prompt> seed_pool_;
  std::optional<PredictionVector> reference_;
};

SelectedRecord Loop::measure(const Prompt& prompt, int repeats, int round, Observation& obs) {
  obs.prompt = prompt;
  obs.round = round;
  obs.n_repeats = repeats;
  obs.accuracy = scorer_.accuracy(prompt, part_.eval, repeats);
  obs.prediction_vector = scorer_.predict_vector(prompt, part_.control);

  SelectedRecord rec;
  rec.prompt_id = prompt.id();
  rec.text = prompt.text();
  rec.origin = prompt.origin();
  rec.parent_id = prompt.parent_id().value_or("");
  rec.measured_accuracy = obs.accuracy;
  rec.repeats = repeats;
  rec.control_accuracy = obs.prediction_vector.mean();
  return rec;
}

void Loop::refresh_seed_pool(bool& fallback) {
  seed_pool_ = update_seeds(observations_, cfg_.expansion.n_seeds, flagged_);
  fallback = seed_pool_.empty();
  if (fallback) seed_pool_ = initial_seeds_;
  for (const auto& s : seed_pool_) seed_history_.insert(s.id());
}

FittedSurrogate Loop::fit_surrogate(double& lml) {
  if (cfg_.optimize_hypers) {
    if (observations_.size() >= 2) {
      try {
        params_ = optimize_hyperparams(observations_, params_, cfg_.hyperopt);
      } catch (const OptimizationError& e) {
        params_ = e.last_good();
      }
    }
    lml = log_marginal_likelihood(observations_, params_);
    return fit(observations_, params_, cfg_.exec);
  }
  // Fixed hyperparameters: extend the previous factorization.
  if (!incremental_) {
    incremental_ = fit(observations_, params_, cfg_.exec);
  } else {
    for (std::size_t i = incremental_->size(); i < observations_.size(); ++i) {
      try {
        incremental_ = rank_one_update(*incremental_, observations_[i], params_);
      } catch (const NumericalError&) {
        incremental_ = fit(observations_, params_, cfg_.exec);
        break;
      }
    }
  }
  lml = log_marginal_likelihood(observations_, params_);
  return *incremental_;
}

std::vector<Prompt> Loop::candidates_for_round(RoundRecord& record) {
  std::set<std::string> excluded = seed_history_;
  excluded.insert(observed_ids_.begin(), observed_ids_.end());
  try {
    auto result = expand(seed_pool_, part_.eval, cfg_.expansion, scorer_, excluded, hooks_.templates);
    record.generated = result.generated;
    record.warnings = std::move(result.warnings);
    return std::move(result.candidates);
  } catch (const ExpansionExhausted& e) {
    record.warnings.push_back(std::string(e.what()) + "; paraphrasing the best seed");
  }
  std::vector<Prompt> fallback;
  for (auto& p : mc_paraphrase(seed_pool_.front(), cfg_.expansion.mc_per_edit, scorer_, hooks_.templates)) {
    if (!excluded.count(p.id())) {
      excluded.insert(p.id());
      fallback.push_back(std::move(p));
    }
  }
  record.generated = fallback.size();
  return fallback;
}

Trajectory Loop::run() {
  cfg_.validate();
  if (part_.control.empty() || part_.eval.empty())
    throw ContractError("control and evaluation batches must be non-empty");

  Trajectory t;
  t.config = hooks_.config_snapshot ? *hooks_.config_snapshot : to_json(cfg_);
  t.partition_hash = manifest_hash(part_);
  emit(header_json(t));

  try {
    // Round 0: measure every initial seed.
    for (const auto& text : cfg_.seeds) {
      Prompt p(text, PromptOrigin::seed);
      if (observed_ids_.count(p.id())) continue;
      Observation obs;
      auto rec = measure(p, 1, 0, obs);
      if (!reference_) {
        reference_ = obs.prediction_vector;
        t.bootstrap.reference_id = p.id();
      }
      const auto stats = reversal_stats(obs.prediction_vector, *reference_);
      rec.flagged = detect_label_reversal(obs.prediction_vector, *reference_, cfg_.reversal_threshold);
      if (rec.flagged) {
        flagged_.insert(p.id());
        t.bootstrap.reversals.push_back({0, p.id(), p.text(), obs.accuracy, stats});
      }
      initial_seeds_.push_back(p);
      observed_ids_.insert(p.id());
      observations_.push_back(std::move(obs));
      t.bootstrap.seeds.push_back(std::move(rec));
    }
    bool fallback = false;
    refresh_seed_pool(fallback);
    t.bootstrap.best_so_far = best_so_far();
    for (const auto& s : seed_pool_) t.bootstrap.seed_pool.push_back(s.id());
    t.bootstrap.calls = totals();
    emit(to_json(t.bootstrap));

    for (int round = 1; round <= cfg_.rounds; ++round) {
      RoundRecord rec;
      rec.round_index = round;
      rec.kappa = cfg_.kappa_override ? *cfg_.kappa_override
                                      : kappa_schedule(round - 1, cfg_.rounds, cfg_.acquisition);

      const auto fitted = fit_surrogate(rec.lml);
      rec.params = params_;

      auto prompts = candidates_for_round(rec);
      if (prompts.empty()) {
        t.summary.termination = Termination::expansion_exhausted;
        t.summary.reason = "round " + std::to_string(round) + ": no new candidates after fallback paraphrasing";
        break;
      }

      std::vector<PredictionVector> vectors;
      vectors.reserve(prompts.size());
      for (const auto& p : prompts) vectors.push_back(scorer_.predict_vector(p, part_.control));
      const auto posteriors = fitted.posterior_batch(vectors, cfg_.sigma_min, cfg_.exec);

      std::vector<Candidate> candidates;
      candidates.reserve(prompts.size());
      for (std::size_t i = 0; i < prompts.size(); ++i) candidates.push_back({prompts[i], posteriors[i]});
      const double f_star = best_raw_accuracy();
      const auto scored = score_candidates(candidates, cfg_.acquisition, rec.kappa, f_star);
      auto ranked = scored;
      std::stable_sort(ranked.begin(), ranked.end(), ranks_before);

      std::map<std::string, std::size_t> index_of;
      for (std::size_t i = 0; i < prompts.size(); ++i) {
        index_of[prompts[i].id()] = i;
        CandidateRecord c;
        c.prompt_id = prompts[i].id();
        c.text = prompts[i].text();
        c.origin = prompts[i].origin();
        c.parent_id = prompts[i].parent_id().value_or("");
        c.prior_mean = vectors[i].mean();
        c.mean = posteriors[i].mean;
        c.std = posteriors[i].std;
        c.variance = posteriors[i].variance;
        c.score = scored[i].score;
        rec.candidates.push_back(std::move(c));
      }

      const auto batch = std::min<std::size_t>(static_cast<std::size_t>(cfg_.acquisition.batch_m), prompts.size());
      std::vector<std::size_t> chosen;
      int repeats = 1;
      if (cfg_.policy == SelectionPolicy::random) {
        std::vector<std::size_t> pool(prompts.size());
        for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = i;
        SplitMix64 rng(hash_combine(mix64(cfg_.rng_seed), static_cast<std::uint64_t>(round)));
        for (std::size_t i = 0; i < batch; ++i) {
          const auto j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
          std::swap(pool[i], pool[j]);
          chosen.push_back(pool[i]);
        }
      } else {
        for (std::size_t i = 0; i < batch; ++i) chosen.push_back(index_of.at(ranked[i].prompt.id()));
        if (ranked.size() >= 2 && ranked[0].score - ranked[1].score < cfg_.repeat_margin) {
          repeats = cfg_.max_repeats;
          rec.repeat_triggered = repeats > 1;
        }
      }

      for (auto i : chosen) {
        Observation obs;
        auto sel = measure(prompts[i], repeats, round, obs);
        sel.mean = posteriors[i].mean;
        sel.std = posteriors[i].std;
        sel.score = scored[i].score;
        const auto stats = reversal_stats(obs.prediction_vector, *reference_);
        sel.flagged = detect_label_reversal(obs.prediction_vector, *reference_, cfg_.reversal_threshold);
        if (sel.flagged) {
          flagged_.insert(obs.prompt.id());
          rec.reversals.push_back({round, obs.prompt.id(), obs.prompt.text(), obs.accuracy, stats});
        }
        observed_ids_.insert(obs.prompt.id());
        observations_.push_back(std::move(obs));
        rec.selected.push_back(std::move(sel));
      }

      refresh_seed_pool(rec.seed_fallback);
      if (rec.seed_fallback) rec.warnings.push_back("every cached prompt is flagged; reverting to initial seeds");
      for (const auto& s : seed_pool_) rec.seed_pool_after.push_back(s.id());
      rec.best_so_far = best_so_far();
      if (const auto* best = best_observation()) rec.best_prompt_id = best->prompt.id();
      rec.calls = totals();

      if (hooks_.on_surrogate) {
        const auto [ev_min, ev_max] = fitted.eigenvalue_range();
        nlohmann::json diag = {{"round", round},
                               {"n_observations", fitted.size()},
                               {"kernel_eigenvalue_min", ev_min},
                               {"kernel_eigenvalue_max", ev_max},
                               {"length_scale", params_.length_scale},
                               {"noise_variance", params_.noise_variance},
                               {"jitter", fitted.jitter()},
                               {"lml", rec.lml}};
        nlohmann::json cands = nlohmann::json::array();
        for (const auto& c : rec.candidates)
          cands.push_back({{"prompt_id", c.prompt_id}, {"mu", c.mean}, {"sigma", c.std}, {"acquisition", c.score}});
        diag["candidates"] = std::move(cands);
        hooks_.on_surrogate(diag);
      }

      emit(to_json(rec));
      t.rounds.push_back(std::move(rec));
      t.summary.rounds_completed = round;
    }
  } catch (const BackendError& e) {
    t.summary.termination = Termination::backend_failure;
    t.summary.reason = e.what();
  } catch (const EvaluationError& e) {
    t.summary.termination = Termination::backend_failure;
    t.summary.reason = e.what();
  }

  finish(t);
  return t;
}

void Loop::finish(Trajectory& t) {
  if (const auto* best = best_observation()) {
    t.summary.best_prompt_id = best->prompt.id();
    t.summary.best_prompt_text = best->prompt.text();
    t.summary.best_eval_accuracy = best->accuracy;
    if (!part_.test.empty() && t.summary.termination != Termination::backend_failure) {
      try {
        t.summary.test_accuracy = scorer_.accuracy(best->prompt, part_.test, 1);
      } catch (const Error& e) {
        t.summary.termination = Termination::backend_failure;
        t.summary.reason = std::string("test evaluation: ") + e.what();
      }
    }
  }
  t.summary.calls = totals();
  t.summary.cache_hits = cache_.hits();
  t.summary.cache_misses = cache_.misses();
  emit(to_json(t.summary));
}

}  // namespace

const char* to_string(Termination t) {
  switch (t) {
    case Termination::completed: return "completed";
    case Termination::expansion_exhausted: return "expansion_exhausted";
    case Termination::backend_failure: return "backend_failure";
  }
  return "completed";
}

Trajectory run(const RunConfig& config, const Partition& partition, Backend& backend, EvalCache& cache,
               const RunHooks& hooks) {
  Loop loop(config, partition, backend, cache, hooks);
  return loop.run();
}

}  // namespace promptbo
