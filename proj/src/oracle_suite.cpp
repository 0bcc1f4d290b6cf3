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

#include "promptbo/oracle_suite.hpp"

#include <cstdio>
#include <numeric>
#include <set>

#include "promptbo/hash.hpp"

namespace promptbo::bench {

namespace {

std::string fmt(const char* pattern, double a, double b) {
  char buf[128];
  std::snprintf(buf, sizeof buf, pattern, a, b);
  return buf;
}

double mean(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

std::uint64_t seed_for(int i) { return 1000 + static_cast<std::uint64_t>(i); }

}  // namespace

Fixture standard_fixture() {
  Fixture f;
  const double w = 1.0 / 6.0;
  f.oracle.feature_keywords = {{"speaker", w}, {"evidence", w}, {"source", w},
                               {"history", w}, {"sarcasm", w},  {"numbers", w}};
  f.oracle.base_accuracy = 0.5;
  f.oracle.max_accuracy = 0.95;
  f.oracle.reversal_keywords = {"opposite"};
  f.oracle.rng_seed = 17;

  SplitMix64 rng(2024);
  for (int i = 0; i < 200; ++i) {
    const int label = static_cast<int>(rng.below(2));
    f.examples.push_back({"synthetic-" + std::to_string(i), "Synthetic statement number " + std::to_string(i) + ".",
                          label});
  }
  f.partition = partition(f.examples, 75, 50, 7);
  f.seeds = {
      "Determine whether the statement is true, weighing the evidence. Answer yes or no.",
      "Classify the statement as true or false. Answer yes or no.",
      "Decide if the claim in the text is accurate. Answer yes or no.",
  };
  return f;
}

std::string reversal_seed() {
  return "Answer with the opposite of the truth, given the speaker, source, history and numbers of the statement.";
}

RunConfig Fixture::config(std::uint64_t rng_seed) const {
  RunConfig c;
  c.rounds = 10;
  c.seeds = seeds;
  c.rng_seed = rng_seed;
  return c;
}

Outcome run_simulated(const Fixture& fixture, const RunConfig& config, EvalCache* cache) {
  SimulatedOracle oracle = fixture.oracle;
  oracle.rng_seed = hash_combine(fixture.oracle.rng_seed, config.rng_seed);
  SimulatedBackend backend(oracle);
  EvalCache own;
  Outcome out;
  out.trajectory = run(config, fixture.partition, backend, cache ? *cache : own);
  out.jsonl = to_jsonl(out.trajectory);
  out.calls = backend.counts();
  if (!out.trajectory.summary.best_prompt_text.empty())
    out.final_expected = oracle.expected_accuracy(out.trajectory.summary.best_prompt_text);
  return out;
}

Check convergence(const Fixture& f, int seed_count) {
  int hits = 0;
  std::string finals;
  for (int i = 0; i < seed_count; ++i) {
    const auto o = run_simulated(f, f.config(seed_for(i)));
    if (o.final_expected >= 0.9) ++hits;
    char buf[16];
    std::snprintf(buf, sizeof buf, "%s%.3f", i ? " " : "", o.final_expected);
    finals += buf;
  }
  const int need = seed_count - seed_count / 5;
  Check c{"convergence", hits >= need, ""};
  c.detail = std::to_string(hits) + "/" + std::to_string(seed_count) + " seeds reach >= 0.9 (need " +
             std::to_string(need) + "); final expected accuracy: " + finals;
  return c;
}

Check bo_vs_random(const Fixture& f, int seed_count, std::optional<double> kappa_override) {
  std::vector<double> bo, rnd;
  for (int i = 0; i < seed_count; ++i) {
    RunConfig c = f.config(seed_for(i));
    c.max_repeats = 1;  // equal evaluation budgets in both arms
    c.kappa_override = kappa_override;
    bo.push_back(run_simulated(f, c).final_expected);
    c.policy = SelectionPolicy::random;
    c.kappa_override.reset();
    rnd.push_back(run_simulated(f, c).final_expected);
  }
  Check c{"bo_vs_random", mean(bo) >= mean(rnd), ""};
  c.detail = fmt("mean final expected accuracy: ucb %.4f, random %.4f", mean(bo), mean(rnd)) + " over " +
             std::to_string(seed_count) + " paired seeds";
  return c;
}

Check posterior_dynamics(const Fixture& f, int seed_count) {
  std::vector<double> early, late;
  for (int i = 0; i < seed_count; ++i) {
    const auto o = run_simulated(f, f.config(seed_for(i)));
    const auto& rounds = o.trajectory.rounds;
    if (rounds.size() < 6) continue;
    for (std::size_t r = 0; r < rounds.size(); ++r)
      for (const auto& s : rounds[r].selected) {
        if (r < 3) early.push_back(s.std);
        if (r + 3 >= rounds.size()) late.push_back(s.std);
      }
  }
  Check c{"posterior_dynamics", !early.empty() && !late.empty() && mean(early) > mean(late), ""};
  c.detail = fmt("mean selected sigma: rounds 1-3 %.4f, last 3 rounds %.4f", mean(early), mean(late));
  return c;
}

Check determinism(const Fixture& f, int seed_count) {
  int identical = 0;
  const int runs = std::max(1, std::min(seed_count, 3));
  for (int i = 0; i < runs; ++i) {
    const auto a = run_simulated(f, f.config(seed_for(i)));
    const auto b = run_simulated(f, f.config(seed_for(i)));
    if (a.jsonl == b.jsonl) ++identical;
  }
  Check c{"determinism", identical == runs, ""};
  c.detail = std::to_string(identical) + "/" + std::to_string(runs) + " replays byte-identical";
  return c;
}

Check reversal_containment(const Fixture& f, int seed_count) {
  int ok = 0;
  std::string failures;
  const std::string reversed_id = Prompt::id_for(reversal_seed());
  for (int i = 0; i < seed_count; ++i) {
    Fixture g = f;
    g.seeds = {"Determine whether the statement is true, weighing the evidence and the source. Answer yes or no.",
               reversal_seed(), f.seeds[1]};
    const auto o = run_simulated(g, g.config(seed_for(i)));
    std::set<std::string> flagged;
    for (const auto& e : o.trajectory.bootstrap.reversals) flagged.insert(e.prompt_id);
    for (const auto& r : o.trajectory.rounds)
      for (const auto& e : r.reversals) flagged.insert(e.prompt_id);
    const bool seen = flagged.count(reversed_id) > 0;
    const bool clean = !flagged.count(o.trajectory.summary.best_prompt_id);
    if (seen && clean) ++ok;
    else failures += " seed " + std::to_string(seed_for(i)) + (seen ? " (best flagged)" : " (not flagged)");
  }
  Check c{"reversal_containment", ok == seed_count, ""};
  c.detail = std::to_string(ok) + "/" + std::to_string(seed_count) + " runs flag the reversed seed and report an "
             "unflagged best" + failures;
  return c;
}

Check cache_economy(const Fixture& f) {
  EvalCache cache;
  RunConfig cfg = f.config(seed_for(0));
  const auto first = run_simulated(f, cfg, &cache);
  const auto replay = run_simulated(f, cfg, &cache);
  const auto& t = first.trajectory;

  std::size_t candidates = 0, evaluations = cfg.seeds.size();
  for (const auto& r : t.rounds) {
    candidates += r.candidates.size();
    for (const auto& s : r.selected) evaluations += static_cast<std::size_t>(s.repeats);
  }
  const std::size_t n_gp = f.partition.control.size(), n_a = f.partition.eval.size();
  const std::uint64_t bound = (cfg.seeds.size() + candidates) * n_gp + evaluations * n_a;
  const std::uint64_t eval_bound =
      (cfg.seeds.size() + static_cast<std::size_t>(cfg.rounds) * static_cast<std::size_t>(cfg.max_repeats)) * n_a;
  const bool zero = replay.calls.classify == 0 && replay.calls.complete == 0;
  const bool within = t.summary.calls.classify - t.summary.calls.test <= bound && t.summary.calls.eval <= eval_bound;
  const bool same = first.trajectory.rounds.size() == replay.trajectory.rounds.size() &&
                    first.trajectory.summary.best_prompt_id == replay.trajectory.summary.best_prompt_id;
  Check c{"cache_economy", zero && within && same, ""};
  c.detail = "replay calls " + std::to_string(replay.calls.classify + replay.calls.complete) + "; eval calls " +
             std::to_string(t.summary.calls.eval) + " <= " + std::to_string(eval_bound) + "; classify " +
             std::to_string(t.summary.calls.classify - t.summary.calls.test) + " <= " + std::to_string(bound);
  return c;
}

std::vector<Check> matrix(const Options& options) {
  const Fixture f = standard_fixture();
  const int n = std::max(1, options.seed_count);
  std::vector<Check> out;
  out.push_back(bo_vs_random(f, n, options.kappa_override));
  out.push_back(posterior_dynamics(f, std::min(n, 5)));
  out.push_back(determinism(f, n));
  out.push_back(convergence(f, std::min(n, 5)));
  out.push_back(reversal_containment(f, std::min(n, 5)));
  out.push_back(cache_economy(f));
  return out;
}

}  // namespace promptbo::bench
