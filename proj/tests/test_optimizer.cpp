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

#include <doctest.h>

#include <atomic>
#include <set>

#include "promptbo/error.hpp"
#include "promptbo/optimizer.hpp"
#include "promptbo/oracle_suite.hpp"
#include "promptbo/simulated_backend.hpp"
#include "support.hpp"

using namespace promptbo;

namespace {

Observation obs(const std::string& text, double accuracy, int round) {
  Observation o;
  o.prompt = Prompt(text);
  o.accuracy = accuracy;
  o.round = round;
  return o;
}

std::vector<std::string> texts(const std::vector<Prompt>& ps) {
  std::vector<std::string> out;
  for (const auto& p : ps) out.push_back(p.text());
  return out;
}

class CountdownBackend final : public Backend {
 public:
  CountdownBackend(const SimulatedOracle& o, int budget) : inner_(o), budget_(budget) {}

 protected:
  int do_classify(const Prompt& p, const Example& x) override {
    if (budget_.fetch_sub(1) <= 0) throw BackendError("quota exhausted");
    return inner_.classify(p, x);
  }
  std::string do_complete(const CompletionRequest& r) override { return inner_.complete(r); }

 private:
  SimulatedBackend inner_;
  std::atomic<int> budget_;
};

}  // namespace

TEST_CASE("seed pool update") {
  const std::vector<Observation> cache = {obs("a", 0.6, 0), obs("b", 0.8, 2), obs("c", 0.8, 1), obs("d", 0.7, 3),
                                          obs("e", 0.5, 0)};
  CHECK(texts(update_seeds(cache, 3, {})) == std::vector<std::string>{"c", "b", "d"});
  CHECK(texts(update_seeds(cache, 10, {})).size() == 5);
  CHECK(texts(update_seeds(cache, 2, {Prompt("c").id()})) == std::vector<std::string>{"b", "d"});

  std::set<std::string> all;
  for (const auto& o : cache) all.insert(o.prompt.id());
  CHECK(update_seeds(cache, 3, all).empty());

  // Same accuracy and round: smaller id first.
  const std::vector<Observation> tied = {obs("x", 0.5, 1), obs("y", 0.5, 1)};
  const auto first = update_seeds(tied, 1, {});
  CHECK(first[0].id() == std::min(Prompt("x").id(), Prompt("y").id()));
}

TEST_CASE("run config validation") {
  auto cfg = bench::standard_fixture().config(1);
  cfg.rounds = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = bench::standard_fixture().config(1);
  cfg.seeds.clear();
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = bench::standard_fixture().config(1);
  cfg.max_repeats = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("a perfect seed stays best and only paraphrases are proposed") {
  auto f = bench::standard_fixture();
  f.oracle.max_accuracy = 1.0;
  f.seeds = {"speaker evidence source history sarcasm numbers"};
  auto cfg = f.config(3);
  cfg.rounds = 1;
  const auto out = bench::run_simulated(f, cfg);
  const auto& t = out.trajectory;
  REQUIRE(t.rounds.size() == 1);
  CHECK(t.summary.best_eval_accuracy == 1.0);
  CHECK(t.summary.best_prompt_text == f.seeds[0]);
  for (const auto& c : t.rounds[0].candidates) CHECK(c.origin == PromptOrigin::mc_paraphrase);
}

TEST_CASE("property: run invariants over rng seeds") {
  const auto f = bench::standard_fixture();
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    auto cfg = f.config(seed);
    cfg.rounds = 5;
    EvalCache cache;
    const auto out = bench::run_simulated(f, cfg, &cache);
    const auto& t = out.trajectory;
    CHECK(t.summary.termination == Termination::completed);
    REQUIRE(t.rounds.size() == 5);

    double best = t.bootstrap.best_so_far;
    std::set<std::string> seen;
    for (const auto& s : t.bootstrap.seeds) seen.insert(s.prompt_id);
    std::size_t evaluated = t.bootstrap.seeds.size();
    for (const auto& r : t.rounds) {
      CHECK(r.best_so_far >= best);
      best = r.best_so_far;
      std::set<std::string> ids;
      for (const auto& c : r.candidates) {
        CHECK(ids.insert(c.prompt_id).second);
        CHECK_FALSE(seen.count(c.prompt_id));
        CHECK(c.std >= cfg.sigma_min);
      }
      REQUIRE(r.selected.size() == 1);
      CHECK(ids.count(r.selected[0].prompt_id));
      for (const auto& c : r.candidates)
        CHECK(testing::ranks_no_higher(c.score, c.mean, c.prompt_id, r.selected[0].score, r.selected[0].mean,
                                       r.selected[0].prompt_id));
      for (const auto& s : r.selected) seen.insert(s.prompt_id);
      evaluated += r.selected.size();
      CHECK(r.generated <= t.rounds.front().generated + 3 * 12);
      CHECK(r.kappa == doctest::Approx(kappa_schedule(r.round_index - 1, 5, cfg.acquisition)));
    }
    // Each evaluated prompt costs at most max_repeats eval passes and one control pass.
    const auto& part = f.partition;
    CHECK(t.summary.calls.eval <= evaluated * part.eval.size() * static_cast<std::size_t>(cfg.max_repeats));
    CHECK(t.summary.calls.control <= (evaluated + 5 * 12) * part.control.size());
    CHECK(cache.label_count() == out.calls.classify);
  }
}

TEST_CASE("determinism: identical trajectories for identical inputs") {
  const auto f = bench::standard_fixture();
  auto cfg = f.config(9);
  cfg.rounds = 4;
  const auto a = bench::run_simulated(f, cfg);
  auto serial = cfg;
  serial.exec = Exec::serial;
  const auto b = bench::run_simulated(f, serial);
  CHECK(a.jsonl == b.jsonl);
  auto other = f.config(10);
  other.rounds = 4;
  CHECK(bench::run_simulated(f, other).jsonl != a.jsonl);
}

TEST_CASE("cached replay makes no backend calls") {
  const auto f = bench::standard_fixture();
  auto cfg = f.config(2);
  cfg.rounds = 3;
  EvalCache cache;
  const auto first = bench::run_simulated(f, cfg, &cache);
  const auto size = cache.label_count();
  const auto second = bench::run_simulated(f, cfg, &cache);
  CHECK(second.calls.classify == 0);
  CHECK(second.calls.complete == 0);
  CHECK(cache.label_count() == size);
  CHECK(second.trajectory.summary.best_prompt_id == first.trajectory.summary.best_prompt_id);
}

TEST_CASE("fixed hyperparameters keep the kernel constant") {
  const auto f = bench::standard_fixture();
  auto cfg = f.config(4);
  cfg.rounds = 4;
  cfg.optimize_hypers = false;
  const auto t = bench::run_simulated(f, cfg).trajectory;
  for (const auto& r : t.rounds) {
    CHECK(r.params.length_scale == cfg.kernel_init.length_scale);
    CHECK(r.params.noise_variance == cfg.kernel_init.noise_variance);
  }
}

TEST_CASE("random policy selects among candidates") {
  const auto f = bench::standard_fixture();
  auto cfg = f.config(5);
  cfg.rounds = 3;
  cfg.policy = SelectionPolicy::random;
  const auto t = bench::run_simulated(f, cfg).trajectory;
  for (const auto& r : t.rounds) {
    std::set<std::string> ids;
    for (const auto& c : r.candidates) ids.insert(c.prompt_id);
    REQUIRE(r.selected.size() == 1);
    CHECK(ids.count(r.selected[0].prompt_id));
  }
}

TEST_CASE("backend failure ends the run with a recorded reason") {
  const auto f = bench::standard_fixture();
  auto cfg = f.config(6);
  cfg.rounds = 5;
  CountdownBackend backend(f.oracle, 900);
  EvalCache cache;
  const auto t = run(cfg, f.partition, backend, cache);
  CHECK(t.summary.termination == Termination::backend_failure);
  CHECK_FALSE(t.summary.reason.empty());
  CHECK(t.summary.rounds_completed == static_cast<int>(t.rounds.size()));
  CHECK(t.summary.rounds_completed < 5);
}

TEST_CASE("trajectory lines") {
  const auto f = bench::standard_fixture();
  auto cfg = f.config(7);
  cfg.rounds = 2;
  std::vector<nlohmann::json> streamed;
  RunHooks hooks;
  hooks.on_record = [&](const nlohmann::json& j) { streamed.push_back(j); };
  SimulatedOracle o = f.oracle;
  SimulatedBackend backend(o);
  EvalCache cache;
  const auto t = run(cfg, f.partition, backend, cache, hooks);
  REQUIRE(streamed.size() == 1 + 1 + 2 + 1);
  CHECK(streamed[0]["record"] == "header");
  CHECK(streamed[1]["record"] == "bootstrap");
  CHECK(streamed[2]["record"] == "round");
  CHECK(streamed[4]["record"] == "summary");
  CHECK(streamed[0]["partition_manifest_hash"] == manifest_hash(f.partition));
  std::string expected;
  for (const auto& j : streamed) expected += j.dump() + "\n";
  CHECK(to_jsonl(t) == expected);
  CHECK(streamed[4]["test_accuracy"].is_number());
}
