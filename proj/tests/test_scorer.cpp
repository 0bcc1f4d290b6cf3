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

#include <cstdio>
#include <filesystem>
#include <functional>
#include <set>
#include <sstream>
#include <tuple>

#include "promptbo/error.hpp"
#include "promptbo/hash.hpp"
#include "promptbo/scorer.hpp"
#include "promptbo/simulated_backend.hpp"
#include "support.hpp"

using namespace promptbo;

namespace {

class ScriptedBackend final : public Backend {
 public:
  std::function<int(const Prompt&, const Example&)> on_classify = [](const Prompt&, const Example& x) {
    return x.label;
  };
  std::function<std::string(const CompletionRequest&)> on_complete = [](const CompletionRequest& r) {
    return "echo " + r.user;
  };

 protected:
  int do_classify(const Prompt& p, const Example& x) override { return on_classify(p, x); }
  std::string do_complete(const CompletionRequest& r) override { return on_complete(r); }
};

std::vector<Example> batch(std::size_t n, const std::string& prefix = "x") {
  std::vector<Example> xs;
  for (std::size_t i = 0; i < n; ++i) xs.push_back({prefix + std::to_string(i), "text", static_cast<int>(i % 2)});
  return xs;
}

SimulatedOracle perfect_oracle() {
  SimulatedOracle o;
  o.feature_keywords = {{"evidence", 1.0}};
  o.base_accuracy = 0.5;
  o.max_accuracy = 1.0;
  return o;
}

}  // namespace

TEST_CASE("perfect prompt gives an all-ones vector") {
  SimulatedBackend b(perfect_oracle());
  EvalCache cache;
  Scorer s(b, cache);
  const Prompt p("weigh the evidence");
  const auto control = batch(75);
  const auto v = s.predict_vector(p, control);
  CHECK(v.bits.count() == 75);
  CHECK(v.mean() == 1.0);
  CHECK(s.accuracy(p, batch(50, "e")) == 1.0);
  const auto calls = b.counts().classify;
  CHECK(s.predict_vector(p, control).bits == v.bits);
  CHECK(b.counts().classify == calls);
}

TEST_CASE("searched oracle seed gives alternating bits") {
  const auto control = batch(8, "c");
  SimulatedOracle o;
  o.feature_keywords = {{"evidence", 0.5}};
  o.base_accuracy = 0.0;
  o.max_accuracy = 1.0;
  const Prompt p("weigh the evidence");
  bool found = false;
  for (std::uint64_t seed = 0; seed < 100000 && !found; ++seed) {
    o.rng_seed = seed;
    SimulatedBackend b(o);
    found = true;
    for (std::size_t i = 0; i < control.size() && found; ++i)
      found = (b.draw(p.id(), control[i].id) < 0.5) == (i % 2 == 0);
  }
  REQUIRE(found);
  SimulatedBackend b(o);
  EvalCache cache;
  Scorer s(b, cache);
  const auto v = s.predict_vector(p, control);
  for (std::size_t i = 0; i < control.size(); ++i) CHECK(v.bits.get(i) == (i % 2 == 0));
  CHECK(v.mean() == 0.5);
}

TEST_CASE("accuracy counts and repeats") {
  ScriptedBackend b;
  b.on_classify = [](const Prompt&, const Example& x) {
    return std::stoi(x.id.substr(1)) < 29 ? x.label : 1 - x.label;
  };
  EvalCache cache;
  Scorer s(b, cache);
  const auto xs = batch(50);
  CHECK(s.accuracy(Prompt("p"), xs) == doctest::Approx(0.58));
  CHECK(s.accuracy(Prompt("p"), xs, 3) == doctest::Approx(0.58));
  CHECK(b.counts().classify == 150);
  CHECK(cache.repeats(Prompt("p").id(), xs) == 3);

  SimulatedBackend sim(perfect_oracle());
  EvalCache c2;
  Scorer s2(sim, c2);
  const Prompt q("plain prompt");
  CHECK(s2.accuracy(q, xs, 3) == s2.accuracy(q, xs, 1));
}

TEST_CASE("backend failure names the example and keeps partial labels") {
  ScriptedBackend b;
  b.on_classify = [](const Prompt&, const Example& x) {
    if (x.id == "x5") throw BackendError("boom");
    return x.label;
  };
  EvalCache cache;
  Scorer s(b, cache, Exec::serial);
  const auto xs = batch(10);
  try {
    s.labels(Prompt("p"), xs);
    FAIL("expected EvaluationError");
  } catch (const EvaluationError& e) {
    CHECK(e.example_id() == "x5");
  }
  CHECK(cache.label(Prompt("p").id(), "x4", 0).has_value());
  CHECK_FALSE(cache.label(Prompt("p").id(), "x5", 0).has_value());
}

TEST_CASE("property: backend calls equal distinct triples") {
  SplitMix64 rng(4);
  for (const Exec exec : {Exec::serial, Exec::parallel}) {
    ScriptedBackend b;
    EvalCache cache;
    Scorer s(b, cache, exec);
    std::set<std::tuple<std::string, std::string, int>> triples;
    const auto a = batch(20, "a"), c = batch(30, "c");
    for (int step = 0; step < 60; ++step) {
      const Prompt p("prompt " + std::to_string(rng.below(6)));
      const auto& xs = rng.below(2) ? a : c;
      const int repeats = 1 + static_cast<int>(rng.below(3));
      s.accuracy(p, xs, repeats);
      for (int r = 0; r < repeats; ++r)
        for (const auto& x : xs) triples.insert({p.id(), x.id, r});
      CHECK(b.counts().classify == triples.size());
    }
  }
}

TEST_CASE("serial and parallel scoring agree") {
  SimulatedOracle o = perfect_oracle();
  o.max_accuracy = 0.8;
  SimulatedBackend b1(o), b2(o);
  EvalCache c1, c2;
  Scorer serial(b1, c1, Exec::serial), parallel(b2, c2, Exec::parallel, 4);
  const auto xs = batch(200);
  for (int i = 0; i < 5; ++i) {
    const Prompt p("prompt " + std::to_string(i) + " evidence");
    CHECK(serial.labels(p, xs) == parallel.labels(p, xs));
  }
}

TEST_CASE("cache file warm start issues no backend calls") {
  const auto path = std::filesystem::temp_directory_path() / "promptbo_cache_test.jsonl";
  std::filesystem::remove(path);
  const auto xs = batch(12);
  CompletionRequest req;
  req.role = Role::paraphrase;
  req.subject_text = "a";
  {
    ScriptedBackend b;
    EvalCache cache;
    cache.attach(path.string());
    Scorer s(b, cache);
    s.accuracy(Prompt("p"), xs, 2);
    s.complete(req);
  }
  ScriptedBackend b;
  EvalCache cache;
  cache.load_file(path.string());
  Scorer s(b, cache);
  CHECK(s.accuracy(Prompt("p"), xs, 2) == 1.0);
  CHECK(s.complete(req) == "echo ");
  CHECK(b.counts().classify == 0);
  CHECK(b.counts().complete == 0);
  std::filesystem::remove(path);

  std::istringstream corrupt("{\"kind\": \"labels\"\n");
  EvalCache bad;
  CHECK_THROWS_AS(bad.load(corrupt), ParseError);
}

TEST_CASE("reversal detection") {
  using testing::make_vector;
  std::vector<std::uint8_t> truth_like(20, 1);
  const auto reference = make_vector(truth_like, "ref");
  const auto complement = make_vector(std::vector<std::uint8_t>(20, 0), "rev");
  CHECK(detect_label_reversal(complement, reference));
  CHECK_FALSE(detect_label_reversal(reference, reference));

  // acc 8/20, flipped 12/20, disagreement 13/20.
  PredictionVector cand = make_vector({1, 1, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0}, "c");
  PredictionVector ref = make_vector(std::vector<std::uint8_t>(20, 0), "r");
  ref.predicted_labels = {1, 1, 1, 1, 1, 0, 0, 0, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 0, 0};
  std::size_t disagree = 0;
  for (std::size_t i = 0; i < 20; ++i) disagree += cand.predicted_labels[i] != ref.predicted_labels[i];
  REQUIRE(disagree == 13);
  const auto stats = reversal_stats(cand, ref);
  CHECK(stats.accuracy == doctest::Approx(0.40));
  CHECK(stats.flipped_accuracy == doctest::Approx(0.60));
  CHECK(stats.disagreement == doctest::Approx(0.65));
  CHECK(detect_label_reversal(cand, ref, 0.15));
  CHECK_FALSE(detect_label_reversal(cand, ref, 0.25));

  CHECK_THROWS_AS(detect_label_reversal(make_vector({1, 0}), reference), ContractError);
}

TEST_CASE("property: full-quality reversal prompt is flagged against a good reference") {
  SimulatedOracle o = perfect_oracle();
  o.feature_keywords = {{"evidence", 0.5}, {"source", 0.5}};
  o.max_accuracy = 1.0;
  o.reversal_keywords = {"opposite"};
  const auto control = batch(75);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    o.rng_seed = seed;
    SimulatedBackend b(o);
    EvalCache cache;
    Scorer s(b, cache);
    const auto ref = s.predict_vector(Prompt("weigh the evidence"), control);
    const auto rev = s.predict_vector(Prompt("say the opposite; evidence and source"), control);
    if (ref.mean() > 0.5 + 0.15) CHECK(detect_label_reversal(rev, ref, 0.15));
  }
}

TEST_CASE("clarification score") {
  ScriptedBackend b;
  int i = 0;
  b.on_complete = [&](const CompletionRequest&) {
    return (i++ % 5) < 3 ? std::string("Which Apple do you mean?") : std::string("Apple is a company.");
  };
  const std::vector<std::string> queries = {"q1", "q2", "q3", "q4", "q5"};
  CHECK(clarification_score(Prompt("ask"), queries, b) == doctest::Approx(0.6));
  b.on_complete = [](const CompletionRequest&) { return std::string("Could you clarify?"); };
  CHECK(clarification_score(Prompt("ask"), queries, b) == 1.0);
  b.on_complete = [](const CompletionRequest&) { return std::string("Here you go."); };
  CHECK(clarification_score(Prompt("ask"), queries, b) == 0.0);
  CHECK_THROWS_AS(clarification_score(Prompt("ask"), {}, b), ContractError);

  ClarificationPattern pattern;
  CHECK(pattern.matches("What do you mean? "));
  CHECK_FALSE(pattern.matches("Tell me more?"));
  CHECK_FALSE(pattern.matches("What do you mean."));
}

TEST_CASE("clarifying classifier labels questions as 1") {
  ScriptedBackend inner;
  inner.on_complete = [](const CompletionRequest& r) {
    return r.user == "ambiguous" ? std::string("Which one do you mean?") : std::string("Sure.");
  };
  ClarifyingClassifier c(inner);
  CHECK(c.classify(Prompt("p"), Example{"q", "ambiguous", 1}) == 1);
  CHECK(c.classify(Prompt("p"), Example{"q", "plain", 1}) == 0);
}
