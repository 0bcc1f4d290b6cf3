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

#include <algorithm>
#include <set>
#include <sstream>

#include "promptbo/dataset.hpp"
#include "promptbo/error.hpp"
#include "promptbo/hash.hpp"

using namespace promptbo;

namespace {

std::vector<Example> labeled(std::size_t zeros, std::size_t ones) {
  std::vector<Example> out;
  for (std::size_t i = 0; i < zeros + ones; ++i)
    out.push_back({"e" + std::to_string(i), "text " + std::to_string(i), i < zeros ? 0 : 1});
  return out;
}

std::size_t count_label(const std::vector<Example>& xs, int label) {
  return static_cast<std::size_t>(std::count_if(xs.begin(), xs.end(), [&](const Example& e) { return e.label == label; }));
}

}  // namespace

TEST_CASE("liar record with escaped newlines") {
  std::istringstream in(
      R"({"label": 1, "text": "Statement: Says the Annies List political group supports third-trimester abortions on demand.\nJob title: State representative\nState: Texas\nParty: republican\nContext: a mailer"})");
  const auto xs = parse_liar(in);
  REQUIRE(xs.size() == 1);
  CHECK(xs[0].label == 1);
  CHECK(xs[0].text ==
        "Statement: Says the Annies List political group supports third-trimester abortions on demand.\n"
        "Job title: State representative\nState: Texas\nParty: republican\nContext: a mailer");
  CHECK(xs[0].id == "liar-1");
}

TEST_CASE("liar empty input and ordering") {
  std::istringstream empty("");
  CHECK(parse_liar(empty).empty());
  std::istringstream two("{\"label\": 0, \"text\": \"a\"}\n\n{\"label\": 1, \"text\": \"b\"}\n");
  const auto xs = parse_liar(two);
  REQUIRE(xs.size() == 2);
  CHECK(xs[0] == Example{"liar-1", "a", 0});
  CHECK(xs[1] == Example{"liar-3", "b", 1});
}

TEST_CASE("liar errors carry line numbers") {
  std::istringstream bad("{\"label\": 0, \"text\": \"a\"}\n{not json}\n");
  try {
    parse_liar(bad);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  std::istringstream out_of_range("{\"label\": 2, \"text\": \"a\"}\n");
  CHECK_THROWS_AS(parse_liar(out_of_range), ValidationError);
  std::istringstream wrong_type("{\"label\": \"1\", \"text\": \"a\"}\n");
  CHECK_THROWS_AS(parse_liar(wrong_type), ParseError);
}

TEST_CASE("ethos last separator and threshold") {
  std::istringstream in("Gosh you guys are getting less funny with each episode.;0.0\nx;1.0\na;b;0.7\n");
  const auto xs = parse_ethos(in);
  REQUIRE(xs.size() == 3);
  CHECK(xs[0].label == 0);
  CHECK(xs[0].text == "Gosh you guys are getting less funny with each episode.");
  CHECK(xs[1] == Example{"ethos-2", "x", 1});
  CHECK(xs[2].text == "a;b");
  CHECK(xs[2].label == 1);

  std::istringstream half("y;0.5\n");
  CHECK(parse_ethos(half)[0].label == 1);
  std::istringstream no_sep("no separator here\n");
  CHECK_THROWS_AS(parse_ethos(no_sep), ParseError);
  std::istringstream bad_score("text;high\n");
  CHECK_THROWS_AS(parse_ethos(bad_score), ParseError);
}

TEST_CASE("round trip through writers") {
  std::vector<Example> xs = {{"a1", "first \"quoted\"\nline", 1}, {"a2", "second; with semicolon", 0}};
  std::stringstream liar;
  write_liar(liar, xs);
  CHECK(parse_liar(liar) == xs);

  std::vector<Example> ys = {{"ethos-1", "one; two", 1}, {"ethos-2", "three", 0}};
  std::stringstream ethos;
  write_ethos(ethos, ys);
  CHECK(parse_ethos(ethos) == ys);
}

TEST_CASE("query file") {
  std::istringstream in("Tell me about Apple\n\nWhat is Mercury\n");
  const auto qs = parse_queries(in);
  REQUIRE(qs.size() == 2);
  CHECK(qs[0].text == "Tell me about Apple");
  CHECK(qs[0].label == 1);
}

TEST_CASE("stratified counts") {
  CHECK(stratified_counts({50, 50}, 10) == std::vector<std::size_t>{5, 5});
  CHECK(stratified_counts({73, 27}, 75) == std::vector<std::size_t>{55, 20});
  CHECK(stratified_counts({1, 1}, 1) == std::vector<std::size_t>{1, 0});
}

TEST_CASE("partition examples") {
  const auto xs = labeled(50, 50);
  const auto p = partition(xs, 10, 20, 3);
  CHECK(count_label(p.control, 0) == 5);
  CHECK(count_label(p.control, 1) == 5);
  CHECK(p.eval.size() == 20);
  CHECK(p.test.size() == 70);
  CHECK(partition(xs, 10, 20, 3) == p);

  const auto skewed = partition(labeled(73, 27), 75, 10, 1);
  CHECK(count_label(skewed.control, 0) == 55);
  CHECK(count_label(skewed.control, 1) == 20);
}

TEST_CASE("partition errors") {
  CHECK_THROWS_AS(partition(labeled(5, 5), 8, 5, 0), PartitionError);
  CHECK_THROWS_AS(partition(labeled(10, 0), 4, 2, 0), PartitionError);
  CHECK_NOTHROW(partition(labeled(10, 0), 4, 2, 0, false));
}

TEST_CASE("property: partitions are disjoint, complete, stratified and ordered") {
  SplitMix64 rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    const auto zeros = 1 + rng.below(80), ones = 1 + rng.below(80);
    const auto xs = labeled(zeros, ones);
    const auto control = 1 + rng.below(xs.size() - 1);
    const auto eval = rng.below(xs.size() - control + 1);
    const auto p = partition(xs, control, eval, rng.next());
    std::set<std::string> ids;
    for (const auto* part : {&p.control, &p.eval, &p.test})
      for (const auto& e : *part) CHECK(ids.insert(e.id).second);
    CHECK(ids.size() == xs.size());
    CHECK(p.control.size() == control);
    CHECK(p.eval.size() == eval);
    const double exact0 = double(zeros) * double(control) / double(xs.size());
    CHECK(std::abs(double(count_label(p.control, 0)) - exact0) <= 1.0);
    auto index = [](const Example& e) { return std::stoul(e.id.substr(1)); };
    for (const auto* part : {&p.control, &p.eval, &p.test})
      CHECK(std::is_sorted(part->begin(), part->end(),
                           [&](const Example& a, const Example& b) { return index(a) < index(b); }));
  }
}

TEST_CASE("manifest hash tracks contents") {
  const auto xs = labeled(20, 20);
  const auto a = partition(xs, 10, 10, 1);
  const auto b = partition(xs, 10, 10, 2);
  CHECK(manifest_hash(a) == manifest_hash(partition(xs, 10, 10, 1)));
  CHECK(manifest_hash(a) != manifest_hash(b));
  CHECK(partition_manifest(a).find("\"control\"") != std::string::npos);
  CHECK(batch_id(a.control) != batch_id(a.eval));
}
