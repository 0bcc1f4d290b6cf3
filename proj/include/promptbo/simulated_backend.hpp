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

#include "promptbo/annotator.hpp"

namespace promptbo {

/// Offline backend driven by a SimulatedOracle.
///
/// classify: correct iff hash(prompt id, example id, seed) / 2^64 < c(p);
/// reversal keywords flip the label after correctness is decided.
///
/// complete, by role:
///   gradient   - critique naming one missing feature keyword, or the
///                sentinel kNoMissingFeatures when none is missing;
///   edit       - subject text with the critiqued keyword appended;
///   paraphrase - keyword-preserving synonym swap plus a lineage-salted suffix;
///   respond    - a clarifying question with probability c(p), otherwise
///                a plain answer.
class SimulatedBackend final : public Backend {
 public:
  static constexpr const char* kNoMissingFeatures =
      "No missing features: the prompt already covers every relevant aspect.";

  explicit SimulatedBackend(SimulatedOracle oracle);

  const SimulatedOracle& oracle() const noexcept { return oracle_; }

  /// The value compared against c(p) for one (prompt, example) pair.
  double draw(const std::string& prompt_id, const std::string& example_id) const;

 protected:
  int do_classify(const Prompt& prompt, const Example& example) override;
  std::string do_complete(const CompletionRequest& request) override;

 private:
  std::string critique(const CompletionRequest& request) const;
  std::string edit(const CompletionRequest& request) const;
  std::string paraphrase(const CompletionRequest& request) const;
  std::string respond(const CompletionRequest& request) const;

  SimulatedOracle oracle_;
};

}  // namespace promptbo
