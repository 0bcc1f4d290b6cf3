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

#include <string>
#include <vector>

#include "promptbo/annotator.hpp"
#include "promptbo/surrogate.hpp"

namespace promptbo {

enum class AcquisitionKind { ucb, ei };

struct AcquisitionConfig {
  AcquisitionKind kind = AcquisitionKind::ucb;
  double kappa_start = 2.0;
  double kappa_end = 0.5;
  double xi = 0.01;
  int batch_m = 1;

  void validate() const;
};

/// Linear annealing over t / (T - 1); both endpoints are hit exactly.
double kappa_schedule(int round_index, int total_rounds, const AcquisitionConfig& cfg);

/// mu + kappa * sigma.
double ucb(double mean, double std, double kappa);

double normal_pdf(double z);
double normal_cdf(double z);

/// Expected improvement over f_star with margin xi. For std == 0 this is
/// max(mean - f_star - xi, 0).
double ei(double mean, double std, double f_star, double xi);

struct Candidate {
  Prompt prompt;
  Posterior posterior;
};

struct ScoredCandidate {
  Prompt prompt;
  Posterior posterior;
  double score = 0.0;
};

/// Acquisition score of every candidate, in input order.
std::vector<ScoredCandidate> score_candidates(const std::vector<Candidate>& candidates,
                                              const AcquisitionConfig& cfg, double kappa, double f_star);

/// Strict ordering used for selection: higher score, then higher mean,
/// then lexicographically smaller prompt id.
bool ranks_before(const ScoredCandidate& a, const ScoredCandidate& b);

/// Top batch_m candidates by acquisition score. Throws SelectionError on an
/// empty set; returns fewer than batch_m when fewer candidates exist.
std::vector<Prompt> select(const std::vector<Candidate>& candidates, const AcquisitionConfig& cfg,
                           double kappa, double f_star);

/// As select, but returns every candidate ranked.
std::vector<ScoredCandidate> rank(const std::vector<Candidate>& candidates, const AcquisitionConfig& cfg,
                                  double kappa, double f_star);

}  // namespace promptbo
