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

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "promptbo/error.hpp"
#include "promptbo/kernels.hpp"
#include "promptbo/scorer.hpp"

namespace promptbo {

/// RBF length-scale R and observation noise variance.
struct KernelParams {
  double length_scale = 1.0;
  double noise_variance = 0.01;

  void validate() const;
  friend bool operator==(const KernelParams&, const KernelParams&) = default;
};

/// Posterior at one candidate. `variance` is the exact latent variance
/// (clamped at 0); `std` has the acquisition-side floor applied.
struct Posterior {
  double mean = 0.0;
  double variance = 1.0;
  double std = 1.0;
};

struct LmlGradient {
  double length_scale = 0.0;
  double noise_variance = 0.0;
};

/// exp(-hamming(v1, v2) / (2R)).
double kernel(const PredictionVector& v1, const PredictionVector& v2, const KernelParams& params);

/// Fraction of correct control predictions.
double prior_mean(const PredictionVector& v);

/// Lower Cholesky factor of a symmetric positive-definite matrix. Returns
/// false when a pivot is not strictly positive and finite.
bool cholesky(const Eigen::MatrixXd& a, Eigen::MatrixXd& lower);

/// Factor of a + jitter*I under the escalation policy: no jitter, then
/// 1e-8, 1e-7, ..., 1e-4; throws NumericalError when all fail. Returns the
/// jitter that succeeded.
double cholesky_with_jitter(const Eigen::MatrixXd& a, Eigen::MatrixXd& lower);

/// GP posterior conditioned on cached observations, with prior mean m(p)
/// and kernel k over prediction vectors. Immutable; fit and
/// rank_one_update produce new values.
class FittedSurrogate {
 public:
  /// Model with no observations: posterior equals the prior.
  static FittedSurrogate empty(const KernelParams& params);

  std::size_t size() const noexcept { return observations_.size(); }
  const std::vector<Observation>& observations() const noexcept { return observations_; }
  const KernelParams& params() const noexcept { return params_; }
  /// K (no noise term).
  const Eigen::MatrixXd& kernel_matrix() const noexcept { return kernel_; }
  /// Lower factor of K + (noise + jitter) I.
  const Eigen::MatrixXd& cholesky_factor() const noexcept { return lower_; }
  /// Solution of (K + noise I) alpha = a - m.
  const Eigen::VectorXd& alpha() const noexcept { return alpha_; }
  const Eigen::VectorXd& residual() const noexcept { return residual_; }
  double jitter() const noexcept { return jitter_; }

  Posterior posterior(const PredictionVector& candidate, double sigma_min) const;
  std::vector<Posterior> posterior_batch(std::span<const PredictionVector> candidates, double sigma_min,
                                         Exec exec = Exec::parallel) const;

  /// (min, max) eigenvalue of K; (1, 1) when empty.
  std::pair<double, double> eigenvalue_range() const;

 private:
  friend FittedSurrogate fit(std::vector<Observation>, const KernelParams&, Exec);
  friend FittedSurrogate rank_one_update(const FittedSurrogate&, Observation, const KernelParams&);

  Posterior from_kernel_row(const Eigen::VectorXd& k, double prior, double sigma_min) const;
  void check_candidate(const PredictionVector& candidate) const;

  std::vector<Observation> observations_;
  std::vector<BitVector> bits_;
  KernelParams params_;
  Eigen::MatrixXd kernel_;
  Eigen::MatrixXd lower_;
  Eigen::VectorXd residual_;
  Eigen::VectorXd alpha_;
  double jitter_ = 0.0;
};

/// Builds K, factors K + noise I and solves for alpha. Throws
/// NumericalError if the jitter policy cannot recover a factorization.
FittedSurrogate fit(std::vector<Observation> observations, const KernelParams& params,
                    Exec exec = Exec::parallel);

/// Appends one observation by bordering the Cholesky factor (O(n^2)).
/// `params` must equal the parameters the model was fitted with; a
/// mismatch throws ContractError. A non-positive new pivot throws
/// NumericalError.
FittedSurrogate rank_one_update(const FittedSurrogate& fitted, Observation observation,
                                const KernelParams& params);

/// log N(a - m | 0, K + noise I).
double log_marginal_likelihood(const std::vector<Observation>& observations, const KernelParams& params);

/// Analytic gradient of the log marginal likelihood with respect to
/// (length_scale, noise_variance).
LmlGradient lml_gradient(const std::vector<Observation>& observations, const KernelParams& params);

class OptimizationError : public Error {
 public:
  OptimizationError(const std::string& what, KernelParams last_good)
      : Error(what), last_good_(last_good) {}
  const KernelParams& last_good() const noexcept { return last_good_; }

 private:
  KernelParams last_good_;
};

struct HyperoptOptions {
  int steps = 200;
  double learning_rate = 0.1;
  double gradient_tolerance = 1e-6;
  double min_length_scale = 1e-2;
  double max_length_scale = 1e4;
  double min_noise_variance = 1e-8;
  double max_noise_variance = 10.0;
};

/// Gradient ascent on the log marginal likelihood in log-parameter space.
/// A step that lowers the objective is retried with half the step size, so
/// the objective never decreases; accepted steps grow the step size by 1.5x.
KernelParams optimize_hyperparams(const std::vector<Observation>& observations, const KernelParams& init,
                                  const HyperoptOptions& options = {});

}  // namespace promptbo
