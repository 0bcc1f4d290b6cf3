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

#include "promptbo/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace promptbo {

void KernelParams::validate() const {
  if (!(length_scale > 0.0) || !std::isfinite(length_scale))
    throw ContractError("kernel length scale must be > 0");
  if (!(noise_variance >= 0.0) || !std::isfinite(noise_variance))
    throw ContractError("noise variance must be >= 0");
}

double kernel(const PredictionVector& v1, const PredictionVector& v2, const KernelParams& params) {
  return kernels::rbf(static_cast<double>(hamming(v1.bits, v2.bits)), params.length_scale);
}

double prior_mean(const PredictionVector& v) { return v.mean(); }

bool cholesky(const Eigen::MatrixXd& a, Eigen::MatrixXd& lower) {
  const Eigen::Index n = a.rows();
  lower = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double pivot = a(j, j) - lower.row(j).head(j).squaredNorm();
    if (!(pivot > 0.0) || !std::isfinite(pivot)) return false;
    const double d = std::sqrt(pivot);
    lower(j, j) = d;
    for (Eigen::Index i = j + 1; i < n; ++i)
      lower(i, j) = (a(i, j) - lower.row(i).head(j).dot(lower.row(j).head(j))) / d;
  }
  return true;
}

double cholesky_with_jitter(const Eigen::MatrixXd& a, Eigen::MatrixXd& lower) {
  if (cholesky(a, lower)) return 0.0;
  const Eigen::Index n = a.rows();
  for (double jitter = 1e-8; jitter <= 1e-4 * 1.0001; jitter *= 10.0) {
    Eigen::MatrixXd shifted = a;
    shifted.diagonal().array() += jitter;
    if (cholesky(shifted, lower)) return jitter;
  }
  throw NumericalError("Cholesky factorization failed for a " + std::to_string(n) + "x" +
                       std::to_string(n) + " kernel matrix even with jitter 1e-4 (near-duplicate prompts?)");
}

namespace {

// Solves (L L^T) x = b.
template <typename Rhs>
Eigen::Matrix<double, Eigen::Dynamic, Rhs::ColsAtCompileTime> cho_solve(const Eigen::MatrixXd& lower, const Rhs& b) {
  Eigen::Matrix<double, Eigen::Dynamic, Rhs::ColsAtCompileTime> y = lower.triangularView<Eigen::Lower>().solve(b);
  return lower.transpose().triangularView<Eigen::Upper>().solve(y);
}

void check_same_control(const std::vector<Observation>& observations) {
  if (observations.empty()) return;
  const auto n = observations.front().prediction_vector.size();
  for (const auto& o : observations)
    if (o.prediction_vector.size() != n)
      throw ContractError("observations cover different control batches");
}

std::vector<BitVector> bits_of(const std::vector<Observation>& observations) {
  std::vector<BitVector> out;
  out.reserve(observations.size());
  for (const auto& o : observations) out.push_back(o.prediction_vector.bits);
  return out;
}

Eigen::VectorXd residual_of(const std::vector<Observation>& observations) {
  Eigen::VectorXd r(static_cast<Eigen::Index>(observations.size()));
  for (std::size_t i = 0; i < observations.size(); ++i)
    r(static_cast<Eigen::Index>(i)) = observations[i].accuracy - prior_mean(observations[i].prediction_vector);
  return r;
}

// Shared state for likelihood evaluation at one parameter setting.
struct LikelihoodTerms {
  Eigen::MatrixXd kernel;
  Eigen::MatrixXd lower;
  Eigen::VectorXd alpha;
  double value = 0.0;
};

LikelihoodTerms likelihood_terms(const Eigen::MatrixXd& distances, const Eigen::VectorXd& residual,
                                 const KernelParams& params) {
  params.validate();
  LikelihoodTerms t;
  t.kernel = kernels::rbf_matrix(distances, params.length_scale);
  Eigen::MatrixXd k_theta = t.kernel;
  k_theta.diagonal().array() += params.noise_variance;
  cholesky_with_jitter(k_theta, t.lower);
  t.alpha = cho_solve(t.lower, residual);
  const double n = static_cast<double>(residual.size());
  t.value = -0.5 * residual.dot(t.alpha) - t.lower.diagonal().array().log().sum() -
            0.5 * n * std::log(2.0 * std::numbers::pi);
  return t;
}

LmlGradient gradient_from_terms(const LikelihoodTerms& t, const Eigen::MatrixXd& distances,
                                const KernelParams& params) {
  const Eigen::Index n = t.kernel.rows();
  const Eigen::MatrixXd k_inv = cho_solve(t.lower, Eigen::MatrixXd::Identity(n, n));
  const double r2 = params.length_scale * params.length_scale;
  const Eigen::MatrixXd dk_dr = (t.kernel.array() * distances.array() / (2.0 * r2)).matrix();
  LmlGradient g;
  g.length_scale = 0.5 * t.alpha.dot(dk_dr * t.alpha) - 0.5 * (k_inv.array() * dk_dr.array()).sum();
  g.noise_variance = 0.5 * t.alpha.squaredNorm() - 0.5 * k_inv.trace();
  return g;
}

}  // namespace

FittedSurrogate FittedSurrogate::empty(const KernelParams& params) {
  params.validate();
  FittedSurrogate s;
  s.params_ = params;
  s.kernel_ = Eigen::MatrixXd(0, 0);
  s.lower_ = Eigen::MatrixXd(0, 0);
  s.residual_ = Eigen::VectorXd(0);
  s.alpha_ = Eigen::VectorXd(0);
  return s;
}

FittedSurrogate fit(std::vector<Observation> observations, const KernelParams& params, Exec exec) {
  params.validate();
  if (observations.empty()) throw ContractError("fit needs at least one observation");
  check_same_control(observations);

  FittedSurrogate s;
  s.params_ = params;
  s.bits_ = bits_of(observations);
  s.kernel_ = kernels::rbf_matrix(kernels::distance_matrix(s.bits_, exec), params.length_scale);
  Eigen::MatrixXd k_theta = s.kernel_;
  k_theta.diagonal().array() += params.noise_variance;
  s.jitter_ = cholesky_with_jitter(k_theta, s.lower_);
  s.residual_ = residual_of(observations);
  s.alpha_ = cho_solve(s.lower_, s.residual_);
  s.observations_ = std::move(observations);
  return s;
}

FittedSurrogate rank_one_update(const FittedSurrogate& fitted, Observation observation,
                                const KernelParams& params) {
  if (!(params == fitted.params_))
    throw ContractError("kernel parameters changed since fit; refit instead of updating");
  if (!fitted.bits_.empty() && observation.prediction_vector.size() != fitted.bits_.front().size())
    throw ContractError("observation covers a different control batch");

  const Eigen::Index n = static_cast<Eigen::Index>(fitted.size());
  Eigen::VectorXd k(n);
  for (Eigen::Index i = 0; i < n; ++i)
    k(i) = kernels::rbf(static_cast<double>(hamming(fitted.bits_[static_cast<std::size_t>(i)],
                                                    observation.prediction_vector.bits)),
                        params.length_scale);
  const double diag = 1.0 + params.noise_variance + fitted.jitter_;
  const Eigen::VectorXd row = fitted.lower_.triangularView<Eigen::Lower>().solve(k);
  const double pivot = diag - row.squaredNorm();
  if (!(pivot > 0.0) || !std::isfinite(pivot))
    throw NumericalError("rank-one update produced a non-positive pivot (duplicate prompt?)");

  FittedSurrogate s;
  s.params_ = params;
  s.jitter_ = fitted.jitter_;
  s.kernel_ = Eigen::MatrixXd(n + 1, n + 1);
  s.kernel_.topLeftCorner(n, n) = fitted.kernel_;
  s.kernel_.block(n, 0, 1, n) = k.transpose();
  s.kernel_.block(0, n, n, 1) = k;
  s.kernel_(n, n) = 1.0;
  s.lower_ = Eigen::MatrixXd::Zero(n + 1, n + 1);
  s.lower_.topLeftCorner(n, n) = fitted.lower_;
  s.lower_.block(n, 0, 1, n) = row.transpose();
  s.lower_(n, n) = std::sqrt(pivot);
  s.residual_ = Eigen::VectorXd(n + 1);
  s.residual_.head(n) = fitted.residual_;
  s.residual_(n) = observation.accuracy - prior_mean(observation.prediction_vector);
  s.alpha_ = cho_solve(s.lower_, s.residual_);
  s.bits_ = fitted.bits_;
  s.bits_.push_back(observation.prediction_vector.bits);
  s.observations_ = fitted.observations_;
  s.observations_.push_back(std::move(observation));
  return s;
}

void FittedSurrogate::check_candidate(const PredictionVector& candidate) const {
  if (!bits_.empty() && candidate.size() != bits_.front().size())
    throw ContractError("candidate covers a different control batch");
}

Posterior FittedSurrogate::from_kernel_row(const Eigen::VectorXd& k, double prior, double sigma_min) const {
  Posterior p;
  if (k.size() == 0) {
    p.mean = prior;
    p.variance = 1.0;
  } else {
    p.mean = prior + k.dot(alpha_);
    const Eigen::VectorXd v = lower_.triangularView<Eigen::Lower>().solve(k);
    p.variance = std::max(1.0 - v.squaredNorm(), 0.0);
  }
  p.std = std::max(std::sqrt(p.variance), sigma_min);
  return p;
}

Posterior FittedSurrogate::posterior(const PredictionVector& candidate, double sigma_min) const {
  check_candidate(candidate);
  const Eigen::Index n = static_cast<Eigen::Index>(bits_.size());
  Eigen::VectorXd k(n);
  for (Eigen::Index i = 0; i < n; ++i)
    k(i) = kernels::rbf(static_cast<double>(hamming(bits_[static_cast<std::size_t>(i)], candidate.bits)),
                        params_.length_scale);
  return from_kernel_row(k, prior_mean(candidate), sigma_min);
}

std::vector<Posterior> FittedSurrogate::posterior_batch(std::span<const PredictionVector> candidates,
                                                        double sigma_min, Exec exec) const {
  for (const auto& c : candidates) check_candidate(c);
  std::vector<BitVector> rows;
  rows.reserve(candidates.size());
  for (const auto& c : candidates) rows.push_back(c.bits);
  const Eigen::MatrixXd cross =
      kernels::rbf_matrix(kernels::cross_distances(rows, bits_, exec), params_.length_scale);

  std::vector<Posterior> out(candidates.size());
  const auto m = static_cast<std::ptrdiff_t>(candidates.size());
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t j = 0; j < m; ++j)
      out[static_cast<std::size_t>(j)] =
          from_kernel_row(cross.row(j).transpose(), prior_mean(candidates[static_cast<std::size_t>(j)]), sigma_min);
  } else {
    for (std::ptrdiff_t j = 0; j < m; ++j)
      out[static_cast<std::size_t>(j)] =
          from_kernel_row(cross.row(j).transpose(), prior_mean(candidates[static_cast<std::size_t>(j)]), sigma_min);
  }
  return out;
}

std::pair<double, double> FittedSurrogate::eigenvalue_range() const {
  if (kernel_.rows() == 0) return {1.0, 1.0};
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(kernel_, Eigen::EigenvaluesOnly);
  const auto& ev = solver.eigenvalues();
  return {ev.minCoeff(), ev.maxCoeff()};
}

double log_marginal_likelihood(const std::vector<Observation>& observations, const KernelParams& params) {
  if (observations.empty()) throw ContractError("log marginal likelihood needs observations");
  check_same_control(observations);
  const auto bits = bits_of(observations);
  return likelihood_terms(kernels::distance_matrix(bits), residual_of(observations), params).value;
}

LmlGradient lml_gradient(const std::vector<Observation>& observations, const KernelParams& params) {
  if (observations.empty()) throw ContractError("gradient needs observations");
  check_same_control(observations);
  const auto bits = bits_of(observations);
  const Eigen::MatrixXd distances = kernels::distance_matrix(bits);
  const auto terms = likelihood_terms(distances, residual_of(observations), params);
  return gradient_from_terms(terms, distances, params);
}

KernelParams optimize_hyperparams(const std::vector<Observation>& observations, const KernelParams& init,
                                  const HyperoptOptions& options) {
  if (observations.empty()) throw ContractError("hyperparameter optimization needs observations");
  check_same_control(observations);
  init.validate();
  const auto bits = bits_of(observations);
  const Eigen::MatrixXd distances = kernels::distance_matrix(bits);
  const Eigen::VectorXd residual = residual_of(observations);

  const double lo_r = std::log(options.min_length_scale), hi_r = std::log(options.max_length_scale);
  const double lo_s = std::log(options.min_noise_variance), hi_s = std::log(options.max_noise_variance);
  auto to_params = [](double u_r, double u_s) { return KernelParams{std::exp(u_r), std::exp(u_s)}; };

  KernelParams current = init;
  current.noise_variance = std::max(current.noise_variance, options.min_noise_variance);
  double u_r = std::clamp(std::log(current.length_scale), lo_r, hi_r);
  double u_s = std::clamp(std::log(current.noise_variance), lo_s, hi_s);
  current = to_params(u_r, u_s);

  const double init_value = likelihood_terms(distances, residual, init).value;
  auto terms = likelihood_terms(distances, residual, current);
  if (!std::isfinite(terms.value)) throw OptimizationError("non-finite log marginal likelihood at start", init);

  // Ascent direction is the log-space gradient preconditioned by a BFGS
  // estimate of the inverse negative Hessian. The first step has length
  // learning_rate; every accepted step must not lower the objective.
  Eigen::Matrix2d h = Eigen::Matrix2d::Zero();
  Eigen::Vector2d u(u_r, u_s);
  auto log_gradient = [&](const LikelihoodTerms& t, const KernelParams& p) {
    const auto g = gradient_from_terms(t, distances, p);
    return Eigen::Vector2d(g.length_scale * p.length_scale, g.noise_variance * p.noise_variance);
  };
  Eigen::Vector2d g = log_gradient(terms, current);
  for (int it = 0; it < options.steps; ++it) {
    // Components pushing through a bound are dropped.
    Eigen::Vector2d free = g;
    if ((u(0) <= lo_r && g(0) < 0) || (u(0) >= hi_r && g(0) > 0)) free(0) = 0.0;
    if ((u(1) <= lo_s && g(1) < 0) || (u(1) >= hi_s && g(1) > 0)) free(1) = 0.0;
    const double norm = free.norm();
    if (norm < options.gradient_tolerance) break;
    if (h.isZero()) h = Eigen::Matrix2d::Identity() * (options.learning_rate / norm);

    Eigen::Vector2d direction = h * free;
    if (direction.dot(free) <= 0.0) {
      h = Eigen::Matrix2d::Identity() * (options.learning_rate / norm);
      direction = h * free;
    }
    if (free(0) == 0.0) direction(0) = 0.0;
    if (free(1) == 0.0) direction(1) = 0.0;

    bool accepted = false;
    double step = 1.0;
    for (int halving = 0; halving < 50; ++halving, step *= 0.5) {
      const Eigen::Vector2d next(std::clamp(u(0) + step * direction(0), lo_r, hi_r),
                                 std::clamp(u(1) + step * direction(1), lo_s, hi_s));
      const auto trial = to_params(next(0), next(1));
      LikelihoodTerms trial_terms;
      try {
        trial_terms = likelihood_terms(distances, residual, trial);
      } catch (const NumericalError&) {
        continue;
      }
      if (!std::isfinite(trial_terms.value))
        throw OptimizationError("non-finite log marginal likelihood during ascent", current);
      if (trial_terms.value < terms.value) continue;

      const Eigen::Vector2d g_next = log_gradient(trial_terms, trial);
      // BFGS on the negated objective: s = move, y = -(g_next - g).
      const Eigen::Vector2d sv = next - u, yv = g - g_next;
      const double sy = sv.dot(yv);
      if (sy > 1e-12 * sv.norm() * yv.norm()) {
        const double rho = 1.0 / sy;
        const Eigen::Matrix2d left = Eigen::Matrix2d::Identity() - rho * sv * yv.transpose();
        h = left * h * left.transpose() + rho * sv * sv.transpose();
      } else if (step == 1.0) {
        // No usable curvature (locally convex): lengthen the next step.
        h *= 2.0;
      }
      u = next;
      current = trial;
      terms = std::move(trial_terms);
      g = g_next;
      accepted = true;
      break;
    }
    if (!accepted) break;
  }
  // Clamping into the bounds (or rounding through log/exp) can start below init.
  return terms.value >= init_value ? current : init;
}

}  // namespace promptbo
