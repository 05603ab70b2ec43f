#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "dstofw/problem.hpp"
#include "dstofw/step_size.hpp"

namespace dstofw {

/// max(2, floor(n^{1/4})) for convex objectives, max(2, floor(n^{1/3})) otherwise.
std::int64_t epoch_length(std::int64_t n_local, Objective mode);

/// Mini-batch sizes for the variance-reduced estimator.
///
/// Iteration k refreshes with a full local gradient when (k+1) mod q == 0.
/// Every other k belongs to the epoch ending at the refresh iteration
/// r = q * ceil((k+1)/q) - 1, whose reference size is |S^r| = q^2. Inside an
/// epoch the size follows ceil(gamma_k^2 / gamma_r^2 * q^2), with the ceiling
/// carried backward from r so that gamma_k / sqrt|S^k| never exceeds
/// gamma_{k+1} / sqrt|S^{k+1}| after integer rounding.
class SamplingSchedule {
 public:
  SamplingSchedule(std::int64_t q, StepSchedule steps);

  std::int64_t q() const { return q_; }
  const StepSchedule& steps() const { return steps_; }

  bool is_refresh(std::int64_t k) const { return (k + 1) % q_ == 0; }
  /// Refresh iteration closing the epoch that contains k.
  std::int64_t epoch_end(std::int64_t k) const;

  /// Uncapped size for any k >= 1; equals q^2 at refresh iterations.
  std::int64_t rule_size(std::int64_t k) const;

  /// min(n_local, rule_size(k)). Throws for refresh iterations, which take a
  /// full local gradient instead.
  std::int64_t sample_size(std::int64_t k, std::int64_t n_local) const;

 private:
  std::int64_t q_;
  StepSchedule steps_;
};

/// Per-agent stream of sample sets drawn uniformly without replacement.
class SampleStream {
 public:
  SampleStream(std::uint64_t seed, int agent);

  /// `size` distinct indices in [0, n_local).
  std::span<const Eigen::Index> draw(Eigen::Index n_local, Eigen::Index size);

 private:
  std::mt19937_64 rng_;
  std::vector<Eigen::Index> pool_;
};

/// Partial Fisher-Yates over `pool` (a permutation of [0, n)); the first
/// `size` entries afterwards form the sample.
std::span<const Eigen::Index> draw_sample_set(std::mt19937_64& rng, std::vector<Eigen::Index>& pool,
                                              Eigen::Index n_local, Eigen::Index size);

}  // namespace dstofw
