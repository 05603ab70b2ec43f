#include "dstofw/sampling.hpp"

#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "dstofw/error.hpp"

namespace dstofw {

namespace {

std::int64_t integer_root(std::int64_t n, int degree) {
  auto power = [degree](std::int64_t r) {
    long double p = 1;
    for (int i = 0; i < degree; ++i) p *= static_cast<long double>(r);
    return p;
  };
  auto r = static_cast<std::int64_t>(std::floor(std::pow(static_cast<double>(n), 1.0 / degree)));
  while (r > 0 && power(r) > static_cast<long double>(n)) --r;
  while (power(r + 1) <= static_cast<long double>(n)) ++r;
  return r;
}

}  // namespace

std::int64_t epoch_length(std::int64_t n_local, Objective mode) {
  if (n_local < 1) throw ConfigError("epoch_length: n_local must be >= 1");
  const std::int64_t root = integer_root(n_local, mode == Objective::convex ? 4 : 3);
  return std::max<std::int64_t>(2, root);
}

SamplingSchedule::SamplingSchedule(std::int64_t q, StepSchedule steps)
    : q_(q), steps_(steps) {
  if (q < 2) throw ConfigError(fmt::format("sampling: epoch length q = {} must be >= 2", q));
}

std::int64_t SamplingSchedule::epoch_end(std::int64_t k) const {
  return q_ * ((k + 1 + q_ - 1) / q_) - 1;
}

std::int64_t SamplingSchedule::rule_size(std::int64_t k) const {
  if (k < 1) throw NumericError(fmt::format("sampling: iteration {} must be >= 1", k));
  const std::int64_t end = epoch_end(k);
  std::int64_t size = q_ * q_;
  for (std::int64_t j = end - 1; j >= k; --j) {
    const double gamma_j = steps_(j);
    const double gamma_next = steps_(j + 1);
    const double target = static_cast<double>(size) * (gamma_j * gamma_j) / (gamma_next * gamma_next);
    auto candidate = static_cast<std::int64_t>(std::ceil(target));
    // Undo a ceiling pushed up by rounding noise when the smaller size still
    // satisfies gamma_j / sqrt|S^j| <= gamma_{j+1} / sqrt|S^{j+1}|.
    if (candidate > 1 &&
        gamma_j / std::sqrt(static_cast<double>(candidate - 1)) <=
            gamma_next / std::sqrt(static_cast<double>(size))) {
      --candidate;
    }
    size = std::max<std::int64_t>(candidate, 1);
  }
  return size;
}

std::int64_t SamplingSchedule::sample_size(std::int64_t k, std::int64_t n_local) const {
  if (is_refresh(k)) {
    throw InvariantError(fmt::format(
        "sampling: iteration {} is a refresh iteration (q = {}); use the full local gradient", k,
        q_));
  }
  if (n_local < 1) throw NumericError("sampling: n_local must be >= 1");
  return std::min(rule_size(k), n_local);
}

SampleStream::SampleStream(std::uint64_t seed, int agent) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(agent), 0x5a17u};
  rng_.seed(seq);
}

std::span<const Eigen::Index> SampleStream::draw(Eigen::Index n_local, Eigen::Index size) {
  return draw_sample_set(rng_, pool_, n_local, size);
}

std::span<const Eigen::Index> draw_sample_set(std::mt19937_64& rng, std::vector<Eigen::Index>& pool,
                                              Eigen::Index n_local, Eigen::Index size) {
  if (size < 1 || size > n_local) {
    throw InvariantError(
        fmt::format("draw_sample_set: size {} outside [1, n_local = {}]", size, n_local));
  }
  if (static_cast<Eigen::Index>(pool.size()) != n_local) {
    pool.resize(static_cast<std::size_t>(n_local));
    std::iota(pool.begin(), pool.end(), Eigen::Index{0});
  }
  for (Eigen::Index i = 0; i < size; ++i) {
    std::uniform_int_distribution<Eigen::Index> pick(i, n_local - 1);
    std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(pick(rng))]);
  }
  return {pool.data(), static_cast<std::size_t>(size)};
}

}  // namespace dstofw
