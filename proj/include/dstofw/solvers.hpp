#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "dstofw/constraint.hpp"
#include "dstofw/graph.hpp"
#include "dstofw/metrics.hpp"
#include "dstofw/problem.hpp"
#include "dstofw/sampling.hpp"
#include "dstofw/step_size.hpp"

namespace dstofw {

/// One agent's iterates, extracted from a NetworkState.
struct AgentState {
  Vector<double> x;
  Vector<double> v;       // variance-reduced local gradient estimator
  Vector<double> g;       // tracked gradient before mixing
  Vector<double> d;       // tracked gradient after mixing
  Vector<double> x_prev;
  std::int64_t ifo_count = 0;
  std::int64_t lo_count = 0;
};

/// All agents' iterates, one column per agent.
struct NetworkState {
  Eigen::MatrixXd x;
  Eigen::MatrixXd x_prev;
  Eigen::MatrixXd v;
  Eigen::MatrixXd g;
  Eigen::MatrixXd d;
  /// Points at which column i of `v` estimates grad f_i: x itself for
  /// DstoFW/CenFW, the mixed iterate for DenFW.
  Eigen::MatrixXd gradient_points;
  std::vector<std::int64_t> ifo;
  std::vector<std::int64_t> lo;

  int agents() const { return static_cast<int>(x.cols()); }
  AgentState agent(int i) const;
  std::int64_t ifo_total() const;
  std::int64_t lo_total() const;
  /// max(||d_bar - v_bar||_inf, ||d_bar - g_bar||_inf).
  double tracking_deviation() const;
};

struct SolverSettings {
  std::int64_t iterations = 100;
  double alpha = 0.5;
  std::optional<std::int64_t> q;
  std::uint64_t sampling_seed = 1;
  std::int64_t log_every = 1;
  /// Use every local sample in the estimator difference (|S^k| = n_i).
  bool full_batch = false;
  int threads = 1;
  /// Common feasible start for all agents; zero when empty.
  std::optional<Vector<double>> start;
  double feasibility_tol = 1e-9;
  /// When set, a tracking deviation above this value throws InvariantError.
  std::optional<double> tracking_tolerance;
};

/// Called with the state holding iterate k: once after initialization
/// (k = 1) and after every round (k = 2 .. K+1).
using RoundObserver = std::function<void(std::int64_t k, const NetworkState&)>;

StepSchedule dstofw_steps(Objective objective, double alpha);
StepSchedule denfw_steps(Objective objective, double alpha);
StepSchedule cenfw_steps(Objective objective, std::int64_t q, std::int64_t horizon);

/// x_i = start, d_i = v_i = g_i = grad f_i(start); charges n_i IFO per agent.
NetworkState init_network_state(const FiniteSumProblem& problem, const Vector<double>& start);

/// Per-agent sample streams, one per agent.
std::vector<SampleStream> make_streams(std::uint64_t seed, int agents);

/// One synchronous DstoFW round from iterate k to k+1. Consensus reads use
/// the round-start snapshot. Returns gamma_k.
double dstofw_round(NetworkState& state, const MixingMatrix& mixing, const ConstraintSet& set,
                    const FiniteSumProblem& problem, const SamplingSchedule& sampling,
                    std::vector<SampleStream>& streams, std::int64_t k, bool full_batch = false,
                    int threads = 1, double feasibility_tol = 1e-9);

RunLog run_dstofw(const FiniteSumProblem& problem, const MixingMatrix& mixing,
                  const ConstraintSet& set, const SolverSettings& settings,
                  const RoundObserver& observer = {});

/// Decentralized deterministic FW with gradient tracking: consensus on x,
/// full local gradients at the mixed iterate, a second mixing round on the
/// tracked gradient, FW step. Two communication rounds per iteration.
RunLog run_denfw(const FiniteSumProblem& problem, const MixingMatrix& mixing,
                 const ConstraintSet& set, const SolverSettings& settings,
                 const RoundObserver& observer = {});

/// Single-node SPIDER-FW over the union of all local data.
RunLog run_cenfw(const FiniteSumProblem& problem, const ConstraintSet& set,
                 const SolverSettings& settings, const RoundObserver& observer = {});

}  // namespace dstofw
