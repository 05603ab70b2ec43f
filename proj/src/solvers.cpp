#include "dstofw/solvers.hpp"

#include <algorithm>
#include <exception>
#include <numeric>
#include <thread>

#include <fmt/format.h>

#include "dstofw/error.hpp"

namespace dstofw {

namespace {

/// Runs fn(i) for every agent. Each call touches only agent i's slots, so
/// the split across workers does not affect results.
template <typename Fn>
void for_each_agent(int agents, int threads, Fn&& fn) {
  if (threads <= 1 || agents <= 1) {
    for (int i = 0; i < agents; ++i) fn(i);
    return;
  }
  const int workers = std::min(threads, agents);
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  {
    std::vector<std::jthread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (int i = w; i < agents; i += workers) fn(i);
        } catch (...) {
          errors[static_cast<std::size_t>(w)] = std::current_exception();
        }
      });
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

void check_feasible(const ConstraintSet& set, const Vector<double>& x, double tol, int agent,
                    std::int64_t k) {
  if (!x.allFinite() || !set.contains(x, tol)) {
    throw InvariantError(fmt::format(
        "agent {} left the feasible set after round {} (||x||_1 = {:.17g})", agent, k,
        x.lpNorm<1>()));
  }
}

Vector<double> checked_start(const SolverSettings& settings, const ConstraintSet& set) {
  Vector<double> start = settings.start ? *settings.start : Vector<double>::Zero(set.dim());
  if (start.size() != set.dim()) {
    throw ConfigError(fmt::format("start: dimension {} does not match problem dimension {}",
                                  start.size(), set.dim()));
  }
  if (!start.allFinite() || !set.contains(start, settings.feasibility_tol)) {
    throw ConfigError("start: initial point is not feasible");
  }
  return start;
}

void check_settings(const SolverSettings& s) {
  if (s.iterations < 0) throw ConfigError("iterations: K must be >= 0");
  if (s.log_every < 1) throw ConfigError("log_every: must be >= 1");
  if (!(s.alpha > 0.0 && s.alpha <= 1.0)) throw ConfigError("alpha: must lie in (0, 1]");
  if (s.q && *s.q < 2) throw ConfigError("q: must be >= 2");
}

/// Shared outer loop: init record, K rounds, metric records at the cadence.
template <typename Round>
RunLog drive(const FiniteSumProblem& problem, const ConstraintSet& set,
             const SolverSettings& settings, NetworkState state, const StepSchedule& steps,
             std::int64_t comm_per_round, const RoundObserver& observer, Round&& round) {
  RunLog log;
  log.iterations = settings.iterations;
  std::int64_t eval_ifo = 0;
  std::int64_t comm = 0;

  auto track = [&](std::int64_t k) {
    const double deviation = state.tracking_deviation();
    log.max_tracking_deviation = std::max(log.max_tracking_deviation, deviation);
    if (settings.tracking_tolerance && !(deviation <= *settings.tracking_tolerance)) {
      throw InvariantError(fmt::format(
          "tracking identity d_bar = g_bar = v_bar broken at k = {}: deviation {:.3e} > {:.3e}", k,
          deviation, *settings.tracking_tolerance));
    }
    if (observer) observer(k, state);
  };
  auto record = [&](std::int64_t k) {
    IterationRecord r;
    r.k = k;
    r.gamma = steps(k);
    const Vector<double> average = state.x.rowwise().mean();
    const LossAndGradient lg = global_loss_and_gradient(average, problem, eval_ifo);
    r.loss = lg.loss;
    r.fw_gap = fw_gap(average, lg.gradient, set);
    r.consensus_err = consensus_error(state.x);
    r.ifo_cum = state.ifo_total();
    r.lo_cum = state.lo_total();
    r.comm_rounds_cum = comm;
    r.eval_ifo_cum = eval_ifo;
    log.records.push_back(r);
  };

  track(1);
  record(1);
  const std::int64_t K = settings.iterations;
  for (std::int64_t k = 1; k <= K; ++k) {
    round(state, k);
    comm += comm_per_round;
    track(k + 1);
    if (k % settings.log_every == 0 || k == K) record(k + 1);
  }
  log.final_average = state.x.rowwise().mean();
  return log;
}

void common_metadata(RunLog& log, const std::string& solver, const FiniteSumProblem& problem,
                     const StepSchedule& steps, const SolverSettings& settings) {
  log.set("solver", solver);
  log.set("agents", std::to_string(problem.agents()));
  log.set("dim", std::to_string(problem.dim()));
  log.set("objective", std::string(to_string(problem.objective())));
  log.set("total_samples", std::to_string(problem.total_samples()));
  log.set("min_local_samples", std::to_string(problem.min_local_size()));
  log.set("step_rule", steps.describe());
  log.set("iterations", std::to_string(settings.iterations));
}

}  // namespace

AgentState NetworkState::agent(int i) const {
  return {x.col(i), v.col(i), g.col(i), d.col(i), x_prev.col(i), ifo[static_cast<std::size_t>(i)],
          lo[static_cast<std::size_t>(i)]};
}

std::int64_t NetworkState::ifo_total() const {
  return std::accumulate(ifo.begin(), ifo.end(), std::int64_t{0});
}

std::int64_t NetworkState::lo_total() const {
  return std::accumulate(lo.begin(), lo.end(), std::int64_t{0});
}

double NetworkState::tracking_deviation() const {
  const Vector<double> d_bar = d.rowwise().mean();
  const Vector<double> v_bar = v.rowwise().mean();
  const Vector<double> g_bar = g.rowwise().mean();
  return std::max((d_bar - v_bar).lpNorm<Eigen::Infinity>(),
                  (d_bar - g_bar).lpNorm<Eigen::Infinity>());
}

StepSchedule dstofw_steps(Objective objective, double alpha) {
  return objective == Objective::convex ? StepSchedule{StepRule::dstofw_convex, alpha}
                                        : StepSchedule{StepRule::dstofw_nonconvex, alpha};
}

StepSchedule denfw_steps(Objective objective, double alpha) {
  return objective == Objective::convex ? StepSchedule{StepRule::denfw_convex, alpha}
                                        : StepSchedule{StepRule::denfw_nonconvex, alpha};
}

StepSchedule cenfw_steps(Objective objective, std::int64_t q, std::int64_t horizon) {
  StepSchedule s;
  s.rule = objective == Objective::convex ? StepRule::cenfw_convex : StepRule::cenfw_nonconvex;
  s.q = q;
  s.horizon = std::max<std::int64_t>(horizon, 1);
  return s;
}

NetworkState init_network_state(const FiniteSumProblem& problem, const Vector<double>& start) {
  const int m = problem.agents();
  NetworkState state;
  state.x = start.replicate(1, m);
  state.x_prev = state.x;
  state.v.resize(problem.dim(), m);
  state.ifo.assign(static_cast<std::size_t>(m), 0);
  state.lo.assign(static_cast<std::size_t>(m), 0);
  for (int i = 0; i < m; ++i) {
    state.v.col(i) = full_local_gradient(start, problem.local(i), problem.objective(),
                                         state.ifo[static_cast<std::size_t>(i)]);
  }
  state.g = state.v;
  state.d = state.v;
  state.gradient_points = state.x;
  return state;
}

std::vector<SampleStream> make_streams(std::uint64_t seed, int agents) {
  std::vector<SampleStream> streams;
  streams.reserve(static_cast<std::size_t>(agents));
  for (int i = 0; i < agents; ++i) streams.emplace_back(seed, i);
  return streams;
}

double dstofw_round(NetworkState& state, const MixingMatrix& mixing, const ConstraintSet& set,
                    const FiniteSumProblem& problem, const SamplingSchedule& sampling,
                    std::vector<SampleStream>& streams, std::int64_t k, bool full_batch,
                    int threads, double feasibility_tol) {
  const int m = state.agents();
  if (mixing.agents() != m || problem.agents() != m || static_cast<int>(streams.size()) != m) {
    throw ConfigError("dstofw_round: agent count mismatch between state, mixing and problem");
  }
  const double gamma = sampling.steps()(k);
  const bool refresh = sampling.is_refresh(k);
  const Objective objective = problem.objective();

  // Average consensus on the round-start snapshot: column i is sum_j W_ij x_j.
  const Eigen::MatrixXd mixed = state.x * mixing.w.transpose();
  Eigen::MatrixXd x_next(state.x.rows(), m);
  Eigen::MatrixXd v_next(state.v.rows(), m);

  for_each_agent(m, threads, [&](int i) {
    const auto slot = static_cast<std::size_t>(i);
    const LocalDataset& local = problem.local(i);

    Vector<double> x_new = (1.0 - gamma) * mixed.col(i);
    x_new += gamma * set.lmo(state.d.col(i));
    ++state.lo[slot];
    check_feasible(set, x_new, feasibility_tol, i, k);

    if (refresh) {
      v_next.col(i) = full_local_gradient(x_new, local, objective, state.ifo[slot]);
    } else {
      const Vector<double> x_old = state.x.col(i);
      const Eigen::Index n = local.size();
      const Eigen::Index size = full_batch ? n : sampling.sample_size(k, n);
      Vector<double> diff;
      if (size == n) {
        std::vector<Eigen::Index> all(static_cast<std::size_t>(n));
        std::iota(all.begin(), all.end(), Eigen::Index{0});
        diff = sampled_gradient_difference(x_new, x_old, local, all, objective, state.ifo[slot]);
      } else {
        diff = sampled_gradient_difference(x_new, x_old, local, streams[slot].draw(n, size),
                                           objective, state.ifo[slot]);
      }
      v_next.col(i) = diff + state.v.col(i);
    }
    x_next.col(i) = x_new;
  });

  // Gradient tracking: g = d + v_next - v, then one mixing round on g.
  Eigen::MatrixXd g_next = state.d + v_next - state.v;
  state.d = g_next * mixing.w.transpose();
  state.g = std::move(g_next);
  state.v = std::move(v_next);
  state.x_prev = std::move(state.x);
  state.x = std::move(x_next);
  state.gradient_points = state.x;
  return gamma;
}

RunLog run_dstofw(const FiniteSumProblem& problem, const MixingMatrix& mixing,
                  const ConstraintSet& set, const SolverSettings& settings,
                  const RoundObserver& observer) {
  check_settings(settings);
  if (mixing.agents() != problem.agents()) {
    throw ConfigError("dstofw: mixing matrix size does not match agent count");
  }
  const Vector<double> start = checked_start(settings, set);
  const std::int64_t q =
      settings.q.value_or(epoch_length(problem.min_local_size(), problem.objective()));
  const StepSchedule steps = dstofw_steps(problem.objective(), settings.alpha);
  const SamplingSchedule sampling(q, steps);
  auto streams = make_streams(settings.sampling_seed, problem.agents());

  RunLog log = drive(problem, set, settings, init_network_state(problem, start), steps, 1,
                     observer, [&](NetworkState& state, std::int64_t k) {
                       dstofw_round(state, mixing, set, problem, sampling, streams, k,
                                    settings.full_batch, settings.threads,
                                    settings.feasibility_tol);
                     });
  RunLog head;
  common_metadata(head, "dstofw", problem, steps, settings);
  head.set("q", std::to_string(q));
  head.set("q_source", settings.q ? "override" : "epoch_length(min_i n_i)");
  head.set("lambda2", fmt::format("{:.17g}", mixing.lambda2));
  head.set("full_batch", settings.full_batch ? "true" : "false");
  head.set("comm_rounds_per_iteration", "1");
  log.metadata = std::move(head.metadata);
  return log;
}

RunLog run_denfw(const FiniteSumProblem& problem, const MixingMatrix& mixing,
                 const ConstraintSet& set, const SolverSettings& settings,
                 const RoundObserver& observer) {
  check_settings(settings);
  if (mixing.agents() != problem.agents()) {
    throw ConfigError("denfw: mixing matrix size does not match agent count");
  }
  const Vector<double> start = checked_start(settings, set);
  const StepSchedule steps = denfw_steps(problem.objective(), settings.alpha);
  const int m = problem.agents();

  RunLog log = drive(
      problem, set, settings, init_network_state(problem, start), steps, 2, observer,
      [&](NetworkState& state, std::int64_t k) {
        const double gamma = steps(k);
        // Round 1: consensus on x. Local gradients at the mixed iterate.
        const Eigen::MatrixXd mixed = state.x * mixing.w.transpose();
        Eigen::MatrixXd grads(state.v.rows(), m);
        for_each_agent(m, settings.threads, [&](int i) {
          grads.col(i) = full_local_gradient(mixed.col(i), problem.local(i), problem.objective(),
                                             state.ifo[static_cast<std::size_t>(i)]);
        });
        // Round 2: mix the tracked gradient, then correct with the new local gradient.
        Eigen::MatrixXd tracked = state.d * mixing.w.transpose() + grads - state.v;
        Eigen::MatrixXd x_next(state.x.rows(), m);
        for_each_agent(m, settings.threads, [&](int i) {
          Vector<double> x_new = (1.0 - gamma) * mixed.col(i);
          x_new += gamma * set.lmo(tracked.col(i));
          ++state.lo[static_cast<std::size_t>(i)];
          check_feasible(set, x_new, settings.feasibility_tol, i, k);
          x_next.col(i) = x_new;
        });
        state.g = tracked;
        state.d = std::move(tracked);
        state.v = std::move(grads);
        state.gradient_points = mixed;
        state.x_prev = std::move(state.x);
        state.x = std::move(x_next);
      });
  RunLog head;
  common_metadata(head, "denfw", problem, steps, settings);
  head.set("lambda2", fmt::format("{:.17g}", mixing.lambda2));
  head.set("gradient_point", "mixed iterate");
  head.set("comm_rounds_per_iteration", "2");
  log.metadata = std::move(head.metadata);
  return log;
}

RunLog run_cenfw(const FiniteSumProblem& problem, const ConstraintSet& set,
                 const SolverSettings& settings, const RoundObserver& observer) {
  check_settings(settings);
  std::vector<LocalDataset> single;
  single.push_back(merge(problem.locals()));
  const FiniteSumProblem central(std::move(single), problem.objective());
  const Vector<double> start = checked_start(settings, set);
  const std::int64_t q =
      settings.q.value_or(epoch_length(central.total_samples(), central.objective()));
  const StepSchedule steps = cenfw_steps(central.objective(), q, settings.iterations);
  const SamplingSchedule sampling(q, steps);
  auto streams = make_streams(settings.sampling_seed, 1);
  MixingMatrix single_node{Eigen::MatrixXd::Ones(1, 1), 0.0};

  RunLog log = drive(central, set, settings, init_network_state(central, start), steps, 0,
                     observer, [&](NetworkState& state, std::int64_t k) {
                       dstofw_round(state, single_node, set, central, sampling, streams, k,
                                    settings.full_batch, 1, settings.feasibility_tol);
                     });
  RunLog head;
  common_metadata(head, "cenfw", central, steps, settings);
  head.set("q", std::to_string(q));
  head.set("q_source", settings.q ? "override" : "epoch_length(N)");
  head.set("batch_rule", "epoch-end q^2 scaled by (gamma_k/gamma_end)^2, ceiling carried back");
  head.set("full_batch", settings.full_batch ? "true" : "false");
  head.set("comm_rounds_per_iteration", "0");
  log.metadata = std::move(head.metadata);
  return log;
}

}  // namespace dstofw
