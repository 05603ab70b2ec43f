// Acceptance checks. Prints one PASS/FAIL line per criterion.
//
//   acceptance [--only N]... [--exclude N]...
//
// Exit 0 when every selected criterion passes, 1 otherwise, 77 when the only
// selected criterion is the a9a one and the data file is missing.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>

#include <fmt/format.h>

#include "dstofw/constraint.hpp"
#include "dstofw/graph.hpp"
#include "dstofw/runner.hpp"
#include "dstofw/solvers.hpp"

using namespace dstofw;
namespace fs = std::filesystem;

namespace {

constexpr int kSkipped = 77;

struct Outcome {
  bool pass = false;
  std::string detail;
  bool skipped = false;
};

struct Setup {
  FiniteSumProblem problem;
  MixingMatrix mixing;
  L1Ball ball;
};

Setup synthetic_setup(int m, Eigen::Index n_local, Eigen::Index dim, Objective objective,
                      const char* topology, double radius = 20.0, std::uint64_t data_seed = 1) {
  const auto data = make_synthetic({.samples = n_local * m, .dim = dim, .seed = data_seed});
  FiniteSumProblem problem(
      partition(data.samples, data.dim, m, PartitionStrategy::round_robin, 1), objective);
  MixingMatrix mixing = metropolis_weights(build_topology(TopologySpec::parse(topology), m, 1));
  return {std::move(problem), std::move(mixing), L1Ball(radius, dim)};
}

int hardware_threads() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

Outcome tracking_identity() {
  const Setup s = synthetic_setup(4, 256, 20, Objective::convex, "ring");
  const RunLog log = run_dstofw(s.problem, s.mixing, s.ball, {.iterations = 500, .log_every = 50});
  const double dev = log.max_tracking_deviation;
  return {dev <= 1e-10, fmt::format("max_k max(|d-v|, |d-g|)_inf = {:.3e} (tol 1e-10)", dev)};
}

Outcome full_batch_tracking() {
  const Setup s = synthetic_setup(4, 256, 20, Objective::convex, "ring");
  double worst = 0.0;
  run_dstofw(s.problem, s.mixing, s.ball, {.iterations = 500, .log_every = 50, .full_batch = true},
             [&](std::int64_t, const NetworkState& state) {
               Eigen::VectorXd exact = Eigen::VectorXd::Zero(s.problem.dim());
               for (int i = 0; i < s.problem.agents(); ++i) {
                 std::int64_t scratch = 0;
                 exact += full_local_gradient(state.x.col(i), s.problem.local(i),
                                              s.problem.objective(), scratch);
               }
               exact /= s.problem.agents();
               const Eigen::VectorXd d_bar = state.d.rowwise().mean();
               worst = std::max(worst, (d_bar - exact).lpNorm<Eigen::Infinity>());
             });
  return {worst <= 1e-8, fmt::format("max_k |d_bar - mean grad f_i(x_i)|_inf = {:.3e} (tol 1e-8)", worst)};
}

Outcome lmo_bruteforce() {
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<int> dims(1, 10);
  std::uniform_real_distribution<double> radii(0.1, 100.0);
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const int d = dims(rng);
    const double radius = radii(rng);
    Eigen::VectorXd g(d);
    for (int j = 0; j < d; ++j) g(j) = normal(rng);
    double best = std::numeric_limits<double>::infinity();
    for (int j = 0; j < d; ++j) best = std::min({best, radius * g(j), -radius * g(j)});
    worst = std::max(worst, std::abs(lmo_l1(g, radius).dot(g) - best));
  }
  return {worst <= 1e-12, fmt::format("1000 directions, max |lmo value - vertex min| = {:.3e} (tol 1e-12)", worst)};
}

Outcome sampling_rule() {
  std::vector<std::string> problems;
  struct Case {
    std::int64_t q;
    Objective mode;
  };
  for (const Case c : {Case{4, Objective::convex}, Case{7, Objective::convex},
                       Case{14, Objective::nonconvex}}) {
    const SamplingSchedule s(c.q, dstofw_steps(c.mode, 0.5));
    const std::int64_t K = 10 * c.q;
    for (std::int64_t k = 1; k <= K; ++k) {
      if (s.is_refresh(k)) {
        if (s.rule_size(k) != c.q * c.q) problems.push_back(fmt::format("q={} k={}: |S|!=q^2", c.q, k));
        continue;
      }
      if (k + 1 > K || s.is_refresh(k + 1) || s.epoch_end(k) != s.epoch_end(k + 1)) {
        // Last in-epoch pair is (k, refresh k+1): sizes still non-increasing.
        if (k + 1 <= K && s.rule_size(k) < s.rule_size(k + 1))
          problems.push_back(fmt::format("q={} k={}: size increases into the epoch end", c.q, k));
        continue;
      }
      const double lhs = s.steps()(k) / std::sqrt(static_cast<double>(s.rule_size(k)));
      const double rhs = s.steps()(k + 1) / std::sqrt(static_cast<double>(s.rule_size(k + 1)));
      if (lhs > rhs + 1e-12) problems.push_back(fmt::format("q={} k={}: rule inequality", c.q, k));
      if (s.rule_size(k) < s.rule_size(k + 1))
        problems.push_back(fmt::format("q={} k={}: size increases", c.q, k));
    }
  }
  const SamplingSchedule q4(4, dstofw_steps(Objective::convex, 0.5));
  const std::int64_t s5 = q4.rule_size(5), s6 = q4.rule_size(6), s7 = q4.rule_size(7);
  if (s5 != 29 || s6 != 21 || s7 != 16) problems.push_back("worked values differ");
  std::string detail = fmt::format("q=4 convex sizes k=5,6,7 -> {},{},{}; ", s5, s6, s7);
  detail += problems.empty() ? "all epochs compliant for (4,cvx),(7,cvx),(14,ncvx), K=10q"
                             : fmt::format("{} violations, first: {}", problems.size(), problems.front());
  return {problems.empty(), detail};
}

/// Least-squares slope of log y against log x.
double log_log_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const auto n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

Outcome consensus_rate() {
  const Setup s = synthetic_setup(10, 256, 20, Objective::convex, "ring-chords");
  const RunLog log = run_dstofw(s.problem, s.mixing, s.ball,
                                {.iterations = 4000, .threads = hardware_threads()});
  std::vector<double> ks, errs;
  std::int64_t zeros = 0;
  for (const auto& r : log.records) {
    if (r.k < 50 || r.k > 4000) continue;
    if (!(r.consensus_err > 0.0)) {
      ++zeros;
      continue;
    }
    ks.push_back(static_cast<double>(r.k));
    errs.push_back(r.consensus_err);
  }
  if (ks.size() < 2) return {false, "too few positive consensus errors to fit"};
  const double slope = log_log_slope(ks, errs);
  return {slope <= -0.8,
          fmt::format("m=10 ring-chords, gamma=2/(k+1), K=4000: slope over [50,4000] = {:.4f} "
                      "(need <= -0.8; {} exact-zero points skipped)",
                      slope, zeros)};
}

Outcome convex_rate() {
  const Setup s = synthetic_setup(4, 256, 20, Objective::convex, "ring");
  const RunLog reference = run_denfw(s.problem, s.mixing, s.ball,
                                     {.iterations = 50000, .log_every = 50000, .threads = 4});
  const double f_star = reference.records.back().loss;
  double at200 = 0.0, at2000 = 0.0;
  const int seeds = 5;
  for (int seed = 1; seed <= seeds; ++seed) {
    const RunLog log = run_dstofw(
        s.problem, s.mixing, s.ball,
        {.iterations = 2000, .sampling_seed = static_cast<std::uint64_t>(seed), .log_every = 1});
    for (const auto& r : log.records) {
      if (r.k == 200) at200 += r.loss / seeds;
      if (r.k == 2000) at2000 += r.loss / seeds;
    }
  }
  const double gap200 = at200 - f_star, gap2000 = at2000 - f_star;
  const double ratio = gap2000 / gap200;
  return {gap200 > 0.0 && ratio <= 0.2,
          fmt::format("F*~{:.12f} (50k DenFW), mean gap k=200 {:.4e}, k=2000 {:.4e}, ratio {:.4f} "
                      "(need <= 0.2)",
                      f_star, gap200, gap2000, ratio)};
}

Outcome nonconvex_gap() {
  const Setup s = synthetic_setup(4, 256, 20, Objective::nonconvex, "ring");
  auto mean_stat = [&](std::int64_t K) {
    double total = 0.0;
    for (int seed = 1; seed <= 5; ++seed) {
      const RunLog log = run_dstofw(
          s.problem, s.mixing, s.ball,
          {.iterations = K, .alpha = 0.5, .sampling_seed = static_cast<std::uint64_t>(seed)});
      total += *min_fw_gap_second_half(log) / 5.0;
    }
    return total;
  };
  const double small = mean_stat(1024), large = mean_stat(4096);
  const double ratio = large / small;
  return {ratio <= 0.7, fmt::format("mean min second-half FW-gap K=1024 {:.4e}, K=4096 {:.4e}, "
                                    "ratio {:.4f} (need <= 0.7)",
                                    small, large, ratio)};
}

Outcome oracle_accounting() {
  std::vector<std::string> problems;
  struct Case {
    int m;
    Eigen::Index n;
    Objective mode;
    std::int64_t K;
  };
  for (const Case c : {Case{4, 256, Objective::convex, 500}, Case{10, 256, Objective::nonconvex, 300},
                       Case{3, 20, Objective::convex, 200}, Case{5, 1000, Objective::nonconvex, 250}}) {
    const Setup s = synthetic_setup(c.m, c.n, 10, c.mode, "ring");
    const RunLog log = run_dstofw(s.problem, s.mixing, s.ball, {.iterations = c.K, .log_every = 100});
    const SamplingSchedule sched(epoch_length(c.n, c.mode), dstofw_steps(c.mode, 0.5));
    std::int64_t expected = c.m * c.n;
    for (std::int64_t k = 1; k <= c.K; ++k)
      expected += sched.is_refresh(k) ? c.m * c.n : 2 * c.m * sched.sample_size(k, c.n);
    const auto& last = log.records.back();
    if (last.ifo_cum != expected)
      problems.push_back(fmt::format("m={} n={}: ifo {} != {}", c.m, c.n, last.ifo_cum, expected));
    if (last.lo_cum != c.m * c.K)
      problems.push_back(fmt::format("m={} n={}: lo {} != {}", c.m, c.n, last.lo_cum, c.m * c.K));
  }
  return {problems.empty(), problems.empty() ? "4 runs: ifo_cum and lo_cum match the closed form"
                                             : problems.front()};
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream text;
  text << in.rdbuf();
  return text.str();
}

Outcome determinism() {
  const fs::path dir = fs::path(DSTOFW_TEST_TMP) / "acceptance_determinism";
  fs::create_directories(dir);
  std::vector<std::string> problems;
  int compared = 0;
  for (const char* objective : {"convex", "nonconvex"}) {
    RunConfig c = parse_config(fmt::format(
        "objective={}\nsolver=all\nagents=6\nsynthetic_n=1200\nsynthetic_dim=15\n"
        "iterations=300\ntopology=er:0.4\nseed=11\n",
        objective));
    c.output = (dir / "run.csv").string();
    std::vector<std::string> first;
    for (const auto& run : run_experiment(c, {.threads = 1})) first.push_back(read_file(run.output));
    for (int threads : {1, 4}) {
      const auto runs = run_experiment(c, {.threads = threads});
      for (std::size_t i = 0; i < runs.size(); ++i) {
        ++compared;
        if (read_file(runs[i].output) != first[i])
          problems.push_back(fmt::format("{} {} threads={} differs", objective, runs[i].solver, threads));
      }
    }
  }
  return {problems.empty(),
          problems.empty() ? fmt::format("{} repeated CSVs byte-identical (threads 1 and 4)", compared)
                           : problems.front()};
}

struct A9aComparison {
  double dst_loss, den_loss;
  std::int64_t dst_ifo, den_ifo;
};

A9aComparison compare_on(const ParsedData& data, Objective objective) {
  const FiniteSumProblem problem(
      partition(data.samples, data.dim, 10, PartitionStrategy::round_robin, 1), objective);
  const MixingMatrix mixing = metropolis_weights(build_topology(TopologySpec::parse("ring-chords"), 10, 1));
  const L1Ball ball(20.0, problem.dim());
  const SolverSettings settings{.iterations = 2000, .log_every = 2000, .threads = hardware_threads()};
  const RunLog dst = run_dstofw(problem, mixing, ball, settings);
  const RunLog den = run_denfw(problem, mixing, ball, settings);
  return {dst.records.back().loss, den.records.back().loss, dst.records.back().ifo_cum,
          den.records.back().ifo_cum};
}

Outcome judge_trend(const ParsedData& data, const std::string& label) {
  std::string detail = label;
  bool ok = true;
  for (Objective obj : {Objective::convex, Objective::nonconvex}) {
    const auto c = compare_on(data, obj);
    const double ratio = static_cast<double>(c.den_ifo) / static_cast<double>(c.dst_ifo);
    ok = ok && c.dst_loss <= c.den_loss && ratio >= 2.0;
    detail += fmt::format(" | {}: loss dstofw {:.6f} vs denfw {:.6f}, ifo denfw/dstofw {:.2f}",
                          to_string(obj), c.dst_loss, c.den_loss, ratio);
  }
  return {ok, detail};
}

Outcome real_data_trend() {
  const char* env = std::getenv("DSTOFW_A9A");
  const std::string path = env && *env ? env : DSTOFW_DEFAULT_A9A;
  if (!fs::exists(path)) {
    // Supplementary only: same shapes as a9a (32561 x 123, ~11% binary
    // features). Reported, never counted as the criterion.
    const auto standin = make_synthetic(
        {.samples = 32561, .dim = 123, .seed = 9, .noise = 0.15, .density = 0.113});
    const Outcome o = judge_trend(standin, "a9a-shaped synthetic stand-in");
    std::cout << fmt::format("INFO 9: {} [{}]\n", o.detail, o.pass ? "trend holds" : "trend fails");
    return {false, fmt::format("a9a not found at '{}' (set DSTOFW_A9A)", path), true};
  }
  const auto data = load_libsvm(path, {}, 123);
  if (data.samples.size() != 32561) {
    return {false, fmt::format("{} has {} samples, expected 32561", path, data.samples.size())};
  }
  return judge_trend(data, "a9a m=10 K=2000");
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> check;
};

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only, excluded;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if ((arg == "--only" || arg == "--exclude") && i + 1 < argc) {
      (arg == "--only" ? only : excluded).insert(std::atoi(argv[++i]));
    } else {
      std::cerr << "usage: acceptance [--only N]... [--exclude N]...\n";
      return 2;
    }
  }

  const std::vector<Criterion> criteria{
      {1, "tracking identity", tracking_identity},
      {2, "full-batch tracking", full_batch_tracking},
      {3, "LMO brute force", lmo_bruteforce},
      {4, "sampling rule", sampling_rule},
      {5, "consensus rate", consensus_rate},
      {6, "convex rate", convex_rate},
      {7, "non-convex FW-gap decay", nonconvex_gap},
      {8, "oracle accounting", oracle_accounting},
      {9, "a9a trend", real_data_trend},
      {10, "determinism", determinism},
  };

  int failures = 0, skips = 0, ran = 0;
  for (const auto& c : criteria) {
    if ((!only.empty() && !only.contains(c.id)) || excluded.contains(c.id)) continue;
    ++ran;
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, fmt::format("exception: {}", e.what())};
    }
    const char* tag = o.skipped ? "SKIP" : o.pass ? "PASS" : "FAIL";
    std::cout << fmt::format("{} {}: {}: {}\n", tag, c.id, c.name, o.detail) << std::flush;
    if (o.skipped) {
      ++skips;
    } else if (!o.pass) {
      ++failures;
    }
  }
  if (failures > 0) return 1;
  if (ran > 0 && skips == ran) return kSkipped;
  return 0;
}
