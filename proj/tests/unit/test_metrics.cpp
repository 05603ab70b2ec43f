#include <doctest.h>

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "dstofw/error.hpp"
#include "dstofw/metrics.hpp"
#include "dstofw/solvers.hpp"

using namespace dstofw;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> values) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v(i++) = x;
  return v;
}

std::string csv_of(const RunLog& log) {
  std::ostringstream out;
  emit_csv(log, out);
  return out.str();
}

RunLog small_run(int m, std::int64_t K, Objective obj = Objective::convex) {
  const auto data = make_synthetic({.samples = 30 * m, .dim = 4, .seed = 2});
  const FiniteSumProblem problem(
      partition(data.samples, data.dim, m, PartitionStrategy::round_robin, 1), obj);
  const auto mixing = metropolis_weights(build_topology(TopologySpec::parse("ring"), m, 1));
  return run_dstofw(problem, mixing, L1Ball(20.0, 4), {.iterations = K});
}

}  // namespace

TEST_CASE("fw_gap worked examples") {
  const L1Ball ball20(20.0, 3);
  CHECK(fw_gap(Eigen::VectorXd::Zero(3), vec({3, -5, 1}), ball20) == 100.0);
  CHECK(fw_gap(vec({2, -1, 0}), Eigen::VectorXd::Zero(3), ball20) == 0.0);
  const L1Ball ball1(1.0, 2);
  CHECK(fw_gap(vec({1, 0}), vec({1, 0}), ball1) == 2.0);
  CHECK(fw_gap_l1(vec({1, 0}), vec({1, 0}), 1.0) == 2.0);
}

TEST_CASE("fw_gap agrees with the l1 closed form and is non-negative on the ball") {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const Eigen::Index d = 1 + static_cast<Eigen::Index>(rng() % 12);
    const double radius = 0.1 + 30 * unit(rng);
    Eigen::VectorXd x(d), g(d);
    for (Eigen::Index j = 0; j < d; ++j) {
      x(j) = normal(rng);
      g(j) = normal(rng);
    }
    x *= radius * unit(rng) / x.lpNorm<1>();
    const L1Ball ball(radius, d);
    const double via_lmo = fw_gap(x, g, ball);
    CHECK(std::abs(via_lmo - fw_gap_l1(x, g, radius)) <= 1e-10 * std::max(1.0, std::abs(via_lmo)));
    CHECK(via_lmo >= -1e-9);
  }
}

TEST_CASE("consensus_error worked examples") {
  Eigen::MatrixXd same(2, 3);
  same << 1, 1, 1, -2, -2, -2;
  CHECK(consensus_error(same) == 0.0);
  CHECK(consensus_error(Eigen::MatrixXd::Random(4, 1)) == 0.0);
  Eigen::MatrixXd pair(2, 2);
  pair << 1, -1, 0, 0;
  CHECK(consensus_error(pair) == 1.0);
}

TEST_CASE("csv layout") {
  const RunLog log = small_run(1, 0);
  RunLog named = log;
  named.metadata.clear();
  named.set("solver", "dstofw");
  named.set("seed", "1");
  const std::string text = csv_of(named);
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  CHECK(line == "# solver=dstofw");
  std::getline(in, line);
  CHECK(line == "# seed=1");
  std::getline(in, line);
  CHECK(line == kCsvHeader);
  std::getline(in, line);
  CHECK(line.rfind("1,1,0.69314718055994529,", 0) == 0);
  std::getline(in, line);
  CHECK(line == "# min_fw_gap_second_half=nan");
  std::getline(in, line);
  CHECK(line == "# final_loss=0.69314718055994529");
  CHECK_FALSE(std::getline(in, line));
}

TEST_CASE("initial loss at the origin round-trips ln 2") {
  const RunLog log = small_run(1, 0);
  REQUIRE(log.records.size() == 1);
  CHECK(std::abs(log.records[0].loss - std::log(2.0)) <= 2e-16);
  const std::string text = csv_of(log);
  const auto row = text.find("\n1,");
  REQUIRE(row != std::string::npos);
  std::istringstream fields(text.substr(row + 1));
  std::string k, gamma, loss;
  std::getline(fields, k, ',');
  std::getline(fields, gamma, ',');
  std::getline(fields, loss, ',');
  CHECK(std::stod(loss) == log.records[0].loss);
  CHECK(loss == "0.69314718055994529");
}

TEST_CASE("identical runs emit identical bytes") {
  CHECK(csv_of(small_run(3, 40)) == csv_of(small_run(3, 40)));
  CHECK(csv_of(small_run(3, 40, Objective::nonconvex)) ==
        csv_of(small_run(3, 40, Objective::nonconvex)));
}

TEST_CASE("second-half minimum FW-gap") {
  RunLog log;
  log.iterations = 4;
  for (std::int64_t k = 1; k <= 5; ++k) {
    IterationRecord r;
    r.k = k;
    r.fw_gap = 10.0 - k;
    log.records.push_back(r);
  }
  REQUIRE(min_fw_gap_second_half(log).has_value());
  CHECK(*min_fw_gap_second_half(log) == 6.0);
  log.iterations = 0;
  CHECK_FALSE(min_fw_gap_second_half(log).has_value());
}

TEST_CASE("unwritable sinks raise I/O errors") {
  const RunLog log = small_run(1, 0);
  CHECK_THROWS_AS(write_csv(log, "/nonexistent-dir/out.csv"), IoError);
  std::ostringstream broken;
  broken.setstate(std::ios::badbit);
  CHECK_THROWS_AS(emit_csv(log, broken), IoError);
}
