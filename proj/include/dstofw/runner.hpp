#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dstofw/metrics.hpp"
#include "dstofw/problem.hpp"

namespace dstofw {

/// Experiment definition. Every field is a flat config key of the same name.
struct RunConfig {
  std::string solver = "dstofw";  // dstofw | denfw | cenfw | all
  std::string dataset;            // LIBSVM path; empty selects the synthetic generator
  std::int64_t synthetic_n = 2560;
  std::int64_t synthetic_dim = 20;
  std::uint64_t synthetic_seed = 1;
  double synthetic_noise = 0.1;
  double synthetic_density = 1.0;
  std::string label_map;  // empty: -1/+1 pass through, 2 -> -1
  std::optional<std::int64_t> dim;
  Objective objective = Objective::convex;
  int agents = 10;
  std::string topology = "ring-chords";
  std::string set = "l1";
  double radius = 20.0;
  std::int64_t iterations = 1000;
  double alpha = 0.5;
  std::optional<std::int64_t> q;
  std::uint64_t partition_seed = 1;
  std::uint64_t sampling_seed = 1;
  std::uint64_t topology_seed = 1;
  std::string partition = "round_robin";
  bool equalize = true;
  bool normalize = false;
  bool full_batch = false;
  std::int64_t log_every = 1;
  std::string output = "dstofw.csv";
};

/// Ordered key -> value entries before validation.
using ConfigEntries = std::map<std::string, std::string>;

/// Flat "key=value" text, one per line, '#' starts a comment. Duplicate keys
/// are rejected.
ConfigEntries parse_config_entries(std::string_view text);

/// Validates entries into a RunConfig. Unknown keys, type mismatches and
/// range violations throw ConfigError naming the key. `objective` is
/// required. `seed` sets all three seeds unless a specific seed key is given.
RunConfig build_config(const ConfigEntries& entries);

/// parse_config_entries + build_config.
RunConfig parse_config(std::string_view text);

/// Every RunConfig field as key=value, in declaration order.
std::vector<std::pair<std::string, std::string>> config_echo(const RunConfig& config);

struct RuntimeOptions {
  int threads = 1;
  bool check_invariants = false;
};

struct SolverRun {
  std::string solver;
  std::string output;
  RunLog log;
};

/// Builds topology, weights, data, schedule and solver(s), runs them and
/// writes one CSV per solver. "all" fans out over dstofw, denfw, cenfw with
/// the same data partition and seeds.
std::vector<SolverRun> run_experiment(const RunConfig& config, const RuntimeOptions& options = {});

/// Output path for one solver of a fan-out: "out.csv" -> "out_<solver>.csv".
std::string fan_out_path(const std::string& output, const std::string& solver);

}  // namespace dstofw
