#include <filesystem>

#include <fmt/format.h>

#include "dstofw/constraint.hpp"
#include "dstofw/error.hpp"
#include "dstofw/graph.hpp"
#include "dstofw/runner.hpp"
#include "dstofw/solvers.hpp"

namespace dstofw {

std::string fan_out_path(const std::string& output, const std::string& solver) {
  const std::filesystem::path path(output);
  std::filesystem::path result = path.parent_path();
  result /= path.stem().string() + "_" + solver + path.extension().string();
  return result.string();
}

std::vector<SolverRun> run_experiment(const RunConfig& config, const RuntimeOptions& options) {
  ParsedData data;
  if (config.dataset.empty()) {
    SyntheticSpec spec;
    spec.samples = config.synthetic_n;
    spec.dim = config.synthetic_dim;
    spec.seed = config.synthetic_seed;
    spec.noise = config.synthetic_noise;
    spec.density = config.synthetic_density;
    data = make_synthetic(spec);
  } else {
    const LabelMap labels = config.label_map.empty() ? LabelMap{} : LabelMap::parse(config.label_map);
    data = load_libsvm(config.dataset, labels, config.dim);
  }
  if (config.normalize) scale_max_abs(data.samples, data.dim);

  FiniteSumProblem problem(
      partition(data.samples, data.dim, config.agents, parse_partition(config.partition),
                config.partition_seed, config.equalize),
      config.objective);
  const L1Ball ball(config.radius, problem.dim());

  const bool needs_network = config.solver != "cenfw";
  MixingMatrix mixing;
  std::string edges_text;
  if (needs_network) {
    const Topology topology =
        build_topology(TopologySpec::parse(config.topology), config.agents, config.topology_seed);
    mixing = metropolis_weights(topology);
    for (const auto& e : topology.edges()) {
      if (!edges_text.empty()) edges_text += ' ';
      edges_text += fmt::format("{}-{}", e.a, e.b);
    }
  }

  SolverSettings settings;
  settings.iterations = config.iterations;
  settings.alpha = config.alpha;
  settings.q = config.q;
  settings.sampling_seed = config.sampling_seed;
  settings.log_every = config.log_every;
  settings.full_batch = config.full_batch;
  settings.threads = options.threads;
  if (options.check_invariants) settings.tracking_tolerance = 1e-10;

  std::vector<std::string> solvers;
  if (config.solver == "all") {
    solvers = {"dstofw", "denfw", "cenfw"};
  } else {
    solvers = {config.solver};
  }

  std::vector<SolverRun> runs;
  for (const auto& solver : solvers) {
    RunLog log;
    if (solver == "dstofw") {
      log = run_dstofw(problem, mixing, ball, settings);
    } else if (solver == "denfw") {
      log = run_denfw(problem, mixing, ball, settings);
    } else {
      log = run_cenfw(problem, ball, settings);
    }

    std::vector<std::pair<std::string, std::string>> metadata = config_echo(config);
    if (needs_network) metadata.emplace_back("run.edges", edges_text);
    for (auto& [key, value] : log.metadata) metadata.emplace_back("run." + key, std::move(value));
    log.metadata = std::move(metadata);

    const std::string path = config.solver == "all" ? fan_out_path(config.output, solver) : config.output;
    write_csv(log, path);
    runs.push_back({solver, path, std::move(log)});
  }
  return runs;
}

}  // namespace dstofw
