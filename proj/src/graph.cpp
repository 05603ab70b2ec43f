#include "dstofw/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "dstofw/error.hpp"

namespace dstofw {

namespace {

std::vector<Edge> normalized(std::vector<Edge> edges) {
  for (auto& e : edges) {
    if (e.a > e.b) std::swap(e.a, e.b);
  }
  std::sort(edges.begin(), edges.end());
  return edges;
}

std::vector<Edge> ring_edges(int m) {
  std::vector<Edge> edges;
  if (m == 2) return {{0, 1}};
  if (m < 3) return edges;
  for (int i = 0; i < m; ++i) edges.push_back({i, (i + 1) % m});
  return edges;
}

}  // namespace

Topology::Topology(int agents, std::vector<Edge> edges)
    : agents_(agents), edges_(normalized(std::move(edges))), adjacency_(agents > 0 ? agents : 0) {
  if (agents < 1) throw ConfigError("topology: agent count must be >= 1");
  for (std::size_t k = 0; k < edges_.size(); ++k) {
    const Edge& e = edges_[k];
    if (e.a < 0 || e.b >= agents) {
      throw ConfigError(fmt::format("topology: edge {{{}, {}}} out of range for {} agents", e.a,
                                    e.b, agents));
    }
    if (e.a == e.b) throw ConfigError(fmt::format("topology: self-loop at agent {}", e.a));
    if (k > 0 && edges_[k - 1] == e) {
      throw ConfigError(fmt::format("topology: duplicate edge {{{}, {}}}", e.a, e.b));
    }
    adjacency_[e.a].push_back(e.b);
    adjacency_[e.b].push_back(e.a);
  }
  if (!is_connected(agents_, edges_)) {
    throw ConfigError(fmt::format("topology: graph over {} agents with {} edges is disconnected",
                                  agents_, edges_.size()));
  }
}

bool Topology::is_connected(int agents, const std::vector<Edge>& edges) {
  if (agents <= 1) return agents == 1;
  std::vector<int> parent(agents);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  int components = agents;
  for (const auto& e : edges) {
    if (e.a < 0 || e.b < 0 || e.a >= agents || e.b >= agents) continue;
    const int ra = find(e.a);
    const int rb = find(e.b);
    if (ra != rb) {
      parent[ra] = rb;
      --components;
    }
  }
  return components == 1;
}

std::vector<Edge> read_edge_list(std::istream& in) {
  std::vector<Edge> edges;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    long a = 0, b = 0;
    if (!(fields >> a)) {
      if (fields.eof()) continue;  // blank
      throw ParseError("edge list: expected \"i j\"", line_no);
    }
    std::string extra;
    if (!(fields >> b) || (fields >> extra)) throw ParseError("edge list: expected \"i j\"", line_no);
    if (a < 0 || b < 0 || a > std::numeric_limits<int>::max() ||
        b > std::numeric_limits<int>::max()) {
      throw ParseError("edge list: negative or oversized agent index", line_no);
    }
    edges.push_back({static_cast<int>(std::min(a, b)), static_cast<int>(std::max(a, b))});
  }
  return edges;
}

TopologySpec TopologySpec::parse(std::string_view text) {
  TopologySpec spec;
  spec.text = std::string(text);
  if (text == "ring") {
    spec.kind = TopologyKind::ring;
  } else if (text == "path") {
    spec.kind = TopologyKind::path;
  } else if (text == "complete") {
    spec.kind = TopologyKind::complete;
  } else if (text == "ring-chords") {
    spec.kind = TopologyKind::ring_chords;
  } else if (text.starts_with("er:")) {
    spec.kind = TopologyKind::erdos_renyi;
    const std::string value(text.substr(3));
    std::size_t used = 0;
    try {
      spec.p = std::stod(value, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != value.size() || !(spec.p > 0.0 && spec.p <= 1.0)) {
      throw ConfigError(fmt::format("topology: edge probability in '{}' must lie in (0, 1]", text));
    }
  } else if (text.starts_with("file:")) {
    spec.kind = TopologyKind::custom;
    const std::string path(text.substr(5));
    std::ifstream in(path);
    if (!in) throw IoError(fmt::format("topology: cannot open edge list '{}'", path));
    spec.edges = read_edge_list(in);
  } else {
    throw ConfigError(fmt::format(
        "topology: unknown kind '{}' (ring, path, complete, ring-chords, er:<p>, file:<path>)",
        text));
  }
  return spec;
}

Topology build_topology(const TopologySpec& spec, int agents, std::uint64_t seed) {
  if (agents < 1) throw ConfigError("topology: agent count must be >= 1");
  std::vector<Edge> edges;
  switch (spec.kind) {
    case TopologyKind::ring:
      edges = ring_edges(agents);
      break;
    case TopologyKind::path:
      for (int i = 0; i + 1 < agents; ++i) edges.push_back({i, i + 1});
      break;
    case TopologyKind::complete:
      for (int i = 0; i < agents; ++i)
        for (int j = i + 1; j < agents; ++j) edges.push_back({i, j});
      break;
    case TopologyKind::ring_chords: {
      // Ring plus chords i <-> i + m/2 for even i below m/2.
      edges = ring_edges(agents);
      const int half = agents / 2;
      if (agents >= 6) {
        for (int i = 0; i < half; i += 2) edges.push_back({i, i + half});
      }
      break;
    }
    case TopologyKind::erdos_renyi: {
      for (int attempt = 0; attempt < kMaxErdosRenyiRetries; ++attempt) {
        std::mt19937_64 rng(seed + static_cast<std::uint64_t>(attempt));
        std::bernoulli_distribution coin(spec.p);
        edges.clear();
        for (int i = 0; i < agents; ++i)
          for (int j = i + 1; j < agents; ++j)
            if (coin(rng)) edges.push_back({i, j});
        if (Topology::is_connected(agents, edges)) return Topology(agents, edges);
      }
      throw ConfigError(fmt::format("topology: no connected er:{} graph on {} agents after {} draws",
                                    spec.p, agents, kMaxErdosRenyiRetries));
    }
    case TopologyKind::custom:
      edges = spec.edges;
      break;
  }
  return Topology(agents, std::move(edges));
}

MixingMatrix metropolis_weights(const Topology& topology) {
  const int m = topology.agents();
  MixingMatrix mix;
  mix.w = Eigen::MatrixXd::Zero(m, m);
  for (const auto& e : topology.edges()) {
    const double weight = 1.0 / (1.0 + std::max(topology.degree(e.a), topology.degree(e.b)));
    mix.w(e.a, e.b) = weight;
    mix.w(e.b, e.a) = weight;
  }
  for (int i = 0; i < m; ++i) {
    double off = 0.0;
    for (int j : topology.neighbors(i)) off += mix.w(i, j);
    mix.w(i, i) = 1.0 - off;
  }
  mix.lambda2 = m == 1 ? 0.0 : second_eigenvalue(mix.w);
  return mix;
}

double second_eigenvalue(const Eigen::MatrixXd& w, double tolerance, int max_iterations) {
  const Eigen::Index m = w.rows();
  if (m != w.cols()) throw NumericError("second_eigenvalue: matrix is not square");
  if (m <= 1) return 0.0;

  const Eigen::MatrixXd deflated = w.array() - 1.0 / static_cast<double>(m);
  Eigen::VectorXd v(m);
  for (Eigen::Index i = 0; i < m; ++i) v(i) = std::sin(1.0 + 0.7 * static_cast<double>(i));
  v.array() -= v.mean();
  v.normalize();

  // Iterate on B^2 (positive semidefinite) so that eigenvalue pairs +-lambda
  // do not stall the iteration.
  for (int it = 0; it < max_iterations; ++it) {
    const Eigen::VectorXd bv = deflated * v;
    const double modulus = bv.norm();
    if (modulus < 1e-150) return 0.0;
    const Eigen::VectorXd b2v = deflated * bv;
    const double rayleigh = v.dot(b2v);
    const double residual = (b2v - rayleigh * v).norm();
    if (residual <= tolerance * tolerance || residual <= tolerance * rayleigh * 1e-2) {
      return std::sqrt(std::max(rayleigh, 0.0));
    }
    v = b2v / b2v.norm();
  }
  throw NumericError(fmt::format(
      "second_eigenvalue: power iteration did not converge in {} iterations (near-degenerate "
      "spectrum)",
      max_iterations));
}

int k0_alpha(double lambda2, double alpha) {
  if (!(lambda2 >= 0.0 && lambda2 < 1.0)) {
    throw NumericError(fmt::format("k0_alpha: lambda2 = {} violates 0 <= lambda2 < 1", lambda2));
  }
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw NumericError(fmt::format("k0_alpha: alpha = {} outside (0, 1]", alpha));
  }
  for (long k = 1; k < std::numeric_limits<int>::max(); ++k) {
    const double kd = static_cast<double>(k);
    const double bound = std::pow(kd / (kd + 1.0), alpha) / (1.0 + std::pow(kd, -alpha));
    if (lambda2 <= bound) return static_cast<int>(k);
  }
  throw NumericError("k0_alpha: scan exhausted");
}

}  // namespace dstofw
