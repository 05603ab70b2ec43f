#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace dstofw {

/// Undirected edge with `a < b`.
struct Edge {
  int a = 0;
  int b = 0;
  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// Connected undirected graph over agents 0..m-1. No self-loops, no
/// duplicate edges; both are enforced at construction.
class Topology {
 public:
  Topology(int agents, std::vector<Edge> edges);

  int agents() const { return agents_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<int>& neighbors(int i) const { return adjacency_[i]; }
  int degree(int i) const { return static_cast<int>(adjacency_[i].size()); }

  static bool is_connected(int agents, const std::vector<Edge>& edges);

 private:
  int agents_;
  std::vector<Edge> edges_;
  std::vector<std::vector<int>> adjacency_;
};

enum class TopologyKind { ring, path, complete, erdos_renyi, ring_chords, custom };

/// Parsed topology description. Accepted text forms:
///   ring | path | complete | ring-chords | er:<p> | file:<edge-list path>
struct TopologySpec {
  TopologyKind kind = TopologyKind::ring_chords;
  double p = 0.5;
  std::vector<Edge> edges;  // custom only
  std::string text = "ring-chords";

  static TopologySpec parse(std::string_view text);
};

/// Reads "i j" pairs, one per line, 0-based, whitespace separated. Blank
/// lines and '#' comments are skipped. Pairs are normalized to a < b.
std::vector<Edge> read_edge_list(std::istream& in);

/// Erdos-Renyi draws retry with seed+1, seed+2, ... until connected.
inline constexpr int kMaxErdosRenyiRetries = 1000;

Topology build_topology(const TopologySpec& spec, int agents, std::uint64_t seed);

struct MixingMatrix {
  Eigen::MatrixXd w;
  double lambda2 = 0.0;

  int agents() const { return static_cast<int>(w.rows()); }
};

/// Metropolis-Hastings weights: w_ij = 1/(1+max(deg_i,deg_j)) on edges,
/// diagonal fills each row to 1.
MixingMatrix metropolis_weights(const Topology& topology);

/// Modulus of the largest eigenvalue of `w` on the complement of the
/// consensus direction, by power iteration on (W - 11'/m)^2. Throws
/// NumericError when `max_iterations` is exhausted.
double second_eigenvalue(const Eigen::MatrixXd& w, double tolerance = 1e-10,
                         int max_iterations = 2'000'000);

/// Smallest positive k0 with lambda2 <= (k0/(k0+1))^alpha / (1 + k0^-alpha).
int k0_alpha(double lambda2, double alpha);

}  // namespace dstofw
