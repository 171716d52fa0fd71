#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "grasper/rng.hpp"

namespace grasper {

// Undirected graph with sorted neighbor lists. Instances produced by edge
// dropout keep a mapping back to the base map's node ids (orig_ids) so a
// shared embedding vocabulary stays consistent across instances.
struct Graph {
  int node_count = 0;
  std::vector<std::vector<int>> adjacency;
  std::vector<std::array<double, 2>> coords;  // empty or one entry per node
  int base_node_count = 0;                    // embedding vocab of the map family
  std::vector<int> orig_ids;                  // dense id -> base-map id

  static Graph from_edges(int nodes, const std::vector<std::pair<int, int>>& edges);

  bool has_coords() const { return !coords.empty(); }
  int degree(int v) const { return static_cast<int>(adjacency[static_cast<size_t>(v)].size()); }
  int max_degree() const;
  int64_t edge_count() const;
  int orig_id(int v) const { return orig_ids.empty() ? v : orig_ids[static_cast<size_t>(v)]; }

  // Checks: undirected symmetry, no duplicates, ids in range.
  void validate() const;
};

// BFS distances from src; unreachable nodes get -1.
std::vector<int> bfs_distances(const Graph& g, int src);
// Distance to the nearest of several sources; unreachable -1.
std::vector<int> bfs_distances_multi(const Graph& g, const std::vector<int>& srcs);
int shortest_dist(const Graph& g, int src, int dst);

// One shortest path drawn uniformly at random among all shortest paths
// (predecessor choice during the BFS backtrace is weighted by path counts).
// Throws no_path_error when dst is unreachable.
std::vector<int> shortest_path_sample(const Graph& g, int src, int dst, Rng& rng);

// Deterministic shortest path taking the smallest-id next node at each step.
std::vector<int> shortest_path_lexicographic(const Graph& g, int src, int dst);

// Number of shortest src->dst paths (as a double; exact below 2^53).
double count_shortest_paths(const Graph& g, int src, int dst);

}  // namespace grasper
