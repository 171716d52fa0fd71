#include "grasper/graph.hpp"

#include <algorithm>
#include <deque>
#include <numeric>
#include <string>

#include "grasper/error.hpp"

namespace grasper {

Graph Graph::from_edges(int nodes, const std::vector<std::pair<int, int>>& edges) {
  Graph g;
  g.node_count = nodes;
  g.base_node_count = nodes;
  g.adjacency.assign(static_cast<size_t>(nodes), {});
  for (const auto& [u, v] : edges) {
    if (u < 0 || u >= nodes || v < 0 || v >= nodes)
      throw input_error("Graph::from_edges: node id out of range");
    if (u == v) throw input_error("Graph::from_edges: self-loop edges are not allowed");
    g.adjacency[static_cast<size_t>(u)].push_back(v);
    g.adjacency[static_cast<size_t>(v)].push_back(u);
  }
  for (auto& nbrs : g.adjacency) {
    std::sort(nbrs.begin(), nbrs.end());
    nbrs.erase(std::unique(nbrs.begin(), nbrs.end()), nbrs.end());
  }
  return g;
}

int Graph::max_degree() const {
  int best = 0;
  for (const auto& nbrs : adjacency) best = std::max(best, static_cast<int>(nbrs.size()));
  return best;
}

int64_t Graph::edge_count() const {
  int64_t total = 0;
  for (const auto& nbrs : adjacency) total += static_cast<int64_t>(nbrs.size());
  return total / 2;
}

void Graph::validate() const {
  if (static_cast<int>(adjacency.size()) != node_count)
    throw input_error("Graph: adjacency size does not match node_count");
  if (!coords.empty() && static_cast<int>(coords.size()) != node_count)
    throw input_error("Graph: coords size does not match node_count");
  if (!orig_ids.empty() && static_cast<int>(orig_ids.size()) != node_count)
    throw input_error("Graph: orig_ids size does not match node_count");
  for (int u = 0; u < node_count; ++u) {
    const auto& nbrs = adjacency[static_cast<size_t>(u)];
    if (!std::is_sorted(nbrs.begin(), nbrs.end()))
      throw input_error("Graph: neighbor list not sorted");
    if (std::adjacent_find(nbrs.begin(), nbrs.end()) != nbrs.end())
      throw input_error("Graph: duplicate edge");
    for (int v : nbrs) {
      if (v < 0 || v >= node_count) throw input_error("Graph: neighbor id out of range");
      if (v == u) throw input_error("Graph: self loop");
      const auto& back = adjacency[static_cast<size_t>(v)];
      if (!std::binary_search(back.begin(), back.end(), u))
        throw input_error("Graph: missing reverse edge " + std::to_string(u) + "-" + std::to_string(v));
    }
  }
}

std::vector<int> bfs_distances(const Graph& g, int src) {
  return bfs_distances_multi(g, {src});
}

std::vector<int> bfs_distances_multi(const Graph& g, const std::vector<int>& srcs) {
  std::vector<int> dist(static_cast<size_t>(g.node_count), -1);
  std::deque<int> queue;
  for (int s : srcs) {
    if (s < 0 || s >= g.node_count) throw input_error("bfs: source out of range");
    if (dist[static_cast<size_t>(s)] != 0) {
      dist[static_cast<size_t>(s)] = 0;
      queue.push_back(s);
    }
  }
  while (!queue.empty()) {
    const int u = queue.front();
    queue.pop_front();
    for (int v : g.adjacency[static_cast<size_t>(u)]) {
      if (dist[static_cast<size_t>(v)] == -1) {
        dist[static_cast<size_t>(v)] = dist[static_cast<size_t>(u)] + 1;
        queue.push_back(v);
      }
    }
  }
  return dist;
}

int shortest_dist(const Graph& g, int src, int dst) {
  return bfs_distances(g, src)[static_cast<size_t>(dst)];
}

namespace {

// Path counts toward dst for every node, using distances-to-dst. counts[v] is
// the number of shortest v->dst paths; exact as long as it stays below 2^53.
std::vector<double> path_counts_to(const Graph& g, const std::vector<int>& dist_to_dst, int dst) {
  std::vector<int> order(static_cast<size_t>(g.node_count));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return dist_to_dst[static_cast<size_t>(a)] < dist_to_dst[static_cast<size_t>(b)];
  });
  std::vector<double> counts(static_cast<size_t>(g.node_count), 0.0);
  counts[static_cast<size_t>(dst)] = 1.0;
  for (int v : order) {
    const int dv = dist_to_dst[static_cast<size_t>(v)];
    if (dv <= 0) continue;
    double total = 0.0;
    for (int w : g.adjacency[static_cast<size_t>(v)])
      if (dist_to_dst[static_cast<size_t>(w)] == dv - 1) total += counts[static_cast<size_t>(w)];
    counts[static_cast<size_t>(v)] = total;
  }
  return counts;
}

}  // namespace

std::vector<int> shortest_path_sample(const Graph& g, int src, int dst, Rng& rng) {
  if (src < 0 || src >= g.node_count || dst < 0 || dst >= g.node_count)
    throw input_error("shortest_path_sample: node out of range");
  if (src == dst) return {src};
  const std::vector<int> dist = bfs_distances(g, dst);
  if (dist[static_cast<size_t>(src)] == -1)
    throw no_path_error("shortest_path_sample: " + std::to_string(dst) + " unreachable from " +
                        std::to_string(src));
  const std::vector<double> counts = path_counts_to(g, dist, dst);
  std::vector<int> path{src};
  int cur = src;
  while (cur != dst) {
    const int dcur = dist[static_cast<size_t>(cur)];
    double total = 0.0;
    for (int w : g.adjacency[static_cast<size_t>(cur)])
      if (dist[static_cast<size_t>(w)] == dcur - 1) total += counts[static_cast<size_t>(w)];
    double draw = rng.uniform() * total;
    int chosen = -1;
    for (int w : g.adjacency[static_cast<size_t>(cur)]) {
      if (dist[static_cast<size_t>(w)] != dcur - 1) continue;
      draw -= counts[static_cast<size_t>(w)];
      chosen = w;
      if (draw <= 0.0) break;
    }
    path.push_back(chosen);
    cur = chosen;
  }
  return path;
}

std::vector<int> shortest_path_lexicographic(const Graph& g, int src, int dst) {
  if (src == dst) return {src};
  const std::vector<int> dist = bfs_distances(g, dst);
  if (dist[static_cast<size_t>(src)] == -1)
    throw no_path_error("shortest_path_lexicographic: unreachable");
  std::vector<int> path{src};
  int cur = src;
  while (cur != dst) {
    const int dcur = dist[static_cast<size_t>(cur)];
    for (int w : g.adjacency[static_cast<size_t>(cur)]) {
      if (dist[static_cast<size_t>(w)] == dcur - 1) {  // neighbors sorted: first hit is smallest id
        path.push_back(w);
        cur = w;
        break;
      }
    }
  }
  return path;
}

double count_shortest_paths(const Graph& g, int src, int dst) {
  if (src == dst) return 1.0;
  const std::vector<int> dist = bfs_distances(g, dst);
  if (dist[static_cast<size_t>(src)] == -1) return 0.0;
  return path_counts_to(g, dist, dst)[static_cast<size_t>(src)];
}

}  // namespace grasper
