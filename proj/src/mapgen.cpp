#include "grasper/mapgen.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

#include "grasper/error.hpp"

namespace grasper {

nlohmann::json MapTemplate::to_json() const {
  nlohmann::json j;
  switch (kind) {
    case Kind::grid:
      j["kind"] = "grid";
      j["width"] = width;
      j["height"] = height;
      break;
    case Kind::scale_free:
      j["kind"] = "scale_free";
      j["nodes"] = nodes;
      j["attach_m"] = attach_m;
      break;
    case Kind::file:
      j["kind"] = "file";
      j["path"] = path;
      break;
  }
  j["edge_keep_prob"] = edge_keep_prob;
  return j;
}

MapTemplate MapTemplate::from_json(const nlohmann::json& j) {
  MapTemplate t;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "grid") {
    t.kind = Kind::grid;
    t.width = j.at("width").get<int>();
    t.height = j.at("height").get<int>();
  } else if (kind == "scale_free") {
    t.kind = Kind::scale_free;
    t.nodes = j.at("nodes").get<int>();
    t.attach_m = j.value("attach_m", 2);
  } else if (kind == "file") {
    t.kind = Kind::file;
    t.path = j.at("path").get<std::string>();
  } else {
    throw input_error("MapTemplate: unknown kind " + kind);
  }
  t.edge_keep_prob = j.value("edge_keep_prob", 1.0);
  return t;
}

namespace {

Graph grid_graph(int w, int h) {
  if (w < 1 || h < 1) throw input_error("grid map: width and height must be >= 1");
  std::vector<std::pair<int, int>> edges;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int id = y * w + x;
      if (x + 1 < w) edges.emplace_back(id, id + 1);
      if (y + 1 < h) edges.emplace_back(id, id + w);
    }
  }
  Graph g = Graph::from_edges(w * h, edges);
  g.coords.resize(static_cast<size_t>(w * h));
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      g.coords[static_cast<size_t>(y * w + x)] = {static_cast<double>(x), static_cast<double>(y)};
  return g;
}

// Preferential attachment: each new node attaches m edges to existing nodes
// drawn proportionally to degree (endpoint-list trick).
Graph scale_free_graph(int n, int m, Rng& rng) {
  if (n < m + 1) throw input_error("scale-free map: need nodes > attach_m");
  if (m < 1) throw input_error("scale-free map: attach_m must be >= 1");
  std::vector<std::pair<int, int>> edges;
  std::vector<int> endpoints;
  // Seed clique over the first m+1 nodes.
  for (int u = 0; u <= m; ++u) {
    for (int v = u + 1; v <= m; ++v) {
      edges.emplace_back(u, v);
      endpoints.push_back(u);
      endpoints.push_back(v);
    }
  }
  for (int u = m + 1; u < n; ++u) {
    std::vector<int> targets;
    while (static_cast<int>(targets.size()) < m) {
      const int candidate = endpoints[static_cast<size_t>(
          rng.uniform_int(static_cast<int64_t>(endpoints.size())))];
      if (std::find(targets.begin(), targets.end(), candidate) == targets.end())
        targets.push_back(candidate);
    }
    for (int v : targets) {
      edges.emplace_back(u, v);
      endpoints.push_back(u);
      endpoints.push_back(v);
    }
  }
  return Graph::from_edges(n, edges);
}

Graph drop_edges(const Graph& g, double keep_prob, Rng& rng) {
  std::vector<std::pair<int, int>> kept;
  for (int u = 0; u < g.node_count; ++u)
    for (int v : g.adjacency[static_cast<size_t>(u)])
      if (u < v && rng.uniform() < keep_prob) kept.emplace_back(u, v);
  Graph out = Graph::from_edges(g.node_count, kept);
  out.coords = g.coords;
  out.orig_ids = g.orig_ids;
  out.base_node_count = g.base_node_count;
  return out;
}

}  // namespace

Graph largest_component(const Graph& g) {
  std::vector<int> component(static_cast<size_t>(g.node_count), -1);
  int n_components = 0;
  for (int start = 0; start < g.node_count; ++start) {
    if (component[static_cast<size_t>(start)] != -1) continue;
    const int c = n_components++;
    std::vector<int> stack{start};
    component[static_cast<size_t>(start)] = c;
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      for (int v : g.adjacency[static_cast<size_t>(u)]) {
        if (component[static_cast<size_t>(v)] == -1) {
          component[static_cast<size_t>(v)] = c;
          stack.push_back(v);
        }
      }
    }
  }
  std::vector<int> sizes(static_cast<size_t>(n_components), 0);
  for (int c : component) ++sizes[static_cast<size_t>(c)];
  // Largest component; ties resolve to the one seen first (smallest node id).
  int best = 0;
  for (int c = 1; c < n_components; ++c)
    if (sizes[static_cast<size_t>(c)] > sizes[static_cast<size_t>(best)]) best = c;

  std::vector<int> dense_id(static_cast<size_t>(g.node_count), -1);
  std::vector<int> kept;
  for (int v = 0; v < g.node_count; ++v) {
    if (component[static_cast<size_t>(v)] == best) {
      dense_id[static_cast<size_t>(v)] = static_cast<int>(kept.size());
      kept.push_back(v);
    }
  }
  Graph out;
  out.node_count = static_cast<int>(kept.size());
  out.base_node_count = g.base_node_count;
  out.adjacency.resize(kept.size());
  for (size_t i = 0; i < kept.size(); ++i) {
    for (int v : g.adjacency[static_cast<size_t>(kept[i])])
      out.adjacency[i].push_back(dense_id[static_cast<size_t>(v)]);
    std::sort(out.adjacency[i].begin(), out.adjacency[i].end());
  }
  if (g.has_coords()) {
    out.coords.reserve(kept.size());
    for (int v : kept) out.coords.push_back(g.coords[static_cast<size_t>(v)]);
  }
  out.orig_ids.reserve(kept.size());
  for (int v : kept) out.orig_ids.push_back(g.orig_id(v));
  return out;
}

Graph build_base_map(const MapTemplate& tmpl) {
  switch (tmpl.kind) {
    case MapTemplate::Kind::grid: return grid_graph(tmpl.width, tmpl.height);
    case MapTemplate::Kind::file: return load_map_file(tmpl.path);
    case MapTemplate::Kind::scale_free:
      throw input_error("build_base_map: scale-free maps need an rng; use build_map");
  }
  throw input_error("build_base_map: bad template");
}

Graph build_map(const MapTemplate& tmpl, Rng& rng) {
  if (tmpl.edge_keep_prob <= 0.0 || tmpl.edge_keep_prob > 1.0)
    throw input_error("build_map: edge_keep_prob must be in (0, 1]");
  Graph base;
  switch (tmpl.kind) {
    case MapTemplate::Kind::grid: base = grid_graph(tmpl.width, tmpl.height); break;
    case MapTemplate::Kind::scale_free: base = scale_free_graph(tmpl.nodes, tmpl.attach_m, rng); break;
    case MapTemplate::Kind::file: base = load_map_file(tmpl.path); break;
  }
  if (tmpl.edge_keep_prob >= 1.0) return largest_component(base);
  return largest_component(drop_edges(base, tmpl.edge_keep_prob, rng));
}

Graph load_map_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw input_error("load_map_file: cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw input_error("load_map_file: malformed JSON in " + path + ": " + e.what());
  }
  try {
    const int nodes = j.at("nodes").get<int>();
    std::vector<std::pair<int, int>> edges;
    for (const auto& e : j.at("edges")) edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
    Graph g = Graph::from_edges(nodes, edges);
    if (j.contains("coords"))
      for (const auto& c : j["coords"])
        g.coords.push_back({c.at(0).get<double>(), c.at(1).get<double>()});
    g.validate();
    return g;
  } catch (const nlohmann::json::exception& e) {
    throw input_error("load_map_file: malformed map in " + path + ": " + e.what());
  }
}

void save_map_file(const Graph& g, const std::string& path) {
  nlohmann::json j;
  j["nodes"] = g.node_count;
  auto& edges = j["edges"] = nlohmann::json::array();
  for (int u = 0; u < g.node_count; ++u)
    for (int v : g.adjacency[static_cast<size_t>(u)])
      if (u < v) edges.push_back({u, v});
  if (g.has_coords()) {
    auto& coords = j["coords"] = nlohmann::json::array();
    for (const auto& c : g.coords) coords.push_back({c[0], c[1]});
  }
  std::ofstream out(path);
  if (!out) throw input_error("save_map_file: cannot open " + path);
  out << j.dump(2) << "\n";
}

}  // namespace grasper
