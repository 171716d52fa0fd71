#pragma once

#include <string>

#include <json.hpp>

#include "grasper/graph.hpp"
#include "grasper/rng.hpp"

namespace grasper {

// Map family + per-instance edge dropout probability.
struct MapTemplate {
  enum class Kind { grid, scale_free, file };
  Kind kind = Kind::grid;
  int width = 10;
  int height = 10;
  int nodes = 300;   // scale_free
  int attach_m = 2;  // scale_free: edges per new node
  std::string path;  // file
  double edge_keep_prob = 1.0;

  nlohmann::json to_json() const;
  static MapTemplate from_json(const nlohmann::json& j);
};

// Base lattice / preferential-attachment / file graph, then independent edge
// dropout with edge_keep_prob, restricted to the largest connected component
// (ties broken toward the component with the smallest node id). Node ids are
// re-indexed densely; orig_ids keeps the mapping to the base map.
Graph build_map(const MapTemplate& tmpl, Rng& rng);

// Base graph without dropout (used to size shared embedding tables).
Graph build_base_map(const MapTemplate& tmpl);

Graph load_map_file(const std::string& path);
void save_map_file(const Graph& g, const std::string& path);

// Restrict to the largest connected component and re-index densely.
Graph largest_component(const Graph& g);

}  // namespace grasper
