#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "grasper/error.hpp"
#include "grasper/mapgen.hpp"

using namespace grasper;

TEST_CASE("grid map: node and edge counts") {
  MapTemplate t;
  t.kind = MapTemplate::Kind::grid;
  t.width = 3;
  t.height = 3;
  Rng rng(1);
  const Graph g = build_map(t, rng);
  CHECK(g.node_count == 9);
  CHECK(g.edge_count() == 12);
  CHECK(g.has_coords());
  g.validate();
}

TEST_CASE("scale-free map: heavy-tailed degrees at keep probability 1") {
  MapTemplate t;
  t.kind = MapTemplate::Kind::scale_free;
  t.nodes = 300;
  t.attach_m = 2;
  Rng rng(2);
  const Graph g = build_map(t, rng);
  CHECK(g.node_count == 300);
  g.validate();
  double mean = 0.0;
  int max_degree = 0;
  for (int v = 0; v < g.node_count; ++v) {
    mean += g.degree(v);
    max_degree = std::max(max_degree, g.degree(v));
  }
  mean /= g.node_count;
  double var = 0.0;
  for (int v = 0; v < g.node_count; ++v) var += (g.degree(v) - mean) * (g.degree(v) - mean);
  var /= g.node_count;
  CHECK(max_degree > mean + 3.0 * std::sqrt(var));
}

TEST_CASE("edge dropout keeps roughly keep_prob of the edges, restricted to one component") {
  MapTemplate t;
  t.kind = MapTemplate::Kind::grid;
  t.width = 10;
  t.height = 10;
  t.edge_keep_prob = 0.8;
  Rng rng(3);
  double total_edges = 0.0;
  const int trials = 50;
  for (int k = 0; k < trials; ++k) {
    const Graph g = build_map(t, rng);
    g.validate();
    total_edges += static_cast<double>(g.edge_count());
    // Connected: BFS from 0 reaches everyone.
    const auto dist = bfs_distances(g, 0);
    for (int v = 0; v < g.node_count; ++v) CHECK(dist[static_cast<size_t>(v)] >= 0);
    // orig_ids map back into the base lattice.
    CHECK(g.base_node_count == 100);
    for (int v = 0; v < g.node_count; ++v) {
      CHECK(g.orig_id(v) >= 0);
      CHECK(g.orig_id(v) < 100);
    }
  }
  const double mean_edges = total_edges / trials;
  // 0.8 * 180 = 144 before the component restriction trims a few more.
  CHECK(mean_edges > 110.0);
  CHECK(mean_edges < 150.0);
}

TEST_CASE("largest_component picks the biggest piece and reindexes densely") {
  // Two components: a triangle {0,1,2} and an edge {3,4}.
  Graph g = Graph::from_edges(5, {{0, 1}, {1, 2}, {0, 2}, {3, 4}});
  const Graph kept = largest_component(g);
  CHECK(kept.node_count == 3);
  CHECK(kept.edge_count() == 3);
  CHECK(kept.orig_ids == std::vector<int>{0, 1, 2});
}

TEST_CASE("map file round-trip and malformed file errors") {
  MapTemplate t;
  t.kind = MapTemplate::Kind::grid;
  t.width = 4;
  t.height = 3;
  Rng rng(4);
  const Graph g = build_map(t, rng);
  const std::string path = "/tmp/grasper_test_map.json";
  save_map_file(g, path);
  const Graph loaded = load_map_file(path);
  CHECK(loaded.node_count == g.node_count);
  CHECK(loaded.adjacency == g.adjacency);
  CHECK(loaded.coords == g.coords);
  std::remove(path.c_str());

  std::ofstream bad("/tmp/grasper_bad_map.json");
  bad << "{ not json";
  bad.close();
  CHECK_THROWS_AS(load_map_file("/tmp/grasper_bad_map.json"), input_error);
  CHECK_THROWS_AS(load_map_file("/tmp/grasper_missing_map.json"), input_error);
  std::remove("/tmp/grasper_bad_map.json");
}

TEST_CASE("templates serialize round-trip") {
  MapTemplate t;
  t.kind = MapTemplate::Kind::scale_free;
  t.nodes = 123;
  t.attach_m = 3;
  t.edge_keep_prob = 0.9;
  const MapTemplate back = MapTemplate::from_json(t.to_json());
  CHECK(back.kind == MapTemplate::Kind::scale_free);
  CHECK(back.nodes == 123);
  CHECK(back.attach_m == 3);
  CHECK(back.edge_keep_prob == doctest::Approx(0.9));
}
