#include <doctest.h>

#include <cstdio>

#include "grasper/error.hpp"
#include "grasper/instance.hpp"

using namespace grasper;

namespace {

MapTemplate grid_template(int w, int h, double keep = 1.0) {
  MapTemplate t;
  t.kind = MapTemplate::Kind::grid;
  t.width = w;
  t.height = h;
  t.edge_keep_prob = keep;
  return t;
}

}  // namespace

TEST_CASE("sample_instance enforces the minimum evader distance filter") {
  Rng rng(1);
  const Graph g = build_map(grid_template(10, 10), rng);
  InstanceConfig cfg;
  cfg.n_pursuers = 5;
  cfg.n_exits = 8;
  cfg.t_min = 6;
  cfg.t_max = 10;
  cfg.min_evader_distance = 6;
  for (int trial = 0; trial < 50; ++trial) {
    const GameSpec spec = sample_instance(g, cfg, rng);
    spec.validate();
    const auto dist = bfs_distances(spec.graph, spec.evader_start);
    for (int exit_node : spec.exits) {
      CHECK(dist[static_cast<size_t>(exit_node)] >= 6);  // accepted iff min distance >= 6
    }
    CHECK(spec.horizon >= 6);
    CHECK(spec.horizon <= 10);
    CHECK(spec.exits.size() == 8);
    CHECK(spec.pursuer_starts.size() == 5);
  }
}

TEST_CASE("over-constrained config raises a generation error") {
  Rng rng(2);
  const Graph g = build_map(grid_template(3, 3), rng);
  InstanceConfig cfg;
  cfg.n_pursuers = 1;
  cfg.n_exits = 2;
  cfg.t_min = 2;
  cfg.t_max = 4;
  cfg.min_evader_distance = 50;
  CHECK_THROWS_AS(sample_instance(g, cfg, rng, 1000), generation_error);
}

TEST_CASE("build_dataset: deterministic under a fixed seed, count respected") {
  InstanceConfig cfg;
  cfg.n_pursuers = 2;
  cfg.n_exits = 3;
  cfg.t_min = 4;
  cfg.t_max = 6;
  cfg.min_evader_distance = 3;
  const MapTemplate tmpl = grid_template(6, 6, 0.9);
  const GameDataset a = build_dataset(tmpl, cfg, 25, 99);
  const GameDataset b = build_dataset(tmpl, cfg, 25, 99);
  REQUIRE(a.instances.size() == 25);
  for (size_t i = 0; i < a.instances.size(); ++i) {
    CHECK(a.instances[i].same_game(b.instances[i]));
    a.instances[i].validate();
  }
  const GameDataset c = build_dataset(tmpl, cfg, 25, 100);
  bool any_different = false;
  for (size_t i = 0; i < a.instances.size(); ++i)
    if (!a.instances[i].same_game(c.instances[i])) any_different = true;
  CHECK(any_different);
}

TEST_CASE("build_dataset rejects count < 1") {
  InstanceConfig cfg;
  CHECK_THROWS_AS(build_dataset(grid_template(5, 5), cfg, 0, 1), input_error);
}

TEST_CASE("dataset save/load round-trips instances and provenance") {
  InstanceConfig cfg;
  cfg.n_pursuers = 2;
  cfg.n_exits = 2;
  cfg.t_min = 3;
  cfg.t_max = 5;
  cfg.min_evader_distance = 2;
  const GameDataset ds = build_dataset(grid_template(5, 5, 0.9), cfg, 8, 7);
  const std::string path = "/tmp/grasper_test_dataset.jsonl";
  save_dataset(ds, path);
  const GameDataset loaded = load_dataset(path);
  REQUIRE(loaded.instances.size() == ds.instances.size());
  for (size_t i = 0; i < ds.instances.size(); ++i)
    CHECK(loaded.instances[i].same_game(ds.instances[i]));
  CHECK(loaded.provenance.seed == 7);
  CHECK(loaded.provenance.config.n_exits == 2);
  std::remove(path.c_str());
}

TEST_CASE("split_test_sets: range filters and train disjointness") {
  InstanceConfig cfg;
  cfg.n_pursuers = 2;
  cfg.n_exits = 2;
  cfg.t_min = 3;
  cfg.t_max = 5;
  cfg.min_evader_distance = 2;
  const GameDataset train = build_dataset(grid_template(5, 5, 0.9), cfg, 40, 11);

  SUBCASE("constant scorer inside the first range accepts the first games") {
    auto scorer = [](const GameSpec&) { return 0.85; };
    CHECK_THROWS_AS(
        split_test_sets(train, scorer, {0.8, 0.9}, {0.1, 0.2}, 10, 1, 50),
        generation_error);  // I2 range never matches a 0.85 scorer
    auto both = split_test_sets(train, scorer, {0.8, 0.9}, {0.8, 0.9}, 10, 1, 200);
    CHECK(both.first.instances.size() == 10);
    for (size_t i = 0; i < 10; ++i) CHECK(both.first.instances[i].same_game(train.instances[i]));
    // Every fresh I2 game is distinct from the training set.
    for (const auto& fresh : both.second.instances) {
      for (const auto& t : train.instances) CHECK(!fresh.same_game(t));
    }
  }

  SUBCASE("scorer above the range excludes games") {
    auto scorer = [](const GameSpec&) { return 0.95; };
    CHECK_THROWS_AS(split_test_sets(train, scorer, {0.8, 0.9}, {0.8, 0.9}, 5, 1, 20),
                    generation_error);
  }
}
