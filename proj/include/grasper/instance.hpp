#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "grasper/game.hpp"
#include "grasper/mapgen.hpp"

namespace grasper {

struct InstanceConfig {
  int n_pursuers = 5;
  int n_exits = 8;
  int t_min = 6;
  int t_max = 10;
  int min_evader_distance = 6;
  bool boundary_exits = false;  // grid maps: restrict exits to the border

  nlohmann::json to_json() const;
  static InstanceConfig from_json(const nlohmann::json& j);
};

// Uniformly draws exits, evader start (off-exit) and pursuer starts, plus a
// horizon in [t_min, t_max]; rejects and resamples until the evader's
// shortest distance to every exit is >= min_evader_distance and all exits are
// reachable. Throws generation_error after `max_attempts` rejections.
GameSpec sample_instance(const Graph& graph, const InstanceConfig& cfg, Rng& rng,
                         int max_attempts = 10000);

struct DatasetProvenance {
  MapTemplate map;
  InstanceConfig config;
  uint64_t seed = 0;
  int count = 0;
};

struct GameDataset {
  std::vector<GameSpec> instances;
  DatasetProvenance provenance;
};

// `count` accepted instances, each on a freshly sampled map; deterministic
// under the seed and parallel across instances.
GameDataset build_dataset(const MapTemplate& tmpl, const InstanceConfig& cfg, int count,
                          uint64_t seed);

void save_dataset(const GameDataset& ds, const std::string& path);
GameDataset load_dataset(const std::string& path);

// I1: games from `train` whose zero-shot utility falls in range1.
// I2: freshly sampled games, disjoint from train, with utility in range2.
std::pair<GameDataset, GameDataset> split_test_sets(
    const GameDataset& train, const std::function<double(const GameSpec&)>& zero_shot_eval,
    std::pair<double, double> range1, std::pair<double, double> range2, int size_per_set,
    uint64_t seed, int max_candidates = 2000);

}  // namespace grasper
