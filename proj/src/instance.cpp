#include "grasper/instance.hpp"

#include <algorithm>
#include <fstream>

#include "grasper/error.hpp"
#include "grasper/parallel.hpp"

namespace grasper {

nlohmann::json InstanceConfig::to_json() const {
  return {{"n_pursuers", n_pursuers}, {"n_exits", n_exits},
          {"t_min", t_min},           {"t_max", t_max},
          {"min_evader_distance", min_evader_distance}, {"boundary_exits", boundary_exits}};
}

InstanceConfig InstanceConfig::from_json(const nlohmann::json& j) {
  InstanceConfig c;
  c.n_pursuers = j.at("n_pursuers").get<int>();
  c.n_exits = j.at("n_exits").get<int>();
  c.t_min = j.at("t_min").get<int>();
  c.t_max = j.at("t_max").get<int>();
  c.min_evader_distance = j.at("min_evader_distance").get<int>();
  c.boundary_exits = j.value("boundary_exits", false);
  return c;
}

namespace {

void check_config(const InstanceConfig& cfg) {
  if (cfg.n_exits < 1) throw input_error("InstanceConfig: n_exits must be >= 1");
  if (cfg.n_pursuers < 1) throw input_error("InstanceConfig: n_pursuers must be >= 1");
  if (cfg.t_min > cfg.t_max) throw input_error("InstanceConfig: t_min > t_max");
  if (cfg.t_min < 1) throw input_error("InstanceConfig: t_min must be >= 1");
  if (cfg.min_evader_distance < 1)
    throw input_error("InstanceConfig: min_evader_distance must be >= 1");
}

// Nodes on the border of the (base) grid; requires coordinates.
std::vector<int> boundary_nodes(const Graph& g) {
  if (!g.has_coords()) throw input_error("boundary exits need node coordinates");
  double min_x = 1e300, max_x = -1e300, min_y = 1e300, max_y = -1e300;
  for (const auto& c : g.coords) {
    min_x = std::min(min_x, c[0]);
    max_x = std::max(max_x, c[0]);
    min_y = std::min(min_y, c[1]);
    max_y = std::max(max_y, c[1]);
  }
  std::vector<int> nodes;
  for (int v = 0; v < g.node_count; ++v) {
    const auto& c = g.coords[static_cast<size_t>(v)];
    if (c[0] == min_x || c[0] == max_x || c[1] == min_y || c[1] == max_y) nodes.push_back(v);
  }
  return nodes;
}

}  // namespace

GameSpec sample_instance(const Graph& graph, const InstanceConfig& cfg, Rng& rng,
                         int max_attempts) {
  check_config(cfg);
  if (graph.node_count < cfg.n_exits + 1)
    throw generation_error("sample_instance: graph too small for exit count");
  const std::vector<int> exit_pool =
      cfg.boundary_exits ? boundary_nodes(graph) : std::vector<int>{};
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    // Exits: distinct uniform draws.
    std::vector<int> exits;
    {
      const std::vector<int>* pool = cfg.boundary_exits ? &exit_pool : nullptr;
      const int pool_size = pool ? static_cast<int>(pool->size()) : graph.node_count;
      if (pool_size < cfg.n_exits)
        throw generation_error("sample_instance: not enough candidate exit nodes");
      while (static_cast<int>(exits.size()) < cfg.n_exits) {
        int v = static_cast<int>(rng.uniform_int(pool_size));
        if (pool) v = (*pool)[static_cast<size_t>(v)];
        if (std::find(exits.begin(), exits.end(), v) == exits.end()) exits.push_back(v);
      }
      std::sort(exits.begin(), exits.end());
    }
    // Evader start off the exits.
    int evader = -1;
    for (int tries = 0; tries < 64; ++tries) {
      const int v = static_cast<int>(rng.uniform_int(graph.node_count));
      if (!std::binary_search(exits.begin(), exits.end(), v)) {
        evader = v;
        break;
      }
    }
    if (evader < 0) continue;
    // Pursuers (may share nodes).
    std::vector<int> pursuers(static_cast<size_t>(cfg.n_pursuers));
    for (auto& p : pursuers) p = static_cast<int>(rng.uniform_int(graph.node_count));
    const int horizon = cfg.t_min + static_cast<int>(rng.uniform_int(cfg.t_max - cfg.t_min + 1));

    // Filter: every exit reachable and none closer than min_evader_distance.
    const std::vector<int> dist = bfs_distances(graph, evader);
    bool ok = true;
    for (int v : exits) {
      const int d = dist[static_cast<size_t>(v)];
      if (d == -1 || d < cfg.min_evader_distance) {
        ok = false;
        break;
      }
    }
    if (!ok) continue;

    GameSpec spec;
    spec.graph = graph;
    spec.exits = std::move(exits);
    spec.pursuer_starts = std::move(pursuers);
    spec.evader_start = evader;
    spec.horizon = horizon;
    return spec;
  }
  throw generation_error("sample_instance: " + std::to_string(max_attempts) +
                         " consecutive rejections (over-constrained config)");
}

GameDataset build_dataset(const MapTemplate& tmpl, const InstanceConfig& cfg, int count,
                          uint64_t seed) {
  if (count < 1) throw input_error("build_dataset: count must be >= 1");
  check_config(cfg);
  GameDataset ds;
  ds.provenance = {tmpl, cfg, seed, count};
  ds.instances.resize(static_cast<size_t>(count));
  parallel::parallel_for(count, [&](int64_t i) {
    Rng rng(seed_stream(seed, static_cast<uint64_t>(i)));
    // A fresh map per attempt so a pathological dropout cannot wedge a
    // feasible config; 100 maps x 100 placements = the 1e4 rejection budget.
    for (int map_try = 0;; ++map_try) {
      const Graph graph = build_map(tmpl, rng);
      try {
        ds.instances[static_cast<size_t>(i)] = sample_instance(graph, cfg, rng, 100);
        break;
      } catch (const generation_error&) {
        if (map_try >= 99) throw;
      }
    }
  });
  return ds;
}

void save_dataset(const GameDataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw input_error("save_dataset: cannot open " + path);
  nlohmann::json header;
  header["type"] = "provenance";
  header["template"] = ds.provenance.map.to_json();
  header["config"] = ds.provenance.config.to_json();
  header["seed"] = ds.provenance.seed;
  header["count"] = ds.provenance.count;
  out << header.dump() << "\n";
  for (const auto& spec : ds.instances) out << spec.to_json().dump() << "\n";
}

GameDataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw input_error("load_dataset: cannot open " + path);
  GameDataset ds;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw input_error("load_dataset: malformed line: " + std::string(e.what()));
    }
    if (first && j.value("type", "") == "provenance") {
      ds.provenance.map = MapTemplate::from_json(j.at("template"));
      ds.provenance.config = InstanceConfig::from_json(j.at("config"));
      ds.provenance.seed = j.at("seed").get<uint64_t>();
      ds.provenance.count = j.at("count").get<int>();
      first = false;
      continue;
    }
    first = false;
    ds.instances.push_back(GameSpec::from_json(j));
  }
  if (ds.instances.empty()) throw input_error("load_dataset: no instances in " + path);
  return ds;
}

std::pair<GameDataset, GameDataset> split_test_sets(
    const GameDataset& train, const std::function<double(const GameSpec&)>& zero_shot_eval,
    std::pair<double, double> range1, std::pair<double, double> range2, int size_per_set,
    uint64_t seed, int max_candidates) {
  GameDataset i1, i2;
  i1.provenance = train.provenance;
  i2.provenance = train.provenance;
  for (const auto& spec : train.instances) {
    if (static_cast<int>(i1.instances.size()) >= size_per_set) break;
    const double u = zero_shot_eval(spec);
    if (u >= range1.first && u <= range1.second) i1.instances.push_back(spec);
  }
  if (static_cast<int>(i1.instances.size()) < size_per_set)
    throw generation_error("split_test_sets: only " + std::to_string(i1.instances.size()) +
                           " of " + std::to_string(size_per_set) +
                           " training games fall in the first utility range");

  Rng rng(seed_stream(seed, 0x7e57));
  for (int candidate = 0; candidate < max_candidates; ++candidate) {
    if (static_cast<int>(i2.instances.size()) >= size_per_set) break;
    const Graph graph = build_map(train.provenance.map, rng);
    GameSpec spec;
    try {
      spec = sample_instance(graph, train.provenance.config, rng, 100);
    } catch (const generation_error&) {
      continue;
    }
    bool in_train = false;
    for (const auto& t : train.instances)
      if (spec.same_game(t)) {
        in_train = true;
        break;
      }
    if (in_train) continue;
    const double u = zero_shot_eval(spec);
    if (u >= range2.first && u <= range2.second) i2.instances.push_back(spec);
  }
  if (static_cast<int>(i2.instances.size()) < size_per_set)
    throw generation_error("split_test_sets: only " + std::to_string(i2.instances.size()) +
                           " of " + std::to_string(size_per_set) +
                           " fresh games fall in the second utility range");
  return {std::move(i1), std::move(i2)};
}

}  // namespace grasper
