#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "grasper/eval.hpp"
#include "grasper/metrics.hpp"

using namespace grasper;

namespace {

GameSpec small_grid_spec(uint64_t seed, int w = 4, int h = 4) {
  MapTemplate t;
  t.kind = MapTemplate::Kind::grid;
  t.width = w;
  t.height = h;
  InstanceConfig cfg;
  cfg.n_pursuers = 2;
  cfg.n_exits = 2;
  cfg.t_min = 3;
  cfg.t_max = 5;
  cfg.min_evader_distance = 2;
  Rng rng(seed);
  return sample_instance(build_map(t, rng), cfg, rng);
}

ModelConfig small_cfg(const GameSpec& spec, Method method) {
  ModelConfig cfg;
  cfg.method = method;
  cfg.n_pursuers = spec.n_pursuers();
  cfg.t_max = spec.horizon;
  cfg.max_actions = spec.graph.max_degree() + 1;
  cfg.gnn.hidden = 8;
  cfg.rep.d_loc = 6;
  cfg.rep.d_id = 3;
  cfg.rep.d_time = 3;
  cfg.rep.loc_vocab = spec.graph.base_node_count;
  cfg.rep.n_max = spec.n_pursuers();
  cfg.rep.t_max = spec.horizon;
  cfg.actor_hidden = {12};
  cfg.critic_hidden = {12};
  cfg.hyper.hidden = {16};
  return cfg;
}

}  // namespace

TEST_CASE("worst_case_utility: deterministic capture setup scores (+1, 0)") {
  GameSpec spec;
  spec.graph = Graph::from_edges(5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}});
  spec.exits = {4};
  spec.pursuer_starts = {0};
  spec.evader_start = 0;  // co-located at reset: instant capture
  spec.horizon = 4;
  spec.validate();
  const ModelConfig cfg = small_cfg(spec, Method::psro);
  const PursuerPurePolicy p = scratch_policy(cfg, 1);
  const Utility u =
      worst_case_utility(spec, {p}, {1.0}, {{std::vector<double>{1.0}}}, {1.0}, 128, 3);
  CHECK(u.mean == doctest::Approx(1.0));
  CHECK(u.std_error == doctest::Approx(0.0));
}

TEST_CASE("zero_shot_eval: value in range and reproducible under the seed") {
  const GameSpec spec = small_grid_spec(5);
  const GrasperModel model = init_model(small_cfg(spec, Method::grasper), 7);
  ZeroShotOptions opt;
  opt.evader_br_episodes_per_exit = 16;
  opt.eval_episodes = 64;
  const double a = zero_shot_eval(spec, model, opt, 11);
  const double b = zero_shot_eval(spec, model, opt, 11);
  CHECK(a == b);
  CHECK(a >= -1.0);
  CHECK(a <= 1.0);
}

TEST_CASE("heatmap: sweeps exactly the non-exit nodes, bounded, capture cell is +1") {
  const GameSpec spec = small_grid_spec(9);
  const GrasperModel model = init_model(small_cfg(spec, Method::grasper), 13);
  ZeroShotOptions opt;
  opt.evader_br_episodes_per_exit = 8;
  opt.eval_episodes = 32;
  const auto cells = heatmap(spec, model, opt, 17);
  CHECK(cells.size() == static_cast<size_t>(spec.graph.node_count));
  for (const auto& c : cells) {
    if (c.is_exit) {
      CHECK(std::isnan(c.utility));  // excluded from the sweep
    } else {
      CHECK(c.utility >= -1.0);
      CHECK(c.utility <= 1.0);
      if (c.is_pursuer_start) CHECK(c.utility == doctest::Approx(1.0));
    }
  }
  const std::string path = "/tmp/grasper_test_heatmap.csv";
  write_heatmap_csv(cells, path);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "node,x,y,utility,is_exit,is_pursuer_start");
  int rows = 0;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) ++rows;
  CHECK(rows == spec.graph.node_count);
  std::remove(path.c_str());
}

TEST_CASE("heatmap requires coordinates") {
  GameSpec spec;
  spec.graph = Graph::from_edges(4, {{0, 1}, {1, 2}, {2, 3}});
  spec.exits = {3};
  spec.pursuer_starts = {0};
  spec.evader_start = 1;
  spec.horizon = 3;
  spec.validate();
  const GrasperModel model = init_model(small_cfg(spec, Method::grasper), 1);
  CHECK_THROWS_AS(heatmap(spec, model, {}, 1), input_error);
}

TEST_CASE("run_comparison: random method rows bounded, csv reproducible modulo wall clock") {
  GameDataset test;
  test.instances.push_back(small_grid_spec(21));
  test.instances.push_back(small_grid_spec(22));
  test.provenance.config.n_pursuers = 2;
  ModelConfig scratch = small_cfg(test.instances[0], Method::psro);
  for (const auto& s : test.instances) {
    scratch.t_max = std::max(scratch.t_max, s.horizon);
    scratch.max_actions = std::max(scratch.max_actions, s.graph.max_degree() + 1);
  }
  scratch.rep.t_max = scratch.t_max;
  ComparisonConfig cc;
  cc.seeds = {1};
  cc.psro.epochs = 1;
  cc.psro.br_episodes = 2;
  cc.psro.payoff_episodes = 8;
  cc.psro.evader_br_episodes_per_exit = 4;
  cc.psro.eval_episodes = 32;
  cc.random_eval_episodes = 64;

  const auto rows_a = run_comparison(test, {Method::random, Method::psro}, nullptr, nullptr,
                                     nullptr, scratch, cc);
  const auto rows_b = run_comparison(test, {Method::random, Method::psro}, nullptr, nullptr,
                                     nullptr, scratch, cc);
  REQUIRE(rows_a.size() == rows_b.size());
  for (size_t i = 0; i < rows_a.size(); ++i) {
    CHECK(rows_a[i].method == rows_b[i].method);
    CHECK(rows_a[i].game_id == rows_b[i].game_id);
    // Bit-for-seed reproducibility of everything except measured time.
    CHECK(rows_a[i].worst_case_utility == rows_b[i].worst_case_utility);
    CHECK(rows_a[i].std_error == rows_b[i].std_error);
    CHECK(rows_a[i].worst_case_utility >= -1.0);
    CHECK(rows_a[i].worst_case_utility <= 1.0);
  }
  // Random rows carry no wall clock (no PSRO ran).
  for (const auto& r : rows_a)
    if (r.method == "random") CHECK(r.wall_clock_s == 0.0);

  // Missing checkpoint for a trained method is a configuration error.
  CHECK_THROWS_AS(
      run_comparison(test, {Method::grasper}, nullptr, nullptr, nullptr, scratch, cc),
      config_error);
}

TEST_CASE("amortized pre-training offset shifts trained-method rows only") {
  GameDataset test;
  test.instances.push_back(small_grid_spec(31));
  const GameSpec& spec = test.instances[0];
  const ModelConfig cfg = small_cfg(spec, Method::grasper);
  const GrasperModel model = init_model(cfg, 3);
  ComparisonConfig cc;
  cc.seeds = {1};
  cc.psro.epochs = 1;
  cc.psro.br_episodes = 2;
  cc.psro.payoff_episodes = 8;
  cc.psro.evader_br_episodes_per_exit = 4;
  cc.psro.eval_episodes = 16;
  cc.grasper_pretrain_offset_s = 1000.0;  // amortized stage I+II per game
  const auto rows = run_comparison(test, {Method::grasper}, &model, nullptr, nullptr, cfg, cc);
  for (const auto& r : rows) CHECK(r.wall_clock_s >= 1000.0);
}

TEST_CASE("config hash is stable and key-order independent") {
  nlohmann::json a{{"alpha", 0.5}, {"seed", 3}};
  nlohmann::json b{{"seed", 3}, {"alpha", 0.5}};
  CHECK(config_hash(a) == config_hash(b));
  nlohmann::json c{{"seed", 4}, {"alpha", 0.5}};
  CHECK(config_hash(a) != config_hash(c));
}

TEST_CASE("model save/load round-trip preserves every section and the config") {
  const GameSpec spec = small_grid_spec(41);
  const ModelConfig cfg = small_cfg(spec, Method::grasper);
  const GrasperModel model = init_model(cfg, 5);
  const std::string path = "/tmp/grasper_test_model.ckpt";
  save_model(model, path, {{"training_episodes", 123}});
  const GrasperModel loaded = load_model(path);
  CHECK(loaded.cfg.method == Method::grasper);
  CHECK(loaded.cfg.max_actions == cfg.max_actions);
  CHECK(loaded.gnn.max_abs_diff(model.gnn) == 0.0);
  CHECK(loaded.hyper.max_abs_diff(model.hyper) == 0.0);
  CHECK(loaded.rep.max_abs_diff(model.rep) == 0.0);
  CHECK(loaded.critic.max_abs_diff(model.critic) == 0.0);
  // Zero-shot behavior identical after reload.
  ZeroShotOptions opt;
  opt.evader_br_episodes_per_exit = 8;
  opt.eval_episodes = 32;
  CHECK(zero_shot_eval(spec, model, opt, 9) == zero_shot_eval(spec, loaded, opt, 9));
  std::remove(path.c_str());
  std::remove((path + ".json").c_str());
}
