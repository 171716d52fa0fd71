#include <doctest.h>

#include <cstdio>

#include "grasper/checkpoint.hpp"
#include "grasper/error.hpp"
#include "grasper/param_store.hpp"
#include "grasper/tape.hpp"

using namespace grasper;

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
  ParamStore store;
  store.add("w", Tensor::vec({1.0, -2.0, 3.0}));
  const Tensor before = store.value("w");
  adam_step(store, {});
  for (size_t i = 0; i < before.data.size(); ++i)
    CHECK(store.value("w").data[i] == before.data[i]);
}

TEST_CASE("adam: drives a quadratic to zero") {
  ParamStore store;
  store.add("w", Tensor::vec({1.0}));
  AdamConfig cfg;
  cfg.lr = 0.1;
  for (int step = 0; step < 200; ++step) {
    const double w = store.value("w").data[0];
    store.entry("w").grad.data[0] = 2.0 * w;  // d/dw w^2
    adam_step(store, cfg);
  }
  CHECK(std::abs(store.value("w").data[0]) < 1e-2);
}

TEST_CASE("adam: identical stores with identical gradients update identically") {
  ParamStore a, b;
  Rng rng(3);
  a.add("w", xavier_uniform(4, 4, rng));
  b.add("w", a.value("w"));
  for (int step = 0; step < 10; ++step) {
    Rng grad_rng(100 + step);
    Tensor g({4, 4});
    for (auto& v : g.data) v = grad_rng.normal();
    a.entry("w").grad = g;
    b.entry("w").grad = g;
    adam_step(a, {});
    adam_step(b, {});
  }
  CHECK(a.max_abs_diff(b) == 0.0);
}

TEST_CASE("adam: NaN gradient raises a training error naming the parameter") {
  ParamStore store;
  store.add("hidden.bias", Tensor::vec({1.0}));
  store.entry("hidden.bias").grad.data[0] = std::nan("");
  try {
    adam_step(store, {});
    FAIL("expected training_error");
  } catch (const training_error& e) {
    CHECK(std::string(e.what()).find("hidden.bias") != std::string::npos);
  }
}

TEST_CASE("param store rejects duplicates and unknown names") {
  ParamStore store;
  store.add("w", Tensor::vec({1.0}));
  CHECK_THROWS_AS(store.add("w", Tensor::vec({2.0})), config_error);
  CHECK_THROWS_AS(store.value("missing"), config_error);
}

TEST_CASE("checkpoint round-trip preserves sections, shapes, values and metadata") {
  ParamStore gnn, rep;
  Rng rng(5);
  gnn.add("l0.w", xavier_uniform(3, 7, rng));
  gnn.add("l0.b", Tensor::vec({1, 2, 3, 4, 5, 6, 7}));
  rep.add("loc", xavier_uniform(10, 4, rng));
  const std::string path = "/tmp/grasper_test_ckpt.bin";
  nlohmann::json meta{{"seed", 42}, {"training_step", 7}, {"config_hash", "abc123"}};
  save_checkpoint(path, {{"gnn", &gnn}, {"rep", &rep}}, meta);

  const Checkpoint loaded = load_checkpoint(path);
  REQUIRE(loaded.sections.count("gnn") == 1);
  REQUIRE(loaded.sections.count("rep") == 1);
  const ParamStore& gnn2 = loaded.sections.at("gnn");
  CHECK(gnn2.value("l0.w").shape == gnn.value("l0.w").shape);
  CHECK(gnn2.value("l0.w").data == gnn.value("l0.w").data);
  CHECK(gnn2.value("l0.b").data == gnn.value("l0.b").data);
  CHECK(loaded.sections.at("rep").value("loc").data == rep.value("loc").data);
  CHECK(loaded.metadata.at("seed") == 42);
  CHECK(loaded.metadata.at("config_hash") == "abc123");
  std::remove(path.c_str());
  std::remove((path + ".json").c_str());
}

TEST_CASE("checkpoint with bad magic is rejected") {
  const std::string path = "/tmp/grasper_bad_ckpt.bin";
  FILE* f = fopen(path.c_str(), "wb");
  fwrite("NOTACKPT????????", 1, 16, f);
  fclose(f);
  CHECK_THROWS_AS(load_checkpoint(path), input_error);
  std::remove(path.c_str());
}
