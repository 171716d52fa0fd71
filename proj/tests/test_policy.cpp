#include <doctest.h>

#include "grasper/error.hpp"
#include "grasper/policy.hpp"

using namespace grasper;

namespace {

PolicyArchitecture small_arch() {
  PolicyArchitecture arch;
  arch.input_width = 6;
  arch.hidden = {5, 4};
  arch.max_actions = 3;
  return arch;
}

}  // namespace

TEST_CASE("architecture parameter count and layer shapes") {
  const PolicyArchitecture arch = small_arch();
  const auto layers = arch.layers();
  REQUIRE(layers.size() == 3);
  CHECK(layers[0].in == 6);
  CHECK(layers[0].out == 5);
  CHECK(layers[2].out == 3);
  CHECK(arch.param_count() == 6 * 5 + 5 + 5 * 4 + 4 + 4 * 3 + 3);
}

TEST_CASE("generated policy: slice round-trip is exact") {
  const PolicyArchitecture arch = small_arch();
  Rng rng(1);
  Tensor flat({arch.param_count()});
  for (auto& v : flat.data) v = rng.normal();
  const GeneratedPolicy p = GeneratedPolicy::from_flat(arch, flat, 7);
  CHECK(p.reflatten().data == flat.data);
  CHECK_THROWS_AS(GeneratedPolicy::from_flat(arch, Tensor::zeros({5}), 0), config_error);
}

TEST_CASE("hypernetwork: deterministic, shape-correct, sensitive to the embedding") {
  const PolicyArchitecture arch = small_arch();
  HyperConfig cfg;
  cfg.hidden = {16, 16};
  ParamStore hyper;
  Rng rng(2);
  init_hyper_params(hyper, cfg, 9, arch, rng);

  Tensor h({9});
  for (auto& v : h.data) v = rng.normal();
  const GeneratedPolicy a = hyper_forward(hyper, cfg, arch, h);
  const GeneratedPolicy b = hyper_forward(hyper, cfg, arch, h);
  CHECK(a.flat.data == b.flat.data);
  CHECK(a.flat.numel() == arch.param_count());
  CHECK(a.provenance_hash == b.provenance_hash);

  Tensor h2 = h;
  h2.data[3] += 0.05;
  const GeneratedPolicy c = hyper_forward(hyper, cfg, arch, h2);
  double diff = 0.0;
  for (size_t i = 0; i < c.flat.data.size(); ++i)
    diff = std::max(diff, std::abs(c.flat.data[i] - a.flat.data[i]));
  CHECK(diff > 1e-12);
  CHECK(a.provenance_hash != c.provenance_hash);

  Tensor wrong({4});
  CHECK_THROWS_AS(hyper_forward(hyper, cfg, arch, wrong), config_error);
}

TEST_CASE("hypernetwork tape forward equals the plain forward") {
  const PolicyArchitecture arch = small_arch();
  HyperConfig cfg;
  cfg.hidden = {12};
  ParamStore hyper;
  Rng rng(3);
  init_hyper_params(hyper, cfg, 7, arch, rng);
  Tensor h({7});
  for (auto& v : h.data) v = rng.normal();
  const GeneratedPolicy plain = hyper_forward(hyper, cfg, arch, h);

  Tape tape;
  ParamBinder bind(tape, hyper);
  Tensor h_row = h;
  h_row.shape = {1, 7};
  const auto layer_vars = hyper_forward_tape(tape, bind, cfg, arch, tape.constant(h_row));
  REQUIRE(layer_vars.size() == plain.weights.size());
  for (size_t l = 0; l < layer_vars.size(); ++l) {
    CHECK(tape.val(layer_vars[l].first).data == plain.weights[l].data);
    CHECK(tape.val(layer_vars[l].second).data == plain.biases[l].data);
  }
}

TEST_CASE("actor: single legal action and zero-initialized head") {
  const PolicyArchitecture arch = small_arch();
  Rng rng(4);
  Tensor flat({arch.param_count()});
  for (auto& v : flat.data) v = rng.normal();
  // Zero the output layer (last 4*3 + 3 values).
  for (int64_t i = arch.param_count() - (4 * 3 + 3); i < arch.param_count(); ++i)
    flat.data[static_cast<size_t>(i)] = 0.0;
  const GeneratedPolicy p = GeneratedPolicy::from_flat(arch, flat, 0);
  Tensor obs({6});
  for (auto& v : obs.data) v = rng.normal();

  const auto single = actor_forward(p, obs, {0, 1, 0});
  CHECK(single[1] == doctest::Approx(1.0));
  CHECK(single[0] == 0.0);

  const auto uniform = actor_forward(p, obs, {1, 1, 1});
  for (double v : uniform) CHECK(v == doctest::Approx(1.0 / 3));
}

TEST_CASE("actor probabilities sum to one over 1000 random inputs") {
  const PolicyArchitecture arch = small_arch();
  Rng rng(5);
  Tensor flat({arch.param_count()});
  for (auto& v : flat.data) v = rng.normal();
  const GeneratedPolicy p = GeneratedPolicy::from_flat(arch, flat, 0);
  for (int trial = 0; trial < 1000; ++trial) {
    Tensor obs({6});
    for (auto& v : obs.data) v = rng.uniform(-3, 3);
    std::vector<uint8_t> mask{1, 1, 1};
    if (trial % 3 == 0) mask[static_cast<size_t>(rng.uniform_int(3))] = 0;
    const auto probs = actor_forward(p, obs, mask);
    double total = 0.0;
    for (double v : probs) total += v;
    CHECK(std::abs(total - 1.0) < 1e-9);
  }
}

TEST_CASE("critic: deterministic, zero weights give zero, gradcheck") {
  CriticConfig cfg;
  cfg.input_width = 5;
  cfg.hidden = {6, 4};
  ParamStore critic;
  Rng rng(6);
  init_critic_params(critic, cfg, rng);
  Tensor input({5});
  for (auto& v : input.data) v = rng.normal();
  CHECK(critic_forward(critic, cfg, input) == critic_forward(critic, cfg, input));

  ParamStore zero;
  Rng zrng(7);
  init_critic_params(zero, cfg, zrng);
  for (auto& e : zero.entries()) std::fill(e.value.data.begin(), e.value.data.end(), 0.0);
  CHECK(critic_forward(zero, cfg, input) == 0.0);

  const double err = gradcheck(critic, [&](ParamStore& s, bool with_grad) {
    Tape tape;
    ParamBinder bind(tape, s);
    Tensor row = input;
    row.shape = {1, 5};
    Var v = critic_forward_tape(tape, bind, cfg, tape.constant(row));
    Var loss = ad::mean_all(tape, v);
    if (with_grad) {
      tape.backward(loss);
      bind.accumulate();
    }
    return tape.val(loss).data[0];
  });
  CHECK(err < 1e-6);

  Tensor wrong({3});
  CHECK_THROWS_AS(critic_forward(critic, cfg, wrong), config_error);
}

TEST_CASE("end-to-end gradcheck: hypernetwork -> actor log-prob") {
  PolicyArchitecture arch;
  arch.input_width = 4;
  arch.hidden = {5};
  arch.max_actions = 3;
  HyperConfig cfg;
  cfg.hidden = {8};
  ParamStore hyper;
  Rng rng(8);
  init_hyper_params(hyper, cfg, 6, arch, rng);
  Tensor h({1, 6});
  for (auto& v : h.data) v = rng.normal();
  Tensor obs({2, 4});
  for (auto& v : obs.data) v = rng.normal();
  const std::vector<uint8_t> mask{1, 1, 0, 1, 1, 1};
  const std::vector<int> actions{0, 2};

  const double err = gradcheck(hyper, [&](ParamStore& s, bool with_grad) {
    Tape tape;
    ParamBinder bind(tape, s);
    const auto layers = hyper_forward_tape(tape, bind, cfg, arch, tape.constant(h));
    Var logits = actor_logits_tape(tape, layers, tape.constant(obs));
    Var logp = ad::masked_log_softmax(tape, logits, mask);
    Var picked = ad::gather_cols(tape, logp, actions);
    Var loss = ad::mean_all(tape, picked);
    if (with_grad) {
      tape.backward(loss);
      bind.accumulate();
    }
    return tape.val(loss).data[0];
  });
  CHECK(err < 1e-4);
}

TEST_CASE("members share one policy: identical observations act identically") {
  PolicyArchitecture arch;
  arch.input_width = 4;
  arch.hidden = {6};
  arch.max_actions = 3;
  Rng rng(9);
  Tensor flat({arch.param_count()});
  for (auto& v : flat.data) v = rng.normal();
  const GeneratedPolicy p = GeneratedPolicy::from_flat(arch, flat, 0);
  Tensor obs({4});
  for (auto& v : obs.data) v = rng.normal();
  // Two co-located members with swapped ids see the same observation after
  // the swap, so their distributions swap accordingly.
  const auto dist_a = actor_forward(p, obs, {1, 1, 1});
  const auto dist_b = actor_forward(p, obs, {1, 1, 1});
  CHECK(dist_a == dist_b);
}

TEST_CASE("actor store round-trip preserves the generated policy") {
  const PolicyArchitecture arch = small_arch();
  Rng rng(10);
  Tensor flat({arch.param_count()});
  for (auto& v : flat.data) v = rng.normal();
  const GeneratedPolicy p = GeneratedPolicy::from_flat(arch, flat, 3);
  ParamStore store;
  actor_store_from_policy(p, store);
  const GeneratedPolicy back = policy_from_actor_store(arch, store);
  CHECK(back.flat.data == p.flat.data);
}
