#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include <json.hpp>

#include "grasper/param_store.hpp"
#include "grasper/tape.hpp"
#include "grasper/tensor.hpp"

namespace grasper {

// Actor MLP layout. The output head is sized to the map family's
// max degree + 1 (stay) and masked per node, so generated weights keep one
// static shape across nodes.
struct PolicyArchitecture {
  int input_width = 0;
  std::vector<int> hidden{128, 128};
  int max_actions = 0;

  struct LayerShape {
    int in = 0;
    int out = 0;
  };
  std::vector<LayerShape> layers() const;
  int64_t layer_param_count(int layer) const;
  int64_t param_count() const;

  nlohmann::json to_json() const;
  static PolicyArchitecture from_json(const nlohmann::json& j);
  bool operator==(const PolicyArchitecture&) const = default;
};

// One flat parameter vector sliced into per-layer (W, b); the slices exactly
// tile the vector.
struct GeneratedPolicy {
  PolicyArchitecture arch;
  Tensor flat;  // [P]
  uint64_t provenance_hash = 0;
  std::vector<Tensor> weights;
  std::vector<Tensor> biases;

  static GeneratedPolicy from_flat(PolicyArchitecture arch, Tensor flat, uint64_t provenance);
  // Inverse of slicing; equals `flat` exactly.
  Tensor reflatten() const;
};

// Actor params as named store entries ("w0"/"b0"...): the form used for
// fine-tuned best-response copies and the MT baselines.
void actor_store_from_policy(const GeneratedPolicy& policy, ParamStore& out);
void init_actor_store(const PolicyArchitecture& arch, ParamStore& out, Rng& rng);
GeneratedPolicy policy_from_actor_store(const PolicyArchitecture& arch, const ParamStore& store);

// tanh hidden layers, linear output logits.
std::vector<double> actor_logits(const GeneratedPolicy& policy, const Tensor& obs_emb);
// Masked distribution over action slots.
std::vector<double> actor_forward(const GeneratedPolicy& policy, const Tensor& obs_emb,
                                  const std::vector<uint8_t>& legal_mask);
// Batched tape forward: obs [B x input_width], layer vars -> logits [B x A].
Var actor_logits_tape(Tape& tape, const std::vector<std::pair<Var, Var>>& layer_vars,
                      Var obs_batch);

// ---- hypernetwork ----------------------------------------------------------

struct HyperConfig {
  std::vector<int> hidden{256, 256};
  double head_init_scale = 1e-2;  // small output init => near-uniform policies

  nlohmann::json to_json() const;
  static HyperConfig from_json(const nlohmann::json& j);
};

// Trunk + one emission head per actor layer (chunked heads keep widths
// manageable).
void init_hyper_params(ParamStore& store, const HyperConfig& cfg, int input_width,
                       const PolicyArchitecture& arch, Rng& rng);

// h_aug [input_width] -> flat actor parameters (deterministic).
GeneratedPolicy hyper_forward(const ParamStore& store, const HyperConfig& cfg,
                              const PolicyArchitecture& arch, const Tensor& h_aug);
// Tape version: h_aug as [1 x input_width] var; returns per-layer (W, b) vars
// so gradients flow through the generated parameters into the hypernetwork.
std::vector<std::pair<Var, Var>> hyper_forward_tape(Tape& tape, ParamBinder& bind,
                                                    const HyperConfig& cfg,
                                                    const PolicyArchitecture& arch, Var h_aug);

// ---- critic ----------------------------------------------------------------

struct CriticConfig {
  int input_width = 0;
  std::vector<int> hidden{128, 128};

  nlohmann::json to_json() const;
  static CriticConfig from_json(const nlohmann::json& j);
};

void init_critic_params(ParamStore& store, const CriticConfig& cfg, Rng& rng);
double critic_forward(const ParamStore& store, const CriticConfig& cfg, const Tensor& input);
// [B x input_width] -> [B x 1]
Var critic_forward_tape(Tape& tape, ParamBinder& bind, const CriticConfig& cfg, Var input_batch);

}  // namespace grasper
