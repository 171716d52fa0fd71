#pragma once

#include <memory>
#include <optional>
#include <string>

#include "grasper/encoder.hpp"
#include "grasper/obs_rep.hpp"
#include "grasper/oracle.hpp"
#include "grasper/policy.hpp"

namespace grasper {

enum class Method { grasper, mt_psro, mt_psro_aug, psro, random };

const char* to_string(Method m);
Method method_from_string(const std::string& name);

// Widths and wiring for every network in the pipeline. The actor input is the
// observation representation width (plus h_aug for the Aug baseline); the
// critic sees the central state embedding (plus h_aug when a GNN exists).
struct ModelConfig {
  Method method = Method::grasper;
  int n_pursuers = 5;
  int t_max = 10;
  int max_actions = 5;  // base-map max degree + 1
  GnnConfig gnn;
  RepConfig rep;
  HyperConfig hyper;
  std::vector<int> actor_hidden{128, 128};
  std::vector<int> critic_hidden{128, 128};

  bool uses_gnn() const { return method == Method::grasper || method == Method::mt_psro_aug; }
  bool uses_hyper() const { return method == Method::grasper; }
  bool aug_actor() const { return method == Method::mt_psro_aug; }
  bool critic_uses_h() const { return uses_gnn(); }
  int h_aug_width() const { return gnn.hidden + 1; }

  PolicyArchitecture actor_arch() const;
  CriticConfig critic_cfg() const;

  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);
};

// Every trainable store of the pipeline. `actor` exists for the MT baselines
// (no hypernetwork); `mae` holds Stage-I decoder state.
struct GrasperModel {
  ModelConfig cfg;
  ParamStore gnn;
  ParamStore mae;
  ParamStore rep;
  ParamStore hyper;
  ParamStore actor;
  ParamStore critic;
};

GrasperModel init_model(const ModelConfig& cfg, uint64_t seed);

void save_model(const GrasperModel& model, const std::string& path,
                const nlohmann::json& extra_metadata = {});
GrasperModel load_model(const std::string& path);

// Hidden game vector from the (frozen or current) GNN.
Tensor model_h_aug(const GrasperModel& model, const GameSpec& spec);

// Immutable acting bundle: safe to share across parallel rollouts and to keep
// alive in PSRO populations after the source model moves on.
struct ActorPolicy {
  GeneratedPolicy policy;
  std::shared_ptr<const ParamStore> rep;
  RepConfig rep_cfg;
  std::optional<Tensor> h_aug_actor;  // appended to the observation embedding

  Tensor observation_input(const Observation& obs, const Graph& graph) const;
  // Distribution over the legal_actions(graph, member location) order.
  std::vector<double> action_dist(const GameSpec& spec, const Observation& obs) const;
  int sample_action(const GameSpec& spec, const Observation& obs, Rng& rng) const;
  PursuerPolicyFn as_policy_fn(const GameSpec& spec, Rng& rng) const;
  PolicyDistFn as_policy_dist_fn(const GameSpec& spec) const;
};

// The model's zero-shot base policy for a game (hypernetwork emission for
// Grasper, the shared actor for the MT baselines).
ActorPolicy base_policy(const GrasperModel& model, const GameSpec& spec);

// Random-initialized policy of the same architecture (PSRO-from-scratch).
ActorPolicy scratch_policy(const ModelConfig& cfg, uint64_t seed);

// Uniform-over-legal-actions pursuer (the "random" baseline).
PursuerPolicyFn uniform_policy_fn(const GameSpec& spec, Rng& rng);

}  // namespace grasper
