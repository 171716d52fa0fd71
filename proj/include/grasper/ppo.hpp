#pragma once

#include <optional>
#include <vector>

#include "grasper/model.hpp"

namespace grasper {

struct PpoConfig {
  double clip = 0.2;
  double gae_lambda = 0.95;
  double discount = 0.99;
  int epochs = 4;
  double lr = 3e-4;
  double entropy_coef = 0.01;
  double value_coef = 0.5;
  int minibatch_episodes = 0;  // 0 = full batch

  nlohmann::json to_json() const;
};

// One (t, member) record of the episode buffer.
struct StepSample {
  int episode_id = 0;
  int t = 0;
  int member = 0;
  std::vector<int> pursuer_locs;
  int evader_loc = -1;
  int action_slot = 0;  // index into the legal action list
  int ref_slot = -1;    // reference action slot, -1 when not recorded
  int n_legal = 0;
  double logp_old = 0.0;
  double value_old = 0.0;
  double advantage = 0.0;
  double ret = 0.0;
};

// Steps grouped by game: every step of a group shares one generated policy.
struct GameGroup {
  int game_key = 0;
  const GameSpec* spec = nullptr;
  std::vector<StepSample> steps;
};

struct EpisodeBatch {
  std::vector<GameGroup> groups;
  int64_t total_steps() const;
  int episode_count() const;
};

struct CollectedEpisode {
  std::vector<StepSample> steps;
  double terminal_reward = 0.0;
  int length = 0;
  TerminalCause cause = TerminalCause::none;
};

// Rolls one episode with the acting bundle, recording log-probs, central
// critic values, legal masks and (optionally) reference actions; computes GAE
// advantages and return targets before returning. Thread-safe for concurrent
// calls on shared const inputs.
CollectedEpisode collect_episode(const GameSpec& spec, const ActorPolicy& actor,
                                 const ParamStore& critic, const CriticConfig& critic_cfg,
                                 const Tensor* h_aug_critic,
                                 const std::vector<double>& exit_probs, const PpoConfig& ppo,
                                 bool record_reference, uint64_t seed, int episode_id);

// Zero-mean unit-variance normalization across the whole buffer (guarded for
// tiny batches).
void normalize_advantages(EpisodeBatch& batch);

// Which stores receive gradients during an update. Policies come either from
// the hypernetwork (grasper) or a leaf actor store (baselines, fine-tuning).
struct UpdateSources {
  ParamStore* hyper = nullptr;
  const HyperConfig* hyper_cfg = nullptr;
  ParamStore* actor = nullptr;
  const PolicyArchitecture* arch = nullptr;

  ParamStore* rep = nullptr;
  const RepConfig* rep_cfg = nullptr;
  bool train_rep = false;

  ParamStore* critic = nullptr;
  const CriticConfig* critic_cfg = nullptr;

  ParamStore* gnn = nullptr;
  const GnnConfig* gnn_cfg = nullptr;
  bool joint_gnn = false;  // recompute the game embedding on-tape

  int t_max = 10;
  bool aug_actor = false;
  bool critic_uses_h = false;
  // Frozen per-group h_aug (aligned with batch.groups); required whenever an
  // embedding is used and joint_gnn is off.
  const std::vector<Tensor>* h_aug_frozen = nullptr;
};

struct UpdateStats {
  double loss = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double guidance = 0.0;  // mean -log pi(a_ref); 0 when alpha == 0
};

// MAPPO + HMP: clipped surrogate - entropy bonus + value loss, plus
// alpha * mean cross-entropy to the reference actions (skipped exactly when
// alpha == 0). Advantages are normalized once per call; one Adam step per
// PPO epoch. Stats come from the first epoch (on-policy estimates).
UpdateStats ppo_update(const UpdateSources& src, EpisodeBatch& batch, const PpoConfig& ppo,
                       double alpha, Rng& rng);

}  // namespace grasper
