#pragma once

#include <optional>
#include <vector>

#include "grasper/meta_solver.hpp"
#include "grasper/ppo.hpp"

namespace grasper {

// Pursuer pure strategies are self-contained acting bundles; evader pure
// strategies are distributions over the game's exits.
using PursuerPurePolicy = ActorPolicy;

struct EvaderPurePolicy {
  std::vector<double> exit_probs;
};

struct MetaGame {
  std::vector<PursuerPurePolicy> pursuers;
  std::vector<EvaderPurePolicy> evaders;
  Tensor payoff;         // [|pursuers| x |evaders|] mean pursuer reward
  Tensor payoff_stderr;
  int64_t episodes_simulated = 0;
  int64_t cells_simulated = 0;
  std::vector<double> sigma_p;
  std::vector<double> sigma_e;
};

struct PayoffEstimate {
  double mean = 0.0;
  double std_error = 0.0;
};

// Monte-Carlo pursuer payoff of the policy pair; the exit is drawn from the
// evader policy and the path resampled each episode. Parallel over episodes,
// deterministic under the seed.
PayoffEstimate estimate_payoff(const GameSpec& spec, const PursuerPurePolicy& pursuer,
                               const EvaderPurePolicy& evader, int episodes, uint64_t seed);

std::vector<double> softmax_over_values(const std::vector<double>& values, double temperature);

// Estimates every exit's evader value against the pursuer meta-strategy by
// simulation, then softmaxes the values at `temperature`.
EvaderPurePolicy evader_br(const GameSpec& spec, const std::vector<PursuerPurePolicy>& pursuers,
                           const std::vector<double>& sigma_p, int episodes_per_exit,
                           double temperature, uint64_t seed);

// Fine-tunes a copy of `init`'s actor parameters (representation and
// generator stay frozen) with MAPPO (no HMP) against the evader meta-strategy
// for `budget_episodes`; budget 0 returns the init unchanged.
PursuerPurePolicy pursuer_br(const GameSpec& spec, const std::vector<EvaderPurePolicy>& evaders,
                             const std::vector<double>& sigma_e, const PursuerPurePolicy& init,
                             const ParamStore& critic_init, const CriticConfig& critic_cfg,
                             const Tensor* h_aug_critic, int budget_episodes,
                             const PpoConfig& ppo, int wave_episodes, uint64_t seed);

struct Utility {
  double mean = 0.0;
  double std_error = 0.0;
};

// u^p = E_{pi^p ~ sigma_p, pi^e ~ sigma_e} E[r^p], the evader walking sampled
// shortest paths to its drawn exit.
Utility worst_case_utility(const GameSpec& spec, const std::vector<PursuerPurePolicy>& pursuers,
                           const std::vector<double>& sigma_p,
                           const std::vector<EvaderPurePolicy>& evaders,
                           const std::vector<double>& sigma_e, int episodes, uint64_t seed);

struct PsroConfig {
  int epochs = 5;
  int br_episodes = 10;  // fine-tuning budget per best response
  int br_wave_episodes = 10;
  int payoff_episodes = 64;
  int evader_br_episodes_per_exit = 32;
  double evader_temperature = 0.2;
  MetaSolver meta_solver = MetaSolver::regret_matching;
  int meta_solver_iters = 100000;
  int eval_episodes = 512;
  PpoConfig ppo;
  bool compute_exploitability = false;
  int64_t oracle_state_guard = 10000000;
};

struct PsroEpochMetrics {
  int epoch = 0;
  double wall_clock_s = 0.0;
  double worst_case_utility = 0.0;
  double utility_std_error = 0.0;
  int population_size = 0;
  double exploitability = std::numeric_limits<double>::quiet_NaN();
};

struct PsroResult {
  MetaGame meta;
  std::vector<PsroEpochMetrics> history;
};

// PSRO (fine-tuning stage). `model` provides the zero-shot base policy and
// critic for the grasper / MT methods and must be non-null for them; the
// scratch baseline (Method::psro) initializes each epoch's best response at
// random. `cfg_for_scratch` sizes the scratch networks.
PsroResult run_psro(const GameSpec& spec, const GrasperModel* model, Method mode,
                    const ModelConfig& cfg_for_scratch, const PsroConfig& cfg, uint64_t seed);

// Exact best-response gap of the final meta-strategy profile, computed with
// the trajectory-belief oracle (pursuer side) and exit enumeration (evader
// side). Oracle-sized games only.
double exploitability(const GameSpec& spec, const MetaGame& meta,
                      int64_t state_guard = 10000000);

}  // namespace grasper
