#pragma once

#include <cmath>
#include <iosfwd>
#include <string>

#include "grasper/instance.hpp"
#include "grasper/ppo.hpp"

namespace grasper {

// Stage-II multi-task pre-training (heuristic-guided when alpha > 0).
struct PretrainConfig {
  int c1 = 8;                 // games per epoch
  int c2 = 4;                 // evader policies per game
  int episodes_per_task = 4;  // rollouts per (game, evader policy)
  double alpha = 0.5;         // HMP guidance weight
  bool alpha_linear_decay = false;
  // When non-empty, every task uses this exit distribution instead of fresh
  // Dirichlet draws (single-task imitation checks).
  std::vector<double> fixed_evader_policy;
  int64_t episodes_total = 200000;
  PpoConfig ppo;
  bool joint_gnn = false;  // ablation: train the GNN with the RL loss
  uint64_t seed = 0;
  int log_every_epochs = 10;

  // Early stop once the rolling mean return (over return_window episodes)
  // crosses return_threshold; NaN disables.
  double return_threshold = std::numeric_limits<double>::quiet_NaN();
  int return_window = 2000;

  std::string checkpoint_path;
  int checkpoint_every_epochs = 0;
};

struct PretrainResult {
  int64_t episodes_run = 0;
  int epochs_run = 0;
  double wall_clock_s = 0.0;
  // Threshold crossing (when requested); NaN / -1 when never crossed.
  double threshold_wall_clock_s = std::numeric_limits<double>::quiet_NaN();
  int64_t threshold_episodes = -1;
  std::vector<double> wave_mean_return;  // one entry per epoch
  double mean_return_first_tenth = 0.0;
  double mean_return_last_tenth = 0.0;
  double final_guidance = 0.0;
};

// Algorithm: per epoch, sample c1 games, emit each game's base policy, sample
// c2 evader policies per game, roll out episodes (recording heuristic
// reference actions when alpha > 0), run one MAPPO+HMP update over the
// buffer, clear the buffer. Trains hypernetwork (or the shared baseline
// actor), the representation layer and the critic; the GNN stays frozen
// unless joint_gnn is set. Metrics CSV columns:
// episode,mean_return,guidance_loss,entropy,wall_clock.
PretrainResult pretrain(GrasperModel& model, const GameDataset& train, const PretrainConfig& cfg,
                        std::ostream* metrics = nullptr);

}  // namespace grasper
