#pragma once

#include <optional>
#include <string>
#include <vector>

#include "grasper/instance.hpp"
#include "grasper/psro.hpp"

namespace grasper {

struct ZeroShotOptions {
  int evader_br_episodes_per_exit = 64;
  double evader_temperature = 0.2;
  int eval_episodes = 512;
};

// Worst-case utility of the generated base policy with no fine-tuning:
// sigma_p = the single base policy, sigma_e = the evader best response to it.
double zero_shot_eval(const GameSpec& spec, const GrasperModel& model, const ZeroShotOptions& opt,
                      uint64_t seed);

struct HeatmapCell {
  int node = -1;
  double x = 0.0, y = 0.0;
  double utility = 0.0;
  bool is_exit = false;
  bool is_pursuer_start = false;
};

// Zero-shot utility sweep over every non-exit evader start (other initial
// conditions fixed). Requires node coordinates. Exit nodes are listed with
// their marker but no utility sweep.
std::vector<HeatmapCell> heatmap(const GameSpec& template_spec, const GrasperModel& model,
                                 const ZeroShotOptions& opt, uint64_t seed);
void write_heatmap_csv(const std::vector<HeatmapCell>& cells, const std::string& path);

// One evaluation row of the comparison harness.
struct MetricsRow {
  std::string method;
  int game_id = 0;
  uint64_t seed = 0;
  double wall_clock_s = 0.0;  // includes the amortized pre-training offset
  int epoch = 0;
  double worst_case_utility = 0.0;
  double std_error = 0.0;
};

struct ComparisonConfig {
  PsroConfig psro;
  std::vector<uint64_t> seeds{1, 2, 3};
  int random_eval_episodes = 512;
  // Amortized pre-training offset per Table-2 accounting:
  // total pre-training wall clock / |training set|; zero for psro/random.
  double grasper_pretrain_offset_s = 0.0;
  double mt_pretrain_offset_s = 0.0;
  double mt_aug_pretrain_offset_s = 0.0;
};

// Runs every (method, game, seed) cell: PSRO fine-tuning for the trained
// methods and scratch PSRO for the baseline; the "random" method evaluates a
// uniform-action pursuer against its evader best response.
std::vector<MetricsRow> run_comparison(const GameDataset& test_set,
                                       const std::vector<Method>& methods,
                                       const GrasperModel* grasper_model,
                                       const GrasperModel* mt_model,
                                       const GrasperModel* mt_aug_model,
                                       const ModelConfig& scratch_cfg,
                                       const ComparisonConfig& cc);

void write_metrics_csv(const std::vector<MetricsRow>& rows, const std::string& path,
                       const std::string& config_hash_hex);

struct AblationCell {
  bool hmp = false;
  bool rep = false;
  std::string test_set;
  double utility = 0.0;
  double std_error = 0.0;
};

// Table-style ablation grid: per toggle checkpoint x test set, the mean final
// worst-case utility after fine-tuning, with the across-game standard error.
std::vector<AblationCell> run_ablation(const GameDataset& i1, const GameDataset& i2,
                                       const std::vector<const GrasperModel*>& toggle_models,
                                       const std::vector<std::pair<bool, bool>>& toggles,
                                       const PsroConfig& psro_cfg, uint64_t seed);
void write_ablation_csv(const std::vector<AblationCell>& cells, const std::string& path);

}  // namespace grasper
