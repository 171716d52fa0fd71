#include "grasper/eval.hpp"

#include <algorithm>
#include <cmath>

#include "grasper/error.hpp"
#include "grasper/metrics.hpp"

namespace grasper {

double zero_shot_eval(const GameSpec& spec, const GrasperModel& model, const ZeroShotOptions& opt,
                      uint64_t seed) {
  const PursuerPurePolicy base = base_policy(model, spec);
  const std::vector<PursuerPurePolicy> pursuers{base};
  const std::vector<double> sigma_p{1.0};
  const EvaderPurePolicy responder = evader_br(
      spec, pursuers, sigma_p, opt.evader_br_episodes_per_exit, opt.evader_temperature,
      seed_stream(seed, 0xeb));
  const Utility u = worst_case_utility(spec, pursuers, sigma_p, {responder}, {1.0},
                                       opt.eval_episodes, seed_stream(seed, 0xca));
  return u.mean;
}

std::vector<HeatmapCell> heatmap(const GameSpec& template_spec, const GrasperModel& model,
                                 const ZeroShotOptions& opt, uint64_t seed) {
  const Graph& g = template_spec.graph;
  if (!g.has_coords())
    throw input_error("heatmap: map has no node coordinates (grid maps required)");
  std::vector<HeatmapCell> cells(static_cast<size_t>(g.node_count));
  std::vector<int> sweep_nodes;
  for (int v = 0; v < g.node_count; ++v) {
    HeatmapCell& cell = cells[static_cast<size_t>(v)];
    cell.node = v;
    cell.x = g.coords[static_cast<size_t>(v)][0];
    cell.y = g.coords[static_cast<size_t>(v)][1];
    cell.is_exit = template_spec.is_exit(v);
    cell.is_pursuer_start =
        std::find(template_spec.pursuer_starts.begin(), template_spec.pursuer_starts.end(), v) !=
        template_spec.pursuer_starts.end();
    cell.utility = std::numeric_limits<double>::quiet_NaN();
    if (!cell.is_exit) sweep_nodes.push_back(v);
  }
  for (int v : sweep_nodes) {
    GameSpec spec = template_spec;
    spec.evader_start = v;
    spec.validate();
    cells[static_cast<size_t>(v)].utility =
        zero_shot_eval(spec, model, opt, seed_stream(seed, static_cast<uint64_t>(v)));
  }
  return cells;
}

void write_heatmap_csv(const std::vector<HeatmapCell>& cells, const std::string& path) {
  CsvWriter csv(path, {"node", "x", "y", "utility", "is_exit", "is_pursuer_start"});
  for (const auto& c : cells) {
    csv.row({std::to_string(c.node), CsvWriter::num(c.x), CsvWriter::num(c.y),
             c.is_exit ? "" : CsvWriter::num(c.utility), c.is_exit ? "1" : "0",
             c.is_pursuer_start ? "1" : "0"});
  }
}

std::vector<MetricsRow> run_comparison(const GameDataset& test_set,
                                       const std::vector<Method>& methods,
                                       const GrasperModel* grasper_model,
                                       const GrasperModel* mt_model,
                                       const GrasperModel* mt_aug_model,
                                       const ModelConfig& scratch_cfg,
                                       const ComparisonConfig& cc) {
  std::vector<MetricsRow> rows;
  for (Method method : methods) {
    const GrasperModel* model = nullptr;
    double offset = 0.0;
    switch (method) {
      case Method::grasper:
        model = grasper_model;
        offset = cc.grasper_pretrain_offset_s;
        break;
      case Method::mt_psro:
        model = mt_model;
        offset = cc.mt_pretrain_offset_s;
        break;
      case Method::mt_psro_aug:
        model = mt_aug_model;
        offset = cc.mt_aug_pretrain_offset_s;
        break;
      case Method::psro:
      case Method::random: break;
    }
    if ((method == Method::grasper || method == Method::mt_psro ||
         method == Method::mt_psro_aug) &&
        model == nullptr)
      throw config_error(std::string("run_comparison: missing checkpoint for method ") +
                         to_string(method));

    for (uint64_t seed : cc.seeds) {
      for (size_t game_id = 0; game_id < test_set.instances.size(); ++game_id) {
        const GameSpec& spec = test_set.instances[game_id];
        const uint64_t cell_seed = seed_stream(seed, 0xc0fe + game_id);
        if (method == Method::random) {
          // No PSRO: a uniform-action pursuer evaluated against its evader BR.
          Rng rng(cell_seed);
          std::vector<double> per_exit(spec.exits.size(), 0.0);
          for (size_t e = 0; e < spec.exits.size(); ++e) {
            std::vector<double> onehot(spec.exits.size(), 0.0);
            onehot[e] = 1.0;
            double total = 0.0;
            for (int k = 0; k < cc.psro.evader_br_episodes_per_exit; ++k) {
              Rng ep_rng(seed_stream(cell_seed, 0x11 + e * 1000 + static_cast<uint64_t>(k)));
              const EvaderPlan plan = sample_evader_plan(spec, onehot, ep_rng);
              total -= rollout(spec, plan, uniform_policy_fn(spec, ep_rng)).total_reward_p;
            }
            per_exit[e] = total / cc.psro.evader_br_episodes_per_exit;
          }
          const std::vector<double> sigma =
              softmax_over_values(per_exit, cc.psro.evader_temperature);
          double mean = 0.0, sq = 0.0;
          for (int k = 0; k < cc.random_eval_episodes; ++k) {
            Rng ep_rng(seed_stream(cell_seed, 0x33 + static_cast<uint64_t>(k)));
            const EvaderPlan plan = sample_evader_plan(spec, sigma, ep_rng);
            const double r = rollout(spec, plan, uniform_policy_fn(spec, ep_rng)).total_reward_p;
            mean += r;
            sq += r * r;
          }
          mean /= cc.random_eval_episodes;
          const double var =
              std::max(0.0, sq / cc.random_eval_episodes - mean * mean);
          MetricsRow row{to_string(method), static_cast<int>(game_id), seed, 0.0, 0, mean,
                         std::sqrt(var / cc.random_eval_episodes)};
          rows.push_back(row);
          continue;
        }
        const PsroResult result =
            run_psro(spec, model, method, scratch_cfg, cc.psro, cell_seed);
        for (const auto& m : result.history) {
          MetricsRow row;
          row.method = to_string(method);
          row.game_id = static_cast<int>(game_id);
          row.seed = seed;
          row.wall_clock_s = m.wall_clock_s + offset;
          row.epoch = m.epoch;
          row.worst_case_utility = m.worst_case_utility;
          row.std_error = m.utility_std_error;
          rows.push_back(row);
        }
      }
    }
  }
  return rows;
}

void write_metrics_csv(const std::vector<MetricsRow>& rows, const std::string& path,
                       const std::string& config_hash_hex) {
  CsvWriter csv(path, {"config_hash", "method", "game_id", "seed", "wall_clock_s", "epoch",
                       "worst_case_utility", "std_error"});
  for (const auto& r : rows) {
    csv.row({config_hash_hex, r.method, std::to_string(r.game_id), std::to_string(r.seed),
             CsvWriter::num(r.wall_clock_s), std::to_string(r.epoch),
             CsvWriter::num(r.worst_case_utility), CsvWriter::num(r.std_error)});
  }
}

std::vector<AblationCell> run_ablation(const GameDataset& i1, const GameDataset& i2,
                                       const std::vector<const GrasperModel*>& toggle_models,
                                       const std::vector<std::pair<bool, bool>>& toggles,
                                       const PsroConfig& psro_cfg, uint64_t seed) {
  if (toggle_models.size() != toggles.size())
    throw config_error("run_ablation: need one model per toggle combination");
  std::vector<AblationCell> cells;
  const std::vector<std::pair<const GameDataset*, const char*>> sets{{&i1, "I1"}, {&i2, "I2"}};
  for (const auto& [set, set_name] : sets) {
    for (size_t k = 0; k < toggle_models.size(); ++k) {
      if (toggle_models[k] == nullptr)
        throw config_error("run_ablation: missing toggle checkpoint");
      std::vector<double> finals;
      for (size_t game_id = 0; game_id < set->instances.size(); ++game_id) {
        const PsroResult result =
            run_psro(set->instances[game_id], toggle_models[k], toggle_models[k]->cfg.method,
                     toggle_models[k]->cfg, psro_cfg, seed_stream(seed, 0xab1 + game_id));
        finals.push_back(result.history.back().worst_case_utility);
      }
      AblationCell cell;
      cell.hmp = toggles[k].first;
      cell.rep = toggles[k].second;
      cell.test_set = set_name;
      double mean = 0.0;
      for (double f : finals) mean += f;
      mean /= static_cast<double>(finals.size());
      double var = 0.0;
      for (double f : finals) var += (f - mean) * (f - mean);
      if (finals.size() > 1) var /= static_cast<double>(finals.size() - 1);
      cell.utility = mean;
      cell.std_error = std::sqrt(var / static_cast<double>(finals.size()));
      cells.push_back(cell);
    }
  }
  return cells;
}

void write_ablation_csv(const std::vector<AblationCell>& cells, const std::string& path) {
  CsvWriter csv(path, {"test_set", "hmp", "rep", "utility", "std_error"});
  for (const auto& c : cells)
    csv.row({c.test_set, c.hmp ? "1" : "0", c.rep ? "1" : "0", CsvWriter::num(c.utility),
             CsvWriter::num(c.std_error)});
}

}  // namespace grasper
