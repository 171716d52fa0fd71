#include "grasper/psro.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "grasper/error.hpp"
#include "grasper/parallel.hpp"

namespace grasper {

namespace {

PayoffEstimate summarize(const std::vector<double>& rewards) {
  PayoffEstimate est;
  const double n = static_cast<double>(rewards.size());
  for (double r : rewards) est.mean += r;
  est.mean /= n;
  double var = 0.0;
  for (double r : rewards) var += (r - est.mean) * (r - est.mean);
  if (rewards.size() > 1) var /= (n - 1.0);
  est.std_error = std::sqrt(var / n);
  return est;
}

double run_episode(const GameSpec& spec, const PursuerPurePolicy& pursuer,
                   const std::vector<double>& exit_probs, uint64_t seed) {
  Rng rng(seed);
  const EvaderPlan plan = sample_evader_plan(spec, exit_probs, rng);
  const EpisodeRecord record = rollout(spec, plan, pursuer.as_policy_fn(spec, rng));
  return record.total_reward_p;
}

}  // namespace

PayoffEstimate estimate_payoff(const GameSpec& spec, const PursuerPurePolicy& pursuer,
                               const EvaderPurePolicy& evader, int episodes, uint64_t seed) {
  if (episodes < 1) throw input_error("estimate_payoff: episodes must be >= 1");
  std::vector<double> rewards(static_cast<size_t>(episodes));
  parallel::parallel_for(
      episodes,
      [&](int64_t i) {
        rewards[static_cast<size_t>(i)] =
            run_episode(spec, pursuer, evader.exit_probs, seed_stream(seed, static_cast<uint64_t>(i)));
      },
      /*grain=*/8);
  return summarize(rewards);
}

std::vector<double> softmax_over_values(const std::vector<double>& values, double temperature) {
  if (temperature <= 0.0) throw input_error("softmax_over_values: temperature must be > 0");
  const double max_v = *std::max_element(values.begin(), values.end());
  std::vector<double> probs(values.size());
  double denom = 0.0;
  for (size_t i = 0; i < values.size(); ++i) {
    probs[i] = std::exp((values[i] - max_v) / temperature);
    denom += probs[i];
  }
  for (auto& p : probs) p /= denom;
  return probs;
}

EvaderPurePolicy evader_br(const GameSpec& spec, const std::vector<PursuerPurePolicy>& pursuers,
                           const std::vector<double>& sigma_p, int episodes_per_exit,
                           double temperature, uint64_t seed) {
  if (pursuers.empty() || pursuers.size() != sigma_p.size())
    throw input_error("evader_br: bad pursuer mixture");
  const int n_exits = static_cast<int>(spec.exits.size());
  std::vector<double> values(static_cast<size_t>(n_exits), 0.0);
  // One task per (exit, episode); the pursuer pure policy is drawn from
  // sigma_p inside each task.
  std::vector<double> rewards(static_cast<size_t>(n_exits) * episodes_per_exit);
  parallel::parallel_for(
      static_cast<int64_t>(rewards.size()),
      [&](int64_t task) {
        const int exit_index = static_cast<int>(task / episodes_per_exit);
        Rng rng(seed_stream(seed, static_cast<uint64_t>(task)));
        double draw = rng.uniform();
        size_t pick = sigma_p.size() - 1;
        for (size_t i = 0; i < sigma_p.size(); ++i) {
          draw -= sigma_p[i];
          if (draw <= 0.0) {
            pick = i;
            break;
          }
        }
        std::vector<double> onehot(static_cast<size_t>(n_exits), 0.0);
        onehot[static_cast<size_t>(exit_index)] = 1.0;
        rewards[static_cast<size_t>(task)] =
            -run_episode(spec, pursuers[pick], onehot, rng.next_u64());
      },
      /*grain=*/8);
  for (int e = 0; e < n_exits; ++e) {
    double total = 0.0;
    for (int k = 0; k < episodes_per_exit; ++k)
      total += rewards[static_cast<size_t>(e) * episodes_per_exit + static_cast<size_t>(k)];
    values[static_cast<size_t>(e)] = total / static_cast<double>(episodes_per_exit);
  }
  return {softmax_over_values(values, temperature)};
}

PursuerPurePolicy pursuer_br(const GameSpec& spec, const std::vector<EvaderPurePolicy>& evaders,
                             const std::vector<double>& sigma_e, const PursuerPurePolicy& init,
                             const ParamStore& critic_init, const CriticConfig& critic_cfg,
                             const Tensor* h_aug_critic, int budget_episodes,
                             const PpoConfig& ppo, int wave_episodes, uint64_t seed) {
  if (evaders.size() != sigma_e.size()) throw input_error("pursuer_br: bad evader mixture");
  PursuerPurePolicy tuned = init;
  if (budget_episodes <= 0) return tuned;

  // Effective exit distribution of the evader meta-strategy (episodes are
  // independent, so collapsing the mixture is equivalent to sampling a pure
  // evader per episode).
  std::vector<double> exit_probs(spec.exits.size(), 0.0);
  for (size_t k = 0; k < evaders.size(); ++k)
    for (size_t e = 0; e < exit_probs.size(); ++e)
      exit_probs[e] += sigma_e[k] * evaders[k].exit_probs[e];

  ParamStore actor;
  actor_store_from_policy(init.policy, actor);
  ParamStore critic = critic_init;
  critic.reset_optimizer_state();

  Rng rng(seed_stream(seed, 0xb4));
  int episodes_left = budget_episodes;
  int episode_id = 0;
  while (episodes_left > 0) {
    const int wave = std::min(wave_episodes, episodes_left);
    episodes_left -= wave;
    std::vector<CollectedEpisode> episodes(static_cast<size_t>(wave));
    const uint64_t wave_seed = rng.next_u64();
    parallel::parallel_for(wave, [&](int64_t i) {
      episodes[static_cast<size_t>(i)] =
          collect_episode(spec, tuned, critic, critic_cfg, h_aug_critic, exit_probs, ppo,
                          /*record_reference=*/false,
                          seed_stream(wave_seed, static_cast<uint64_t>(i)),
                          episode_id + static_cast<int>(i));
    });
    episode_id += wave;

    EpisodeBatch batch;
    GameGroup group;
    group.game_key = 0;
    group.spec = &spec;
    for (auto& ep : episodes)
      for (auto& s : ep.steps) group.steps.push_back(std::move(s));
    if (group.steps.empty()) continue;
    batch.groups.push_back(std::move(group));

    std::vector<Tensor> h_aug_frozen;
    UpdateSources src;
    src.actor = &actor;
    src.arch = &tuned.policy.arch;
    src.rep = const_cast<ParamStore*>(tuned.rep.get());  // read-only: train_rep stays false
    src.rep_cfg = &tuned.rep_cfg;
    src.train_rep = false;
    src.critic = &critic;
    src.critic_cfg = &critic_cfg;
    src.t_max = tuned.rep_cfg.t_max;
    src.aug_actor = tuned.h_aug_actor.has_value();
    src.critic_uses_h = h_aug_critic != nullptr;
    if (src.aug_actor || src.critic_uses_h) {
      h_aug_frozen.push_back(src.aug_actor ? *tuned.h_aug_actor : *h_aug_critic);
      src.h_aug_frozen = &h_aug_frozen;
    }
    Rng update_rng = rng.split(static_cast<uint64_t>(episode_id));
    ppo_update(src, batch, ppo, /*alpha=*/0.0, update_rng);

    tuned.policy = policy_from_actor_store(tuned.policy.arch, actor);
  }
  return tuned;
}

Utility worst_case_utility(const GameSpec& spec, const std::vector<PursuerPurePolicy>& pursuers,
                           const std::vector<double>& sigma_p,
                           const std::vector<EvaderPurePolicy>& evaders,
                           const std::vector<double>& sigma_e, int episodes, uint64_t seed) {
  if (pursuers.size() != sigma_p.size() || evaders.size() != sigma_e.size())
    throw input_error("worst_case_utility: mixture size mismatch");
  std::vector<double> rewards(static_cast<size_t>(episodes));
  parallel::parallel_for(
      episodes,
      [&](int64_t i) {
        Rng rng(seed_stream(seed, static_cast<uint64_t>(i)));
        auto draw_index = [&rng](const std::vector<double>& probs) {
          double d = rng.uniform();
          size_t pick = probs.size() - 1;
          for (size_t k = 0; k < probs.size(); ++k) {
            d -= probs[k];
            if (d <= 0.0) {
              pick = k;
              break;
            }
          }
          return pick;
        };
        const size_t p = draw_index(sigma_p);
        const size_t e = draw_index(sigma_e);
        rewards[static_cast<size_t>(i)] =
            run_episode(spec, pursuers[p], evaders[e].exit_probs, rng.next_u64());
      },
      /*grain=*/8);
  const PayoffEstimate est = summarize(rewards);
  return {est.mean, est.std_error};
}

namespace {

void simulate_new_cells(const GameSpec& spec, MetaGame& meta, int payoff_episodes, Rng& rng) {
  const int rows = static_cast<int>(meta.pursuers.size());
  const int cols = static_cast<int>(meta.evaders.size());
  Tensor payoff({rows, cols});
  Tensor stderr_({rows, cols});
  for (int64_t i = 0; i < meta.payoff.rows(); ++i) {
    for (int64_t j = 0; j < meta.payoff.cols(); ++j) {
      payoff.at(i, j) = meta.payoff.at(i, j);
      stderr_.at(i, j) = meta.payoff_stderr.at(i, j);
    }
  }
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      const bool is_new = i >= meta.payoff.rows() || j >= meta.payoff.cols();
      if (!is_new) continue;
      const PayoffEstimate est =
          estimate_payoff(spec, meta.pursuers[static_cast<size_t>(i)],
                          meta.evaders[static_cast<size_t>(j)], payoff_episodes, rng.next_u64());
      payoff.at(i, j) = est.mean;
      stderr_.at(i, j) = est.std_error;
      meta.episodes_simulated += payoff_episodes;
      ++meta.cells_simulated;
    }
  }
  meta.payoff = std::move(payoff);
  meta.payoff_stderr = std::move(stderr_);
}

}  // namespace

PsroResult run_psro(const GameSpec& spec, const GrasperModel* model, Method mode,
                    const ModelConfig& cfg_for_scratch, const PsroConfig& cfg, uint64_t seed) {
  if (cfg.epochs < 1) throw input_error("run_psro: epochs must be >= 1");
  const bool needs_model =
      mode == Method::grasper || mode == Method::mt_psro || mode == Method::mt_psro_aug;
  if (needs_model && model == nullptr)
    throw config_error("run_psro: method requires a pre-trained checkpoint");

  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&t0] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };

  Rng rng(seed_stream(seed, 0x9580));
  PsroResult result;
  MetaGame& meta = result.meta;

  // Critic for fine-tuning plus the critic-side h_aug.
  ParamStore critic_init;
  CriticConfig critic_cfg;
  std::optional<Tensor> h_aug_critic;
  PursuerPurePolicy base;
  if (needs_model) {
    base = base_policy(*model, spec);
    critic_init = model->critic;
    critic_cfg = model->cfg.critic_cfg();
    if (model->cfg.critic_uses_h()) h_aug_critic = model_h_aug(*model, spec);
  } else {
    ModelConfig scratch_cfg = cfg_for_scratch;
    scratch_cfg.method = Method::mt_psro;  // plain actor, no GNN anywhere
    base = scratch_policy(scratch_cfg, rng.next_u64());
    critic_cfg = scratch_cfg.critic_cfg();
    Rng critic_rng = rng.split(0xc1);
    init_critic_params(critic_init, critic_cfg, critic_rng);
  }

  meta.pursuers.push_back(base);
  meta.evaders.push_back(
      {std::vector<double>(spec.exits.size(), 1.0 / static_cast<double>(spec.exits.size()))});
  meta.payoff = Tensor::zeros({0, 0});
  meta.payoff_stderr = Tensor::zeros({0, 0});
  simulate_new_cells(spec, meta, cfg.payoff_episodes, rng);
  meta.sigma_p = {1.0};
  meta.sigma_e = {1.0};

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const EvaderPurePolicy new_evader =
        evader_br(spec, meta.pursuers, meta.sigma_p, cfg.evader_br_episodes_per_exit,
                  cfg.evader_temperature, rng.next_u64());

    PursuerPurePolicy br_init = base;
    if (mode == Method::psro) {
      ModelConfig scratch_cfg = cfg_for_scratch;
      scratch_cfg.method = Method::mt_psro;
      br_init = scratch_policy(scratch_cfg, rng.next_u64());
    }
    const PursuerPurePolicy new_pursuer = pursuer_br(
        spec, meta.evaders, meta.sigma_e, br_init, critic_init, critic_cfg,
        h_aug_critic ? &*h_aug_critic : nullptr, cfg.br_episodes, cfg.ppo,
        cfg.br_wave_episodes, rng.next_u64());

    meta.pursuers.push_back(new_pursuer);
    meta.evaders.push_back(new_evader);
    simulate_new_cells(spec, meta, cfg.payoff_episodes, rng);
    std::tie(meta.sigma_p, meta.sigma_e) =
        meta_solve(meta.payoff, cfg.meta_solver, cfg.meta_solver_iters);

    PsroEpochMetrics metrics;
    metrics.epoch = epoch;
    metrics.population_size = static_cast<int>(meta.pursuers.size());
    const Utility u = worst_case_utility(spec, meta.pursuers, meta.sigma_p, meta.evaders,
                                         meta.sigma_e, cfg.eval_episodes, rng.next_u64());
    metrics.worst_case_utility = u.mean;
    metrics.utility_std_error = u.std_error;
    if (cfg.compute_exploitability)
      metrics.exploitability = exploitability(spec, meta, cfg.oracle_state_guard);
    metrics.wall_clock_s = elapsed();
    result.history.push_back(metrics);
  }
  return result;
}

double exploitability(const GameSpec& spec, const MetaGame& meta, int64_t state_guard) {
  std::vector<double> exit_probs(spec.exits.size(), 0.0);
  for (size_t k = 0; k < meta.evaders.size(); ++k)
    for (size_t e = 0; e < exit_probs.size(); ++e)
      exit_probs[e] += meta.sigma_e[k] * meta.evaders[k].exit_probs[e];
  const double br_pursuer =
      exact_game_value(spec, exit_probs, OracleInfo::trajectory_belief, state_guard);

  std::vector<PolicyDistFn> pursuers;
  pursuers.reserve(meta.pursuers.size());
  for (const auto& p : meta.pursuers) pursuers.push_back(p.as_policy_dist_fn(spec));
  const double br_evader = exact_evader_br_value(spec, pursuers, meta.sigma_p, state_guard);
  return br_pursuer + br_evader;
}

}  // namespace grasper
