#include "grasper/pretrain.hpp"

#include <chrono>
#include <deque>
#include <numeric>
#include <ostream>

#include "grasper/error.hpp"
#include "grasper/parallel.hpp"

namespace grasper {

PretrainResult pretrain(GrasperModel& model, const GameDataset& train, const PretrainConfig& cfg,
                        std::ostream* metrics) {
  if (train.instances.empty()) throw input_error("pretrain: empty training set");
  if (cfg.c1 < 1 || cfg.c2 < 1 || cfg.episodes_per_task < 1)
    throw input_error("pretrain: c1, c2 and episodes_per_task must be >= 1");
  if (cfg.alpha < 0.0 || cfg.alpha > 1.0) throw input_error("pretrain: alpha must be in [0,1]");
  const ModelConfig& mc = model.cfg;
  if (mc.method == Method::psro || mc.method == Method::random)
    throw config_error("pretrain: method has no trainable pre-training stage");

  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&t0] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };

  Rng rng(seed_stream(cfg.seed, 0x9ee7));
  PretrainResult result;
  std::deque<double> window;
  double window_sum = 0.0;
  const int wave_episodes = cfg.c1 * cfg.c2 * cfg.episodes_per_task;

  if (metrics) *metrics << "episode,mean_return,guidance_loss,entropy,wall_clock\n";

  // Frozen game embeddings are computed once per game and cached.
  std::unordered_map<int, Tensor> h_aug_cache;
  auto frozen_h_aug = [&](int game_index) -> const Tensor& {
    auto it = h_aug_cache.find(game_index);
    if (it != h_aug_cache.end()) return it->second;
    Tensor h = model_h_aug(model, train.instances[static_cast<size_t>(game_index)]);
    return h_aug_cache.emplace(game_index, std::move(h)).first->second;
  };

  for (int epoch = 0; result.episodes_run < cfg.episodes_total; ++epoch) {
    const double alpha =
        cfg.alpha_linear_decay
            ? cfg.alpha * (1.0 - static_cast<double>(result.episodes_run) /
                                     static_cast<double>(cfg.episodes_total))
            : cfg.alpha;

    // Sample this epoch's games and evader policies.
    std::vector<int> game_indices(static_cast<size_t>(cfg.c1));
    for (auto& gi : game_indices)
      gi = static_cast<int>(rng.uniform_int(static_cast<int64_t>(train.instances.size())));
    std::vector<std::vector<std::vector<double>>> evader_policies(static_cast<size_t>(cfg.c1));
    for (int g = 0; g < cfg.c1; ++g) {
      const auto& spec = train.instances[static_cast<size_t>(game_indices[static_cast<size_t>(g)])];
      for (int e = 0; e < cfg.c2; ++e) {
        if (!cfg.fixed_evader_policy.empty()) {
          if (cfg.fixed_evader_policy.size() != spec.exits.size())
            throw input_error("pretrain: fixed evader policy size does not match the exits");
          evader_policies[static_cast<size_t>(g)].push_back(cfg.fixed_evader_policy);
        } else {
          evader_policies[static_cast<size_t>(g)].push_back(
              rng.dirichlet(static_cast<int>(spec.exits.size())));
        }
      }
    }

    // Per-game acting bundles against the current parameter snapshot.
    std::vector<Tensor> h_augs(static_cast<size_t>(cfg.c1));
    std::vector<ActorPolicy> actors(static_cast<size_t>(cfg.c1));
    auto rep_snapshot = std::make_shared<const ParamStore>(model.rep);
    for (int g = 0; g < cfg.c1; ++g) {
      const int gi = game_indices[static_cast<size_t>(g)];
      const auto& spec = train.instances[static_cast<size_t>(gi)];
      if (mc.uses_gnn())
        h_augs[static_cast<size_t>(g)] = cfg.joint_gnn ? model_h_aug(model, spec) : frozen_h_aug(gi);
      ActorPolicy& actor = actors[static_cast<size_t>(g)];
      actor.rep = rep_snapshot;
      actor.rep_cfg = mc.rep;
      if (mc.uses_hyper()) {
        actor.policy =
            hyper_forward(model.hyper, mc.hyper, mc.actor_arch(), h_augs[static_cast<size_t>(g)]);
      } else {
        actor.policy = policy_from_actor_store(mc.actor_arch(), model.actor);
        if (mc.aug_actor()) actor.h_aug_actor = h_augs[static_cast<size_t>(g)];
      }
    }

    // Rollout wave: parallel over (game, evader policy, episode) tasks.
    const uint64_t wave_seed = rng.next_u64();
    std::vector<CollectedEpisode> episodes(static_cast<size_t>(wave_episodes));
    parallel::parallel_for(wave_episodes, [&](int64_t task) {
      const int g = static_cast<int>(task / (cfg.c2 * cfg.episodes_per_task));
      const int e = static_cast<int>((task / cfg.episodes_per_task) % cfg.c2);
      const auto& spec = train.instances[static_cast<size_t>(game_indices[static_cast<size_t>(g)])];
      const Tensor* h_critic = mc.critic_uses_h() ? &h_augs[static_cast<size_t>(g)] : nullptr;
      episodes[static_cast<size_t>(task)] = collect_episode(
          spec, actors[static_cast<size_t>(g)], model.critic, mc.critic_cfg(), h_critic,
          evader_policies[static_cast<size_t>(g)][static_cast<size_t>(e)], cfg.ppo,
          /*record_reference=*/alpha > 0.0, seed_stream(wave_seed, static_cast<uint64_t>(task)),
          static_cast<int>(task));
    });

    // Assemble the per-game buffer (Algorithm's episode buffer; cleared
    // implicitly each epoch).
    EpisodeBatch batch;
    std::vector<Tensor> h_aug_frozen;
    for (int g = 0; g < cfg.c1; ++g) {
      GameGroup group;
      group.game_key = game_indices[static_cast<size_t>(g)];
      group.spec = &train.instances[static_cast<size_t>(group.game_key)];
      for (int e = 0; e < cfg.c2; ++e) {
        for (int k = 0; k < cfg.episodes_per_task; ++k) {
          const int task = (g * cfg.c2 + e) * cfg.episodes_per_task + k;
          auto& ep = episodes[static_cast<size_t>(task)];
          for (auto& s : ep.steps) group.steps.push_back(std::move(s));
        }
      }
      if (!group.steps.empty()) {
        batch.groups.push_back(std::move(group));
        if (mc.uses_gnn()) h_aug_frozen.push_back(h_augs[static_cast<size_t>(g)]);
      }
    }

    double wave_return = 0.0;
    for (const auto& ep : episodes) wave_return += ep.terminal_reward;
    wave_return /= static_cast<double>(wave_episodes);
    result.wave_mean_return.push_back(wave_return);

    UpdateStats stats;
    if (batch.total_steps() > 0) {
      UpdateSources src;
      if (mc.uses_hyper()) {
        src.hyper = &model.hyper;
        src.hyper_cfg = &mc.hyper;
      } else {
        src.actor = &model.actor;
      }
      const PolicyArchitecture arch = mc.actor_arch();
      src.arch = &arch;
      src.rep = &model.rep;
      src.rep_cfg = &mc.rep;
      src.train_rep = !mc.rep.raw;
      src.critic = &model.critic;
      const CriticConfig critic_cfg = mc.critic_cfg();
      src.critic_cfg = &critic_cfg;
      src.gnn = &model.gnn;
      src.gnn_cfg = &mc.gnn;
      src.joint_gnn = cfg.joint_gnn && mc.uses_gnn();
      src.t_max = mc.t_max;
      src.aug_actor = mc.aug_actor();
      src.critic_uses_h = mc.critic_uses_h();
      src.h_aug_frozen = &h_aug_frozen;
      Rng update_rng = rng.split(0xba7a + static_cast<uint64_t>(epoch));
      stats = ppo_update(src, batch, cfg.ppo, alpha, update_rng);
      result.final_guidance = stats.guidance;
    }

    result.episodes_run += wave_episodes;
    result.epochs_run = epoch + 1;

    // Rolling mean return for threshold early-stop.
    for (const auto& ep : episodes) {
      window.push_back(ep.terminal_reward);
      window_sum += ep.terminal_reward;
      if (static_cast<int>(window.size()) > cfg.return_window) {
        window_sum -= window.front();
        window.pop_front();
      }
    }
    const double rolling = window_sum / static_cast<double>(window.size());
    if (!std::isnan(cfg.return_threshold) &&
        static_cast<int>(window.size()) >= std::min<int64_t>(cfg.return_window, cfg.episodes_total) &&
        rolling >= cfg.return_threshold && result.threshold_episodes < 0) {
      result.threshold_episodes = result.episodes_run;
      result.threshold_wall_clock_s = elapsed();
      break;
    }

    if (metrics && (epoch % cfg.log_every_epochs == 0)) {
      *metrics << result.episodes_run << "," << rolling << "," << stats.guidance << ","
               << stats.entropy << "," << elapsed() << "\n";
    }
    if (cfg.checkpoint_every_epochs > 0 && !cfg.checkpoint_path.empty() &&
        (epoch + 1) % cfg.checkpoint_every_epochs == 0) {
      save_model(model, cfg.checkpoint_path,
                 {{"training_episodes", result.episodes_run}, {"seed", cfg.seed}});
    }
  }

  result.wall_clock_s = elapsed();
  const size_t waves = result.wave_mean_return.size();
  const size_t tenth = std::max<size_t>(1, waves / 10);
  result.mean_return_first_tenth =
      std::accumulate(result.wave_mean_return.begin(),
                      result.wave_mean_return.begin() + static_cast<int64_t>(tenth), 0.0) /
      static_cast<double>(tenth);
  result.mean_return_last_tenth =
      std::accumulate(result.wave_mean_return.end() - static_cast<int64_t>(tenth),
                      result.wave_mean_return.end(), 0.0) /
      static_cast<double>(tenth);
  return result;
}

}  // namespace grasper
