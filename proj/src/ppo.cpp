#include "grasper/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

#include "grasper/error.hpp"
#include "grasper/reference.hpp"

namespace grasper {

nlohmann::json PpoConfig::to_json() const {
  return {{"clip", clip},
          {"gae_lambda", gae_lambda},
          {"discount", discount},
          {"epochs", epochs},
          {"lr", lr},
          {"entropy_coef", entropy_coef},
          {"value_coef", value_coef},
          {"minibatch_episodes", minibatch_episodes}};
}

int64_t EpisodeBatch::total_steps() const {
  int64_t total = 0;
  for (const auto& g : groups) total += static_cast<int64_t>(g.steps.size());
  return total;
}

int EpisodeBatch::episode_count() const {
  int count = 0;
  for (const auto& g : groups) {
    int last = -1;
    for (const auto& s : g.steps)
      if (s.episode_id != last) {
        ++count;
        last = s.episode_id;
      }
  }
  return count;
}

namespace {

// Log-probabilities over the legal prefix, matching the tape op's summation
// order bit for bit so stored logp_old reproduces exactly at epoch 0.
std::vector<double> legal_log_probs(const std::vector<double>& logits, int n_legal) {
  double max_logit = -1e300;
  for (int j = 0; j < n_legal; ++j) max_logit = std::max(max_logit, logits[static_cast<size_t>(j)]);
  double denom = 0.0;
  for (int j = 0; j < n_legal; ++j) denom += std::exp(logits[static_cast<size_t>(j)] - max_logit);
  const double lse = max_logit + std::log(denom);
  std::vector<double> logp(static_cast<size_t>(n_legal));
  for (int j = 0; j < n_legal; ++j) logp[static_cast<size_t>(j)] = logits[static_cast<size_t>(j)] - lse;
  return logp;
}

}  // namespace

CollectedEpisode collect_episode(const GameSpec& spec, const ActorPolicy& actor,
                                 const ParamStore& critic, const CriticConfig& critic_cfg,
                                 const Tensor* h_aug_critic,
                                 const std::vector<double>& exit_probs, const PpoConfig& ppo,
                                 bool record_reference, uint64_t seed, int episode_id) {
  Rng rng(seed);
  CollectedEpisode out;
  const EvaderPlan plan = sample_evader_plan(spec, exit_probs, rng);
  std::optional<ReferencePolicy> reference;
  if (record_reference) reference.emplace(spec, plan);

  GameState state = reset(spec, plan);
  if (state.terminal) {
    out.terminal_reward = terminal_pursuer_reward(state.cause);
    out.cause = state.cause;
    return out;
  }

  const int n = spec.n_pursuers();
  std::vector<double> rewards;
  std::vector<double> values;
  std::vector<int> step_start;  // index of the first sample of step t

  while (!state.terminal) {
    Tensor central = central_embed(*actor.rep, actor.rep_cfg, state.pursuer_locs,
                                   state.evader_loc, state.t, spec.graph);
    if (h_aug_critic) central = concat_cols({central, *h_aug_critic});
    const double value = critic_forward(critic, critic_cfg, central);
    values.push_back(value);
    step_start.push_back(static_cast<int>(out.steps.size()));

    std::vector<int> actions(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
      Observation obs{state.pursuer_locs, state.evader_loc, i, state.t};
      const std::vector<int> legal =
          legal_actions(spec.graph, state.pursuer_locs[static_cast<size_t>(i)]);
      const std::vector<double> logits =
          actor_logits(actor.policy, actor.observation_input(obs, spec.graph));
      const int n_legal = static_cast<int>(legal.size());
      const std::vector<double> logp = legal_log_probs(logits, n_legal);
      double draw = rng.uniform();
      int slot = n_legal - 1;
      for (int j = 0; j < n_legal; ++j) {
        draw -= std::exp(logp[static_cast<size_t>(j)]);
        if (draw <= 0.0) {
          slot = j;
          break;
        }
      }
      actions[static_cast<size_t>(i)] = legal[static_cast<size_t>(slot)];

      StepSample sample;
      sample.episode_id = episode_id;
      sample.t = state.t;
      sample.member = i;
      sample.pursuer_locs = state.pursuer_locs;
      sample.evader_loc = state.evader_loc;
      sample.action_slot = slot;
      sample.n_legal = n_legal;
      sample.logp_old = logp[static_cast<size_t>(slot)];
      sample.value_old = value;
      if (reference) {
        const int ref_node = reference->action(state, i);
        const auto it = std::lower_bound(legal.begin(), legal.end(), ref_node);
        sample.ref_slot = static_cast<int>(it - legal.begin());
      }
      out.steps.push_back(std::move(sample));
    }

    StepOutcome outcome = step(spec, plan, state, actions);
    rewards.push_back(outcome.reward_p);
    state = std::move(outcome.next);
  }
  out.terminal_reward = rewards.empty() ? 0.0 : rewards.back();
  out.cause = state.cause;
  out.length = static_cast<int>(rewards.size());

  // GAE over steps; terminal bootstrap is 0 (episodes always run to
  // termination). All members at step t share the advantage.
  const int len = static_cast<int>(rewards.size());
  std::vector<double> advantage(static_cast<size_t>(len));
  double running = 0.0;
  for (int t = len - 1; t >= 0; --t) {
    const double next_value = (t + 1 < len) ? values[static_cast<size_t>(t + 1)] : 0.0;
    const double delta =
        rewards[static_cast<size_t>(t)] + ppo.discount * next_value - values[static_cast<size_t>(t)];
    running = delta + ppo.discount * ppo.gae_lambda * running;
    advantage[static_cast<size_t>(t)] = running;
  }
  for (int t = 0; t < len; ++t) {
    const int begin = step_start[static_cast<size_t>(t)];
    const int end = (t + 1 < len) ? step_start[static_cast<size_t>(t + 1)]
                                  : static_cast<int>(out.steps.size());
    for (int k = begin; k < end; ++k) {
      out.steps[static_cast<size_t>(k)].advantage = advantage[static_cast<size_t>(t)];
      out.steps[static_cast<size_t>(k)].ret =
          advantage[static_cast<size_t>(t)] + values[static_cast<size_t>(t)];
    }
  }
  return out;
}

void normalize_advantages(EpisodeBatch& batch) {
  const int64_t n = batch.total_steps();
  if (n < 2) return;
  double mean = 0.0;
  for (const auto& g : batch.groups)
    for (const auto& s : g.steps) mean += s.advantage;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (const auto& g : batch.groups)
    for (const auto& s : g.steps) var += (s.advantage - mean) * (s.advantage - mean);
  var /= static_cast<double>(n);
  const double stddev = std::sqrt(var);
  if (stddev < 1e-8) {  // degenerate batch: just center
    for (auto& g : batch.groups)
      for (auto& s : g.steps) s.advantage -= mean;
    return;
  }
  for (auto& g : batch.groups)
    for (auto& s : g.steps) s.advantage = (s.advantage - mean) / stddev;
}

namespace {

struct GroupLossParts {
  Var loss;
  double policy = 0.0, value = 0.0, entropy = 0.0, guidance = 0.0;
};

// Rebuilds the batched forward pass for one game group and assembles the
// clipped-surrogate + value + entropy (+ guidance) contributions, weighted by
// 1 / total batch size.
GroupLossParts build_group_loss(Tape& tape, const UpdateSources& src,
                                const std::vector<std::pair<Var, Var>>& layer_vars,
                                std::optional<ParamBinder>& rep_bind,
                                std::optional<ParamBinder>& critic_bind, Var h_aug,
                                const GameGroup& group, const std::vector<const StepSample*>& steps,
                                const PpoConfig& ppo, double alpha, double inv_total) {
  const int64_t b = static_cast<int64_t>(steps.size());
  const Graph& graph = group.spec->graph;
  const RepConfig& rep_cfg = *src.rep_cfg;
  const int n = static_cast<int>(steps[0]->pursuer_locs.size());
  const int max_actions = src.arch->max_actions;

  // Observation and central-state batches.
  Var obs_batch, central_batch;
  if (!rep_cfg.raw && src.train_rep) {
    Var loc_table = (*rep_bind)("loc");
    Var id_table = (*rep_bind)("id");
    Var time_table = (*rep_bind)("time");
    std::vector<Var> obs_parts, central_parts;
    std::vector<int> idx(static_cast<size_t>(b));
    for (int k = 0; k < n; ++k) {
      for (int64_t i = 0; i < b; ++i)
        idx[static_cast<size_t>(i)] = graph.orig_id(steps[static_cast<size_t>(i)]->pursuer_locs[static_cast<size_t>(k)]);
      Var rows = ad::embedding_rows(tape, loc_table, idx);
      obs_parts.push_back(rows);
      central_parts.push_back(rows);
    }
    for (int64_t i = 0; i < b; ++i)
      idx[static_cast<size_t>(i)] = graph.orig_id(steps[static_cast<size_t>(i)]->evader_loc);
    Var evader_rows = ad::embedding_rows(tape, loc_table, idx);
    obs_parts.push_back(evader_rows);
    central_parts.push_back(evader_rows);
    for (int64_t i = 0; i < b; ++i) idx[static_cast<size_t>(i)] = steps[static_cast<size_t>(i)]->member;
    obs_parts.push_back(ad::embedding_rows(tape, id_table, idx));
    for (int64_t i = 0; i < b; ++i) idx[static_cast<size_t>(i)] = steps[static_cast<size_t>(i)]->t;
    Var time_rows = ad::embedding_rows(tape, time_table, idx);
    obs_parts.push_back(time_rows);
    central_parts.push_back(time_rows);
    obs_batch = ad::concat_cols(tape, obs_parts);
    central_batch = ad::concat_cols(tape, central_parts);
  } else {
    // Frozen or raw representation: plain constants.
    const int ow = rep_cfg.obs_width(n);
    const int cw = rep_cfg.central_width(n);
    Tensor obs_const({b, ow});
    Tensor central_const({b, cw});
    for (int64_t i = 0; i < b; ++i) {
      const StepSample& s = *steps[static_cast<size_t>(i)];
      Observation obs{s.pursuer_locs, s.evader_loc, s.member, s.t};
      const Tensor oe = obs_embed(*src.rep, rep_cfg, obs, graph);
      std::copy(oe.data.begin(), oe.data.end(), obs_const.data.begin() + i * ow);
      const Tensor ce = central_embed(*src.rep, rep_cfg, s.pursuer_locs, s.evader_loc, s.t, graph);
      std::copy(ce.data.begin(), ce.data.end(), central_const.data.begin() + i * cw);
    }
    obs_batch = tape.constant(std::move(obs_const));
    central_batch = tape.constant(std::move(central_const));
  }
  if (src.aug_actor)
    obs_batch = ad::concat_cols(tape, {obs_batch, ad::tile_rows(tape, h_aug, b)});
  if (src.critic_uses_h)
    central_batch = ad::concat_cols(tape, {central_batch, ad::tile_rows(tape, h_aug, b)});

  // Actor losses.
  std::vector<uint8_t> mask(static_cast<size_t>(b * max_actions), 0);
  std::vector<int> action_slots(static_cast<size_t>(b));
  std::vector<int> ref_slots(static_cast<size_t>(b));
  Tensor logp_old({b}), adv({b}), rets({b});
  bool has_refs = true;
  for (int64_t i = 0; i < b; ++i) {
    const StepSample& s = *steps[static_cast<size_t>(i)];
    for (int j = 0; j < s.n_legal; ++j) mask[static_cast<size_t>(i * max_actions + j)] = 1;
    action_slots[static_cast<size_t>(i)] = s.action_slot;
    ref_slots[static_cast<size_t>(i)] = std::max(0, s.ref_slot);
    if (s.ref_slot < 0) has_refs = false;
    logp_old.at(i) = s.logp_old;
    adv.at(i) = s.advantage;
    rets.at(i) = s.ret;
  }

  Var logits = actor_logits_tape(tape, layer_vars, obs_batch);
  Var logp = ad::masked_log_softmax(tape, logits, mask);
  Var logp_new = ad::gather_cols(tape, logp, action_slots);
  Var ratio = ad::exp_(tape, ad::sub_const(tape, logp_new, logp_old));
  Var surr1 = ad::mul_const(tape, ratio, adv);
  Var surr2 = ad::mul_const(tape, ad::clamp_(tape, ratio, 1.0 - ppo.clip, 1.0 + ppo.clip), adv);
  Var objective = ad::min_(tape, surr1, surr2);
  const Tensor ones = Tensor::full({b}, 1.0);
  Var policy_loss = ad::scale(tape, ad::dot_const(tape, objective, ones), -inv_total);

  Var value_col = critic_forward_tape(tape, *critic_bind, *src.critic_cfg, central_batch);
  Var value_flat = ad::reshape(tape, value_col, {b});
  Var value_err = ad::sub_const(tape, value_flat, rets);
  Var value_loss =
      ad::scale(tape, ad::dot_const(tape, ad::square_(tape, value_err), ones), 0.5 * inv_total);

  Var entropy = ad::scale(tape, ad::dot_const(tape, ad::entropy_rows(tape, logp, mask), ones),
                          inv_total);

  GroupLossParts parts{0, 0.0, 0.0, 0.0, 0.0};
  Var total = ad::add(tape, policy_loss, ad::scale(tape, value_loss, ppo.value_coef));
  total = ad::sub(tape, total, ad::scale(tape, entropy, ppo.entropy_coef));
  if (alpha != 0.0) {
    if (!has_refs)
      throw config_error("ppo_update: HMP weight is nonzero but reference actions were not recorded");
    Var ref_logp = ad::gather_cols(tape, logp, ref_slots);
    Var guidance = ad::scale(tape, ad::dot_const(tape, ref_logp, ones), -inv_total);
    total = ad::add(tape, total, ad::scale(tape, guidance, alpha));
    parts.guidance = tape.val(guidance).data[0];
  }
  parts.loss = total;
  parts.policy = tape.val(policy_loss).data[0];
  parts.value = tape.val(value_loss).data[0];
  parts.entropy = tape.val(entropy).data[0];
  return parts;
}

}  // namespace

UpdateStats ppo_update(const UpdateSources& src, EpisodeBatch& batch, const PpoConfig& ppo,
                       double alpha, Rng& rng) {
  if (batch.total_steps() == 0) throw input_error("ppo_update: empty batch");
  if ((src.hyper != nullptr) == (src.actor != nullptr))
    throw config_error("ppo_update: exactly one of hyper/actor must be set");
  const bool uses_h = src.hyper != nullptr || src.aug_actor || src.critic_uses_h;
  if (uses_h && !src.joint_gnn && src.h_aug_frozen == nullptr)
    throw config_error("ppo_update: frozen h_aug vectors are required");

  normalize_advantages(batch);
  UpdateStats stats;
  AdamConfig adam;
  adam.lr = ppo.lr;

  for (int epoch = 0; epoch < ppo.epochs; ++epoch) {
    // Minibatch: optional subsample of episodes.
    std::vector<std::vector<const StepSample*>> selected(batch.groups.size());
    if (ppo.minibatch_episodes > 0 && ppo.minibatch_episodes < batch.episode_count()) {
      std::vector<std::pair<int, int>> episodes;  // (group, episode_id)
      for (size_t g = 0; g < batch.groups.size(); ++g) {
        int last = -1;
        for (const auto& s : batch.groups[g].steps)
          if (s.episode_id != last) {
            episodes.emplace_back(static_cast<int>(g), s.episode_id);
            last = s.episode_id;
          }
      }
      for (size_t i = 0; i < episodes.size(); ++i) {
        const size_t j = i + static_cast<size_t>(rng.uniform_int(
                                 static_cast<int64_t>(episodes.size() - i)));
        std::swap(episodes[i], episodes[j]);
      }
      episodes.resize(static_cast<size_t>(ppo.minibatch_episodes));
      for (const auto& [g, ep] : episodes)
        for (const auto& s : batch.groups[static_cast<size_t>(g)].steps)
          if (s.episode_id == ep) selected[static_cast<size_t>(g)].push_back(&s);
    } else {
      for (size_t g = 0; g < batch.groups.size(); ++g)
        for (const auto& s : batch.groups[g].steps) selected[g].push_back(&s);
    }
    int64_t total = 0;
    for (const auto& sel : selected) total += static_cast<int64_t>(sel.size());
    if (total == 0) continue;
    const double inv_total = 1.0 / static_cast<double>(total);

    Tape tape;
    std::optional<ParamBinder> hyper_bind, actor_bind, rep_bind, critic_bind, gnn_bind;
    if (src.hyper) hyper_bind.emplace(tape, *src.hyper);
    if (src.actor) actor_bind.emplace(tape, *src.actor);
    if (src.rep && src.train_rep) rep_bind.emplace(tape, *src.rep);
    critic_bind.emplace(tape, *src.critic);
    if (src.joint_gnn) gnn_bind.emplace(tape, *src.gnn);

    Var grand_total = tape.constant(Tensor::scalar(0.0));
    double first_epoch_guidance = 0.0;
    for (size_t g = 0; g < batch.groups.size(); ++g) {
      if (selected[g].empty()) continue;
      const GameGroup& group = batch.groups[g];
      Var h_aug = -1;
      if (uses_h) {
        if (src.joint_gnn) {
          h_aug = game_embedding_tape(tape, *gnn_bind, *src.gnn_cfg, *group.spec, src.t_max);
        } else {
          Tensor h = (*src.h_aug_frozen)[g];
          h.shape = {1, h.numel()};
          h_aug = tape.constant(std::move(h));
        }
      }
      std::vector<std::pair<Var, Var>> layer_vars;
      if (src.hyper) {
        layer_vars = hyper_forward_tape(tape, *hyper_bind, *src.hyper_cfg, *src.arch, h_aug);
      } else {
        const size_t n_layers = src.arch->layers().size();
        for (size_t l = 0; l < n_layers; ++l)
          layer_vars.emplace_back((*actor_bind)("w" + std::to_string(l)),
                                  (*actor_bind)("b" + std::to_string(l)));
      }
      GroupLossParts parts = build_group_loss(tape, src, layer_vars, rep_bind, critic_bind, h_aug,
                                              group, selected[g], ppo, alpha, inv_total);
      grand_total = ad::add(tape, grand_total, parts.loss);
      if (epoch == 0) {
        stats.policy_loss += parts.policy;
        stats.value_loss += parts.value;
        stats.entropy += parts.entropy;
        first_epoch_guidance += parts.guidance;
      }
    }
    const double loss_value = tape.val(grand_total).data[0];
    if (!std::isfinite(loss_value)) {
      std::cerr << "ppo_update: non-finite loss; batch diagnostic: steps=" << total
                << " groups=" << batch.groups.size() << " alpha=" << alpha << "\n";
      for (const auto& g : batch.groups)
        for (const auto& s : g.steps)
          if (!std::isfinite(s.advantage) || !std::isfinite(s.ret) || !std::isfinite(s.logp_old))
            std::cerr << "  bad step: game=" << g.game_key << " ep=" << s.episode_id
                      << " t=" << s.t << " adv=" << s.advantage << " ret=" << s.ret
                      << " logp=" << s.logp_old << "\n";
      throw training_error("ppo_update: loss is not finite");
    }
    if (epoch == 0) {
      stats.loss = loss_value;
      stats.guidance = first_epoch_guidance;
    }

    tape.backward(grand_total);
    if (hyper_bind) hyper_bind->accumulate();
    if (actor_bind) actor_bind->accumulate();
    if (rep_bind) rep_bind->accumulate();
    critic_bind->accumulate();
    if (gnn_bind) gnn_bind->accumulate();

    if (src.hyper) adam_step(*src.hyper, adam);
    if (src.actor) adam_step(*src.actor, adam);
    if (src.rep && src.train_rep) adam_step(*src.rep, adam);
    adam_step(*src.critic, adam);
    if (src.joint_gnn) adam_step(*src.gnn, adam);
  }
  return stats;
}

}  // namespace grasper
