#include "grasper/model.hpp"

#include "grasper/checkpoint.hpp"
#include "grasper/error.hpp"

namespace grasper {

const char* to_string(Method m) {
  switch (m) {
    case Method::grasper: return "grasper";
    case Method::mt_psro: return "mt_psro";
    case Method::mt_psro_aug: return "mt_psro_aug";
    case Method::psro: return "psro";
    case Method::random: return "random";
  }
  return "?";
}

Method method_from_string(const std::string& name) {
  if (name == "grasper") return Method::grasper;
  if (name == "mt_psro") return Method::mt_psro;
  if (name == "mt_psro_aug") return Method::mt_psro_aug;
  if (name == "psro") return Method::psro;
  if (name == "random") return Method::random;
  throw input_error("unknown method: " + name);
}

PolicyArchitecture ModelConfig::actor_arch() const {
  PolicyArchitecture arch;
  arch.input_width = rep.obs_width(n_pursuers) + (aug_actor() ? h_aug_width() : 0);
  arch.hidden = actor_hidden;
  arch.max_actions = max_actions;
  return arch;
}

CriticConfig ModelConfig::critic_cfg() const {
  CriticConfig c;
  c.input_width = rep.central_width(n_pursuers) + (critic_uses_h() ? h_aug_width() : 0);
  c.hidden = critic_hidden;
  return c;
}

nlohmann::json ModelConfig::to_json() const {
  return {{"method", to_string(method)},
          {"n_pursuers", n_pursuers},
          {"t_max", t_max},
          {"max_actions", max_actions},
          {"gnn", gnn.to_json()},
          {"rep", rep.to_json()},
          {"hyper", hyper.to_json()},
          {"actor_hidden", actor_hidden},
          {"critic_hidden", critic_hidden}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.method = method_from_string(j.at("method").get<std::string>());
  c.n_pursuers = j.at("n_pursuers").get<int>();
  c.t_max = j.at("t_max").get<int>();
  c.max_actions = j.at("max_actions").get<int>();
  c.gnn = GnnConfig::from_json(j.at("gnn"));
  c.rep = RepConfig::from_json(j.at("rep"));
  c.hyper = HyperConfig::from_json(j.at("hyper"));
  c.actor_hidden = j.at("actor_hidden").get<std::vector<int>>();
  c.critic_hidden = j.at("critic_hidden").get<std::vector<int>>();
  return c;
}

GrasperModel init_model(const ModelConfig& cfg, uint64_t seed) {
  GrasperModel model;
  model.cfg = cfg;
  Rng rng(seed_stream(seed, 0xA11));
  if (cfg.uses_gnn()) {
    Rng gnn_rng = rng.split(1);
    init_gnn_params(model.gnn, cfg.gnn, gnn_rng);
    Rng mae_rng = rng.split(2);
    init_mae_params(model.mae, cfg.gnn, mae_rng);
  }
  Rng rep_rng = rng.split(3);
  init_rep_params(model.rep, cfg.rep, rep_rng);
  if (cfg.uses_hyper()) {
    Rng hyper_rng = rng.split(4);
    init_hyper_params(model.hyper, cfg.hyper, cfg.h_aug_width(), cfg.actor_arch(), hyper_rng);
  } else {
    Rng actor_rng = rng.split(5);
    init_actor_store(cfg.actor_arch(), model.actor, actor_rng);
  }
  Rng critic_rng = rng.split(6);
  init_critic_params(model.critic, cfg.critic_cfg(), critic_rng);
  return model;
}

void save_model(const GrasperModel& model, const std::string& path,
                const nlohmann::json& extra_metadata) {
  std::vector<std::pair<std::string, const ParamStore*>> sections;
  if (model.gnn.size()) sections.emplace_back("gnn", &model.gnn);
  if (model.mae.size()) sections.emplace_back("mae", &model.mae);
  if (model.rep.size()) sections.emplace_back("rep", &model.rep);
  if (model.hyper.size()) sections.emplace_back("hyper", &model.hyper);
  if (model.actor.size()) sections.emplace_back("actor", &model.actor);
  if (model.critic.size()) sections.emplace_back("critic", &model.critic);
  nlohmann::json meta = extra_metadata;
  meta["model_config"] = model.cfg.to_json();
  save_checkpoint(path, sections, meta);
}

GrasperModel load_model(const std::string& path) {
  Checkpoint ckpt = load_checkpoint(path);
  if (!ckpt.metadata.contains("model_config"))
    throw config_error("load_model: checkpoint has no model_config metadata: " + path);
  GrasperModel model;
  model.cfg = ModelConfig::from_json(ckpt.metadata.at("model_config"));
  auto take = [&](const char* name, ParamStore& dst) {
    auto it = ckpt.sections.find(name);
    if (it != ckpt.sections.end()) dst = std::move(it->second);
  };
  take("gnn", model.gnn);
  take("mae", model.mae);
  take("rep", model.rep);
  take("hyper", model.hyper);
  take("actor", model.actor);
  take("critic", model.critic);
  if (model.cfg.uses_hyper() && model.hyper.size() == 0)
    throw config_error("load_model: grasper checkpoint without hypernetwork section");
  if (!model.cfg.uses_hyper() && model.actor.size() == 0)
    throw config_error("load_model: baseline checkpoint without actor section");
  return model;
}

Tensor model_h_aug(const GrasperModel& model, const GameSpec& spec) {
  if (!model.cfg.uses_gnn()) throw config_error("model_h_aug: method has no GNN");
  return game_embedding(model.gnn, model.cfg.gnn, spec, model.cfg.t_max).h_aug;
}

Tensor ActorPolicy::observation_input(const Observation& obs, const Graph& graph) const {
  Tensor emb = obs_embed(*rep, rep_cfg, obs, graph);
  if (!h_aug_actor) return emb;
  return concat_cols({emb, *h_aug_actor});
}

std::vector<double> ActorPolicy::action_dist(const GameSpec& spec, const Observation& obs) const {
  const int loc = obs.pursuer_locs[static_cast<size_t>(obs.member_id)];
  const std::vector<int> legal = legal_actions(spec.graph, loc);
  std::vector<uint8_t> mask(static_cast<size_t>(policy.arch.max_actions), 0);
  if (legal.size() > mask.size())
    throw config_error("ActorPolicy: node degree exceeds the action head width");
  for (size_t i = 0; i < legal.size(); ++i) mask[i] = 1;
  const std::vector<double> probs =
      actor_forward(policy, observation_input(obs, spec.graph), mask);
  return std::vector<double>(probs.begin(), probs.begin() + static_cast<int64_t>(legal.size()));
}

int ActorPolicy::sample_action(const GameSpec& spec, const Observation& obs, Rng& rng) const {
  const int loc = obs.pursuer_locs[static_cast<size_t>(obs.member_id)];
  const std::vector<int> legal = legal_actions(spec.graph, loc);
  const std::vector<double> probs = action_dist(spec, obs);
  double draw = rng.uniform();
  size_t pick = probs.size() - 1;
  for (size_t i = 0; i < probs.size(); ++i) {
    draw -= probs[i];
    if (draw <= 0.0) {
      pick = i;
      break;
    }
  }
  return legal[pick];
}

PursuerPolicyFn ActorPolicy::as_policy_fn(const GameSpec& spec, Rng& rng) const {
  return [this, &spec, &rng](const Observation& obs) { return sample_action(spec, obs, rng); };
}

PolicyDistFn ActorPolicy::as_policy_dist_fn(const GameSpec& spec) const {
  return [this, &spec](const Observation& obs) { return action_dist(spec, obs); };
}

ActorPolicy base_policy(const GrasperModel& model, const GameSpec& spec) {
  ActorPolicy actor;
  actor.rep = std::make_shared<const ParamStore>(model.rep);
  actor.rep_cfg = model.cfg.rep;
  if (model.cfg.uses_hyper()) {
    actor.policy = hyper_forward(model.hyper, model.cfg.hyper, model.cfg.actor_arch(),
                                 model_h_aug(model, spec));
  } else {
    actor.policy = policy_from_actor_store(model.cfg.actor_arch(), model.actor);
    if (model.cfg.aug_actor()) actor.h_aug_actor = model_h_aug(model, spec);
  }
  return actor;
}

ActorPolicy scratch_policy(const ModelConfig& cfg, uint64_t seed) {
  ActorPolicy actor;
  Rng rng(seed_stream(seed, 0x5C8A));
  auto rep = std::make_shared<ParamStore>();
  Rng rep_rng = rng.split(1);
  RepConfig rep_cfg = cfg.rep;
  init_rep_params(*rep, rep_cfg, rep_rng);
  actor.rep = std::move(rep);
  actor.rep_cfg = rep_cfg;
  ParamStore actor_store;
  Rng actor_rng = rng.split(2);
  PolicyArchitecture arch = cfg.actor_arch();
  if (cfg.aug_actor()) arch.input_width = rep_cfg.obs_width(cfg.n_pursuers);  // scratch: no GNN
  init_actor_store(arch, actor_store, actor_rng);
  actor.policy = policy_from_actor_store(arch, actor_store);
  return actor;
}

PursuerPolicyFn uniform_policy_fn(const GameSpec& spec, Rng& rng) {
  return [&spec, &rng](const Observation& obs) {
    const std::vector<int> legal =
        legal_actions(spec.graph, obs.pursuer_locs[static_cast<size_t>(obs.member_id)]);
    return legal[static_cast<size_t>(rng.uniform_int(static_cast<int64_t>(legal.size())))];
  };
}

}  // namespace grasper
