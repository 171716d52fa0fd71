#include "grasper/game.hpp"

#include <algorithm>
#include <fstream>

#include "grasper/error.hpp"

namespace grasper {

bool GameSpec::is_exit(int v) const {
  return std::binary_search(exits.begin(), exits.end(), v);
}

void GameSpec::validate() const {
  graph.validate();
  if (exits.empty()) throw input_error("GameSpec: no exits");
  if (!std::is_sorted(exits.begin(), exits.end()) ||
      std::adjacent_find(exits.begin(), exits.end()) != exits.end())
    throw input_error("GameSpec: exits must be sorted and unique");
  for (int v : exits)
    if (v < 0 || v >= graph.node_count) throw input_error("GameSpec: exit out of range");
  if (pursuer_starts.empty()) throw input_error("GameSpec: need at least one pursuer");
  for (int v : pursuer_starts)
    if (v < 0 || v >= graph.node_count) throw input_error("GameSpec: pursuer start out of range");
  if (evader_start < 0 || evader_start >= graph.node_count)
    throw input_error("GameSpec: evader start out of range");
  if (is_exit(evader_start)) throw input_error("GameSpec: evader may not start on an exit");
  if (horizon < 1) throw input_error("GameSpec: horizon must be >= 1");
  const std::vector<int> dist = bfs_distances(graph, evader_start);
  for (int v : exits)
    if (dist[static_cast<size_t>(v)] == -1)
      throw input_error("GameSpec: exit " + std::to_string(v) + " unreachable from evader start");
}

bool GameSpec::same_game(const GameSpec& other) const {
  return graph.node_count == other.graph.node_count && graph.adjacency == other.graph.adjacency &&
         exits == other.exits && pursuer_starts == other.pursuer_starts &&
         evader_start == other.evader_start && horizon == other.horizon;
}

nlohmann::json GameSpec::to_json() const {
  nlohmann::json j;
  j["nodes"] = graph.node_count;
  auto& edges = j["edges"] = nlohmann::json::array();
  for (int u = 0; u < graph.node_count; ++u)
    for (int v : graph.adjacency[static_cast<size_t>(u)])
      if (u < v) edges.push_back({u, v});
  if (graph.has_coords()) {
    auto& coords = j["coords"] = nlohmann::json::array();
    for (const auto& c : graph.coords) coords.push_back({c[0], c[1]});
  }
  if (!graph.orig_ids.empty()) j["orig_ids"] = graph.orig_ids;
  j["base_nodes"] = graph.base_node_count;
  j["exits"] = exits;
  j["pursuer_starts"] = pursuer_starts;
  j["evader_start"] = evader_start;
  j["horizon"] = horizon;
  return j;
}

GameSpec GameSpec::from_json(const nlohmann::json& j) {
  GameSpec spec;
  try {
    const int nodes = j.at("nodes").get<int>();
    std::vector<std::pair<int, int>> edges;
    for (const auto& e : j.at("edges")) edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
    spec.graph = Graph::from_edges(nodes, edges);
    if (j.contains("coords")) {
      for (const auto& c : j["coords"])
        spec.graph.coords.push_back({c.at(0).get<double>(), c.at(1).get<double>()});
    }
    if (j.contains("orig_ids")) spec.graph.orig_ids = j["orig_ids"].get<std::vector<int>>();
    spec.graph.base_node_count = j.value("base_nodes", nodes);
    spec.exits = j.at("exits").get<std::vector<int>>();
    std::sort(spec.exits.begin(), spec.exits.end());
    spec.pursuer_starts = j.at("pursuer_starts").get<std::vector<int>>();
    spec.evader_start = j.at("evader_start").get<int>();
    spec.horizon = j.at("horizon").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw input_error("GameSpec: malformed JSON: " + std::string(e.what()));
  }
  spec.validate();
  return spec;
}

EvaderPlan make_evader_plan(const GameSpec& spec, int exit_node, Rng& rng) {
  if (!spec.is_exit(exit_node)) throw input_error("make_evader_plan: node is not an exit");
  EvaderPlan plan;
  plan.chosen_exit = exit_node;
  plan.path = shortest_path_sample(spec.graph, spec.evader_start, exit_node, rng);
  return plan;
}

EvaderPlan sample_evader_plan(const GameSpec& spec, const std::vector<double>& exit_probs,
                              Rng& rng) {
  if (exit_probs.size() != spec.exits.size())
    throw input_error("sample_evader_plan: probability vector size does not match exits");
  double draw = rng.uniform();
  size_t chosen = exit_probs.size() - 1;
  for (size_t i = 0; i < exit_probs.size(); ++i) {
    draw -= exit_probs[i];
    if (draw <= 0.0) {
      chosen = i;
      break;
    }
  }
  return make_evader_plan(spec, spec.exits[chosen], rng);
}

const char* to_string(TerminalCause cause) {
  switch (cause) {
    case TerminalCause::none: return "none";
    case TerminalCause::capture: return "capture";
    case TerminalCause::escape: return "escape";
    case TerminalCause::timeout: return "timeout";
  }
  return "?";
}

double terminal_pursuer_reward(TerminalCause cause) {
  switch (cause) {
    case TerminalCause::capture:
    case TerminalCause::timeout: return 1.0;
    case TerminalCause::escape: return -1.0;
    case TerminalCause::none: return 0.0;
  }
  return 0.0;
}

std::vector<int> legal_actions(const Graph& g, int loc, bool strict_neighbors) {
  if (loc < 0 || loc >= g.node_count) throw input_error("legal_actions: location out of range");
  const auto& nbrs = g.adjacency[static_cast<size_t>(loc)];
  if (strict_neighbors && !nbrs.empty()) return nbrs;
  std::vector<int> actions;
  actions.reserve(nbrs.size() + 1);
  bool inserted = false;
  for (int v : nbrs) {
    if (!inserted && loc < v) {
      actions.push_back(loc);
      inserted = true;
    }
    actions.push_back(v);
  }
  if (!inserted) actions.push_back(loc);
  return actions;
}

GameState reset(const GameSpec& spec, const EvaderPlan& plan) {
  if (plan.path.empty() || plan.path.front() != spec.evader_start)
    throw input_error("reset: plan does not start at the evader's initial location");
  GameState state;
  state.t = 0;
  state.pursuer_locs = spec.pursuer_starts;
  state.evader_loc = spec.evader_start;
  state.path_pos = 0;
  const bool colocated = std::find(state.pursuer_locs.begin(), state.pursuer_locs.end(),
                                   state.evader_loc) != state.pursuer_locs.end();
  if (colocated) {
    state.terminal = true;
    state.cause = TerminalCause::capture;
  }
  return state;
}

StepOutcome step(const GameSpec& spec, const EvaderPlan& plan, const GameState& state,
                 const std::vector<int>& pursuer_actions, bool strict_neighbors) {
  if (state.terminal) throw input_error("step: state is terminal");
  if (pursuer_actions.size() != state.pursuer_locs.size())
    throw input_error("step: need one action per pursuer member");
  for (size_t i = 0; i < pursuer_actions.size(); ++i) {
    const auto legal = legal_actions(spec.graph, state.pursuer_locs[i], strict_neighbors);
    if (!std::binary_search(legal.begin(), legal.end(), pursuer_actions[i]))
      throw input_error("step: illegal action for member " + std::to_string(i));
  }

  StepOutcome out;
  out.next = state;
  GameState& next = out.next;
  next.t = state.t + 1;
  next.pursuer_locs = pursuer_actions;
  if (state.path_pos + 1 < static_cast<int>(plan.path.size())) {
    next.path_pos = state.path_pos + 1;
    next.evader_loc = plan.path[static_cast<size_t>(next.path_pos)];
  }  // else: exhausted path, evader stays (cannot occur for valid plans)

  const bool captured = std::find(next.pursuer_locs.begin(), next.pursuer_locs.end(),
                                  next.evader_loc) != next.pursuer_locs.end();
  if (captured) {
    next.terminal = true;
    next.cause = TerminalCause::capture;
  } else if (spec.is_exit(next.evader_loc)) {
    next.terminal = true;
    next.cause = TerminalCause::escape;
  } else if (next.t >= spec.horizon) {
    next.terminal = true;
    next.cause = TerminalCause::timeout;
  }
  if (next.terminal) {
    out.reward_p = terminal_pursuer_reward(next.cause);
    out.reward_e = -out.reward_p;
  }
  return out;
}

EpisodeRecord rollout(const GameSpec& spec, const EvaderPlan& plan,
                      const PursuerPolicyFn& pursuer_policy) {
  EpisodeRecord record;
  record.chosen_exit = plan.chosen_exit;
  record.evader_path = plan.path;
  GameState state = reset(spec, plan);
  if (state.terminal) {
    record.cause = state.cause;
    record.total_reward_p = terminal_pursuer_reward(state.cause);
    return record;
  }
  while (!state.terminal) {
    EpisodeStep ep_step;
    const int n = spec.n_pursuers();
    ep_step.observations.reserve(static_cast<size_t>(n));
    ep_step.actions.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
      Observation obs{state.pursuer_locs, state.evader_loc, i, state.t};
      ep_step.actions.push_back(pursuer_policy(obs));
      ep_step.observations.push_back(std::move(obs));
    }
    StepOutcome outcome = step(spec, plan, state, ep_step.actions);
    ep_step.reward_p = outcome.reward_p;
    ep_step.reward_e = outcome.reward_e;
    record.total_reward_p += outcome.reward_p;
    record.steps.push_back(std::move(ep_step));
    state = std::move(outcome.next);
  }
  record.cause = state.cause;
  return record;
}

nlohmann::json EpisodeRecord::to_json() const {
  nlohmann::json j;
  j["chosen_exit"] = chosen_exit;
  j["evader_path"] = evader_path;
  j["cause"] = to_string(cause);
  j["total_reward_p"] = total_reward_p;
  auto& steps_json = j["steps"] = nlohmann::json::array();
  for (const auto& s : steps) {
    nlohmann::json sj;
    sj["actions"] = s.actions;
    sj["reward_p"] = s.reward_p;
    if (!s.observations.empty()) {
      sj["t"] = s.observations.front().t;
      sj["pursuer_locs"] = s.observations.front().pursuer_locs;
      sj["evader_loc"] = s.observations.front().evader_loc;
    }
    steps_json.push_back(std::move(sj));
  }
  return j;
}

void write_episodes_jsonl(const std::vector<EpisodeRecord>& episodes, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw input_error("write_episodes_jsonl: cannot open " + path);
  for (const auto& ep : episodes) out << ep.to_json().dump() << "\n";
}

}  // namespace grasper
