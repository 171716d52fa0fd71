#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "grasper/graph.hpp"
#include "grasper/rng.hpp"

namespace grasper {

// One pursuit-evasion game instance: graph, exit set, initial locations,
// horizon.
struct GameSpec {
  Graph graph;
  std::vector<int> exits;          // sorted, unique
  std::vector<int> pursuer_starts;
  int evader_start = -1;
  int horizon = 1;

  int n_pursuers() const { return static_cast<int>(pursuer_starts.size()); }
  bool is_exit(int v) const;
  void validate() const;
  // Structural equality: same graph edges, exits, starts and horizon.
  bool same_game(const GameSpec& other) const;

  nlohmann::json to_json() const;
  static GameSpec from_json(const nlohmann::json& j);
};

// The evader's high-level action: a chosen exit plus one sampled shortest
// path from its start to that exit.
struct EvaderPlan {
  int chosen_exit = -1;
  std::vector<int> path;  // path.front() == evader start, path.back() == exit
};

EvaderPlan make_evader_plan(const GameSpec& spec, int exit_node, Rng& rng);
// Exit drawn from a distribution over spec.exits (same order), then the path.
EvaderPlan sample_evader_plan(const GameSpec& spec, const std::vector<double>& exit_probs,
                              Rng& rng);

enum class TerminalCause { none, capture, escape, timeout };

const char* to_string(TerminalCause cause);
double terminal_pursuer_reward(TerminalCause cause);

struct GameState {
  int t = 0;
  std::vector<int> pursuer_locs;
  int evader_loc = -1;
  int path_pos = 0;  // index into the plan's path
  bool terminal = false;
  TerminalCause cause = TerminalCause::none;
};

// What one pursuer member sees: all current locations, its id, the time step.
struct Observation {
  std::vector<int> pursuer_locs;
  int evader_loc = -1;
  int member_id = -1;
  int t = 0;
};

struct StepOutcome {
  double reward_p = 0.0;
  double reward_e = 0.0;
  GameState next;
};

// Sorted neighbors of loc plus loc itself (the stay action). With
// strict_neighbors only the paper-literal neighbor set is returned (stay kept
// for degree-0 nodes so the action set is never empty).
std::vector<int> legal_actions(const Graph& g, int loc, bool strict_neighbors = false);

// t=0 state; immediate capture when the evader starts on a pursuer.
GameState reset(const GameSpec& spec, const EvaderPlan& plan);

// Simultaneous move: the evader advances one node along its plan, the
// pursuers move to their chosen nodes, then termination is checked in order
// capture > escape > timeout. Rewards are zero-sum and nonzero only on
// termination; capture and timeout favor the pursuer.
StepOutcome step(const GameSpec& spec, const EvaderPlan& plan, const GameState& state,
                 const std::vector<int>& pursuer_actions, bool strict_neighbors = false);

using PursuerPolicyFn = std::function<int(const Observation&)>;

struct EpisodeStep {
  std::vector<Observation> observations;  // one per member
  std::vector<int> actions;               // chosen nodes
  double reward_p = 0.0;
  double reward_e = 0.0;
};

struct EpisodeRecord {
  int chosen_exit = -1;
  std::vector<int> evader_path;
  std::vector<EpisodeStep> steps;
  TerminalCause cause = TerminalCause::none;
  double total_reward_p = 0.0;

  nlohmann::json to_json() const;
};

// Full episode until termination; length <= horizon.
EpisodeRecord rollout(const GameSpec& spec, const EvaderPlan& plan,
                      const PursuerPolicyFn& pursuer_policy);

void write_episodes_jsonl(const std::vector<EpisodeRecord>& episodes, const std::string& path);

}  // namespace grasper
