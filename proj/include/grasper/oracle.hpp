#pragma once

#include <functional>
#include <vector>

#include "grasper/game.hpp"

namespace grasper {

// Distribution over legal_actions(graph, obs-location) order for one member.
using PolicyDistFn = std::function<std::vector<double>(const Observation&)>;

// Every evader plan (exit choice x shortest path) with its probability under
// the exit distribution and uniform path sampling.
struct PlanSet {
  std::vector<EvaderPlan> plans;
  std::vector<double> probs;
};

PlanSet enumerate_plans(const GameSpec& spec, const std::vector<double>& exit_dist,
                        int64_t max_paths = 100000);

// How much the optimal pursuer of the backward induction is allowed to see.
//   plan_conditioned: per-plan optimum (pursuer knows the sampled path);
//     upper bound on any information-respecting pursuer value.
//   trajectory_belief: pursuer conditions on the observed evader trajectory
//     prefix only, with Bayesian beliefs over consistent plans; this is the
//     exact best response in the game's information structure.
enum class OracleInfo { plan_conditioned, trajectory_belief };

// Optimal pursuer expected reward by backward induction over
// (t, pursuer locations, evader path position), averaged over the evader's
// exit distribution and shortest-path sampling. Throws refusal_error when
// more than `state_guard` states would be expanded.
double exact_game_value(const GameSpec& spec, const std::vector<double>& exit_dist,
                        OracleInfo info = OracleInfo::plan_conditioned,
                        int64_t state_guard = 10000000);

// Exact expected pursuer reward of a FIXED stochastic pursuer policy against
// the evader exit distribution (forward sweep over plan-conditional joint
// location distributions).
double exact_policy_value(const GameSpec& spec, const PolicyDistFn& policy,
                          const std::vector<double>& exit_dist,
                          int64_t state_guard = 10000000);

// Evader's exact best-response value (its own payoff) against a mixture of
// pursuer policies: max over exits of -sum_i sigma_p[i] * pursuer value.
double exact_evader_br_value(const GameSpec& spec, const std::vector<PolicyDistFn>& pursuers,
                             const std::vector<double>& sigma_p,
                             int64_t state_guard = 10000000);

}  // namespace grasper
