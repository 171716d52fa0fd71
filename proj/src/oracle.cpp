#include "grasper/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>

#include "grasper/error.hpp"

namespace grasper {

namespace {

// All shortest src->dst paths, depth-first along decreasing distance.
void enumerate_paths(const Graph& g, const std::vector<int>& dist_to_dst, int cur, int dst,
                     std::vector<int>& partial, std::vector<std::vector<int>>& out,
                     int64_t max_paths) {
  if (cur == dst) {
    out.push_back(partial);
    if (static_cast<int64_t>(out.size()) > max_paths)
      throw refusal_error("enumerate_plans: too many shortest paths");
    return;
  }
  const int dcur = dist_to_dst[static_cast<size_t>(cur)];
  for (int w : g.adjacency[static_cast<size_t>(cur)]) {
    if (dist_to_dst[static_cast<size_t>(w)] != dcur - 1) continue;
    partial.push_back(w);
    enumerate_paths(g, dist_to_dst, w, dst, partial, out, max_paths);
    partial.pop_back();
  }
}

struct JointSpace {
  int n = 0;
  int64_t nodes = 0;

  int64_t encode(const std::vector<int>& locs) const {
    int64_t code = 0;
    for (int i = n - 1; i >= 0; --i) code = code * nodes + locs[static_cast<size_t>(i)];
    return code;
  }
  std::vector<int> decode(int64_t code) const {
    std::vector<int> locs(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
      locs[static_cast<size_t>(i)] = static_cast<int>(code % nodes);
      code /= nodes;
    }
    return locs;
  }
};

// Enumerates joint pursuer actions as (code, probability) pairs under a
// per-member action distribution, or all joint actions when dists is null.
void enum_joint(const JointSpace& space, const std::vector<std::vector<int>>& actions,
                const std::vector<std::vector<double>>* dists, size_t member, int64_t code_acc,
                double prob_acc, const std::function<void(int64_t, double)>& sink) {
  if (member == actions.size()) {
    sink(code_acc, prob_acc);
    return;
  }
  int64_t stride = 1;
  for (size_t i = 0; i < member; ++i) stride *= space.nodes;
  for (size_t a = 0; a < actions[member].size(); ++a) {
    const double p = dists ? (*dists)[member][a] : 1.0;
    if (dists && p == 0.0) continue;
    enum_joint(space, actions, dists, member + 1, code_acc + stride * actions[member][a],
               prob_acc * p, sink);
  }
}

struct Expansions {
  int64_t used = 0;
  int64_t guard;
  void charge(int64_t n = 1) {
    used += n;
    if (used > guard)
      throw refusal_error("oracle: state space too large (guard " + std::to_string(guard) + ")");
  }
};

// Per-plan backward induction with the pursuer conditioned on the whole plan.
class PlanDp {
 public:
  PlanDp(const GameSpec& spec, const EvaderPlan& plan, Expansions& exp)
      : spec_(spec), plan_(plan), exp_(exp) {
    space_.n = spec.n_pursuers();
    space_.nodes = spec.graph.node_count;
  }

  double value_at_root() {
    GameState state = reset(spec_, plan_);
    if (state.terminal) return terminal_pursuer_reward(state.cause);
    return value(0, space_.encode(state.pursuer_locs));
  }

 private:
  double value(int t, int64_t code) {
    const uint64_t key = static_cast<uint64_t>(t) * 0x100000000ull ^ static_cast<uint64_t>(code);
    auto it = memo_.find(key);
    if (it != memo_.end()) return it->second;
    exp_.charge();
    const std::vector<int> locs = space_.decode(code);
    const int evader_next = plan_.path[static_cast<size_t>(t + 1)];
    std::vector<std::vector<int>> actions(static_cast<size_t>(space_.n));
    for (int i = 0; i < space_.n; ++i)
      actions[static_cast<size_t>(i)] = legal_actions(spec_.graph, locs[static_cast<size_t>(i)]);
    double best = -2.0;
    enum_joint(space_, actions, nullptr, 0, 0, 1.0, [&](int64_t next_code, double) {
      const std::vector<int> next_locs = space_.decode(next_code);
      double v;
      if (std::find(next_locs.begin(), next_locs.end(), evader_next) != next_locs.end())
        v = 1.0;
      else if (spec_.is_exit(evader_next))
        v = -1.0;
      else if (t + 1 >= spec_.horizon)
        v = 1.0;
      else
        v = value(t + 1, next_code);
      best = std::max(best, v);
    });
    memo_.emplace(key, best);
    return best;
  }

  const GameSpec& spec_;
  const EvaderPlan& plan_;
  Expansions& exp_;
  JointSpace space_;
  std::unordered_map<uint64_t, double> memo_;
};

// Backward induction over (trajectory prefix, pursuer locations) with
// Bayesian plan beliefs; values are plan-probability-weighted (unnormalized).
class BeliefDp {
 public:
  BeliefDp(const GameSpec& spec, const PlanSet& plans, Expansions& exp)
      : spec_(spec), plans_(plans), exp_(exp) {
    space_.n = spec.n_pursuers();
    space_.nodes = spec.graph.node_count;
    // Root prefix holds every plan (all share the evader start).
    Prefix root;
    root.t = 0;
    root.evader_loc = spec.evader_start;
    for (size_t i = 0; i < plans_.plans.size(); ++i) {
      root.plan_ids.push_back(static_cast<int>(i));
      root.weight += plans_.probs[i];
    }
    prefixes_.push_back(std::move(root));
  }

  double value_at_root() {
    GameState state = reset(spec_, {plans_.plans.front().chosen_exit, {spec_.evader_start}});
    if (state.terminal) return terminal_pursuer_reward(state.cause);
    return value(0, space_.encode(spec_.pursuer_starts)) / prefixes_[0].weight;
  }

 private:
  struct Prefix {
    int t = 0;
    int evader_loc = -1;
    std::vector<int> plan_ids;
    double weight = 0.0;
    std::map<int, int> children;  // next evader node -> prefix id
    bool expanded = false;
  };

  void expand(int prefix_id) {
    Prefix& pre = prefixes_[static_cast<size_t>(prefix_id)];
    if (pre.expanded) return;
    pre.expanded = true;
    const int next_t = pre.t + 1;
    std::map<int, Prefix> groups;
    for (int pid : pre.plan_ids) {
      const auto& path = plans_.plans[static_cast<size_t>(pid)].path;
      const int e_next = path[static_cast<size_t>(next_t)];
      Prefix& child = groups[e_next];
      child.t = next_t;
      child.evader_loc = e_next;
      child.plan_ids.push_back(pid);
      child.weight += plans_.probs[static_cast<size_t>(pid)];
    }
    for (auto& [node, child] : groups) {
      prefixes_.push_back(std::move(child));
      prefixes_[static_cast<size_t>(prefix_id)].children[node] =
          static_cast<int>(prefixes_.size() - 1);
    }
  }

  // Unnormalized: expected reward weighted by the prefix's plan mass.
  double value(int prefix_id, int64_t code) {
    const uint64_t key =
        static_cast<uint64_t>(prefix_id) * 0x100000000ull ^ static_cast<uint64_t>(code);
    auto it = memo_.find(key);
    if (it != memo_.end()) return it->second;
    exp_.charge();
    expand(prefix_id);
    // Copy what we need: recursion grows prefixes_ and may reallocate it.
    const int t = prefixes_[static_cast<size_t>(prefix_id)].t;
    const double weight = prefixes_[static_cast<size_t>(prefix_id)].weight;
    std::vector<std::tuple<int, int, double>> children;  // (evader_next, id, weight)
    for (const auto& [node, child_id] : prefixes_[static_cast<size_t>(prefix_id)].children)
      children.emplace_back(node, child_id, prefixes_[static_cast<size_t>(child_id)].weight);
    const std::vector<int> locs = space_.decode(code);
    std::vector<std::vector<int>> actions(static_cast<size_t>(space_.n));
    for (int i = 0; i < space_.n; ++i)
      actions[static_cast<size_t>(i)] = legal_actions(spec_.graph, locs[static_cast<size_t>(i)]);
    double best = -2.0 * weight - 1.0;
    enum_joint(space_, actions, nullptr, 0, 0, 1.0, [&](int64_t next_code, double) {
      const std::vector<int> next_locs = space_.decode(next_code);
      double total = 0.0;
      for (const auto& [evader_next, child_id, child_weight] : children) {
        if (std::find(next_locs.begin(), next_locs.end(), evader_next) != next_locs.end())
          total += child_weight;
        else if (spec_.is_exit(evader_next))
          total -= child_weight;
        else if (t + 1 >= spec_.horizon)
          total += child_weight;
        else
          total += value(child_id, next_code);
      }
      best = std::max(best, total);
    });
    memo_.emplace(key, best);
    return best;
  }

  const GameSpec& spec_;
  const PlanSet& plans_;
  Expansions& exp_;
  JointSpace space_;
  std::vector<Prefix> prefixes_;
  std::unordered_map<uint64_t, double> memo_;
};

}  // namespace

PlanSet enumerate_plans(const GameSpec& spec, const std::vector<double>& exit_dist,
                        int64_t max_paths) {
  if (exit_dist.size() != spec.exits.size())
    throw input_error("enumerate_plans: exit distribution size mismatch");
  PlanSet set;
  for (size_t e = 0; e < spec.exits.size(); ++e) {
    if (exit_dist[e] <= 0.0) continue;
    const int exit_node = spec.exits[e];
    const std::vector<int> dist = bfs_distances(spec.graph, exit_node);
    if (dist[static_cast<size_t>(spec.evader_start)] == -1)
      throw no_path_error("enumerate_plans: exit unreachable");
    std::vector<std::vector<int>> paths;
    std::vector<int> partial{spec.evader_start};
    enumerate_paths(spec.graph, dist, spec.evader_start, exit_node, partial, paths, max_paths);
    const double per_path = exit_dist[e] / static_cast<double>(paths.size());
    for (auto& p : paths) {
      set.plans.push_back({exit_node, std::move(p)});
      set.probs.push_back(per_path);
    }
  }
  if (set.plans.empty()) throw input_error("enumerate_plans: exit distribution has no support");
  return set;
}

double exact_game_value(const GameSpec& spec, const std::vector<double>& exit_dist,
                        OracleInfo info, int64_t state_guard) {
  Expansions exp{0, state_guard};
  const PlanSet plans = enumerate_plans(spec, exit_dist);
  if (info == OracleInfo::plan_conditioned) {
    double total = 0.0;
    for (size_t i = 0; i < plans.plans.size(); ++i) {
      PlanDp dp(spec, plans.plans[i], exp);
      total += plans.probs[i] * dp.value_at_root();
    }
    return total;
  }
  BeliefDp dp(spec, plans, exp);
  return dp.value_at_root();
}

double exact_policy_value(const GameSpec& spec, const PolicyDistFn& policy,
                          const std::vector<double>& exit_dist, int64_t state_guard) {
  Expansions exp{0, state_guard};
  const PlanSet plans = enumerate_plans(spec, exit_dist);
  JointSpace space{spec.n_pursuers(), spec.graph.node_count};

  double total = 0.0;
  for (size_t pi = 0; pi < plans.plans.size(); ++pi) {
    const EvaderPlan& plan = plans.plans[pi];
    const double plan_prob = plans.probs[pi];
    GameState root = reset(spec, plan);
    if (root.terminal) {
      total += plan_prob * terminal_pursuer_reward(root.cause);
      continue;
    }
    std::unordered_map<int64_t, double> dist;
    dist[space.encode(root.pursuer_locs)] = 1.0;
    double plan_value = 0.0;
    for (int t = 0; !dist.empty(); ++t) {
      const int evader_loc = plan.path[static_cast<size_t>(t)];
      const int evader_next = plan.path[static_cast<size_t>(t + 1)];
      std::unordered_map<int64_t, double> next_dist;
      // Deterministic iteration: sort codes.
      std::vector<std::pair<int64_t, double>> cells(dist.begin(), dist.end());
      std::sort(cells.begin(), cells.end());
      for (const auto& [code, mass] : cells) {
        exp.charge();
        const std::vector<int> locs = space.decode(code);
        std::vector<std::vector<int>> actions(static_cast<size_t>(space.n));
        std::vector<std::vector<double>> act_dists(static_cast<size_t>(space.n));
        for (int i = 0; i < space.n; ++i) {
          actions[static_cast<size_t>(i)] =
              legal_actions(spec.graph, locs[static_cast<size_t>(i)]);
          Observation obs{locs, evader_loc, i, t};
          act_dists[static_cast<size_t>(i)] = policy(obs);
          if (act_dists[static_cast<size_t>(i)].size() != actions[static_cast<size_t>(i)].size())
            throw config_error("exact_policy_value: policy distribution size mismatch");
        }
        enum_joint(space, actions, &act_dists, 0, 0, mass, [&](int64_t next_code, double p) {
          if (p == 0.0) return;
          const std::vector<int> next_locs = space.decode(next_code);
          if (std::find(next_locs.begin(), next_locs.end(), evader_next) != next_locs.end())
            plan_value += p;  // capture
          else if (spec.is_exit(evader_next))
            plan_value -= p;  // escape
          else if (t + 1 >= spec.horizon)
            plan_value += p;  // timeout
          else
            next_dist[next_code] += p;
        });
      }
      dist = std::move(next_dist);
    }
    total += plan_prob * plan_value;
  }
  return total;
}

double exact_evader_br_value(const GameSpec& spec, const std::vector<PolicyDistFn>& pursuers,
                             const std::vector<double>& sigma_p, int64_t state_guard) {
  if (pursuers.size() != sigma_p.size())
    throw input_error("exact_evader_br_value: mixture size mismatch");
  double best = -2.0;
  for (size_t e = 0; e < spec.exits.size(); ++e) {
    std::vector<double> onehot(spec.exits.size(), 0.0);
    onehot[e] = 1.0;
    double pursuer_value = 0.0;
    for (size_t i = 0; i < pursuers.size(); ++i) {
      if (sigma_p[i] == 0.0) continue;
      pursuer_value += sigma_p[i] * exact_policy_value(spec, pursuers[i], onehot, state_guard);
    }
    best = std::max(best, -pursuer_value);
  }
  return best;
}

}  // namespace grasper
