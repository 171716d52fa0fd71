#pragma once

#include <vector>

#include "grasper/game.hpp"

namespace grasper {

// Shortest-path interception heuristic: each member targets the earliest
// remaining evader-path node it can reach no later than the evader does (the
// current evader node counts, so a co-located member stays); if none is
// feasible it heads for the chosen exit. The action is the first step of a
// shortest path to the target, ties broken toward the smallest node id.
class ReferencePolicy {
 public:
  ReferencePolicy(const GameSpec& spec, const EvaderPlan& plan);

  // Node to move to (may equal the member's location: stay).
  int action(const GameState& state, int member) const;
  // Target path index chosen by the interception rule, or -1 for the exit
  // fallback (exposed for tests).
  int target_path_index(const GameState& state, int member) const;

 private:
  const std::vector<int>& dists_to(int path_index) const;

  const GameSpec* spec_;
  const EvaderPlan* plan_;
  // BFS distance field from each path node (path.back() doubles as the exit).
  std::vector<std::vector<int>> dist_fields_;
};

}  // namespace grasper
