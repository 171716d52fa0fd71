#include "grasper/reference.hpp"

#include "grasper/error.hpp"

namespace grasper {

ReferencePolicy::ReferencePolicy(const GameSpec& spec, const EvaderPlan& plan)
    : spec_(&spec), plan_(&plan) {
  dist_fields_.reserve(plan.path.size());
  for (int node : plan.path) dist_fields_.push_back(bfs_distances(spec.graph, node));
}

const std::vector<int>& ReferencePolicy::dists_to(int path_index) const {
  return dist_fields_[static_cast<size_t>(path_index)];
}

int ReferencePolicy::target_path_index(const GameState& state, int member) const {
  const int loc = state.pursuer_locs[static_cast<size_t>(member)];
  const int len = static_cast<int>(plan_->path.size());
  for (int j = state.path_pos; j < len; ++j) {
    const int d = dists_to(j)[static_cast<size_t>(loc)];
    if (d >= 0 && d <= j - state.path_pos) return j;  // reachable before the evader
  }
  return -1;
}

int ReferencePolicy::action(const GameState& state, int member) const {
  if (state.terminal) throw input_error("ReferencePolicy: state is terminal");
  const int loc = state.pursuer_locs[static_cast<size_t>(member)];
  int target_index = target_path_index(state, member);
  if (target_index < 0) target_index = static_cast<int>(plan_->path.size()) - 1;  // the exit
  const std::vector<int>& dist = dists_to(target_index);
  const int d_loc = dist[static_cast<size_t>(loc)];
  if (d_loc <= 0) return loc;  // already there (or unreachable: stay)
  // First step of a shortest path; sorted adjacency makes the first hit the
  // smallest node id.
  for (int nbr : spec_->graph.adjacency[static_cast<size_t>(loc)])
    if (dist[static_cast<size_t>(nbr)] == d_loc - 1) return nbr;
  return loc;
}

}  // namespace grasper
