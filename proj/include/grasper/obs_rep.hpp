#pragma once

#include "grasper/game.hpp"
#include "grasper/param_store.hpp"
#include "grasper/tensor.hpp"

#include <json.hpp>

namespace grasper {

// Observation representation layer: one shared location-embedding table over
// the base map's node ids, a member-id table and a time-step table. The raw
// mode (ablation) replaces the tables with normalized scalar features.
struct RepConfig {
  int d_loc = 32;
  int d_id = 8;
  int d_time = 8;
  int loc_vocab = 0;  // base map node count
  int n_max = 1;      // member-id table size
  int t_max = 10;     // time table covers 0..t_max
  bool raw = false;   // ablation: no embedding tables

  int obs_width(int n_pursuers) const {
    if (raw) return n_pursuers + 3;  // locs, evader, id, t
    return (n_pursuers + 1) * d_loc + d_id + d_time;
  }
  int central_width(int n_pursuers) const {
    if (raw) return n_pursuers + 2;  // locs, evader, t
    return (n_pursuers + 1) * d_loc + d_time;
  }

  nlohmann::json to_json() const;
  static RepConfig from_json(const nlohmann::json& j);
};

void init_rep_params(ParamStore& store, const RepConfig& cfg, Rng& rng);

// Concatenated (pursuers by member index, evader, member id, time step).
// Locations are translated to base-map ids through graph.orig_id. Throws
// input_error when an id is outside the vocabulary or t > t_max.
Tensor obs_embed(const ParamStore& store, const RepConfig& cfg, const Observation& obs,
                 const Graph& graph);

// Central critic input: all locations + time (no member id).
Tensor central_embed(const ParamStore& store, const RepConfig& cfg,
                     const std::vector<int>& pursuer_locs, int evader_loc, int t,
                     const Graph& graph);

}  // namespace grasper
