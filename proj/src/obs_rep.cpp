#include "grasper/obs_rep.hpp"

#include "grasper/error.hpp"

namespace grasper {

nlohmann::json RepConfig::to_json() const {
  return {{"d_loc", d_loc}, {"d_id", d_id},   {"d_time", d_time}, {"loc_vocab", loc_vocab},
          {"n_max", n_max}, {"t_max", t_max}, {"raw", raw}};
}

RepConfig RepConfig::from_json(const nlohmann::json& j) {
  RepConfig c;
  c.d_loc = j.at("d_loc").get<int>();
  c.d_id = j.at("d_id").get<int>();
  c.d_time = j.at("d_time").get<int>();
  c.loc_vocab = j.at("loc_vocab").get<int>();
  c.n_max = j.at("n_max").get<int>();
  c.t_max = j.at("t_max").get<int>();
  c.raw = j.value("raw", false);
  return c;
}

void init_rep_params(ParamStore& store, const RepConfig& cfg, Rng& rng) {
  if (cfg.raw) return;
  auto table = [&rng](int64_t vocab, int64_t dim) {
    Tensor t({vocab, dim});
    for (auto& v : t.data) v = 0.1 * rng.normal();
    return t;
  };
  store.add("loc", table(cfg.loc_vocab, cfg.d_loc));
  store.add("id", table(cfg.n_max, cfg.d_id));
  store.add("time", table(cfg.t_max + 1, cfg.d_time));
}

namespace {

int checked_orig_id(const RepConfig& cfg, const Graph& graph, int loc) {
  const int orig = graph.orig_id(loc);
  if (orig < 0 || orig >= cfg.loc_vocab)
    throw input_error("obs_embed: node id " + std::to_string(orig) +
                      " outside the embedding vocabulary");
  return orig;
}

}  // namespace

Tensor obs_embed(const ParamStore& store, const RepConfig& cfg, const Observation& obs,
                 const Graph& graph) {
  if (obs.member_id < 0 || obs.member_id >= cfg.n_max)
    throw input_error("obs_embed: member id out of range");
  if (obs.t < 0 || obs.t > cfg.t_max)
    throw input_error("obs_embed: time step " + std::to_string(obs.t) + " exceeds t_max " +
                      std::to_string(cfg.t_max));
  if (cfg.raw) {
    Tensor out({static_cast<int64_t>(obs.pursuer_locs.size()) + 3});
    int64_t k = 0;
    const double denom = static_cast<double>(cfg.loc_vocab);
    for (int loc : obs.pursuer_locs)
      out.at(k++) = checked_orig_id(cfg, graph, loc) / denom;
    out.at(k++) = checked_orig_id(cfg, graph, obs.evader_loc) / denom;
    out.at(k++) = static_cast<double>(obs.member_id) / static_cast<double>(cfg.n_max);
    out.at(k++) = static_cast<double>(obs.t) / static_cast<double>(cfg.t_max);
    return out;
  }
  std::vector<Tensor> parts;
  parts.reserve(obs.pursuer_locs.size() + 3);
  const Tensor& loc_table = store.value("loc");
  for (int loc : obs.pursuer_locs)
    parts.push_back(embedding_lookup(loc_table, checked_orig_id(cfg, graph, loc)));
  parts.push_back(embedding_lookup(loc_table, checked_orig_id(cfg, graph, obs.evader_loc)));
  parts.push_back(embedding_lookup(store.value("id"), obs.member_id));
  parts.push_back(embedding_lookup(store.value("time"), obs.t));
  return concat_cols(parts);
}

Tensor central_embed(const ParamStore& store, const RepConfig& cfg,
                     const std::vector<int>& pursuer_locs, int evader_loc, int t,
                     const Graph& graph) {
  if (t < 0 || t > cfg.t_max) throw input_error("central_embed: time step exceeds t_max");
  if (cfg.raw) {
    Tensor out({static_cast<int64_t>(pursuer_locs.size()) + 2});
    int64_t k = 0;
    const double denom = static_cast<double>(cfg.loc_vocab);
    for (int loc : pursuer_locs) out.at(k++) = checked_orig_id(cfg, graph, loc) / denom;
    out.at(k++) = checked_orig_id(cfg, graph, evader_loc) / denom;
    out.at(k++) = static_cast<double>(t) / static_cast<double>(cfg.t_max);
    return out;
  }
  std::vector<Tensor> parts;
  parts.reserve(pursuer_locs.size() + 2);
  const Tensor& loc_table = store.value("loc");
  for (int loc : pursuer_locs)
    parts.push_back(embedding_lookup(loc_table, checked_orig_id(cfg, graph, loc)));
  parts.push_back(embedding_lookup(loc_table, checked_orig_id(cfg, graph, evader_loc)));
  parts.push_back(embedding_lookup(store.value("time"), t));
  return concat_cols(parts);
}

}  // namespace grasper
