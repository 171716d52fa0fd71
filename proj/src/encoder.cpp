#include "grasper/encoder.hpp"

#include <chrono>
#include <cmath>
#include <ostream>

#include "grasper/error.hpp"

namespace grasper {

nlohmann::json GnnConfig::to_json() const {
  const char* act_name = act == Act::relu ? "relu" : (act == Act::leaky_relu ? "leaky_relu" : "tanh");
  return {{"in_dim", in_dim}, {"hidden", hidden}, {"layers", layers}, {"act", act_name}};
}

GnnConfig GnnConfig::from_json(const nlohmann::json& j) {
  GnnConfig c;
  c.in_dim = j.at("in_dim").get<int>();
  c.hidden = j.at("hidden").get<int>();
  c.layers = j.at("layers").get<int>();
  const std::string act = j.value("act", "relu");
  c.act = act == "tanh" ? Act::tanh : (act == "leaky_relu" ? Act::leaky_relu : Act::relu);
  return c;
}

void init_gnn_params(ParamStore& store, const GnnConfig& cfg, Rng& rng) {
  int in = cfg.in_dim;
  for (int l = 0; l < cfg.layers; ++l) {
    store.add("l" + std::to_string(l) + ".w", xavier_uniform(in, cfg.hidden, rng));
    store.add("l" + std::to_string(l) + ".b", Tensor::zeros({cfg.hidden}));
    in = cfg.hidden;
  }
}

Tensor graph_aggregate_plain(const Tensor& x, const Graph& g) {
  if (x.rows() != g.node_count)
    throw input_error("graph_aggregate: feature rows do not match node count");
  const int64_t d = x.cols();
  Tensor out({g.node_count, d});
  for (int i = 0; i < g.node_count; ++i) {
    const auto& nbrs = g.adjacency[static_cast<size_t>(i)];
    const double inv = 1.0 / static_cast<double>(1 + nbrs.size());
    for (int64_t j = 0; j < d; ++j) out.at(i, j) = x.at(i, j);
    for (int n : nbrs)
      for (int64_t j = 0; j < d; ++j) out.at(i, j) += x.at(n, j);
    for (int64_t j = 0; j < d; ++j) out.at(i, j) *= inv;
  }
  return out;
}

namespace {

Tensor activate_plain(const GnnConfig& cfg, const Tensor& a) {
  switch (cfg.act) {
    case GnnConfig::Act::relu: return relu_apply(a);
    case GnnConfig::Act::leaky_relu: return leaky_relu_apply(a, 0.01);
    case GnnConfig::Act::tanh: return tanh_apply(a);
  }
  return a;
}

Var activate_tape(Tape& t, const GnnConfig& cfg, Var a) {
  switch (cfg.act) {
    case GnnConfig::Act::relu: return ad::relu_(t, a);
    case GnnConfig::Act::leaky_relu: return ad::leaky_relu_(t, a, 0.01);
    case GnnConfig::Act::tanh: return ad::tanh_(t, a);
  }
  return a;
}

}  // namespace

Tensor gnn_forward(const ParamStore& store, const GnnConfig& cfg, const Tensor& x, const Graph& g) {
  Tensor h = x;
  for (int l = 0; l < cfg.layers; ++l) {
    const Tensor agg = graph_aggregate_plain(h, g);
    const Tensor z = dense_forward(agg, store.value("l" + std::to_string(l) + ".w"),
                                   store.value("l" + std::to_string(l) + ".b"));
    h = activate_plain(cfg, z);
  }
  return h;
}

Var gnn_forward_tape(Tape& tape, ParamBinder& bind, const GnnConfig& cfg, Var x, const Graph& g) {
  Var h = x;
  for (int l = 0; l < cfg.layers; ++l) {
    Var agg = ad::graph_aggregate(tape, h, g);
    Var z = ad::linear(tape, agg, bind("l" + std::to_string(l) + ".w"),
                       bind("l" + std::to_string(l) + ".b"));
    h = activate_tape(tape, cfg, z);
  }
  return h;
}

GameEmbedding game_embedding(const ParamStore& gnn, const GnnConfig& cfg, const GameSpec& spec,
                             int t_max) {
  const Tensor x = encode_spec(spec);
  const Tensor codes = gnn_forward(gnn, cfg, x, spec.graph);
  GameEmbedding emb;
  emb.h = Tensor::zeros({cfg.hidden});
  for (int64_t r = 0; r < codes.rows(); ++r)
    for (int j = 0; j < cfg.hidden; ++j) emb.h.at(j) += codes.at(r, j);
  for (int j = 0; j < cfg.hidden; ++j) emb.h.at(j) /= static_cast<double>(codes.rows());
  emb.h_aug = Tensor::zeros({cfg.hidden + 1});
  for (int j = 0; j < cfg.hidden; ++j) emb.h_aug.at(j) = emb.h.at(j);
  emb.h_aug.at(cfg.hidden) = static_cast<double>(spec.horizon) / static_cast<double>(t_max);
  return emb;
}

Var game_embedding_tape(Tape& tape, ParamBinder& gnn_bind, const GnnConfig& cfg,
                        const GameSpec& spec, int t_max) {
  Var x = tape.constant(encode_spec(spec));
  Var codes = gnn_forward_tape(tape, gnn_bind, cfg, x, spec.graph);
  Var pooled = ad::mean_over_rows(tape, codes);  // [1 x hidden]
  Var horizon = tape.constant(
      Tensor::row({static_cast<double>(spec.horizon) / static_cast<double>(t_max)}));
  return ad::concat_cols(tape, {pooled, horizon});  // [1 x hidden+1]
}

nlohmann::json MaskedAeConfig::to_json() const {
  return {{"mask_ratio", mask_ratio}, {"gamma", gamma}};
}

MaskedAeConfig MaskedAeConfig::from_json(const nlohmann::json& j) {
  MaskedAeConfig c;
  c.mask_ratio = j.at("mask_ratio").get<double>();
  c.gamma = j.at("gamma").get<double>();
  return c;
}

void init_mae_params(ParamStore& store, const GnnConfig& cfg, Rng& rng) {
  Tensor enc_token({cfg.in_dim});
  for (auto& v : enc_token.data) v = 0.02 * rng.normal();
  store.add("enc_token", std::move(enc_token));
  Tensor dec_token({cfg.hidden});
  for (auto& v : dec_token.data) v = 0.02 * rng.normal();
  store.add("dec_token", std::move(dec_token));
  store.add("dec.w", xavier_uniform(cfg.hidden, cfg.in_dim, rng));
  store.add("dec.b", Tensor::zeros({cfg.in_dim}));
}

Var masked_ae_loss(Tape& tape, ParamBinder& gnn_bind, ParamBinder& mae_bind, const GnnConfig& cfg,
                   const MaskedAeConfig& mae_cfg, const Tensor& x, const Graph& g, Rng& rng) {
  if (mae_cfg.mask_ratio <= 0.0 || mae_cfg.mask_ratio >= 1.0)
    throw config_error("masked_ae_loss: mask_ratio must be strictly inside (0,1)");
  if (mae_cfg.gamma < 1.0) throw config_error("masked_ae_loss: gamma must be >= 1");
  const int n = static_cast<int>(x.rows());
  int m = static_cast<int>(std::ceil(mae_cfg.mask_ratio * n));
  m = std::max(1, std::min(m, n));
  // Partial Fisher-Yates for m distinct rows.
  std::vector<int> perm(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) perm[static_cast<size_t>(i)] = i;
  for (int i = 0; i < m; ++i) {
    const int j = i + static_cast<int>(rng.uniform_int(n - i));
    std::swap(perm[static_cast<size_t>(i)], perm[static_cast<size_t>(j)]);
  }
  std::vector<int> masked(perm.begin(), perm.begin() + m);
  std::sort(masked.begin(), masked.end());

  Var x_masked = ad::replace_rows(tape, x, mae_bind("enc_token"), masked);
  Var codes = gnn_forward_tape(tape, gnn_bind, cfg, x_masked, g);
  Var remasked = ad::replace_rows_var(tape, codes, mae_bind("dec_token"), masked);
  Var agg = ad::graph_aggregate(tape, remasked, g);
  Var xhat = ad::linear(tape, agg, mae_bind("dec.w"), mae_bind("dec.b"));
  Var xhat_masked = ad::gather_rows(tape, xhat, masked);

  Tensor target({static_cast<int64_t>(masked.size()), x.cols()});
  for (size_t r = 0; r < masked.size(); ++r)
    for (int64_t j = 0; j < x.cols(); ++j) target.at(static_cast<int64_t>(r), j) = x.at(masked[r], j);

  Var cos = ad::cosine_rows(tape, xhat_masked, target);
  Var err = ad::add_scalar(tape, ad::neg(tape, cos), 1.0);
  Var powed = ad::pow_(tape, err, mae_cfg.gamma);
  return ad::mean_all(tape, powed);
}

double mae_reconstruction_loss(const Tensor& xhat, const Tensor& x, double gamma) {
  if (!xhat.same_shape(x)) throw config_error("mae_reconstruction_loss: shape mismatch");
  double total = 0.0;
  for (int64_t r = 0; r < x.rows(); ++r) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (int64_t j = 0; j < x.cols(); ++j) {
      dot += xhat.at(r, j) * x.at(r, j);
      na += xhat.at(r, j) * xhat.at(r, j);
      nb += x.at(r, j) * x.at(r, j);
    }
    const double c = (na == 0.0 || nb == 0.0) ? 0.0 : dot / std::sqrt(na * nb);
    total += std::pow(1.0 - c, gamma);
  }
  return total / static_cast<double>(x.rows());
}

PrePretrainResult pre_pretrain(ParamStore& gnn, ParamStore& mae, const GnnConfig& cfg,
                               const std::vector<GameSpec>& dataset, const PrePretrainConfig& pc,
                               std::ostream* metrics) {
  if (dataset.empty()) throw input_error("pre_pretrain: empty dataset");
  PrePretrainResult result;
  if (pc.steps == 0) return result;
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(pc.seed);
  AdamConfig adam;
  adam.lr = pc.lr;
  if (metrics) *metrics << "step,loss\n";
  for (int step = 0; step < pc.steps; ++step) {
    Tape tape;
    ParamBinder gnn_bind(tape, gnn);
    ParamBinder mae_bind(tape, mae);
    Var total = tape.constant(Tensor::scalar(0.0));
    const int batch = std::min<int>(pc.batch_graphs, static_cast<int>(dataset.size()));
    for (int b = 0; b < batch; ++b) {
      const auto& spec = dataset[static_cast<size_t>(rng.uniform_int(
          static_cast<int64_t>(dataset.size())))];
      Var loss = masked_ae_loss(tape, gnn_bind, mae_bind, cfg, pc.mae, encode_spec(spec),
                                spec.graph, rng);
      total = ad::add(tape, total, loss);
    }
    Var mean_loss = ad::scale(tape, total, 1.0 / static_cast<double>(batch));
    const double loss_value = tape.val(mean_loss).data[0];
    if (!std::isfinite(loss_value)) throw training_error("pre_pretrain: loss diverged (NaN)");
    if (step == 0) result.initial_loss = loss_value;
    result.final_loss = loss_value;
    if (step % pc.log_every == 0 || step == pc.steps - 1) {
      result.loss_curve.emplace_back(step, loss_value);
      if (metrics) *metrics << step << "," << loss_value << "\n";
    }
    tape.backward(mean_loss);
    gnn_bind.accumulate();
    mae_bind.accumulate();
    adam_step(gnn, adam);
    adam_step(mae, adam);
  }
  result.wall_clock_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

}  // namespace grasper
