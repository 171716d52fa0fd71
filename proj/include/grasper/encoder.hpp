#pragma once

#include <iosfwd>
#include <vector>

#include "grasper/features.hpp"
#include "grasper/game.hpp"
#include "grasper/param_store.hpp"
#include "grasper/tape.hpp"

namespace grasper {

struct GnnConfig {
  int in_dim = kNodeFeatureDim;
  int hidden = 128;
  int layers = 2;
  enum class Act { relu, leaky_relu, tanh };
  Act act = Act::relu;

  nlohmann::json to_json() const;
  static GnnConfig from_json(const nlohmann::json& j);
};

void init_gnn_params(ParamStore& store, const GnnConfig& cfg, Rng& rng);

// Degree-normalized mean aggregation over {self} + neighbors (non-tape).
Tensor graph_aggregate_plain(const Tensor& x, const Graph& g);

// H = f_GNN(X, A): per layer aggregate -> dense -> activation.
Tensor gnn_forward(const ParamStore& store, const GnnConfig& cfg, const Tensor& x, const Graph& g);
Var gnn_forward_tape(Tape& tape, ParamBinder& bind, const GnnConfig& cfg, Var x, const Graph& g);

struct GameEmbedding {
  Tensor h;      // [hidden]
  Tensor h_aug;  // [hidden + 1]: h with T / T_max appended
};

// Mean-pool node codes, append the normalized horizon.
GameEmbedding game_embedding(const ParamStore& gnn, const GnnConfig& cfg, const GameSpec& spec,
                             int t_max);
// Tape version returning h_aug as a [1 x hidden+1] var (joint GNN training).
Var game_embedding_tape(Tape& tape, ParamBinder& gnn_bind, const GnnConfig& cfg,
                        const GameSpec& spec, int t_max);

// ---- masked graph autoencoding (pre-pretraining) ---------------------------

struct MaskedAeConfig {
  double mask_ratio = 0.5;
  double gamma = 2.0;  // cosine error power

  nlohmann::json to_json() const;
  static MaskedAeConfig from_json(const nlohmann::json& j);
};

// Mask token, re-mask token and the single graph-layer decoder.
void init_mae_params(ParamStore& store, const GnnConfig& cfg, Rng& rng);

// Masks ceil(mask_ratio * |V|) nodes, encodes, re-masks the code rows,
// decodes with one graph layer, and scores (1 - cos(xhat, x))^gamma over the
// masked nodes. Returns the scalar loss var.
Var masked_ae_loss(Tape& tape, ParamBinder& gnn_bind, ParamBinder& mae_bind, const GnnConfig& cfg,
                   const MaskedAeConfig& mae_cfg, const Tensor& x, const Graph& g, Rng& rng);

// Reference formula used by tests: mean over rows of (1 - cos)^gamma.
double mae_reconstruction_loss(const Tensor& xhat, const Tensor& x, double gamma);

struct PrePretrainConfig {
  MaskedAeConfig mae;
  int steps = 2000;
  int batch_graphs = 8;
  double lr = 1e-3;
  uint64_t seed = 0;
  int log_every = 25;
};

struct PrePretrainResult {
  double initial_loss = 0.0;
  double final_loss = 0.0;
  double wall_clock_s = 0.0;
  std::vector<std::pair<int, double>> loss_curve;
};

// Stage-I training: minimizes masked_ae_loss over dataset minibatches with
// Adam; gnn/mae stores are updated in place. CSV rows (step, loss) go to
// *metrics when given.
struct GameDataset;
PrePretrainResult pre_pretrain(ParamStore& gnn, ParamStore& mae, const GnnConfig& cfg,
                               const std::vector<GameSpec>& dataset, const PrePretrainConfig& pc,
                               std::ostream* metrics = nullptr);

}  // namespace grasper
