#include "grasper/policy.hpp"

#include <cmath>
#include <cstring>

#include "grasper/error.hpp"

namespace grasper {

std::vector<PolicyArchitecture::LayerShape> PolicyArchitecture::layers() const {
  std::vector<LayerShape> shapes;
  int in = input_width;
  for (int h : hidden) {
    shapes.push_back({in, h});
    in = h;
  }
  shapes.push_back({in, max_actions});
  return shapes;
}

int64_t PolicyArchitecture::layer_param_count(int layer) const {
  const auto shape = layers()[static_cast<size_t>(layer)];
  return static_cast<int64_t>(shape.in) * shape.out + shape.out;
}

int64_t PolicyArchitecture::param_count() const {
  int64_t total = 0;
  for (size_t l = 0; l < layers().size(); ++l) total += layer_param_count(static_cast<int>(l));
  return total;
}

nlohmann::json PolicyArchitecture::to_json() const {
  return {{"input_width", input_width}, {"hidden", hidden}, {"max_actions", max_actions}};
}

PolicyArchitecture PolicyArchitecture::from_json(const nlohmann::json& j) {
  PolicyArchitecture a;
  a.input_width = j.at("input_width").get<int>();
  a.hidden = j.at("hidden").get<std::vector<int>>();
  a.max_actions = j.at("max_actions").get<int>();
  return a;
}

GeneratedPolicy GeneratedPolicy::from_flat(PolicyArchitecture arch, Tensor flat,
                                           uint64_t provenance) {
  if (flat.numel() != arch.param_count())
    throw config_error("GeneratedPolicy: flat vector length " + std::to_string(flat.numel()) +
                       " != architecture parameter count " + std::to_string(arch.param_count()));
  GeneratedPolicy p;
  p.arch = std::move(arch);
  p.flat = std::move(flat);
  p.provenance_hash = provenance;
  int64_t offset = 0;
  for (const auto& shape : p.arch.layers()) {
    Tensor w({shape.in, shape.out});
    std::memcpy(w.data.data(), p.flat.data.data() + offset, w.data.size() * sizeof(double));
    offset += w.numel();
    Tensor b({shape.out});
    std::memcpy(b.data.data(), p.flat.data.data() + offset, b.data.size() * sizeof(double));
    offset += b.numel();
    p.weights.push_back(std::move(w));
    p.biases.push_back(std::move(b));
  }
  return p;
}

Tensor GeneratedPolicy::reflatten() const {
  Tensor out({arch.param_count()});
  int64_t offset = 0;
  for (size_t l = 0; l < weights.size(); ++l) {
    std::memcpy(out.data.data() + offset, weights[l].data.data(),
                weights[l].data.size() * sizeof(double));
    offset += weights[l].numel();
    std::memcpy(out.data.data() + offset, biases[l].data.data(),
                biases[l].data.size() * sizeof(double));
    offset += biases[l].numel();
  }
  return out;
}

void actor_store_from_policy(const GeneratedPolicy& policy, ParamStore& out) {
  for (size_t l = 0; l < policy.weights.size(); ++l) {
    out.add("w" + std::to_string(l), policy.weights[l]);
    out.add("b" + std::to_string(l), policy.biases[l]);
  }
}

void init_actor_store(const PolicyArchitecture& arch, ParamStore& out, Rng& rng) {
  const auto shapes = arch.layers();
  for (size_t l = 0; l < shapes.size(); ++l) {
    // Small final layer so the initial policy is near-uniform.
    const double gain = (l + 1 == shapes.size()) ? 1e-2 : 1.0;
    out.add("w" + std::to_string(l), xavier_uniform(shapes[l].in, shapes[l].out, rng, gain));
    out.add("b" + std::to_string(l), Tensor::zeros({shapes[l].out}));
  }
}

GeneratedPolicy policy_from_actor_store(const PolicyArchitecture& arch, const ParamStore& store) {
  GeneratedPolicy p;
  p.arch = arch;
  const auto shapes = arch.layers();
  for (size_t l = 0; l < shapes.size(); ++l) {
    p.weights.push_back(store.value("w" + std::to_string(l)));
    p.biases.push_back(store.value("b" + std::to_string(l)));
  }
  p.flat = p.reflatten();
  return p;
}

std::vector<double> actor_logits(const GeneratedPolicy& policy, const Tensor& obs_emb) {
  if (obs_emb.numel() != policy.arch.input_width)
    throw config_error("actor_logits: observation width " + std::to_string(obs_emb.numel()) +
                       " != architecture input width " + std::to_string(policy.arch.input_width));
  Tensor h = obs_emb;
  h.shape = {1, obs_emb.numel()};
  for (size_t l = 0; l < policy.weights.size(); ++l) {
    h = dense_forward(h, policy.weights[l], policy.biases[l]);
    if (l + 1 < policy.weights.size()) h = tanh_apply(h);
  }
  return h.data;
}

std::vector<double> actor_forward(const GeneratedPolicy& policy, const Tensor& obs_emb,
                                  const std::vector<uint8_t>& legal_mask) {
  return masked_softmax(actor_logits(policy, obs_emb), legal_mask);
}

Var actor_logits_tape(Tape& tape, const std::vector<std::pair<Var, Var>>& layer_vars,
                      Var obs_batch) {
  Var h = obs_batch;
  for (size_t l = 0; l < layer_vars.size(); ++l) {
    h = ad::linear(tape, h, layer_vars[l].first, layer_vars[l].second);
    if (l + 1 < layer_vars.size()) h = ad::tanh_(tape, h);
  }
  return h;
}

nlohmann::json HyperConfig::to_json() const {
  return {{"hidden", hidden}, {"head_init_scale", head_init_scale}};
}

HyperConfig HyperConfig::from_json(const nlohmann::json& j) {
  HyperConfig c;
  c.hidden = j.at("hidden").get<std::vector<int>>();
  c.head_init_scale = j.at("head_init_scale").get<double>();
  return c;
}

void init_hyper_params(ParamStore& store, const HyperConfig& cfg, int input_width,
                       const PolicyArchitecture& arch, Rng& rng) {
  int in = input_width;
  for (size_t l = 0; l < cfg.hidden.size(); ++l) {
    store.add("trunk.w" + std::to_string(l), xavier_uniform(in, cfg.hidden[l], rng));
    store.add("trunk.b" + std::to_string(l), Tensor::zeros({cfg.hidden[l]}));
    in = cfg.hidden[l];
  }
  const int n_layers = static_cast<int>(arch.layers().size());
  for (int l = 0; l < n_layers; ++l) {
    const int64_t width = arch.layer_param_count(l);
    store.add("head" + std::to_string(l) + ".w",
              xavier_uniform(in, width, rng, cfg.head_init_scale));
    store.add("head" + std::to_string(l) + ".b", Tensor::zeros({width}));
  }
}

namespace {

Tensor hyper_trunk(const ParamStore& store, const HyperConfig& cfg, const Tensor& h_aug) {
  Tensor h = h_aug;
  h.shape = {1, h_aug.numel()};
  for (size_t l = 0; l < cfg.hidden.size(); ++l) {
    h = dense_forward(h, store.value("trunk.w" + std::to_string(l)),
                      store.value("trunk.b" + std::to_string(l)));
    h = relu_apply(h);
  }
  return h;
}

}  // namespace

GeneratedPolicy hyper_forward(const ParamStore& store, const HyperConfig& cfg,
                              const PolicyArchitecture& arch, const Tensor& h_aug) {
  const std::string w0 = "trunk.w0";
  if (h_aug.numel() != store.value(w0).shape[0])
    throw config_error("hyper_forward: embedding width " + std::to_string(h_aug.numel()) +
                       " != hypernetwork input width " + std::to_string(store.value(w0).shape[0]));
  const Tensor trunk = hyper_trunk(store, cfg, h_aug);
  Tensor flat({arch.param_count()});
  int64_t offset = 0;
  const int n_layers = static_cast<int>(arch.layers().size());
  for (int l = 0; l < n_layers; ++l) {
    const Tensor chunk = dense_forward(trunk, store.value("head" + std::to_string(l) + ".w"),
                                       store.value("head" + std::to_string(l) + ".b"));
    std::memcpy(flat.data.data() + offset, chunk.data.data(), chunk.data.size() * sizeof(double));
    offset += chunk.numel();
  }
  return GeneratedPolicy::from_flat(arch, std::move(flat), tensor_hash(h_aug));
}

std::vector<std::pair<Var, Var>> hyper_forward_tape(Tape& tape, ParamBinder& bind,
                                                    const HyperConfig& cfg,
                                                    const PolicyArchitecture& arch, Var h_aug) {
  Var h = h_aug;
  for (size_t l = 0; l < cfg.hidden.size(); ++l) {
    h = ad::linear(tape, h, bind("trunk.w" + std::to_string(l)),
                   bind("trunk.b" + std::to_string(l)));
    h = ad::relu_(tape, h);
  }
  std::vector<std::pair<Var, Var>> layer_vars;
  const auto shapes = arch.layers();
  for (size_t l = 0; l < shapes.size(); ++l) {
    Var chunk = ad::linear(tape, h, bind("head" + std::to_string(l) + ".w"),
                           bind("head" + std::to_string(l) + ".b"));
    const int64_t w_count = static_cast<int64_t>(shapes[l].in) * shapes[l].out;
    Var w = ad::segment(tape, chunk, 0, {shapes[l].in, shapes[l].out});
    Var b = ad::segment(tape, chunk, w_count, {shapes[l].out});
    layer_vars.emplace_back(w, b);
  }
  return layer_vars;
}

nlohmann::json CriticConfig::to_json() const {
  return {{"input_width", input_width}, {"hidden", hidden}};
}

CriticConfig CriticConfig::from_json(const nlohmann::json& j) {
  CriticConfig c;
  c.input_width = j.at("input_width").get<int>();
  c.hidden = j.at("hidden").get<std::vector<int>>();
  return c;
}

void init_critic_params(ParamStore& store, const CriticConfig& cfg, Rng& rng) {
  int in = cfg.input_width;
  for (size_t l = 0; l < cfg.hidden.size(); ++l) {
    store.add("w" + std::to_string(l), xavier_uniform(in, cfg.hidden[l], rng));
    store.add("b" + std::to_string(l), Tensor::zeros({cfg.hidden[l]}));
    in = cfg.hidden[l];
  }
  store.add("w_out", xavier_uniform(in, 1, rng));
  store.add("b_out", Tensor::zeros({1}));
}

double critic_forward(const ParamStore& store, const CriticConfig& cfg, const Tensor& input) {
  if (input.numel() != cfg.input_width)
    throw config_error("critic_forward: input width " + std::to_string(input.numel()) +
                       " != configured width " + std::to_string(cfg.input_width));
  Tensor h = input;
  h.shape = {1, input.numel()};
  for (size_t l = 0; l < cfg.hidden.size(); ++l) {
    h = dense_forward(h, store.value("w" + std::to_string(l)), store.value("b" + std::to_string(l)));
    h = tanh_apply(h);
  }
  h = dense_forward(h, store.value("w_out"), store.value("b_out"));
  return h.data[0];
}

Var critic_forward_tape(Tape& tape, ParamBinder& bind, const CriticConfig& cfg, Var input_batch) {
  if (tape.val(input_batch).cols() != cfg.input_width)
    throw config_error("critic_forward_tape: input width mismatch");
  Var h = input_batch;
  for (size_t l = 0; l < cfg.hidden.size(); ++l) {
    h = ad::linear(tape, h, bind("w" + std::to_string(l)), bind("b" + std::to_string(l)));
    h = ad::tanh_(tape, h);
  }
  return ad::linear(tape, h, bind("w_out"), bind("b_out"));
}

}  // namespace grasper
