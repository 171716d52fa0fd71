#include "grasper/param_store.hpp"

#include <algorithm>
#include <cmath>

#include "grasper/error.hpp"

namespace grasper {

Tensor& ParamStore::add(const std::string& name, Tensor init) {
  if (index_.count(name)) throw config_error("ParamStore: duplicate parameter " + name);
  ParamEntry entry;
  entry.name = name;
  entry.grad = Tensor::zeros(init.shape);
  entry.m = Tensor::zeros(init.shape);
  entry.v = Tensor::zeros(init.shape);
  entry.value = std::move(init);
  index_[name] = entries_.size();
  entries_.push_back(std::move(entry));
  return entries_.back().value;
}

bool ParamStore::has(const std::string& name) const { return index_.count(name) > 0; }

ParamEntry& ParamStore::entry(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw config_error("ParamStore: unknown parameter " + name);
  return entries_[it->second];
}

const ParamEntry& ParamStore::entry(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw config_error("ParamStore: unknown parameter " + name);
  return entries_[it->second];
}

int64_t ParamStore::param_count() const {
  int64_t total = 0;
  for (const auto& e : entries_) total += e.value.numel();
  return total;
}

void ParamStore::zero_grads() {
  for (auto& e : entries_) std::fill(e.grad.data.begin(), e.grad.data.end(), 0.0);
}

void ParamStore::reset_optimizer_state() {
  for (auto& e : entries_) {
    std::fill(e.m.data.begin(), e.m.data.end(), 0.0);
    std::fill(e.v.data.begin(), e.v.data.end(), 0.0);
    std::fill(e.grad.data.begin(), e.grad.data.end(), 0.0);
  }
  adam_steps_ = 0;
}

ParamStore ParamStore::clone() const { return *this; }

double ParamStore::max_abs_diff(const ParamStore& other) const {
  if (entries_.size() != other.entries_.size())
    throw config_error("ParamStore::max_abs_diff: layout mismatch");
  double worst = 0.0;
  for (size_t i = 0; i < entries_.size(); ++i) {
    const auto& a = entries_[i].value;
    const auto& b = other.entries_[i].value;
    if (!a.same_shape(b)) throw config_error("ParamStore::max_abs_diff: shape mismatch");
    for (size_t j = 0; j < a.data.size(); ++j)
      worst = std::max(worst, std::abs(a.data[j] - b.data[j]));
  }
  return worst;
}

void adam_step(ParamStore& store, const AdamConfig& cfg) {
  const int64_t t = ++store.adam_steps_mutable();
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
  for (auto& e : store.entries()) {
    for (size_t i = 0; i < e.value.data.size(); ++i) {
      const double g = e.grad.data[i];
      if (!std::isfinite(g))
        throw training_error("adam_step: non-finite gradient in parameter " + e.name);
      e.m.data[i] = cfg.beta1 * e.m.data[i] + (1.0 - cfg.beta1) * g;
      e.v.data[i] = cfg.beta2 * e.v.data[i] + (1.0 - cfg.beta2) * g * g;
      const double m_hat = e.m.data[i] / bc1;
      const double v_hat = e.v.data[i] / bc2;
      e.value.data[i] -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
    }
    std::fill(e.grad.data.begin(), e.grad.data.end(), 0.0);
  }
}

}  // namespace grasper
