#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "grasper/tensor.hpp"

namespace grasper {

// One named parameter: value, gradient accumulator, Adam moments.
struct ParamEntry {
  std::string name;
  Tensor value;
  Tensor grad;
  Tensor m;
  Tensor v;
};

// Flat named parameter collection. Iteration order is insertion order, which
// makes checkpoints and optimizer sweeps deterministic.
class ParamStore {
 public:
  Tensor& add(const std::string& name, Tensor init);
  bool has(const std::string& name) const;
  ParamEntry& entry(const std::string& name);
  const ParamEntry& entry(const std::string& name) const;
  Tensor& value(const std::string& name) { return entry(name).value; }
  const Tensor& value(const std::string& name) const { return entry(name).value; }

  std::vector<ParamEntry>& entries() { return entries_; }
  const std::vector<ParamEntry>& entries() const { return entries_; }
  size_t size() const { return entries_.size(); }
  int64_t param_count() const;

  void zero_grads();
  // Reset Adam moments and step counter (used when a copied store starts a
  // fresh optimization).
  void reset_optimizer_state();

  int64_t adam_steps() const { return adam_steps_; }
  int64_t& adam_steps_mutable() { return adam_steps_; }

  ParamStore clone() const;
  // Max absolute difference over all values; stores must have same layout.
  double max_abs_diff(const ParamStore& other) const;

 private:
  std::vector<ParamEntry> entries_;
  std::unordered_map<std::string, size_t> index_;
  int64_t adam_steps_ = 0;
};

struct AdamConfig {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Standard Adam with bias correction over every entry of the store; gradients
// are zeroed afterwards. Throws training_error naming the parameter if a
// non-finite gradient is found.
void adam_step(ParamStore& store, const AdamConfig& cfg);

}  // namespace grasper
