#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "grasper/param_store.hpp"
#include "grasper/tensor.hpp"

namespace grasper {

struct Graph;

using Var = int32_t;

// Reverse-mode autodiff tape. Ordered record of primitive operations; each
// node stores its value, a gradient buffer and a backward closure. Replaying
// the closures in reverse creation order after backward() seeds the loss
// gradient propagates gradients to every reachable node. One-shot: build,
// backward once, discard.
class Tape {
 public:
  Var constant(Tensor value);
  Var make(Tensor value, std::function<void(Tape&)> back);
  // Ops install their backward closure after the node exists so the closure
  // can capture its own index.
  void set_back(Var v, std::function<void(Tape&)> back);

  const Tensor& val(Var v) const { return nodes_[static_cast<size_t>(v)].value; }
  Tensor& grad(Var v) { return nodes_[static_cast<size_t>(v)].grad; }

  // Seeds d(loss)/d(loss) = 1 and runs every backward closure in reverse.
  // loss must be scalar.
  void backward(Var loss);

  size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    std::function<void(Tape&)> back;
  };
  std::deque<Node> nodes_;
  bool backward_done_ = false;
};

// Binds ParamStore entries to tape leaves and pushes tape gradients back into
// the store's accumulators after backward.
class ParamBinder {
 public:
  ParamBinder(Tape& tape, ParamStore& store) : tape_(&tape), store_(&store) {}
  Var operator()(const std::string& name);
  // store.grad += tape grad for every bound entry.
  void accumulate();

 private:
  Tape* tape_;
  ParamStore* store_;
  std::unordered_map<std::string, Var> bound_;
};

// ---- primitive ops ---------------------------------------------------------
namespace ad {

// c[n x m] = a[n x k] * b[k x m]
Var matmul(Tape& t, Var a, Var b);
// y[batch x out] = x * w + bias (bias broadcast over rows)
Var linear(Tape& t, Var x, Var w, Var bias);
Var add(Tape& t, Var a, Var b);
Var sub(Tape& t, Var a, Var b);
Var mul(Tape& t, Var a, Var b);
Var scale(Tape& t, Var a, double s);
Var add_scalar(Tape& t, Var a, double s);
Var neg(Tape& t, Var a);
Var tanh_(Tape& t, Var a);
Var relu_(Tape& t, Var a);
Var leaky_relu_(Tape& t, Var a, double slope = 0.01);
Var exp_(Tape& t, Var a);
Var square_(Tape& t, Var a);
// y = a^p with a >= 0 elementwise.
Var pow_(Tape& t, Var a, double p);
Var clamp_(Tape& t, Var a, double lo, double hi);
Var min_(Tape& t, Var a, Var b);

Var add_const(Tape& t, Var a, const Tensor& c);
Var sub_const(Tape& t, Var a, const Tensor& c);
Var mul_const(Tape& t, Var a, const Tensor& c);
// <a, w> -> scalar
Var dot_const(Tape& t, Var a, const Tensor& w);
Var sum_all(Tape& t, Var a);
Var mean_all(Tape& t, Var a);

Var reshape(Tape& t, Var a, std::vector<int64_t> shape);
// rows of table gathered by index -> [B x dim]; gradient scatters to rows.
Var embedding_rows(Tape& t, Var table, const std::vector<int>& indices);
Var embedding_row(Tape& t, Var table, int index);
// all parts rank-2 with equal row counts -> [B x sum(cols)]
Var concat_cols(Tape& t, const std::vector<Var>& parts);
// flat[offset .. offset+numel(shape)) viewed as `shape`.
Var segment(Tape& t, Var flat, int64_t offset, std::vector<int64_t> shape);
// [1 x d] row repeated n times -> [n x d]
Var tile_rows(Tape& t, Var row, int64_t n);
Var gather_rows(Tape& t, Var a, const std::vector<int>& rows);
// masked rows of X replaced by `token` ([d] or [1 x d]); base is constant.
Var replace_rows(Tape& t, const Tensor& base, Var token, const std::vector<int>& rows);
// same but base is a tape var; gradient flows to unmasked base rows only.
Var replace_rows_var(Tape& t, Var base, Var token, const std::vector<int>& rows);
// mean over rows -> [1 x d]
Var mean_over_rows(Tape& t, Var a);

// Degree-normalized mean over {self} + neighbors; graph must outlive the tape.
Var graph_aggregate(Tape& t, Var x, const Graph& g);

// Row-wise log-softmax restricted to legal entries; illegal entries get
// -1e30. mask is row-major [B x A].
Var masked_log_softmax(Tape& t, Var logits, const std::vector<uint8_t>& mask);
// out[b] = m[b, cols[b]]
Var gather_cols(Tape& t, Var m, const std::vector<int>& cols);
// entropy of each row's distribution from log-probabilities -> [B]
Var entropy_rows(Tape& t, Var logp, const std::vector<uint8_t>& mask);
// cos(xhat_row, target_row) -> [B]; 0 when either vector is zero.
Var cosine_rows(Tape& t, Var xhat, const Tensor& target);

}  // namespace ad

// Relative-error gradient check of a scalar function against central finite
// differences (h = 1e-5). Returns the worst relative error over all entries
// of every store parameter.
double gradcheck(ParamStore& store, const std::function<double(ParamStore&, bool)>& fn,
                 double h = 1e-5);

}  // namespace grasper
