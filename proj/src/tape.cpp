#include "grasper/tape.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "grasper/error.hpp"
#include "grasper/graph.hpp"

namespace grasper {

Var Tape::constant(Tensor value) { return make(std::move(value), nullptr); }

Var Tape::make(Tensor value, std::function<void(Tape&)> back) {
  Node node;
  node.grad = Tensor::zeros(value.shape);
  node.value = std::move(value);
  node.back = std::move(back);
  nodes_.push_back(std::move(node));
  return static_cast<Var>(nodes_.size() - 1);
}

void Tape::set_back(Var v, std::function<void(Tape&)> back) {
  nodes_[static_cast<size_t>(v)].back = std::move(back);
}

void Tape::backward(Var loss) {
  if (backward_done_) throw config_error("Tape::backward called twice");
  backward_done_ = true;
  auto& loss_node = nodes_[static_cast<size_t>(loss)];
  if (loss_node.value.numel() != 1) throw config_error("Tape::backward: loss must be scalar");
  loss_node.grad.data[0] = 1.0;
  for (int64_t i = loss; i >= 0; --i) {
    auto& node = nodes_[static_cast<size_t>(i)];
    if (node.back) node.back(*this);
  }
}

Var ParamBinder::operator()(const std::string& name) {
  auto it = bound_.find(name);
  if (it != bound_.end()) return it->second;
  Var v = tape_->constant(store_->value(name));
  bound_.emplace(name, v);
  return v;
}

void ParamBinder::accumulate() {
  for (const auto& [name, var] : bound_) {
    auto& entry = store_->entry(name);
    const Tensor& g = tape_->grad(var);
    for (size_t i = 0; i < entry.grad.data.size(); ++i) entry.grad.data[i] += g.data[i];
  }
}

namespace ad {

namespace {

void add_into(Tensor& dst, const Tensor& src) {
  for (size_t i = 0; i < dst.data.size(); ++i) dst.data[i] += src.data[i];
}

constexpr double kMaskedLogProb = -1e30;

}  // namespace

Var matmul(Tape& t, Var a, Var b) {
  Var y = t.make(grasper::matmul(t.val(a), t.val(b)), nullptr);
  t.set_back(y, [y, a, b](Tape& tp) {
    const Tensor& g = tp.grad(y);
    add_into(tp.grad(a), grasper::matmul_nt(g, tp.val(b)));
    add_into(tp.grad(b), grasper::matmul_tn(tp.val(a), g));
  });
  return y;
}

Var linear(Tape& t, Var x, Var w, Var bias) {
  Var y = t.make(grasper::dense_forward(t.val(x), t.val(w), t.val(bias)), nullptr);
  t.set_back(y, [y, x, w, bias](Tape& tp) {
    const Tensor& g = tp.grad(y);
    add_into(tp.grad(x), grasper::matmul_nt(g, tp.val(w)));
    add_into(tp.grad(w), grasper::matmul_tn(tp.val(x), g));
    Tensor& gb = tp.grad(bias);
    const int64_t m = g.cols();
    for (int64_t i = 0; i < g.rows(); ++i)
      for (int64_t j = 0; j < m; ++j) gb.at(j) += g.at(i, j);
  });
  return y;
}

Var add(Tape& t, Var a, Var b) {
  Var y = t.make(grasper::add(t.val(a), t.val(b)), nullptr);
  t.set_back(y, [y, a, b](Tape& tp) {
    add_into(tp.grad(a), tp.grad(y));
    add_into(tp.grad(b), tp.grad(y));
  });
  return y;
}

Var sub(Tape& t, Var a, Var b) {
  Tensor out = t.val(a);
  const Tensor& vb = t.val(b);
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] -= vb.data[i];
  Var y = t.make(std::move(out), nullptr);
  t.set_back(y, [y, a, b](Tape& tp) {
    const Tensor& g = tp.grad(y);
    add_into(tp.grad(a), g);
    Tensor& gb = tp.grad(b);
    for (size_t i = 0; i < gb.data.size(); ++i) gb.data[i] -= g.data[i];
  });
  return y;
}

Var mul(Tape& t, Var a, Var b) {
  Tensor out = t.val(a);
  const Tensor& vb = t.val(b);
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] *= vb.data[i];
  Var y = t.make(std::move(out), nullptr);
  t.set_back(y, [y, a, b](Tape& tp) {
    const Tensor& g = tp.grad(y);
    const Tensor& va = tp.val(a);
    const Tensor& vb2 = tp.val(b);
    Tensor& ga = tp.grad(a);
    Tensor& gb = tp.grad(b);
    for (size_t i = 0; i < g.data.size(); ++i) {
      ga.data[i] += g.data[i] * vb2.data[i];
      gb.data[i] += g.data[i] * va.data[i];
    }
  });
  return y;
}

Var scale(Tape& t, Var a, double s) {
  Tensor out = t.val(a);
  for (auto& v : out.data) v *= s;
  Var y = t.make(std::move(out), nullptr);
  t.set_back(y, [y, a, s](Tape& tp) {
    const Tensor& g = tp.grad(y);
    Tensor& ga = tp.grad(a);
    for (size_t i = 0; i < ga.data.size(); ++i) ga.data[i] += s * g.data[i];
  });
  return y;
}

Var add_scalar(Tape& t, Var a, double s) {
  Tensor out = t.val(a);
  for (auto& v : out.data) v += s;
  Var y = t.make(std::move(out), nullptr);
  t.set_back(y, [y, a](Tape& tp) { add_into(tp.grad(a), tp.grad(y)); });
  return y;
}

Var neg(Tape& t, Var a) { return scale(t, a, -1.0); }

Var tanh_(Tape& t, Var a) {
  Tensor out = t.val(a);
  for (auto& v : out.data) v = std::tanh(v);
  Var y = t.make(std::move(out), nullptr);
  t.set_back(y, [y, a](Tape& tp) {
    const Tensor& g = tp.grad(y);
    const Tensor& vy = tp.val(y);
    Tensor& ga = tp.grad(a);
    for (size_t i = 0; i < ga.data.size(); ++i)
      ga.data[i] += g.data[i] * (1.0 - vy.data[i] * vy.data[i]);
  });
  return y;
}

Var relu_(Tape& t, Var a) {
  Tensor out = t.val(a);
  for (auto& v : out.data) v = v > 0.0 ? v : 0.0;
  Var y = t.make(std::move(out), nullptr);
  t.set_back(y, [y, a](Tape& tp) {
    const Tensor& g = tp.grad(y);
    const Tensor& va = tp.val(a);
    Tensor& ga = tp.grad(a);
    for (size_t i = 0; i < ga.data.size(); ++i)
      if (va.data[i] > 0.0) ga.data[i] += g.data[i];
  });
  return y;
}

Var leaky_relu_(Tape& t, Var a, double slope) {
  Tensor out = t.val(a);
  for (auto& v : out.data) v = v > 0.0 ? v : slope * v;
  Var y = t.make(std::move(out), nullptr);
  t.set_back(y, [y, a, slope](Tape& tp) {
    const Tensor& g = tp.grad(y);
    const Tensor& va = tp.val(a);
    Tensor& ga = tp.grad(a);
    for (size_t i = 0; i < ga.data.size(); ++i)
      ga.data[i] += g.data[i] * (va.data[i] > 0.0 ? 1.0 : slope);
  });
  return y;
}

Var exp_(Tape& t, Var a) {
  Tensor out = t.val(a);
  for (auto& v : out.data) v = std::exp(v);
  Var y = t.make(std::move(out), nullptr);
  t.set_back(y, [y, a](Tape& tp) {
    const Tensor& g = tp.grad(y);
    const Tensor& vy = tp.val(y);
    Tensor& ga = tp.grad(a);
    for (size_t i = 0; i < ga.data.size(); ++i) ga.data[i] += g.data[i] * vy.data[i];
  });
  return y;
}

Var square_(Tape& t, Var a) {
  Tensor out = t.val(a);
  for (auto& v : out.data) v = v * v;
  Var y = t.make(std::move(out), nullptr);
  t.set_back(y, [y, a](Tape& tp) {
    const Tensor& g = tp.grad(y);
    const Tensor& va = tp.val(a);
    Tensor& ga = tp.grad(a);
    for (size_t i = 0; i < ga.data.size(); ++i) ga.data[i] += 2.0 * g.data[i] * va.data[i];
  });
  return y;
}

Var pow_(Tape& t, Var a, double p) {
  Tensor out = t.val(a);
  for (auto& v : out.data) v = std::pow(v, p);
  Var y = t.make(std::move(out), nullptr);
  t.set_back(y, [y, a, p](Tape& tp) {
    const Tensor& g = tp.grad(y);
    const Tensor& va = tp.val(a);
    Tensor& ga = tp.grad(a);
    for (size_t i = 0; i < ga.data.size(); ++i) {
      const double base = va.data[i];
      double d;
      if (base > 0.0)
        d = p * std::pow(base, p - 1.0);
      else
        d = (p == 1.0) ? 1.0 : 0.0;  // base == 0 with p > 1
      ga.data[i] += g.data[i] * d;
    }
  });
  return y;
}

Var clamp_(Tape& t, Var a, double lo, double hi) {
  Tensor out = t.val(a);
  for (auto& v : out.data) v = std::min(hi, std::max(lo, v));
  Var y = t.make(std::move(out), nullptr);
  t.set_back(y, [y, a, lo, hi](Tape& tp) {
    const Tensor& g = tp.grad(y);
    const Tensor& va = tp.val(a);
    Tensor& ga = tp.grad(a);
    for (size_t i = 0; i < ga.data.size(); ++i)
      if (va.data[i] >= lo && va.data[i] <= hi) ga.data[i] += g.data[i];
  });
  return y;
}

Var min_(Tape& t, Var a, Var b) {
  Tensor out = t.val(a);
  const Tensor& vb = t.val(b);
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] = std::min(out.data[i], vb.data[i]);
  Var y = t.make(std::move(out), nullptr);
  t.set_back(y, [y, a, b](Tape& tp) {
    const Tensor& g = tp.grad(y);
    const Tensor& va = tp.val(a);
    const Tensor& vb2 = tp.val(b);
    Tensor& ga = tp.grad(a);
    Tensor& gb = tp.grad(b);
    for (size_t i = 0; i < g.data.size(); ++i) {
      if (va.data[i] <= vb2.data[i])
        ga.data[i] += g.data[i];
      else
        gb.data[i] += g.data[i];
    }
  });
  return y;
}

Var add_const(Tape& t, Var a, const Tensor& c) {
  Tensor out = t.val(a);
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] += c.data[i];
  Var y = t.make(std::move(out), nullptr);
  t.set_back(y, [y, a](Tape& tp) { add_into(tp.grad(a), tp.grad(y)); });
  return y;
}

Var sub_const(Tape& t, Var a, const Tensor& c) {
  Tensor out = t.val(a);
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] -= c.data[i];
  Var y = t.make(std::move(out), nullptr);
  t.set_back(y, [y, a](Tape& tp) { add_into(tp.grad(a), tp.grad(y)); });
  return y;
}

Var mul_const(Tape& t, Var a, const Tensor& c) {
  Tensor out = t.val(a);
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] *= c.data[i];
  Var y = t.make(std::move(out), nullptr);
  Tensor c_copy = c;
  t.set_back(y, [y, a, c_copy](Tape& tp) {
    const Tensor& g = tp.grad(y);
    Tensor& ga = tp.grad(a);
    for (size_t i = 0; i < ga.data.size(); ++i) ga.data[i] += g.data[i] * c_copy.data[i];
  });
  return y;
}

Var dot_const(Tape& t, Var a, const Tensor& w) {
  const Tensor& va = t.val(a);
  double acc = 0.0;
  for (size_t i = 0; i < va.data.size(); ++i) acc += va.data[i] * w.data[i];
  Var y = t.make(Tensor::scalar(acc), nullptr);
  Tensor w_copy = w;
  t.set_back(y, [y, a, w_copy](Tape& tp) {
    const double g = tp.grad(y).data[0];
    Tensor& ga = tp.grad(a);
    for (size_t i = 0; i < ga.data.size(); ++i) ga.data[i] += g * w_copy.data[i];
  });
  return y;
}

Var sum_all(Tape& t, Var a) {
  const Tensor& va = t.val(a);
  double acc = 0.0;
  for (double v : va.data) acc += v;
  Var y = t.make(Tensor::scalar(acc), nullptr);
  t.set_back(y, [y, a](Tape& tp) {
    const double g = tp.grad(y).data[0];
    Tensor& ga = tp.grad(a);
    for (auto& v : ga.data) v += g;
  });
  return y;
}

Var mean_all(Tape& t, Var a) {
  const int64_t n = t.val(a).numel();
  if (n == 0) throw config_error("mean_all: empty tensor");
  return scale(t, sum_all(t, a), 1.0 / static_cast<double>(n));
}

Var reshape(Tape& t, Var a, std::vector<int64_t> shape) {
  Tensor out = t.val(a);
  int64_t n = 1;
  for (int64_t d : shape) n *= d;
  if (n != out.numel()) throw config_error("reshape: element count mismatch");
  out.shape = std::move(shape);
  Var y = t.make(std::move(out), nullptr);
  t.set_back(y, [y, a](Tape& tp) {
    const Tensor& g = tp.grad(y);
    Tensor& ga = tp.grad(a);
    for (size_t i = 0; i < ga.data.size(); ++i) ga.data[i] += g.data[i];
  });
  return y;
}

Var embedding_rows(Tape& t, Var table, const std::vector<int>& indices) {
  const Tensor& tab = t.val(table);
  if (tab.rank() != 2) throw config_error("embedding_rows: table must be rank 2");
  const int64_t vocab = tab.shape[0], dim = tab.shape[1];
  Tensor out({static_cast<int64_t>(indices.size()), dim});
  for (size_t r = 0; r < indices.size(); ++r) {
    const int idx = indices[r];
    if (idx < 0 || idx >= vocab)
      throw input_error("embedding_rows: index " + std::to_string(idx) + " out of range [0, " +
                        std::to_string(vocab) + ")");
    std::memcpy(out.data.data() + static_cast<int64_t>(r) * dim, tab.data.data() + idx * dim,
                static_cast<size_t>(dim) * sizeof(double));
  }
  Var y = t.make(std::move(out), nullptr);
  std::vector<int> idx_copy = indices;
  t.set_back(y, [y, table, idx_copy, dim](Tape& tp) {
    const Tensor& g = tp.grad(y);
    Tensor& gt = tp.grad(table);
    for (size_t r = 0; r < idx_copy.size(); ++r) {
      const int64_t row = idx_copy[r];
      for (int64_t j = 0; j < dim; ++j)
        gt.data[static_cast<size_t>(row * dim + j)] += g.at(static_cast<int64_t>(r), j);
    }
  });
  return y;
}

Var embedding_row(Tape& t, Var table, int index) {
  return embedding_rows(t, table, std::vector<int>{index});
}

Var concat_cols(Tape& t, const std::vector<Var>& parts) {
  if (parts.empty()) throw config_error("concat_cols: no parts");
  const int64_t rows = t.val(parts[0]).rows();
  int64_t total_cols = 0;
  for (Var p : parts) {
    const Tensor& v = t.val(p);
    if (v.rank() != 2 || v.rows() != rows)
      throw config_error("concat_cols: all parts must be rank-2 with equal row counts");
    total_cols += v.cols();
  }
  Tensor out({rows, total_cols});
  int64_t col_offset = 0;
  for (Var p : parts) {
    const Tensor& v = t.val(p);
    for (int64_t r = 0; r < rows; ++r)
      std::memcpy(out.data.data() + r * total_cols + col_offset, v.data.data() + r * v.cols(),
                  static_cast<size_t>(v.cols()) * sizeof(double));
    col_offset += v.cols();
  }
  Var y = t.make(std::move(out), nullptr);
  std::vector<Var> parts_copy = parts;
  t.set_back(y, [y, parts_copy, rows, total_cols](Tape& tp) {
    const Tensor& g = tp.grad(y);
    int64_t col_offset2 = 0;
    for (Var p : parts_copy) {
      Tensor& gp = tp.grad(p);
      const int64_t c = gp.cols();
      for (int64_t r = 0; r < rows; ++r)
        for (int64_t j = 0; j < c; ++j)
          gp.at(r, j) += g.data[static_cast<size_t>(r * total_cols + col_offset2 + j)];
      col_offset2 += c;
    }
  });
  return y;
}

Var segment(Tape& t, Var flat, int64_t offset, std::vector<int64_t> shape) {
  const Tensor& vf = t.val(flat);
  int64_t n = 1;
  for (int64_t d : shape) n *= d;
  if (offset < 0 || offset + n > vf.numel()) throw config_error("segment: out of range");
  Tensor out(shape);
  std::memcpy(out.data.data(), vf.data.data() + offset, static_cast<size_t>(n) * sizeof(double));
  Var y = t.make(std::move(out), nullptr);
  t.set_back(y, [y, flat, offset](Tape& tp) {
    const Tensor& g = tp.grad(y);
    Tensor& gf = tp.grad(flat);
    for (size_t i = 0; i < g.data.size(); ++i) gf.data[static_cast<size_t>(offset) + i] += g.data[i];
  });
  return y;
}

Var tile_rows(Tape& t, Var row, int64_t n) {
  const Tensor& vr = t.val(row);
  const int64_t d = vr.numel();
  Tensor out({n, d});
  for (int64_t r = 0; r < n; ++r)
    std::memcpy(out.data.data() + r * d, vr.data.data(), static_cast<size_t>(d) * sizeof(double));
  Var y = t.make(std::move(out), nullptr);
  t.set_back(y, [y, row, n, d](Tape& tp) {
    const Tensor& g = tp.grad(y);
    Tensor& gr = tp.grad(row);
    for (int64_t r = 0; r < n; ++r)
      for (int64_t j = 0; j < d; ++j) gr.data[static_cast<size_t>(j)] += g.at(r, j);
  });
  return y;
}

Var gather_rows(Tape& t, Var a, const std::vector<int>& rows) {
  const Tensor& va = t.val(a);
  const int64_t d = va.cols();
  Tensor out({static_cast<int64_t>(rows.size()), d});
  for (size_t r = 0; r < rows.size(); ++r)
    std::memcpy(out.data.data() + static_cast<int64_t>(r) * d, va.data.data() + rows[r] * d,
                static_cast<size_t>(d) * sizeof(double));
  Var y = t.make(std::move(out), nullptr);
  std::vector<int> rows_copy = rows;
  t.set_back(y, [y, a, rows_copy, d](Tape& tp) {
    const Tensor& g = tp.grad(y);
    Tensor& ga = tp.grad(a);
    for (size_t r = 0; r < rows_copy.size(); ++r)
      for (int64_t j = 0; j < d; ++j)
        ga.data[static_cast<size_t>(rows_copy[r] * d + j)] += g.at(static_cast<int64_t>(r), j);
  });
  return y;
}

namespace {

Var replace_rows_impl(Tape& t, const Tensor* base_const, Var base_var, Var token,
                      const std::vector<int>& rows) {
  const Tensor& base = base_const ? *base_const : t.val(base_var);
  const Tensor& tok = t.val(token);
  const int64_t d = base.cols();
  if (tok.numel() != d) throw config_error("replace_rows: token width mismatch");
  Tensor out = base;
  for (int r : rows)
    std::memcpy(out.data.data() + static_cast<int64_t>(r) * d, tok.data.data(),
                static_cast<size_t>(d) * sizeof(double));
  Var y = t.make(std::move(out), nullptr);
  std::vector<uint8_t> is_masked(static_cast<size_t>(base.rows()), 0);
  for (int r : rows) is_masked[static_cast<size_t>(r)] = 1;
  const bool has_base_var = base_const == nullptr;
  t.set_back(y, [y, base_var, token, is_masked, d, has_base_var](Tape& tp) {
    const Tensor& g = tp.grad(y);
    Tensor& gtok = tp.grad(token);
    for (int64_t r = 0; r < g.rows(); ++r) {
      if (is_masked[static_cast<size_t>(r)]) {
        for (int64_t j = 0; j < d; ++j) gtok.data[static_cast<size_t>(j)] += g.at(r, j);
      } else if (has_base_var) {
        Tensor& gb = tp.grad(base_var);
        for (int64_t j = 0; j < d; ++j) gb.at(r, j) += g.at(r, j);
      }
    }
  });
  return y;
}

}  // namespace

Var replace_rows(Tape& t, const Tensor& base, Var token, const std::vector<int>& rows) {
  return replace_rows_impl(t, &base, -1, token, rows);
}

Var replace_rows_var(Tape& t, Var base, Var token, const std::vector<int>& rows) {
  return replace_rows_impl(t, nullptr, base, token, rows);
}

Var mean_over_rows(Tape& t, Var a) {
  const Tensor& va = t.val(a);
  const int64_t n = va.rows(), d = va.cols();
  if (n == 0) throw config_error("mean_over_rows: empty");
  Tensor out({1, d});
  for (int64_t r = 0; r < n; ++r)
    for (int64_t j = 0; j < d; ++j) out.at(0, j) += va.at(r, j);
  for (int64_t j = 0; j < d; ++j) out.at(0, j) /= static_cast<double>(n);
  Var y = t.make(std::move(out), nullptr);
  t.set_back(y, [y, a, n, d](Tape& tp) {
    const Tensor& g = tp.grad(y);
    Tensor& ga = tp.grad(a);
    const double inv = 1.0 / static_cast<double>(n);
    for (int64_t r = 0; r < n; ++r)
      for (int64_t j = 0; j < d; ++j) ga.at(r, j) += g.at(0, j) * inv;
  });
  return y;
}

Var graph_aggregate(Tape& t, Var x, const Graph& g) {
  const Tensor& vx = t.val(x);
  if (vx.rows() != g.node_count)
    throw input_error("graph_aggregate: feature rows do not match node count");
  const int64_t d = vx.cols();
  Tensor out({g.node_count, d});
  for (int64_t i = 0; i < g.node_count; ++i) {
    const auto& nbrs = g.adjacency[static_cast<size_t>(i)];
    const double inv = 1.0 / static_cast<double>(1 + nbrs.size());
    for (int64_t j = 0; j < d; ++j) out.at(i, j) = vx.at(i, j);
    for (int n : nbrs)
      for (int64_t j = 0; j < d; ++j) out.at(i, j) += vx.at(n, j);
    for (int64_t j = 0; j < d; ++j) out.at(i, j) *= inv;
  }
  Var y = t.make(std::move(out), nullptr);
  const Graph* gp = &g;
  t.set_back(y, [y, x, gp, d](Tape& tp) {
    const Tensor& gy = tp.grad(y);
    Tensor& gx = tp.grad(x);
    for (int64_t i = 0; i < gp->node_count; ++i) {
      const auto& nbrs = gp->adjacency[static_cast<size_t>(i)];
      const double inv = 1.0 / static_cast<double>(1 + nbrs.size());
      for (int64_t j = 0; j < d; ++j) gx.at(i, j) += gy.at(i, j) * inv;
      for (int n : nbrs)
        for (int64_t j = 0; j < d; ++j) gx.at(n, j) += gy.at(i, j) * inv;
    }
  });
  return y;
}

Var masked_log_softmax(Tape& t, Var logits, const std::vector<uint8_t>& mask) {
  const Tensor& vl = t.val(logits);
  const int64_t rows = vl.rows(), cols = vl.cols();
  if (static_cast<int64_t>(mask.size()) != rows * cols)
    throw config_error("masked_log_softmax: mask size mismatch");
  Tensor out({rows, cols});
  for (int64_t r = 0; r < rows; ++r) {
    double max_logit = -1e300;
    bool any = false;
    for (int64_t j = 0; j < cols; ++j) {
      if (mask[static_cast<size_t>(r * cols + j)]) {
        any = true;
        max_logit = std::max(max_logit, vl.at(r, j));
      }
    }
    if (!any) throw input_error("masked_log_softmax: row " + std::to_string(r) + " has no legal entry");
    double denom = 0.0;
    for (int64_t j = 0; j < cols; ++j)
      if (mask[static_cast<size_t>(r * cols + j)]) denom += std::exp(vl.at(r, j) - max_logit);
    const double lse = max_logit + std::log(denom);
    for (int64_t j = 0; j < cols; ++j)
      out.at(r, j) = mask[static_cast<size_t>(r * cols + j)] ? vl.at(r, j) - lse : kMaskedLogProb;
  }
  Var y = t.make(std::move(out), nullptr);
  std::vector<uint8_t> mask_copy = mask;
  t.set_back(y, [y, logits, mask_copy, rows, cols](Tape& tp) {
    const Tensor& g = tp.grad(y);
    const Tensor& vy = tp.val(y);
    Tensor& gl = tp.grad(logits);
    for (int64_t r = 0; r < rows; ++r) {
      double gsum = 0.0;
      for (int64_t j = 0; j < cols; ++j)
        if (mask_copy[static_cast<size_t>(r * cols + j)]) gsum += g.at(r, j);
      for (int64_t j = 0; j < cols; ++j) {
        if (!mask_copy[static_cast<size_t>(r * cols + j)]) continue;
        const double p = std::exp(vy.at(r, j));
        gl.at(r, j) += g.at(r, j) - p * gsum;
      }
    }
  });
  return y;
}

Var gather_cols(Tape& t, Var m, const std::vector<int>& cols) {
  const Tensor& vm = t.val(m);
  const int64_t rows = vm.rows(), width = vm.cols();
  if (static_cast<int64_t>(cols.size()) != rows) throw config_error("gather_cols: size mismatch");
  Tensor out({rows});
  for (int64_t r = 0; r < rows; ++r) out.at(r) = vm.at(r, cols[static_cast<size_t>(r)]);
  Var y = t.make(std::move(out), nullptr);
  std::vector<int> cols_copy = cols;
  t.set_back(y, [y, m, cols_copy, width](Tape& tp) {
    const Tensor& g = tp.grad(y);
    Tensor& gm = tp.grad(m);
    for (int64_t r = 0; r < g.numel(); ++r)
      gm.data[static_cast<size_t>(r * width + cols_copy[static_cast<size_t>(r)])] += g.at(r);
  });
  return y;
}

Var entropy_rows(Tape& t, Var logp, const std::vector<uint8_t>& mask) {
  const Tensor& vl = t.val(logp);
  const int64_t rows = vl.rows(), cols = vl.cols();
  Tensor out({rows});
  for (int64_t r = 0; r < rows; ++r) {
    double h = 0.0;
    for (int64_t j = 0; j < cols; ++j) {
      if (!mask[static_cast<size_t>(r * cols + j)]) continue;
      const double lp = vl.at(r, j);
      h -= std::exp(lp) * lp;
    }
    out.at(r) = h;
  }
  Var y = t.make(std::move(out), nullptr);
  std::vector<uint8_t> mask_copy = mask;
  t.set_back(y, [y, logp, mask_copy, rows, cols](Tape& tp) {
    const Tensor& g = tp.grad(y);
    const Tensor& vl2 = tp.val(logp);
    Tensor& gl = tp.grad(logp);
    for (int64_t r = 0; r < rows; ++r) {
      for (int64_t j = 0; j < cols; ++j) {
        if (!mask_copy[static_cast<size_t>(r * cols + j)]) continue;
        const double lp = vl2.at(r, j);
        gl.at(r, j) += g.at(r) * (-std::exp(lp) * (1.0 + lp));
      }
    }
  });
  return y;
}

Var cosine_rows(Tape& t, Var xhat, const Tensor& target) {
  const Tensor& vx = t.val(xhat);
  if (!vx.same_shape(target)) throw config_error("cosine_rows: shape mismatch");
  const int64_t rows = vx.rows(), d = vx.cols();
  Tensor out({rows});
  for (int64_t r = 0; r < rows; ++r) {
    double dot = 0.0, nx = 0.0, nt = 0.0;
    for (int64_t j = 0; j < d; ++j) {
      dot += vx.at(r, j) * target.at(r, j);
      nx += vx.at(r, j) * vx.at(r, j);
      nt += target.at(r, j) * target.at(r, j);
    }
    out.at(r) = (nx == 0.0 || nt == 0.0) ? 0.0 : dot / std::sqrt(nx * nt);
  }
  Var y = t.make(std::move(out), nullptr);
  Tensor target_copy = target;
  t.set_back(y, [y, xhat, target_copy, rows, d](Tape& tp) {
    const Tensor& g = tp.grad(y);
    const Tensor& vx2 = tp.val(xhat);
    Tensor& gx = tp.grad(xhat);
    for (int64_t r = 0; r < rows; ++r) {
      double dot = 0.0, nx = 0.0, nt = 0.0;
      for (int64_t j = 0; j < d; ++j) {
        dot += vx2.at(r, j) * target_copy.at(r, j);
        nx += vx2.at(r, j) * vx2.at(r, j);
        nt += target_copy.at(r, j) * target_copy.at(r, j);
      }
      if (nx == 0.0 || nt == 0.0) continue;
      const double inv_norm = 1.0 / std::sqrt(nx * nt);
      const double c = dot * inv_norm;
      for (int64_t j = 0; j < d; ++j) {
        const double dcdx = target_copy.at(r, j) * inv_norm - c * vx2.at(r, j) / nx;
        gx.at(r, j) += g.at(r) * dcdx;
      }
    }
  });
  return y;
}

}  // namespace ad

double gradcheck(ParamStore& store, const std::function<double(ParamStore&, bool)>& fn, double h) {
  store.zero_grads();
  fn(store, true);
  // Snapshot analytic grads, then probe every coordinate.
  std::vector<Tensor> analytic;
  analytic.reserve(store.size());
  for (const auto& e : store.entries()) analytic.push_back(e.grad);
  double worst = 0.0;
  for (size_t p = 0; p < store.size(); ++p) {
    auto& e = store.entries()[p];
    for (size_t i = 0; i < e.value.data.size(); ++i) {
      const double saved = e.value.data[i];
      e.value.data[i] = saved + h;
      const double up = fn(store, false);
      e.value.data[i] = saved - h;
      const double down = fn(store, false);
      e.value.data[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double a = analytic[p].data[i];
      const double denom = std::max({std::abs(a), std::abs(numeric), 1.0});
      worst = std::max(worst, std::abs(a - numeric) / denom);
    }
  }
  store.zero_grads();
  return worst;
}

}  // namespace grasper
