#include "grasper/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>

#include "grasper/error.hpp"
#include "grasper/parallel.hpp"

namespace grasper {

namespace {

int64_t shape_numel(const std::vector<int64_t>& shape) {
  int64_t n = 1;
  for (int64_t d : shape) n *= d;
  return n;
}

// Products below this many multiply-adds are not worth a parallel region.
constexpr int64_t kParallelFlops = 1 << 16;

bool parallel_matmul(int64_t n, int64_t k, int64_t m) {
  return parallel::enabled() && parallel::max_workers() > 1 && n > 1 &&
         n * k * m >= kParallelFlops;
}

}  // namespace

Tensor::Tensor(std::vector<int64_t> shape_in) : shape(std::move(shape_in)) {
  data.assign(static_cast<size_t>(shape_numel(shape)), 0.0);
}

Tensor Tensor::zeros(std::vector<int64_t> shape) { return Tensor(std::move(shape)); }

Tensor Tensor::full(std::vector<int64_t> shape, double value) {
  Tensor t(std::move(shape));
  std::fill(t.data.begin(), t.data.end(), value);
  return t;
}

Tensor Tensor::scalar(double value) {
  Tensor t;
  t.shape = {1};
  t.data = {value};
  return t;
}

Tensor Tensor::row(std::vector<double> values) {
  Tensor t;
  t.shape = {1, static_cast<int64_t>(values.size())};
  t.data = std::move(values);
  return t;
}

Tensor Tensor::vec(std::vector<double> values) {
  Tensor t;
  t.shape = {static_cast<int64_t>(values.size())};
  t.data = std::move(values);
  return t;
}

Tensor Tensor::matrix(std::vector<int64_t> shape, std::vector<double> values) {
  Tensor t;
  t.shape = std::move(shape);
  if (shape_numel(t.shape) != static_cast<int64_t>(values.size()))
    throw config_error("tensor literal: value count does not match shape");
  t.data = std::move(values);
  return t;
}

Tensor Tensor::identity(int64_t n) {
  Tensor t({n, n});
  for (int64_t i = 0; i < n; ++i) t.at(i, i) = 1.0;
  return t;
}

int64_t Tensor::numel() const { return static_cast<int64_t>(data.size()); }

int64_t Tensor::rows() const { return rank() == 2 ? shape[0] : 1; }

int64_t Tensor::cols() const {
  if (rank() == 2) return shape[1];
  if (rank() == 1) return shape[0];
  return 1;
}

bool Tensor::all_finite() const {
  for (double v : data)
    if (!std::isfinite(v)) return false;
  return true;
}

std::string Tensor::shape_str() const {
  std::ostringstream out;
  out << "[";
  for (size_t i = 0; i < shape.size(); ++i) out << (i ? "x" : "") << shape[i];
  out << "]";
  return out.str();
}

// ---- matmul kernels --------------------------------------------------------

void matmul_nn_serial(const double* a, const double* b, double* c, int64_t n, int64_t k,
                      int64_t m) {
  for (int64_t i = 0; i < n; ++i) {
    double* ci = c + i * m;
    std::memset(ci, 0, static_cast<size_t>(m) * sizeof(double));
    const double* ai = a + i * k;
    for (int64_t l = 0; l < k; ++l) {
      const double ail = ai[l];
      if (ail == 0.0) continue;
      const double* bl = b + l * m;
      for (int64_t j = 0; j < m; ++j) ci[j] += ail * bl[j];
    }
  }
}

void matmul_nn_omp(const double* a, const double* b, double* c, int64_t n, int64_t k,
                   int64_t m) {
#pragma omp parallel for schedule(static) num_threads(parallel::max_workers())
  for (int64_t i = 0; i < n; ++i) {
    double* ci = c + i * m;
    std::memset(ci, 0, static_cast<size_t>(m) * sizeof(double));
    const double* ai = a + i * k;
    for (int64_t l = 0; l < k; ++l) {
      const double ail = ai[l];
      if (ail == 0.0) continue;
      const double* bl = b + l * m;
      for (int64_t j = 0; j < m; ++j) ci[j] += ail * bl[j];
    }
  }
}

// c[n x m] = a[n x k] * b[m x k]^T
void matmul_nt_serial(const double* a, const double* b, double* c, int64_t n, int64_t k,
                      int64_t m) {
  for (int64_t i = 0; i < n; ++i) {
    const double* ai = a + i * k;
    double* ci = c + i * m;
    for (int64_t j = 0; j < m; ++j) {
      const double* bj = b + j * k;
      double acc = 0.0;
      for (int64_t l = 0; l < k; ++l) acc += ai[l] * bj[l];
      ci[j] = acc;
    }
  }
}

void matmul_nt_omp(const double* a, const double* b, double* c, int64_t n, int64_t k,
                   int64_t m) {
#pragma omp parallel for schedule(static) num_threads(parallel::max_workers())
  for (int64_t i = 0; i < n; ++i) {
    const double* ai = a + i * k;
    double* ci = c + i * m;
    for (int64_t j = 0; j < m; ++j) {
      const double* bj = b + j * k;
      double acc = 0.0;
      for (int64_t l = 0; l < k; ++l) acc += ai[l] * bj[l];
      ci[j] = acc;
    }
  }
}

// c[n x m] = a[k x n]^T * b[k x m]
void matmul_tn_serial(const double* a, const double* b, double* c, int64_t n, int64_t k,
                      int64_t m) {
  for (int64_t i = 0; i < n; ++i) {
    double* ci = c + i * m;
    std::memset(ci, 0, static_cast<size_t>(m) * sizeof(double));
    for (int64_t l = 0; l < k; ++l) {
      const double ali = a[l * n + i];
      if (ali == 0.0) continue;
      const double* bl = b + l * m;
      for (int64_t j = 0; j < m; ++j) ci[j] += ali * bl[j];
    }
  }
}

void matmul_tn_omp(const double* a, const double* b, double* c, int64_t n, int64_t k,
                   int64_t m) {
#pragma omp parallel for schedule(static) num_threads(parallel::max_workers())
  for (int64_t i = 0; i < n; ++i) {
    double* ci = c + i * m;
    std::memset(ci, 0, static_cast<size_t>(m) * sizeof(double));
    for (int64_t l = 0; l < k; ++l) {
      const double ali = a[l * n + i];
      if (ali == 0.0) continue;
      const double* bl = b + l * m;
      for (int64_t j = 0; j < m; ++j) ci[j] += ali * bl[j];
    }
  }
}

namespace {

void require_2d(const Tensor& t, const char* who) {
  if (t.rank() != 2) throw config_error(std::string(who) + ": expected rank-2 tensor, got " + t.shape_str());
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_2d(a, "matmul");
  require_2d(b, "matmul");
  if (a.shape[1] != b.shape[0])
    throw config_error("matmul: inner dimensions differ " + a.shape_str() + " vs " + b.shape_str());
  const int64_t n = a.shape[0], k = a.shape[1], m = b.shape[1];
  Tensor c({n, m});
  if (n == 0 || m == 0) return c;
  if (parallel_matmul(n, k, m))
    matmul_nn_omp(a.data.data(), b.data.data(), c.data.data(), n, k, m);
  else
    matmul_nn_serial(a.data.data(), b.data.data(), c.data.data(), n, k, m);
  return c;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  require_2d(a, "matmul_nt");
  require_2d(b, "matmul_nt");
  if (a.shape[1] != b.shape[1])
    throw config_error("matmul_nt: inner dimensions differ " + a.shape_str() + " vs " + b.shape_str());
  const int64_t n = a.shape[0], k = a.shape[1], m = b.shape[0];
  Tensor c({n, m});
  if (n == 0 || m == 0) return c;
  if (parallel_matmul(n, k, m))
    matmul_nt_omp(a.data.data(), b.data.data(), c.data.data(), n, k, m);
  else
    matmul_nt_serial(a.data.data(), b.data.data(), c.data.data(), n, k, m);
  return c;
}

Tensor matmul_tn(const Tensor& a, const Tensor& b) {
  require_2d(a, "matmul_tn");
  require_2d(b, "matmul_tn");
  if (a.shape[0] != b.shape[0])
    throw config_error("matmul_tn: inner dimensions differ " + a.shape_str() + " vs " + b.shape_str());
  const int64_t n = a.shape[1], k = a.shape[0], m = b.shape[1];
  Tensor c({n, m});
  if (n == 0 || m == 0) return c;
  if (parallel_matmul(n, k, m))
    matmul_tn_omp(a.data.data(), b.data.data(), c.data.data(), n, k, m);
  else
    matmul_tn_serial(a.data.data(), b.data.data(), c.data.data(), n, k, m);
  return c;
}

Tensor dense_forward(const Tensor& x, const Tensor& w, const Tensor& bias) {
  require_2d(x, "dense_forward");
  require_2d(w, "dense_forward");
  if (x.shape[1] != w.shape[0])
    throw config_error("dense_forward: input width " + x.shape_str() + " does not match weight " +
                       w.shape_str());
  if (bias.numel() != w.shape[1])
    throw config_error("dense_forward: bias size does not match weight columns");
  Tensor y = matmul(x, w);
  const int64_t m = y.cols();
  for (int64_t i = 0; i < y.rows(); ++i)
    for (int64_t j = 0; j < m; ++j) y.at(i, j) += bias.at(j);
  return y;
}

Tensor embedding_lookup(const Tensor& table, int64_t index) {
  if (table.rank() != 2) throw config_error("embedding_lookup: table must be rank 2");
  if (index < 0 || index >= table.shape[0])
    throw input_error("embedding_lookup: index " + std::to_string(index) + " out of range [0, " +
                      std::to_string(table.shape[0]) + ")");
  const int64_t dim = table.shape[1];
  Tensor out({dim});
  std::memcpy(out.data.data(), table.data.data() + index * dim,
              static_cast<size_t>(dim) * sizeof(double));
  return out;
}

std::vector<double> masked_softmax(const std::vector<double>& logits,
                                   const std::vector<uint8_t>& mask) {
  if (logits.size() != mask.size())
    throw config_error("masked_softmax: logits and mask sizes differ");
  double max_logit = -1e300;
  bool any = false;
  for (size_t i = 0; i < logits.size(); ++i) {
    if (mask[i]) {
      any = true;
      max_logit = std::max(max_logit, logits[i]);
    }
  }
  if (!any) throw input_error("masked_softmax: no legal entry in mask");
  std::vector<double> probs(logits.size(), 0.0);
  double denom = 0.0;
  for (size_t i = 0; i < logits.size(); ++i) {
    if (!mask[i]) continue;
    probs[i] = std::exp(logits[i] - max_logit);
    denom += probs[i];
  }
  for (size_t i = 0; i < logits.size(); ++i)
    if (mask[i]) probs[i] /= denom;
  return probs;
}

Tensor add(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) throw config_error("add: shape mismatch");
  Tensor c = a;
  for (size_t i = 0; i < c.data.size(); ++i) c.data[i] += b.data[i];
  return c;
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  int64_t total = 0;
  for (const auto& p : parts) total += p.numel();
  Tensor out({total});
  int64_t offset = 0;
  for (const auto& p : parts) {
    std::memcpy(out.data.data() + offset, p.data.data(), p.data.size() * sizeof(double));
    offset += p.numel();
  }
  return out;
}

Tensor tanh_apply(const Tensor& a) {
  Tensor out = a;
  for (auto& v : out.data) v = std::tanh(v);
  return out;
}

Tensor relu_apply(const Tensor& a) {
  Tensor out = a;
  for (auto& v : out.data) v = v > 0.0 ? v : 0.0;
  return out;
}

Tensor leaky_relu_apply(const Tensor& a, double slope) {
  Tensor out = a;
  for (auto& v : out.data) v = v > 0.0 ? v : slope * v;
  return out;
}

Tensor xavier_uniform(int64_t rows, int64_t cols, Rng& rng, double gain) {
  const double limit = gain * std::sqrt(6.0 / static_cast<double>(rows + cols));
  Tensor w({rows, cols});
  for (auto& v : w.data) v = rng.uniform(-limit, limit);
  return w;
}

uint64_t tensor_hash(const Tensor& t) {
  uint64_t h = 0xcbf29ce484222325ull;
  auto mix = [&h](uint64_t x) {
    h ^= x;
    h *= 0x100000001b3ull;
  };
  for (int64_t d : t.shape) mix(static_cast<uint64_t>(d));
  for (double v : t.data) {
    uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    mix(bits);
  }
  return h;
}

}  // namespace grasper
