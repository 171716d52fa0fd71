#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "grasper/rng.hpp"

namespace grasper {

// Dense row-major tensor of doubles. Rank 0 (scalar), 1 or 2 in practice.
struct Tensor {
  std::vector<int64_t> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<int64_t> shape_in);

  static Tensor zeros(std::vector<int64_t> shape);
  static Tensor full(std::vector<int64_t> shape, double value);
  static Tensor scalar(double value);
  static Tensor row(std::vector<double> values);                 // [1 x n]
  static Tensor vec(std::vector<double> values);                 // [n]
  static Tensor matrix(std::vector<int64_t> shape, std::vector<double> values);
  static Tensor identity(int64_t n);

  int64_t numel() const;
  int rank() const { return static_cast<int>(shape.size()); }
  int64_t dim(int i) const { return shape[static_cast<size_t>(i)]; }
  int64_t rows() const;
  int64_t cols() const;

  double& at(int64_t i) { return data[static_cast<size_t>(i)]; }
  double at(int64_t i) const { return data[static_cast<size_t>(i)]; }
  double& at(int64_t r, int64_t c) { return data[static_cast<size_t>(r * cols() + c)]; }
  double at(int64_t r, int64_t c) const { return data[static_cast<size_t>(r * cols() + c)]; }

  bool same_shape(const Tensor& other) const { return shape == other.shape; }
  bool all_finite() const;
  std::string shape_str() const;
};

// ---- kernels -------------------------------------------------------------
//
// Each matmul flavor has a serial reference implementation and an OpenMP one
// parallelized over output rows; both produce bit-identical results. The
// dispatching wrappers pick the parallel path for large enough products
// unless parallel::set_enabled(false) forces the reference path.

void matmul_nn_serial(const double* a, const double* b, double* c, int64_t n, int64_t k, int64_t m);
void matmul_nn_omp(const double* a, const double* b, double* c, int64_t n, int64_t k, int64_t m);
void matmul_nt_serial(const double* a, const double* b, double* c, int64_t n, int64_t k, int64_t m);
void matmul_nt_omp(const double* a, const double* b, double* c, int64_t n, int64_t k, int64_t m);
void matmul_tn_serial(const double* a, const double* b, double* c, int64_t n, int64_t k, int64_t m);
void matmul_tn_omp(const double* a, const double* b, double* c, int64_t n, int64_t k, int64_t m);

// c[n x m] = a[n x k] * b[k x m]
Tensor matmul(const Tensor& a, const Tensor& b);
// c[n x m] = a[n x k] * b[m x k]^T
Tensor matmul_nt(const Tensor& a, const Tensor& b);
// c[n x m] = a[k x n]^T * b[k x m]
Tensor matmul_tn(const Tensor& a, const Tensor& b);

// y[batch x out] = x[batch x in] * w[in x out] + bias[out] per row.
Tensor dense_forward(const Tensor& x, const Tensor& w, const Tensor& bias);

// Row `index` of table[vocab x dim].
Tensor embedding_lookup(const Tensor& table, int64_t index);

// Masked softmax over a flat logits vector; masked-out entries are exactly 0,
// the rest form a distribution. Throws input_error on an all-false mask.
std::vector<double> masked_softmax(const std::vector<double>& logits,
                                   const std::vector<uint8_t>& mask);

// Elementwise helpers used by inference paths.
Tensor add(const Tensor& a, const Tensor& b);
Tensor concat_cols(const std::vector<Tensor>& rows);  // all [1 x d_i] or [d_i]
Tensor tanh_apply(const Tensor& a);
Tensor relu_apply(const Tensor& a);
Tensor leaky_relu_apply(const Tensor& a, double slope);

// Xavier/Glorot uniform init for a [rows x cols] weight matrix.
Tensor xavier_uniform(int64_t rows, int64_t cols, Rng& rng, double gain = 1.0);

uint64_t tensor_hash(const Tensor& t);

}  // namespace grasper
