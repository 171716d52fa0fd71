#include "grasper/meta_solver.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "grasper/error.hpp"

namespace grasper {

MetaSolver meta_solver_from_string(const std::string& name) {
  if (name == "uniform") return MetaSolver::uniform;
  if (name == "prd") return MetaSolver::prd;
  if (name == "regret_matching" || name == "rm") return MetaSolver::regret_matching;
  throw input_error("unknown meta-solver: " + name);
}

const char* to_string(MetaSolver solver) {
  switch (solver) {
    case MetaSolver::uniform: return "uniform";
    case MetaSolver::prd: return "prd";
    case MetaSolver::regret_matching: return "regret_matching";
  }
  return "?";
}

namespace {

void check_payoff(const Tensor& u) {
  if (u.rank() != 2 || u.rows() < 1 || u.cols() < 1)
    throw input_error("meta_solve: payoff matrix must be non-empty rank-2");
  for (double v : u.data)
    if (!std::isfinite(v)) throw input_error("meta_solve: non-finite payoff entry");
}

std::vector<double> matvec(const Tensor& u, const std::vector<double>& y) {
  std::vector<double> out(static_cast<size_t>(u.rows()), 0.0);
  for (int64_t i = 0; i < u.rows(); ++i)
    for (int64_t j = 0; j < u.cols(); ++j)
      out[static_cast<size_t>(i)] += u.at(i, j) * y[static_cast<size_t>(j)];
  return out;
}

std::vector<double> vecmat(const std::vector<double>& x, const Tensor& u) {
  std::vector<double> out(static_cast<size_t>(u.cols()), 0.0);
  for (int64_t i = 0; i < u.rows(); ++i)
    for (int64_t j = 0; j < u.cols(); ++j)
      out[static_cast<size_t>(j)] += x[static_cast<size_t>(i)] * u.at(i, j);
  return out;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0.0;
  for (size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

std::vector<double> uniform_dist(int64_t n) {
  return std::vector<double>(static_cast<size_t>(n), 1.0 / static_cast<double>(n));
}

std::vector<double> rm_strategy(const std::vector<double>& regrets) {
  double positive = 0.0;
  for (double r : regrets) positive += std::max(0.0, r);
  if (positive <= 0.0) return uniform_dist(static_cast<int64_t>(regrets.size()));
  std::vector<double> strategy(regrets.size());
  for (size_t i = 0; i < regrets.size(); ++i) strategy[i] = std::max(0.0, regrets[i]) / positive;
  return strategy;
}

}  // namespace

std::vector<double> project_floored_simplex(std::vector<double> x, double floor) {
  const size_t n = x.size();
  if (floor * static_cast<double>(n) > 1.0)
    throw input_error("project_floored_simplex: floor too large for simplex size");
  // Project y = x - floor onto the simplex of total mass 1 - n*floor, then
  // shift back; standard sort-based simplex projection on y with negatives
  // clipped.
  const double mass = 1.0 - floor * static_cast<double>(n);
  std::vector<double> y(n);
  for (size_t i = 0; i < n; ++i) y[i] = x[i] - floor;
  std::vector<double> sorted = y;
  std::sort(sorted.begin(), sorted.end(), std::greater<double>());
  double cumulative = 0.0;
  double tau = 0.0;
  int support = 0;
  for (size_t k = 0; k < n; ++k) {
    cumulative += sorted[k];
    const double candidate = (cumulative - mass) / static_cast<double>(k + 1);
    if (sorted[k] - candidate > 0.0) {
      tau = candidate;
      support = static_cast<int>(k + 1);
    }
  }
  (void)support;
  std::vector<double> out(n);
  for (size_t i = 0; i < n; ++i) out[i] = std::max(0.0, y[i] - tau) + floor;
  return out;
}

std::pair<std::vector<double>, std::vector<double>> prd_solve(
    const Tensor& payoff, int iters, double step, double floor,
    const std::function<void(const std::vector<double>&, const std::vector<double>&)>& on_iterate) {
  check_payoff(payoff);
  std::vector<double> x = uniform_dist(payoff.rows());
  std::vector<double> y = uniform_dist(payoff.cols());
  for (int it = 0; it < iters; ++it) {
    const std::vector<double> row_payoffs = matvec(payoff, y);      // row player's payoffs
    const std::vector<double> col_payoffs = vecmat(x, payoff);      // column player sees -U
    const double row_value = dot(x, row_payoffs);
    std::vector<double> nx(x.size()), ny(y.size());
    for (size_t i = 0; i < x.size(); ++i)
      nx[i] = x[i] + step * x[i] * (row_payoffs[i] - row_value);
    for (size_t j = 0; j < y.size(); ++j)
      ny[j] = y[j] + step * y[j] * (-(col_payoffs[j]) - (-row_value));
    x = project_floored_simplex(std::move(nx), floor);
    y = project_floored_simplex(std::move(ny), floor);
    if (on_iterate) on_iterate(x, y);
  }
  return {x, y};
}

namespace {

std::pair<std::vector<double>, std::vector<double>> regret_matching_solve(const Tensor& payoff,
                                                                          int iters) {
  std::vector<double> row_regret(static_cast<size_t>(payoff.rows()), 0.0);
  std::vector<double> col_regret(static_cast<size_t>(payoff.cols()), 0.0);
  std::vector<double> row_sum(static_cast<size_t>(payoff.rows()), 0.0);
  std::vector<double> col_sum(static_cast<size_t>(payoff.cols()), 0.0);
  for (int it = 0; it < iters; ++it) {
    const std::vector<double> x = rm_strategy(row_regret);
    const std::vector<double> y = rm_strategy(col_regret);
    const std::vector<double> row_payoffs = matvec(payoff, y);
    const std::vector<double> col_payoffs = vecmat(x, payoff);  // column player payoff = -this
    const double value = dot(x, row_payoffs);
    for (size_t i = 0; i < row_regret.size(); ++i) row_regret[i] += row_payoffs[i] - value;
    for (size_t j = 0; j < col_regret.size(); ++j) col_regret[j] += -(col_payoffs[j]) - (-value);
    for (size_t i = 0; i < x.size(); ++i) row_sum[i] += x[i];
    for (size_t j = 0; j < y.size(); ++j) col_sum[j] += y[j];
  }
  const double inv = 1.0 / static_cast<double>(iters);
  for (auto& v : row_sum) v *= inv;
  for (auto& v : col_sum) v *= inv;
  return {row_sum, col_sum};
}

}  // namespace

std::pair<std::vector<double>, std::vector<double>> meta_solve(const Tensor& payoff,
                                                               MetaSolver solver, int iters) {
  check_payoff(payoff);
  switch (solver) {
    case MetaSolver::uniform:
      return {uniform_dist(payoff.rows()), uniform_dist(payoff.cols())};
    case MetaSolver::prd: return prd_solve(payoff, iters, 1e-2, 1e-3);
    case MetaSolver::regret_matching: return regret_matching_solve(payoff, iters);
  }
  throw input_error("meta_solve: bad solver");
}

double nash_conv(const Tensor& payoff, const std::vector<double>& sigma_row,
                 const std::vector<double>& sigma_col) {
  const std::vector<double> row_payoffs = matvec(payoff, sigma_col);
  const std::vector<double> col_payoffs = vecmat(sigma_row, payoff);
  const double value = dot(sigma_row, row_payoffs);
  const double best_row = *std::max_element(row_payoffs.begin(), row_payoffs.end());
  const double best_col = -*std::min_element(col_payoffs.begin(), col_payoffs.end());
  return (best_row - value) + (best_col + value);
}

}  // namespace grasper
