#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "grasper/tensor.hpp"

namespace grasper {

enum class MetaSolver { uniform, prd, regret_matching };

MetaSolver meta_solver_from_string(const std::string& name);
const char* to_string(MetaSolver solver);

// Equilibrium of the zero-sum bimatrix (row payoff U, column payoff -U).
//   uniform: uniform over rows/columns.
//   prd: projected replicator dynamics, Euler step 1e-2, exploration floor
//        gamma = 1e-3; returns the final iterate.
//   regret_matching: time-averaged regret-matching strategies.
// Throws input_error on non-finite payoff entries.
std::pair<std::vector<double>, std::vector<double>> meta_solve(const Tensor& payoff,
                                                               MetaSolver solver, int iters);

// Euclidean projection onto {x : x_i >= floor, sum x = 1}.
std::vector<double> project_floored_simplex(std::vector<double> x, double floor);

// PRD with an iterate callback (used to assert the floored-simplex invariant).
std::pair<std::vector<double>, std::vector<double>> prd_solve(
    const Tensor& payoff, int iters, double step, double floor,
    const std::function<void(const std::vector<double>&, const std::vector<double>&)>& on_iterate =
        nullptr);

// max-row gain + max-column gain of the average strategies on U (zero at an
// exact equilibrium).
double nash_conv(const Tensor& payoff, const std::vector<double>& sigma_row,
                 const std::vector<double>& sigma_col);

}  // namespace grasper
