#pragma once

#include "grasper/game.hpp"
#include "grasper/tensor.hpp"

namespace grasper {

// Per-node feature columns of the graphical PEG representation.
enum NodeFeature { kFeatExit = 0, kFeatEvaderStart = 1, kFeatPursuerCount = 2, kFeatDegree = 3 };
constexpr int kNodeFeatureDim = 4;

// [|V| x 4] matrix: exit bit, evader-start bit, pursuer count, degree
// normalized by the graph's max degree.
Tensor encode_spec(const GameSpec& spec);

}  // namespace grasper
