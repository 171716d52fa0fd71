#include "grasper/features.hpp"

namespace grasper {

Tensor encode_spec(const GameSpec& spec) {
  const Graph& g = spec.graph;
  Tensor x({g.node_count, kNodeFeatureDim});
  const double max_degree = static_cast<double>(g.max_degree());
  for (int v = 0; v < g.node_count; ++v) {
    x.at(v, kFeatExit) = spec.is_exit(v) ? 1.0 : 0.0;
    x.at(v, kFeatDegree) = max_degree > 0.0 ? g.degree(v) / max_degree : 0.0;
  }
  x.at(spec.evader_start, kFeatEvaderStart) = 1.0;
  for (int p : spec.pursuer_starts) x.at(p, kFeatPursuerCount) += 1.0;
  return x;
}

}  // namespace grasper
