// Benchmark comparing the serial reference kernels against the OpenMP ones:
// matmul flavors, Monte-Carlo payoff estimation and pre-training rollout
// waves. Verifies that both paths produce identical results before timing.

#include <chrono>
#include <cstring>
#include <iomanip>
#include <iostream>

#include "grasper/instance.hpp"
#include "grasper/parallel.hpp"
#include "grasper/psro.hpp"

using namespace grasper;

namespace {

double now_s() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

template <typename F>
double time_best_of(int reps, F&& fn) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const double t0 = now_s();
    fn();
    best = std::min(best, now_s() - t0);
  }
  return best;
}

void report(const std::string& name, double serial_s, double parallel_s, bool identical) {
  std::cout << std::left << std::setw(34) << name << std::right << std::fixed
            << std::setprecision(4) << std::setw(10) << serial_s * 1e3 << " ms" << std::setw(10)
            << parallel_s * 1e3 << " ms" << std::setw(9) << std::setprecision(2)
            << serial_s / parallel_s << "x   " << (identical ? "identical" : "MISMATCH")
            << "\n";
}

void bench_matmul(int64_t n, int64_t k, int64_t m, int reps) {
  Rng rng(42);
  Tensor a({n, k}), b({k, m});
  for (auto& v : a.data) v = rng.normal();
  for (auto& v : b.data) v = rng.normal();
  Tensor c_serial({n, m}), c_omp({n, m});
  const double ts = time_best_of(reps, [&] {
    matmul_nn_serial(a.data.data(), b.data.data(), c_serial.data.data(), n, k, m);
  });
  const double tp = time_best_of(reps, [&] {
    matmul_nn_omp(a.data.data(), b.data.data(), c_omp.data.data(), n, k, m);
  });
  const bool same =
      std::memcmp(c_serial.data.data(), c_omp.data.data(), c_serial.data.size() * 8) == 0;
  report("matmul " + std::to_string(n) + "x" + std::to_string(k) + "x" + std::to_string(m), ts,
         tp, same);
}

GameSpec demo_spec() {
  MapTemplate tmpl;
  tmpl.kind = MapTemplate::Kind::grid;
  tmpl.width = 6;
  tmpl.height = 6;
  tmpl.edge_keep_prob = 1.0;
  InstanceConfig cfg;
  cfg.n_pursuers = 2;
  cfg.n_exits = 3;
  cfg.t_min = 4;
  cfg.t_max = 6;
  cfg.min_evader_distance = 3;
  Rng rng(7);
  return sample_instance(build_map(tmpl, rng), cfg, rng);
}

void bench_payoff(int episodes, int reps) {
  const GameSpec spec = demo_spec();
  ModelConfig cfg;
  cfg.method = Method::mt_psro;
  cfg.n_pursuers = spec.n_pursuers();
  cfg.t_max = spec.horizon;
  cfg.max_actions = spec.graph.max_degree() + 1;
  cfg.rep.loc_vocab = spec.graph.base_node_count;
  cfg.rep.n_max = spec.n_pursuers();
  cfg.rep.t_max = spec.horizon;
  cfg.actor_hidden = {64, 64};
  const PursuerPurePolicy pursuer = scratch_policy(cfg, 3);
  const EvaderPurePolicy evader{std::vector<double>(spec.exits.size(),
                                                    1.0 / spec.exits.size())};
  PayoffEstimate serial_est, omp_est;
  parallel::set_enabled(false);
  const double ts =
      time_best_of(reps, [&] { serial_est = estimate_payoff(spec, pursuer, evader, episodes, 5); });
  parallel::set_enabled(true);
  const double tp =
      time_best_of(reps, [&] { omp_est = estimate_payoff(spec, pursuer, evader, episodes, 5); });
  report("payoff wave (" + std::to_string(episodes) + " episodes)", ts, tp,
         serial_est.mean == omp_est.mean && serial_est.std_error == omp_est.std_error);
}

}  // namespace

int main(int argc, char** argv) {
  const bool quick = argc > 1 && std::string(argv[1]) == "--quick";
  std::cout << "workers: " << parallel::max_workers() << "\n";
  std::cout << std::left << std::setw(34) << "kernel" << std::right << std::setw(13) << "serial"
            << std::setw(13) << "openmp" << std::setw(10) << "speedup" << "\n";
  const int reps = quick ? 2 : 5;
  bench_matmul(64, 112, 128, reps);
  bench_matmul(256, 256, 256, reps);
  if (!quick) bench_matmul(128, 129, 11717, reps);
  bench_payoff(quick ? 512 : 8192, reps);
  parallel::set_enabled(true);
  return 0;
}
