#include <doctest.h>

#include <cmath>

#include "grasper/error.hpp"
#include "grasper/meta_solver.hpp"

using namespace grasper;

TEST_CASE("regret matching: matching pennies converges to the uniform equilibrium") {
  const Tensor u = Tensor::matrix({2, 2}, {1, -1, -1, 1});
  const auto [x, y] = meta_solve(u, MetaSolver::regret_matching, 100000);
  CHECK(std::abs(x[0] - 0.5) < 1e-2);
  CHECK(std::abs(x[1] - 0.5) < 1e-2);
  CHECK(std::abs(y[0] - 0.5) < 1e-2);
  CHECK(std::abs(y[1] - 0.5) < 1e-2);
}

TEST_CASE("regret matching: rock-paper-scissors converges to uniform") {
  const Tensor u = Tensor::matrix({3, 3}, {0, -1, 1, 1, 0, -1, -1, 1, 0});
  const auto [x, y] = meta_solve(u, MetaSolver::regret_matching, 100000);
  for (int i = 0; i < 3; ++i) {
    CHECK(std::abs(x[static_cast<size_t>(i)] - 1.0 / 3) < 1e-2);
    CHECK(std::abs(y[static_cast<size_t>(i)] - 1.0 / 3) < 1e-2);
  }
}

TEST_CASE("dominant row takes almost all mass") {
  const Tensor u = Tensor::matrix({2, 2}, {1, 1, 0, 0});
  const auto [x, y] = meta_solve(u, MetaSolver::regret_matching, 100000);
  CHECK(x[0] >= 0.99);
  (void)y;
}

TEST_CASE("1x1 matrix solves to the single pure profile") {
  const Tensor u = Tensor::matrix({1, 1}, {0.3});
  for (MetaSolver solver :
       {MetaSolver::uniform, MetaSolver::prd, MetaSolver::regret_matching}) {
    const auto [x, y] = meta_solve(u, solver, 1000);
    CHECK(x == std::vector<double>{1.0});
    CHECK(y == std::vector<double>{1.0});
  }
}

TEST_CASE("uniform meta-solver") {
  const Tensor u = Tensor::matrix({2, 3}, {1, 2, 3, 4, 5, 6});
  const auto [x, y] = meta_solve(u, MetaSolver::uniform, 1);
  CHECK(x == std::vector<double>{0.5, 0.5});
  for (double v : y) CHECK(v == doctest::Approx(1.0 / 3));
}

TEST_CASE("non-finite payoff entries are rejected") {
  Tensor u = Tensor::matrix({2, 2}, {1, -1, -1, 1});
  u.data[2] = std::nan("");
  CHECK_THROWS_AS(meta_solve(u, MetaSolver::regret_matching, 10), input_error);
}

TEST_CASE("floored simplex projection") {
  SUBCASE("already feasible points just renormalize") {
    const auto p = project_floored_simplex({0.5, 0.5}, 1e-3);
    CHECK(p[0] == doctest::Approx(0.5));
    CHECK(p[1] == doctest::Approx(0.5));
  }
  SUBCASE("negative coordinates clip to the floor") {
    const auto p = project_floored_simplex({1.4, -0.4}, 1e-3);
    CHECK(p[1] == doctest::Approx(1e-3));
    CHECK(p[0] + p[1] == doctest::Approx(1.0));
  }
  SUBCASE("projection is idempotent") {
    const auto p = project_floored_simplex({0.9, 0.05, 0.05}, 0.01);
    const auto q = project_floored_simplex(p, 0.01);
    for (size_t i = 0; i < p.size(); ++i) CHECK(p[i] == doctest::Approx(q[i]).epsilon(1e-12));
  }
}

TEST_CASE("PRD iterates stay inside the gamma-floored simplex at every step") {
  const Tensor u = Tensor::matrix({3, 3}, {0, -1, 1, 1, 0, -1, -1, 1, 0});
  int checked = 0;
  prd_solve(u, 5000, 1e-2, 1e-3, [&](const std::vector<double>& x, const std::vector<double>& y) {
    double sx = 0.0, sy = 0.0;
    for (double v : x) {
      CHECK(v >= 1e-3 - 1e-12);
      sx += v;
    }
    for (double v : y) {
      CHECK(v >= 1e-3 - 1e-12);
      sy += v;
    }
    CHECK(sx == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(sy == doctest::Approx(1.0).epsilon(1e-9));
    ++checked;
  });
  CHECK(checked == 5000);
}

TEST_CASE("PRD approaches the matching-pennies equilibrium") {
  const Tensor u = Tensor::matrix({2, 2}, {1, -1, -1, 1});
  const auto [x, y] = meta_solve(u, MetaSolver::prd, 20000);
  CHECK(std::abs(x[0] - 0.5) < 0.05);
  CHECK(std::abs(y[0] - 0.5) < 0.05);
}

TEST_CASE("regret matching: NashConv < 0.05 on random 5x5 zero-sum games") {
  Rng rng(31);
  for (int trial = 0; trial < 5; ++trial) {
    Tensor u({5, 5});
    for (auto& v : u.data) v = rng.uniform(-1, 1);
    const auto [x, y] = meta_solve(u, MetaSolver::regret_matching, 100000);
    CHECK(nash_conv(u, x, y) < 0.05);
  }
}
