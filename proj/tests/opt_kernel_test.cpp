#include <cmath>
#include <limits>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "robstat/max_flow.hpp"
#include "robstat/process.hpp"
#include "robstat/simplex.hpp"

namespace robstat {
namespace {

TEST(SolveLp, SingleVariableBound) {
  LinearProgram lp(1);
  lp.objective = {1.0};
  lp.add_constraint({1.0}, 3.0);
  const auto sol = solve_lp(lp);
  ASSERT_EQ(sol.status, LpStatus::optimal);
  EXPECT_NEAR(sol.objective, 3.0, 1e-12);
  EXPECT_NEAR(sol.x[0], 3.0, 1e-12);
}

TEST(SolveLp, SimplexFace) {
  LinearProgram lp(2);
  lp.objective = {1.0, 1.0};
  lp.add_constraint({1.0, 1.0}, 1.0);
  const auto sol = solve_lp(lp);
  ASSERT_EQ(sol.status, LpStatus::optimal);
  EXPECT_NEAR(sol.objective, 1.0, 1e-12);
}

TEST(SolveLp, Unbounded) {
  LinearProgram lp(1);
  lp.objective = {1.0};
  EXPECT_EQ(solve_lp(lp).status, LpStatus::unbounded);
}

TEST(SolveLp, Infeasible) {
  LinearProgram lp(1);
  lp.objective = {1.0};
  lp.add_constraint({1.0}, -1.0);  // x <= -1 with x >= 0
  EXPECT_EQ(solve_lp(lp).status, LpStatus::infeasible);
}

TEST(SolveLp, FreeAndBoxedVariables) {
  // max -|x - 2| written as max t s.t. t <= x - 2, t <= 2 - x, x free, t free.
  LinearProgram lp(2);
  lp.set_free(0);
  lp.set_free(1);
  lp.objective = {0.0, 1.0};
  lp.add_constraint({-1.0, 1.0}, -2.0);
  lp.add_constraint({1.0, 1.0}, 2.0);
  auto sol = solve_lp(lp);
  ASSERT_EQ(sol.status, LpStatus::optimal);
  EXPECT_NEAR(sol.objective, 0.0, 1e-12);
  EXPECT_NEAR(sol.x[0], 2.0, 1e-12);

  LinearProgram box(1);
  box.objective = {-1.0};
  box.lower = {-3.0};
  box.upper = {5.0};
  sol = solve_lp(box);
  ASSERT_EQ(sol.status, LpStatus::optimal);
  EXPECT_NEAR(sol.x[0], -3.0, 1e-12);

  LinearProgram upper_only(1);
  upper_only.objective = {1.0};
  upper_only.lower = {-std::numeric_limits<double>::infinity()};
  upper_only.upper = {4.0};
  sol = solve_lp(upper_only);
  ASSERT_EQ(sol.status, LpStatus::optimal);
  EXPECT_NEAR(sol.x[0], 4.0, 1e-12);
}

TEST(SolveLp, MalformedDimensions) {
  LinearProgram lp(2);
  lp.add_constraint({1.0}, 1.0);
  EXPECT_THROW(solve_lp(lp), Error);
}

TEST(SolveLp, DegenerateCycleProneInstance) {
  // Beale's classic cycling example; Bland's rule must terminate.
  LinearProgram lp(4);
  lp.objective = {0.75, -150.0, 0.02, -6.0};
  lp.add_constraint({0.25, -60.0, -0.04, 9.0}, 0.0);
  lp.add_constraint({0.5, -90.0, -0.02, 3.0}, 0.0);
  lp.add_constraint({0.0, 0.0, 1.0, 0.0}, 1.0);
  const auto sol = solve_lp(lp);
  ASSERT_EQ(sol.status, LpStatus::optimal);
  EXPECT_NEAR(sol.objective, 0.05, 1e-9);
}

// Random bounded instances: agreement with vertex enumeration, primal
// feasibility, and a zero duality gap with the dual solved by the same code
// (which exercises phase one on negative right-hand sides).
TEST(SolveLp, RandomInstancesMatchVertexEnumerationAndDual) {
  Rng rng(101);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + static_cast<std::size_t>(rng.uniform() * 4);
    const std::size_t m = 1 + static_cast<std::size_t>(rng.uniform() * 5);
    std::vector<std::vector<double>> a(m, std::vector<double>(n));
    std::vector<double> b(m), c(n);
    for (auto& row : a) {
      for (auto& v : row) v = 0.1 + rng.uniform();  // positive rows keep the region bounded
    }
    for (auto& v : b) v = 0.5 + 2 * rng.uniform();
    for (auto& v : c) v = 2 * rng.uniform() - 0.5;

    LinearProgram lp(n);
    lp.objective = c;
    for (std::size_t i = 0; i < m; ++i) lp.add_constraint(a[i], b[i]);
    const auto sol = solve_lp(lp);
    ASSERT_EQ(sol.status, LpStatus::optimal);
    EXPECT_NEAR(sol.objective, oracle::lp_vertex_enumeration(a, b, c), 1e-9);
    for (std::size_t i = 0; i < m; ++i) {
      double lhs = 0.0;
      for (std::size_t j = 0; j < n; ++j) lhs += a[i][j] * sol.x[j];
      EXPECT_LE(lhs, b[i] + 1e-9);
    }
    for (double x : sol.x) EXPECT_GE(x, -1e-9);

    // Dual: min b.y s.t. A^T y >= c, y >= 0  ==  -max (-b).y s.t. -A^T y <= -c.
    LinearProgram dual(m);
    for (std::size_t i = 0; i < m; ++i) dual.objective[i] = -b[i];
    for (std::size_t j = 0; j < n; ++j) {
      std::vector<double> row(m);
      for (std::size_t i = 0; i < m; ++i) row[i] = -a[i][j];
      dual.add_constraint(row, -c[j]);
    }
    const auto dsol = solve_lp(dual);
    ASSERT_EQ(dsol.status, LpStatus::optimal);
    EXPECT_NEAR(sol.objective, -dsol.objective, 1e-9);
  }
}

TEST(MaxFlow, SingleEdge) {
  FlowNetwork net{2, 0, 1, {}};
  net.add_edge(0, 1, 5.0);
  EXPECT_DOUBLE_EQ(max_flow(net).value, 5.0);
}

TEST(MaxFlow, ParallelPaths) {
  FlowNetwork net{4, 0, 3, {}};
  net.add_edge(0, 1, 2.0);
  net.add_edge(1, 3, 10.0);
  net.add_edge(0, 2, 3.0);
  net.add_edge(2, 3, 3.0);
  EXPECT_DOUBLE_EQ(max_flow(net).value, 5.0);
}

TEST(MaxFlow, Disconnected) {
  FlowNetwork net{4, 0, 3, {}};
  net.add_edge(0, 1, 2.0);
  net.add_edge(2, 3, 2.0);
  EXPECT_DOUBLE_EQ(max_flow(net).value, 0.0);
}

TEST(MaxFlow, Errors) {
  FlowNetwork same{2, 0, 0, {}};
  EXPECT_THROW(max_flow(same), Error);
  FlowNetwork negative{2, 0, 1, {}};
  negative.add_edge(0, 1, -1.0);
  EXPECT_THROW(max_flow(negative), Error);
}

TEST(MaxFlow, RandomNetworksMatchBruteForceMinCut) {
  Rng rng(202);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + static_cast<std::size_t>(rng.uniform() * 9);  // up to 10 nodes
    FlowNetwork net{n, 0, n - 1, {}};
    const std::size_t edges = static_cast<std::size_t>(rng.uniform() * 3.0 * static_cast<double>(n));
    for (std::size_t e = 0; e < edges; ++e) {
      const auto u = static_cast<std::size_t>(rng.uniform() * static_cast<double>(n));
      const auto v = static_cast<std::size_t>(rng.uniform() * static_cast<double>(n));
      if (u == v) continue;
      net.add_edge(u, v, std::floor(rng.uniform() * 10.0) / 4.0);
    }
    const auto res = max_flow(net);
    EXPECT_NEAR(res.value, oracle::min_cut_bruteforce(net), 1e-9);

    // Certificate: capacities, conservation and the residual cut.
    std::vector<double> balance(n, 0.0);
    for (std::size_t k = 0; k < net.edges.size(); ++k) {
      EXPECT_GE(res.flow[k], -1e-12);
      EXPECT_LE(res.flow[k], net.edges[k].capacity + 1e-12);
      balance[net.edges[k].from] -= res.flow[k];
      balance[net.edges[k].to] += res.flow[k];
    }
    for (std::size_t v = 1; v + 1 < n; ++v) EXPECT_NEAR(balance[v], 0.0, 1e-9);
    EXPECT_NEAR(balance[n - 1], res.value, 1e-9);
    EXPECT_FALSE(res.source_side[n - 1]);
    EXPECT_NEAR(cut_capacity(net, res.source_side), res.value, 1e-9);
  }
}

}  // namespace
}  // namespace robstat
