#include <gtest/gtest.h>

#include <algorithm>

#include "oracles.hpp"
#include "sp2net/rng.hpp"
#include "sp2net/scenario.hpp"
#include "sp2net/sparse_bpdn.hpp"

namespace sp2net {
namespace {

struct Built {
  ComplexMatrix A;
  ComplexVector x;
  AngleGrid grid;
};

Built build(const oracle::BpdnInstance& inst) {
  const auto g = make_ula(static_cast<std::size_t>(inst.m));
  auto grid = AngleGrid::uniform(inst.grid_start, inst.grid_stop, inst.grid_step);
  ComplexMatrix A = build_manifold_matrix(g, grid.angles());
  ComplexVector x = oracle::formula_noise(inst.m, inst.sigma);
  for (const auto& [th, s] : inst.sources) x += s * steering_vector(g, th);
  return {std::move(A), std::move(x), std::move(grid)};
}

TEST(SparseBpdn, MatchesConvexSolverOptima) {
  for (const auto& inst : oracle::bpdn_instances()) {
    SCOPED_TRACE(inst.name);
    const auto b = build(inst);
    const auto sol = solve_bpdn(b.A, b.x, inst.sigma);
    if (!sol.converged) EXPECT_EQ(sol.iterations_used, SparseConfig{}.max_iterations);
    EXPECT_NEAR(l1_norm(sol.coefficients), inst.optimum, 1e-4 * inst.optimum);
    EXPECT_LE(sol.residual_norm_sq, sol.bound_sq * (1 + 1e-6));
    EXPECT_NEAR(sol.bound_sq, 2.0 * inst.m * inst.sigma * inst.sigma, 1e-15);
  }
}

TEST(SparseBpdn, ConvergesWithLargerBudget) {
  SparseConfig cfg;
  cfg.max_iterations = 30000;
  for (const auto& inst : oracle::bpdn_instances()) {
    SCOPED_TRACE(inst.name);
    const auto b = build(inst);
    const auto sol = solve_bpdn(b.A, b.x, inst.sigma, cfg);
    EXPECT_TRUE(sol.converged);
    EXPECT_LT(sol.iterations_used, cfg.max_iterations);
    EXPECT_NEAR(l1_norm(sol.coefficients), inst.optimum, 1e-6 * inst.optimum);
  }
}

TEST(SparseBpdn, SatisfiesOptimalityConditions) {
  for (const auto& inst : oracle::bpdn_instances()) {
    SCOPED_TRACE(inst.name);
    const auto b = build(inst);
    const auto sol = solve_bpdn(b.A, b.x, inst.sigma);
    const auto kkt = oracle::bpdn_kkt(b.A, b.x, sol.coefficients, 1e-3);
    EXPECT_GT(kkt.support_size, 0u);
    EXPECT_LT(kkt.support_spread, 1e-2);
    EXPECT_LT(kkt.phase_misalignment, 1e-2);
    EXPECT_LT(kkt.off_support_excess, 1e-2);
    // Active constraint at the optimum.
    EXPECT_NEAR(sol.residual_norm_sq, sol.bound_sq, 1e-3 * sol.bound_sq);
  }
}

TEST(SparseBpdn, FeasibleOnRandomDraws) {
  const auto g = make_ula(16);
  const auto grid = AngleGrid::uniform(45, 135, 0.5);
  const BpdnSolver solver(build_manifold_matrix(g, grid.angles()));
  Rng rng(99);
  for (int rep = 0; rep < 20; ++rep) {
    const auto sc = sample_training_scenario(g, rng);
    const auto sol = solver.solve(sc.snapshot, sc.sigma_v);
    if (sol.converged) {
      EXPECT_LE(sol.residual_norm_sq, sol.bound_sq * (1 + 1e-6));
    }
  }
}

TEST(SparseBpdn, SmallSnapshotGivesZeroSolution) {
  const auto g = make_ula(16);
  const auto grid = AngleGrid::uniform(45, 135, 1);
  const auto A = build_manifold_matrix(g, grid.angles());
  const auto zero = solve_bpdn(A, ComplexVector::Zero(16), 0.1);
  EXPECT_TRUE(zero.converged);
  EXPECT_EQ(zero.coefficients.squaredNorm(), 0.0);

  SparseConfig loose;
  loose.c_bound = 1e12;
  const auto big = solve_bpdn(A, steering_vector(g, 80.0), 0.1, loose);
  EXPECT_EQ(big.coefficients.squaredNorm(), 0.0);
}

TEST(SparseBpdn, NoiselessFineGridSupportAtTrueAngle) {
  const auto g = make_ula(16);
  const auto grid = AngleGrid::default_fov();
  const auto A = build_manifold_matrix(g, grid.angles());
  for (double th : {60.0, 97.5}) {
    SCOPED_TRACE(th);
    const auto sol = solve_bpdn(A, steering_vector(g, th), 0.0);
    EXPECT_LE(sol.residual_norm_sq, sol.bound_sq * (1 + 1e-6));
    const auto sp = sparse_spectrum(sol, grid);
    const auto peak = find_peaks(sp, 1);
    EXPECT_NEAR(peak.angles[0], th, 0.05);
    // Energy is concentrated around the true angle.
    double near = 0.0, total = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      total += sp.scores[i];
      if (std::abs(grid[i] - th) <= 0.05 + 1e-9) {
        near += sp.scores[i];
      } else {
        EXPECT_LE(sp.scores[i], 1e-3) << "at " << grid[i];
      }
    }
    EXPECT_GT(near / total, 0.99);
  }
}

TEST(SparseBpdn, ResolvesTwoSeparatedSources) {
  const auto g = make_ula(16);
  const auto grid = AngleGrid::uniform(45, 135, 0.1);
  const BpdnSolver solver(build_manifold_matrix(g, grid.angles()));
  Rng rng(2);
  const std::vector<Source> src{{70.0, {1.0, 0.0}}, {110.0, std::polar(1.0, 2.0)}};
  const double sigma = sigma_from_snr_db(30);
  const auto x = synthesize_snapshot(g, src, sigma, rng);
  const auto sol = solver.solve(x, sigma);
  const auto est = find_peaks(sparse_spectrum(sol, grid), 2);
  EXPECT_NEAR(est.angles[0], 70.0, 0.5);
  EXPECT_NEAR(est.angles[1], 110.0, 0.5);
}

TEST(SparseBpdn, ObjectiveTraceSettlesNonIncreasing) {
  const auto inst = oracle::bpdn_instances()[0];
  const auto b = build(inst);
  SparseConfig cfg;
  cfg.record_trace = true;
  const auto sol = solve_bpdn(b.A, b.x, inst.sigma, cfg);
  ASSERT_EQ(sol.objective_trace.size(), static_cast<std::size_t>(sol.iterations_used));
  ASSERT_GT(sol.objective_trace.size(), 20u);
  // Past the first tenth of the run every feasible iterate stays within
  // tolerance of the running minimum.
  const std::size_t burn = sol.objective_trace.size() / 10;
  double best = sol.objective_trace[burn];
  for (std::size_t i = burn; i < sol.objective_trace.size(); ++i) {
    EXPECT_LE(sol.objective_trace[i], best * (1 + 1e-2) + 1e-9);
    best = std::min(best, sol.objective_trace[i]);
  }
  EXPECT_NEAR(sol.objective_trace.back(), inst.optimum, 1e-4 * inst.optimum);
}

TEST(SparseBpdn, InvalidConfigAndInputsRejected) {
  SparseConfig cfg;
  cfg.c_bound = 0.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.max_iterations = 0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  const auto A = build_manifold_matrix(make_ula(4), std::vector<double>{60, 90, 120});
  EXPECT_THROW(solve_bpdn(A, ComplexVector::Zero(5), 0.1), std::invalid_argument);
  EXPECT_THROW(solve_bpdn(A, ComplexVector::Ones(4), -1.0), std::invalid_argument);
  EXPECT_THROW(solve_bpdn(A, ComplexVector::Ones(4), NAN), std::invalid_argument);
}

}  // namespace
}  // namespace sp2net
