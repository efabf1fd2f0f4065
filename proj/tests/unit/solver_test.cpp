#include "../support.hpp"

#include <dirpart/init.hpp>
#include <dirpart/solver.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace dirpart;

namespace {

std::size_t projections(const SolveResult& r) {
    std::size_t s = 0;
    for (const auto& rec : r.trace.records) s += rec.inner_steps;
    return s;
}

} // namespace

TEST(SolverConfig, Validation) {
    SolverConfig c;
    EXPECT_NO_THROW(c.validate());
    c.tau_min = 1.0;
    EXPECT_THROW(c.validate(), InvalidArgument);
    c = SolverConfig{};
    c.tol_u = 0.0;
    EXPECT_THROW(c.validate(), InvalidArgument);
    c = SolverConfig{};
    c.max_outer = 0;
    EXPECT_THROW(c.validate(), InvalidArgument);
}

TEST(Solver, RejectsUnnormalizedStart) {
    const GridSpec g(2, 16);
    const auto mask = make_mask(g, Shape::torus);
    EXPECT_THROW(run_alg1(SolverConfig{}, mask, MultiField({ScalarField::constant(g, 1.0)})), InvalidArgument);
}

TEST(StepAlg1, SingleRegionOnTorus) {
    std::mt19937_64 rng(1);
    const GridSpec g(2, 32);
    const auto mask = make_mask(g, Shape::torus);
    const auto u = test::random_unit_fields(g, 1, rng);
    const double tau = 0.2;
    const auto [phi, proj] = step_alg1(u, tau, mask);
    for (auto l : phi.labels()) EXPECT_EQ(l, 0);
    const HeatOperator heat(g, tau);
    const auto expect = MultiField::normalized({heat.apply(heat.apply(u[0]))});
    EXPECT_LT(test::max_abs_diff(proj.u[0], expect[0]), 1e-12);

    const auto c = MultiField::normalized({ScalarField::constant(g, 1.0)});
    const auto [phi2, fixed] = step_alg1(c, tau, mask);
    EXPECT_LT(test::max_abs_diff(fixed.u[0], c[0]), 1e-13);
}

TEST(StepAlg1, EnergyNeverIncreases) {
    std::mt19937_64 rng(2);
    const GridSpec g(2, 64);
    const auto mask = make_mask(g, Shape::torus);
    std::uniform_real_distribution<double> td(1.0 / 64, 0.5);
    for (int t = 0; t < 50; ++t) {
        const double tau = td(rng);
        const auto phi = test::random_partition(mask, 3, rng);
        const auto u = test::random_unit_fields(g, 3, rng);
        const auto [phi1, proj] = step_alg1(u, tau, mask);
        ASSERT_TRUE(proj.ok());
        EXPECT_LE(relaxed_energy(phi1, proj.u, tau).total,
                  relaxed_energy(phi, u, tau).total + 1e-10 * 3 / tau);
    }
}

TEST(RunAlg2, SingleRegionTorusReachesGroundState) {
    std::mt19937_64 rng(3);
    const GridSpec g(2, 64);
    const auto mask = make_mask(g, Shape::torus);
    SolverConfig c;
    const auto r = run_alg2(c, mask, test::random_unit_fields(g, 1, rng));
    EXPECT_TRUE(r.converged);
    EXPECT_LE(r.energy.total, 1e-8);
}

TEST(RunAlg1, TwoRegionsSplitTheSquareInHalves) {
    const GridSpec g(2, 256);
    const auto mask = make_mask(g, Shape::square);
    SolverConfig c;
    c.tau0 = 1.0 / 16;
    const auto r = run_alg1(c, mask, voronoi_init(2, mask, 1));
    ASSERT_TRUE(r.converged);
    EXPECT_NEAR(r.energy.per_region[0], r.energy.per_region[1], 1e-3);
    // Halves of a 129 x 129 node square differ by at most one line of nodes.
    const auto a = static_cast<double>(r.phi.cell_count(0));
    const auto b = static_cast<double>(r.phi.cell_count(1));
    EXPECT_LE(std::abs(a - b), 129.0);
}

TEST(RunAlg1, ReplayIsBitwiseIdentical) {
    const GridSpec g(2, 64);
    const auto mask = make_mask(g, Shape::disk);
    SolverConfig c;
    c.tau0 = 1.0 / 8;
    const auto a = run_alg1(c, mask, voronoi_init(3, mask, 9));
    const auto b = run_alg1(c, mask, voronoi_init(3, mask, 9));
    EXPECT_EQ(a.phi, b.phi);
    ASSERT_EQ(a.trace.records.size(), b.trace.records.size());
    for (std::size_t i = 0; i < a.trace.records.size(); ++i) {
        EXPECT_EQ(a.trace.records[i].energy, b.trace.records[i].energy);
        EXPECT_EQ(a.trace.records[i].changed_cells, b.trace.records[i].changed_cells);
    }
    for (std::size_t l = 0; l < 3; ++l) EXPECT_EQ(test::max_abs_diff(a.u[l], b.u[l]), 0.0);
}

TEST(RunAlg1, FirstRecordCountsWholeDomain) {
    const GridSpec g(2, 32);
    const auto mask = make_mask(g, Shape::hexagon);
    const auto r = run_alg1(SolverConfig{}, mask, voronoi_init(2, mask, 4));
    EXPECT_EQ(r.trace.records.front().changed_cells, mask.cell_count());
    EXPECT_EQ(r.trace.records.back().changed_cells, 0u);
    EXPECT_EQ(r.trace.monotonicity_violations(2), 0u);
}

// k = 3 on the 256^2 torus at tau = 1/4, one fixed seed.
TEST(Algorithms, ProjectionLoopTradesOuterForInnerIterations) {
    const GridSpec g(2, 256);
    const auto mask = make_mask(g, Shape::torus);
    const auto u0 = voronoi_init(3, mask, 1);
    SolverConfig c;
    c.tau0 = 0.25;
    const auto a = run_alg1(c, mask, u0);
    const auto b = run_alg2(c, mask, u0);
    ASSERT_TRUE(a.converged);
    ASSERT_TRUE(b.converged);
    // Same order of magnitude as the 66 iterations reported for this setup.
    EXPECT_GT(a.iterations, 66u / 10);
    EXPECT_LT(a.iterations, 66u * 10);
    EXPECT_LT(b.iterations, a.iterations);
    EXPECT_GT(projections(b), projections(a));
    EXPECT_EQ(a.trace.monotonicity_violations(3), 0u);
    EXPECT_EQ(b.trace.monotonicity_violations(3), 0u);
    // Both land on the same stationary partition up to single-node jitter
    // along the interfaces.
    EXPECT_NEAR(a.energy.total, b.energy.total, 1e-4 * a.energy.total);
    EXPECT_LT(a.phi.changed_cells(b.phi), g.size() / 100);
}

TEST(Algorithms, SingleRegionAlg2IsTheEigenInnerLoop) {
    const GridSpec g(2, 64);
    const auto mask = make_mask(g, Shape::square);
    const double tau = 1.0 / 16;
    SolverConfig c;
    c.tau0 = tau;
    c.tau_min = tau;
    c.tol_u = 1e-6;
    c.max_outer = 1;
    const auto r = run_alg2(c, mask, voronoi_init(1, mask, 0));
    const auto e = eigen_solve(mask, c);
    EXPECT_EQ(r.trace.records.front().inner_steps, e.iterations);
    EXPECT_LT(test::max_abs_diff(r.u[0], e.u), 1e-14);
}

TEST(Reseed, VanishedRegionIsReseeded) {
    const GridSpec g(2, 32);
    const auto mask = make_mask(g, Shape::torus);
    // Identical components: every node ties and goes to region 0.
    std::mt19937_64 rng(5);
    const auto one = test::random_unit_fields(g, 1, rng);
    const MultiField u0({one[0], one[0]});
    SolverConfig c;
    c.tau0 = 0.25;
    const auto r = run_alg1(c, mask, u0);
    EXPECT_GE(r.reseeds, 1u);
    EXPECT_FALSE(r.warnings.empty());
    EXPECT_TRUE(r.trace.records.front().reseeded);
    EXPECT_GT(r.phi.cell_count(1), 0u);
    EXPECT_EQ(r.trace.monotonicity_violations(2), 0u);

    c.max_reseeds = 0;
    const auto fail = run_alg1(c, mask, u0);
    EXPECT_FALSE(fail.converged);
}

class Adaptive : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        const GridSpec g(2, 256);
        const auto mask = make_mask(g, Shape::torus);
        const auto u0 = voronoi_init(3, mask, 1);
        SolverConfig a;
        a.tau0 = 0.25;
        a.tau_min = 1.0 / 64;
        a.adaptive = true;
        a.tau_eval = 1e-4;
        adaptive = new SolveResult(run_adaptive(a, mask, u0));
        SolverConfig f;
        f.tau0 = 1.0 / 64;
        fixed = new SolveResult(run_alg1(f, mask, u0));
    }
    static void TearDownTestSuite() {
        delete adaptive;
        delete fixed;
    }
    static SolveResult* adaptive;
    static SolveResult* fixed;
};

SolveResult* Adaptive::adaptive = nullptr;
SolveResult* Adaptive::fixed = nullptr;

TEST_F(Adaptive, HalvesTauDownToTheFloor) {
    const std::vector<double> expect{0.25, 0.125, 0.0625, 0.03125, 0.015625};
    EXPECT_EQ(adaptive->tau_schedule, expect);
    EXPECT_EQ(adaptive->final_tau, 1.0 / 64);
    EXPECT_EQ(adaptive->stage_changes.size(), expect.size() - 1);
    EXPECT_TRUE(adaptive->converged);
    for (const auto& r : adaptive->trace.records) {
        EXPECT_NE(std::find(expect.begin(), expect.end(), r.tau), expect.end());
        EXPECT_TRUE(r.energy_eval.has_value());
    }
}

TEST_F(Adaptive, WorkingEnergyDecaysPerStageAndJumpsAtHalving) {
    const auto& rec = adaptive->trace.records;
    EXPECT_EQ(adaptive->trace.monotonicity_violations(3), 0u);
    std::size_t jumps = 0;
    for (std::size_t i = 1; i < rec.size(); ++i) {
        if (rec[i].tau == rec[i - 1].tau) continue;
        EXPECT_GT(rec[i].energy, rec[i - 1].energy) << "iteration " << rec[i].iter;
        ++jumps;
    }
    EXPECT_EQ(jumps, 4u);
}

TEST_F(Adaptive, FixedTauEnergyDecaysAcrossStages) {
    // E at tau = 1e-4 of each stage's last iterate.
    const auto& rec = adaptive->trace.records;
    std::vector<double> ends;
    for (std::size_t i = 0; i < rec.size(); ++i) {
        if (i + 1 == rec.size() || rec[i + 1].tau != rec[i].tau) ends.push_back(*rec[i].energy_eval);
    }
    ASSERT_EQ(ends.size(), 5u);
    for (std::size_t i = 1; i < ends.size(); ++i) EXPECT_LT(ends[i], ends[i - 1]);
}

TEST_F(Adaptive, FasterThanFixedSmallTau) {
    ASSERT_TRUE(fixed->converged);
    EXPECT_LT(adaptive->iterations, fixed->iterations);
    // Both end at tau = 1/64 with comparable energy.
    EXPECT_NEAR(adaptive->energy.total, fixed->energy.total, 0.02 * fixed->energy.total);
}

TEST(EigenSolve, TorusHasZeroGroundState) {
    const GridSpec g(2, 32);
    const auto r = eigen_solve(make_mask(g, Shape::torus), eigen_config(1e-4));
    EXPECT_NEAR(r.lambda, 0.0, 1e-10);
    const double c = 1.0 / (2.0 * kPi);
    for (double v : r.u.values()) EXPECT_NEAR(v, c, 1e-12);
}

TEST(EigenSolve, SquareProperties) {
    for (std::size_t n : {64u, 128u}) {
        const GridSpec g(2, n);
        const auto mask = make_mask(g, Shape::square);
        for (double tol : {1e-3, 1e-4, 1e-5}) {
            const auto r = eigen_solve(mask, eigen_config(tol));
            ASSERT_TRUE(r.converged);
            EXPECT_LE(r.lambda, 2.0 + 1e-2);
            ASSERT_GE(r.taus.size(), 3u);
            for (std::size_t i = 1; i < r.lambdas.size(); ++i) {
                EXPECT_GE(r.lambdas[i], r.lambdas[i - 1]) << "n=" << n << " tol=" << tol;
                EXPECT_LT(r.leakage[i], r.leakage[i - 1]) << "n=" << n << " tol=" << tol;
            }
            for (std::size_t i = 0; i < g.size(); ++i) {
                if (mask.contains(i)) {
                    ASSERT_GE(r.u[i], -1e-8);
                }
            }
        }
    }
}

TEST(EigenSolve, SquareValueAt256) {
    const auto mask = make_mask(GridSpec(2, 256), Shape::square);
    EXPECT_NEAR(eigen_solve(mask, eigen_config(1e-5)).lambda, 1.9463, 5e-3);
}

TEST(EigenSolve, TauBelowFloorRejected) {
    const auto mask = make_mask(GridSpec(2, 16), Shape::square);
    SolverConfig c = eigen_config(1e-3);
    c.tau0 = 1e-4;
    EXPECT_THROW(eigen_solve(mask, c), InvalidArgument);
}
