#include "../support.hpp"

#include <dirpart/domains.hpp>
#include <dirpart/partition.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

using namespace dirpart;

namespace {

// (2/pi) cos x1 cos x2 on the whole box; on [-pi/2, pi/2]^2 it is the first
// Dirichlet eigenfunction with unit norm there.
MultiField square_mode(const GridSpec& g) {
    return MultiField({ScalarField::sample(g, [](const auto& x) {
        return 2.0 / kPi * std::cos(x[0]) * std::cos(x[1]);
    })});
}

Partition labels_from_mask(const DomainMask& m) {
    std::vector<std::int32_t> labels(m.spec().size(), kOutside);
    for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = m.contains(i) ? 0 : kOutside;
    return Partition(m.spec(), 1, std::move(labels));
}

} // namespace

TEST(MultiField, RejectsMixedGrids) {
    EXPECT_THROW(MultiField({ScalarField(GridSpec(2, 8)), ScalarField(GridSpec(2, 16))}), ShapeError);
    EXPECT_THROW(MultiField(std::vector<ScalarField>{}), InvalidArgument);
    EXPECT_THROW(MultiField::normalized({ScalarField(GridSpec(2, 8))}), InvalidArgument);
}

TEST(PartitionType, RejectsBadLabels) {
    const GridSpec g(2, 4);
    EXPECT_THROW(Partition(g, 2, std::vector<std::int32_t>(16, 2)), InvalidArgument);
    EXPECT_THROW(Partition(g, 2, std::vector<std::int32_t>(15, 0)), ShapeError);
    EXPECT_THROW(Partition(g, 0, std::vector<std::int32_t>(16, kOutside)), InvalidArgument);
}

TEST(RelaxedEnergy, EmptyPartitionGivesKOverTau) {
    std::mt19937_64 rng(1);
    const GridSpec g(2, 16);
    const auto u = test::random_unit_fields(g, 3, rng);
    const auto e = relaxed_energy(Partition::empty(g, 3), u, 0.25);
    EXPECT_DOUBLE_EQ(e.total, 3.0 / 0.25);
}

TEST(RelaxedEnergy, ExactSquareModeMatchesClosedForm) {
    const GridSpec g(2, 512);
    const auto phi = labels_from_mask(make_mask(g, Shape::square));
    const auto u = square_mode(g);
    for (int p = 4; p <= 9; ++p) {
        const double tau = std::ldexp(1.0, -p);
        EXPECT_NEAR(relaxed_energy(phi, u, tau).total, (1.0 - std::exp(-2.0 * tau)) / tau, 2e-3) << "tau=2^-" << p;
    }
    EXPECT_NEAR(relaxed_energy(phi, u, 1.0 / 16).total, 1.8801, 2e-3);
    EXPECT_NEAR(relaxed_energy(phi, u, 1.0 / 512).total, 1.9961, 2e-3);
}

TEST(RelaxedEnergy, Errors) {
    std::mt19937_64 rng(2);
    const GridSpec g(2, 8);
    const auto u = test::random_unit_fields(g, 2, rng);
    EXPECT_THROW(relaxed_energy(Partition::empty(g, 2), u, 0.0), InvalidArgument);
    EXPECT_THROW(relaxed_energy(Partition::empty(g, 3), u, 0.1), ShapeError);
    EXPECT_THROW(relaxed_energy(Partition::empty(GridSpec(2, 16), 2), u, 0.1), ShapeError);
}

TEST(Threshold, TieGoesToSmallestIndex) {
    const GridSpec g(2, 4);
    const auto f = ScalarField::constant(g, 0.5);
    ScalarField neg = f;
    neg *= -1.0; // same square
    const auto p = threshold_phi(MultiField({f, neg, f}), make_mask(g, Shape::torus));
    for (auto l : p.labels()) EXPECT_EQ(l, 0);
}

TEST(Threshold, SingleRegionOnTorus) {
    std::mt19937_64 rng(3);
    const GridSpec g(2, 16);
    const auto p = threshold_phi(MultiField({test::random_field(g, rng)}), make_mask(g, Shape::torus));
    for (auto l : p.labels()) EXPECT_EQ(l, 0);
}

TEST(Threshold, MatchesPointwiseArgmax) {
    std::mt19937_64 rng(4);
    const GridSpec g(2, 8);
    for (Shape s : {Shape::torus, Shape::disk}) {
        const auto mask = make_mask(g, s, s == Shape::disk ? ShapeParams{2.0, 0, 0} : ShapeParams{});
        for (int t = 0; t < 20; ++t) {
            const MultiField us({test::random_field(g, rng), test::random_field(g, rng)});
            const auto p = threshold_phi(us, mask);
            for (std::size_t i = 0; i < g.size(); ++i) {
                if (!mask.contains(i)) {
                    EXPECT_EQ(p.label(i), kOutside);
                    continue;
                }
                const double a = us[0][i] * us[0][i];
                const double b = us[1][i] * us[1][i];
                EXPECT_EQ(p.label(i), b > a ? 1 : 0);
            }
        }
    }
}

TEST(ProjectU, FourierModeIsFixed) {
    const GridSpec g(2, 32);
    auto c = ScalarField::sample(g, [](const auto& x) { return std::cos(x[0]); });
    const MultiField u = MultiField::normalized({c});
    const auto phi = labels_from_mask(make_mask(g, Shape::torus));
    const auto p = project_u(phi, u, 0.3);
    ASSERT_TRUE(p.ok());
    EXPECT_LT(test::max_abs_diff(p.u[0], u[0]), 1e-12);
}

TEST(ProjectU, ReportsEmptyRegion) {
    std::mt19937_64 rng(5);
    const GridSpec g(2, 16);
    std::vector<std::int32_t> labels(g.size(), 0);
    const Partition phi(g, 2, labels); // region 1 has no nodes
    const auto u = test::random_unit_fields(g, 2, rng);
    const auto p = project_u(phi, u, 0.1);
    ASSERT_FALSE(p.ok());
    EXPECT_EQ(p.empty->region, 1u);
    // The vanished component is carried over untouched.
    EXPECT_EQ(test::max_abs_diff(p.u[1], u[1]), 0.0);
}

TEST(ProjectU, RejectsNonPositiveTau) {
    std::mt19937_64 rng(6);
    const GridSpec g(2, 8);
    EXPECT_THROW(project_u(Partition::empty(g, 1), test::random_unit_fields(g, 1, rng), 0.0),
                 InvalidArgument);
}

class PartitionProperties : public ::testing::TestWithParam<Shape> {};

TEST_P(PartitionProperties, ProjectionNeverRaisesEnergy) {
    std::mt19937_64 rng(10);
    const GridSpec g(2, 32);
    const auto mask = make_mask(g, GetParam());
    std::uniform_int_distribution<int> kd(1, 4);
    std::uniform_real_distribution<double> td(0.02, 0.5);
    for (int t = 0; t < 100; ++t) {
        const std::size_t k = static_cast<std::size_t>(kd(rng));
        const double tau = td(rng);
        const auto phi = test::random_partition(mask, k, rng);
        const auto u = test::random_unit_fields(g, k, rng);
        const auto p = project_u(phi, u, tau);
        if (!p.ok()) continue;
        EXPECT_TRUE(p.u.is_normalized(1e-10));
        EXPECT_LE(relaxed_energy(phi, p.u, tau).total, relaxed_energy(phi, u, tau).total + 1e-10);
    }
}

TEST_P(PartitionProperties, ThresholdIsOptimalAmongPartitions) {
    std::mt19937_64 rng(11);
    const GridSpec g(2, 16);
    const auto mask = make_mask(g, GetParam());
    for (int t = 0; t < 10; ++t) {
        const std::size_t k = 3;
        const double tau = 0.1;
        const HeatOperator heat(g, tau);
        const auto u = test::random_unit_fields(g, k, rng);
        const auto best = relaxed_energy(threshold_phi(diffuse(heat, u), mask), u, tau).total;
        for (int a = 0; a < 50; ++a) {
            EXPECT_LE(best, relaxed_energy(test::random_partition(mask, k, rng), u, tau).total + 1e-12);
        }
    }
}

TEST_P(PartitionProperties, EnergyBoundsAndSum) {
    std::mt19937_64 rng(12);
    const GridSpec g(2, 32);
    const auto mask = make_mask(g, GetParam());
    for (int t = 0; t < 50; ++t) {
        const std::size_t k = 1 + t % 5;
        const double tau = 0.01 + 0.01 * t;
        const auto e = relaxed_energy(test::random_partition(mask, k, rng), test::random_unit_fields(g, k, rng), tau);
        const double sum = std::accumulate(e.per_region.begin(), e.per_region.end(), 0.0);
        EXPECT_NEAR(e.total, sum, 1e-10 * std::abs(e.total));
        EXPECT_GE(e.total, 0.0);
        EXPECT_LE(e.total, static_cast<double>(k) / tau);
    }
}

TEST_P(PartitionProperties, ThresholdCoversDomainDisjointly) {
    std::mt19937_64 rng(13);
    const GridSpec g(2, 32);
    const auto mask = make_mask(g, GetParam());
    for (int t = 0; t < 20; ++t) {
        const std::size_t k = 2 + t % 4;
        const auto p = threshold_phi(test::random_unit_fields(g, k, rng), mask);
        EXPECT_TRUE(p.covers(mask));
        ScalarField sum(g);
        for (std::size_t l = 0; l < k; ++l) {
            const auto ind = p.indicator(l);
            for (std::size_t i = 0; i < g.size(); ++i) sum[i] += ind[i];
        }
        EXPECT_EQ(test::max_abs_diff(sum, mask.indicator()), 0.0);
    }
}

INSTANTIATE_TEST_SUITE_P(Shapes, PartitionProperties,
                         ::testing::Values(Shape::torus, Shape::square, Shape::disk),
                         [](const auto& info) { return std::string(shape_name(info.param)); });
