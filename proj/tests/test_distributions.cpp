#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "greedyq/distributions.hpp"
#include "greedyq/quadrature.hpp"
#include "greedyq/special.hpp"

using namespace greedyq;
using special::normal_cdf;
using special::normal_sf;

namespace {

const double kInvSqrt2Pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);

}  // namespace

TEST(RestrictedCentroid, UniformHalf) {
    UniformDistribution u;
    EXPECT_NEAR(restricted_centroid(u, 0.0, 0.5), 0.25, 1e-15);
}

TEST(RestrictedCentroid, NormalWholeLine) {
    NormalDistribution n;
    EXPECT_NEAR(restricted_centroid(n, -kInf, kInf), 0.0, 1e-15);
}

TEST(RestrictedCentroid, NormalPositiveHalfMatchesQuadrature) {
    NormalDistribution n;
    const auto num = quad::integrate([](double x) { return x * std::exp(-x * x / 2) / std::sqrt(2 * std::numbers::pi); },
                                     0.0, 40.0, 1e-15, 1e-14);
    const double oracle = num.value / 0.5;
    EXPECT_NEAR(oracle, 2.0 * kInvSqrt2Pi, 1e-12);
    EXPECT_NEAR(restricted_centroid(n, 0.0, kInf), oracle, 1e-12);
}

TEST(RestrictedCentroid, EmptyCellThrows) {
    UniformDistribution u;
    EXPECT_THROW(restricted_centroid(u, 2.0, 3.0), EmptyCell);
}

TEST(CellInertia, Examples) {
    UniformDistribution u;
    NormalDistribution n;
    EXPECT_NEAR(cell_inertia_p(u, 0.5, 0.0, 1.0, 2.0), 1.0 / 12.0, 1e-15);
    EXPECT_NEAR(cell_inertia_p(u, 0.25, 0.0, 0.375, 1.0), 5.0 / 128.0, 1e-14);
    EXPECT_NEAR(cell_inertia_p(n, 0.0, -kInf, kInf, 2.0), 1.0, 1e-12);
}

TEST(CellInertia, QuadraturePathAgreesWithClosedForm) {
    NormalDistribution n;
    for (double p : {1.0, 2.0, 3.0})
        for (double c : {-0.7, 0.0, 1.3}) {
            const double direct = quad::integrate(
                [&](double x) { return std::pow(std::abs(x - c), p) * n.pdf(x); }, -1.0, 2.5, 1e-15, 1e-13).value;
            EXPECT_NEAR(cell_inertia_p(n, c, -1.0, 2.5, p), direct, 1e-10) << "p=" << p << " c=" << c;
        }
}

TEST(MakeBuiltin, Catalogue) {
    auto u = std::get<Dist1DPtr>(make_builtin("uniform01", {}));
    EXPECT_DOUBLE_EQ(u->mean(), 0.5);
    auto n = std::get<Dist1DPtr>(make_builtin("normal", {0, 1}));
    EXPECT_NEAR(n->first_moment(0.0), -kInvSqrt2Pi, 1e-15);
    auto nd = std::get<DistNDPtr>(make_builtin("normal_nd", {2}));
    EXPECT_EQ(nd->dim(), 2u);
}

TEST(MakeBuiltin, UnknownNameListsCatalogue) {
    try {
        make_builtin("cauchy", {});
        FAIL();
    } catch (const std::invalid_argument& e) {
        EXPECT_NE(std::string(e.what()).find("normal_nd"), std::string::npos);
    }
}

TEST(ParseDistribution, SpecStrings) {
    auto n = parse_distribution_1d("normal(1, 2)");
    EXPECT_DOUBLE_EQ(n->mean(), 1.0);
    EXPECT_THROW(parse_distribution_1d("normal_nd(2)"), std::invalid_argument);
    EXPECT_THROW(parse_distribution("normal(1,"), std::invalid_argument);
    EXPECT_EQ(parse_distribution_nd("uniform01")->dim(), 1u);
}

TEST(Special, NormalCdfReference) {
    // Phi(1), Phi(-3), Phi(5) to 17 digits
    EXPECT_NEAR(normal_cdf(1.0), 0.84134474606854293, 1e-15);
    EXPECT_NEAR(normal_cdf(-3.0), 0.0013498980316300946, 1e-17);
    EXPECT_NEAR(normal_sf(5.0), 2.8665157187919391e-07, 1e-20);
}

class QuantileInvariant : public ::testing::TestWithParam<std::string> {};

TEST_P(QuantileInvariant, CdfOfQuantileIsIdentity) {
    const auto d = parse_distribution_1d(GetParam());
    for (double u = 0.001; u < 1.0; u += 0.0173) EXPECT_NEAR(d->cdf(d->quantile(u)), u, 1e-12) << u;
}

TEST_P(QuantileInvariant, MomentsAreConsistent) {
    const auto d = parse_distribution_1d(GetParam());
    const auto s = d->support();
    EXPECT_NEAR(d->mass(s.lo, s.hi), 1.0, 1e-14);
    EXPECT_NEAR(d->partial_first(s.lo, s.hi), d->mean(), 1e-12);
    for (double u : {0.1, 0.5, 0.9}) {
        const double x = d->quantile(u);
        EXPECT_NEAR(d->mass(s.lo, x) + d->mass(x, s.hi), 1.0, 1e-13);
        EXPECT_NEAR(d->cdf(x) + d->sf(x), 1.0, 1e-14);
    }
}

INSTANTIATE_TEST_SUITE_P(Laws, QuantileInvariant,
                         ::testing::Values("uniform01", "uniform(-2,3)", "normal(0,1)", "normal(1,0.5)",
                                           "halfnormal(1)", "exponential(2)"));

TEST(HalfNormal, CdfIsTwiceShiftedNormal) {
    HalfNormalDistribution h;
    for (double x : {0.0, 0.3, 1.0, 2.5, 6.0}) EXPECT_NEAR(h.cdf(x), 2.0 * normal_cdf(x) - 1.0, 1e-15);
    EXPECT_NEAR(h.mean(), 2.0 * kInvSqrt2Pi, 1e-15);
}

TEST(SymmetricLaws, PositiveHalf) {
    NormalDistribution n;
    ASSERT_TRUE(n.symmetric_about_zero());
    const auto h = n.positive_half();
    ASSERT_TRUE(h);
    EXPECT_NEAR(h->mean(), 2.0 * kInvSqrt2Pi, 1e-15);
    ExponentialDistribution e;
    EXPECT_FALSE(e.symmetric_about_zero());
}

TEST(Sampling, NormalNdMoments) {
    NormalND g(2);
    SeedStream s(derive_key(42, "test"));
    std::vector<double> x(2);
    double m = 0, m2 = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        g.sample(s, x);
        m += x[0] + x[1];
        m2 += x[0] * x[0] + x[1] * x[1];
    }
    EXPECT_NEAR(m / (2 * n), 0.0, 5.0 / std::sqrt(2.0 * n));
    EXPECT_NEAR(m2 / n, 2.0, 5.0 * 2.0 / std::sqrt(n));
}
