#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "greedyq/greedy1d.hpp"
#include "greedyq/quadrature.hpp"

using namespace greedyq;

TEST(InertiaTable, UniformSinglePoint) {
    UniformDistribution u;
    const auto t = inertia_table(u, {0.5});
    ASSERT_EQ(t.sigma2.size(), 2u);
    EXPECT_NEAR(t.sigma2[0], 1.0 / 24.0, 1e-15);
    EXPECT_NEAR(t.sigma2[1], 1.0 / 24.0, 1e-15);
    EXPECT_EQ(t.argmax, 0u);
}

TEST(InertiaTable, NormalSymmetricTie) {
    NormalDistribution n;
    const auto t = inertia_table(n, {0.0});
    EXPECT_NEAR(t.sigma2[0], t.sigma2[1], 1e-14);
    EXPECT_EQ(t.argmax, 0u);
}

TEST(InertiaTable, UniformTwoPoints) {
    UniformDistribution u;
    const auto t = inertia_table(u, {0.5, 5.0 / 6.0});
    // [0,1/2] to 1/2: 1/24; [1/2,5/6]: two halves of width 1/6, 2 * (1/6)^3 / 3; [5/6,1]: (1/6)^3 / 3
    EXPECT_NEAR(t.sigma2[0], 1.0 / 24.0, 1e-15);
    EXPECT_NEAR(t.sigma2[1], 2.0 / 648.0, 1e-15);
    EXPECT_NEAR(t.sigma2[2], 1.0 / 648.0, 1e-15);
    EXPECT_EQ(t.argmax, 0u);
}

TEST(Lloyd, UniformOuterCell) {
    UniformDistribution u;
    const auto r = lloyd_fixed_point(u, 0.5, kInf, 0.7, 1e-14, 1000);
    EXPECT_NEAR(r.a, 5.0 / 6.0, 1e-12);
}

TEST(Lloyd, WholeLineIsMeanAfterOneStep) {
    ExponentialDistribution e(2.0);
    const auto r = lloyd_fixed_point(e, -kInf, kInf, 3.0, 1e-14, 10);
    EXPECT_NEAR(r.a, 0.5, 1e-14);
    EXPECT_LE(r.iterations, 2);
}

TEST(Lloyd, NoConvergenceCarriesLastIterate) {
    UniformDistribution u;
    try {
        lloyd_fixed_point(u, 0.5, kInf, 0.7, 0.0, 3);
        FAIL();
    } catch (const ConvergenceError& e) {
        EXPECT_GT(e.last_iterate(), 0.5);
    }
}

TEST(Lloyd, HalfNormalFirstPointMatchesGridSearch) {
    HalfNormalDistribution h;
    const double c = std::sqrt(2.0 / std::numbers::pi);
    auto pdf = [c](double x) { return c * std::exp(-x * x / 2); };
    auto distortion = [&](double a) {
        const double left = quad::integrate([&](double x) { return x * x * pdf(x); }, 0.0, a / 2, 1e-15, 1e-13).value;
        const double right =
            quad::integrate([&](double x) { return (x - a) * (x - a) * pdf(x); }, a / 2, 40.0, 1e-15, 1e-13).value;
        return left + right;
    };
    const int n = 100000;
    const double lo = 0.5, hi = 2.5, h_step = (hi - lo) / n;
    int best = 0;
    double best_v = distortion(lo);
    for (int i = 1; i <= n; ++i) {
        const double v = distortion(lo + i * h_step);
        if (v < best_v) best_v = v, best = i;
    }
    ASSERT_GT(best, 0);
    ASSERT_LT(best, n);
    const double fm = distortion(lo + (best - 1) * h_step), f0 = best_v, fp = distortion(lo + (best + 1) * h_step);
    const double oracle = lo + best * h_step + 0.5 * h_step * (fm - fp) / (fm - 2 * f0 + fp);

    const auto r = lloyd_fixed_point(h, 0.0, kInf, 1.0, 1e-14, 10000);
    EXPECT_NEAR(r.a, oracle, 1e-6);
}

TEST(Forgy, CurvatureExample) {
    UniformDistribution u;
    EXPECT_NEAR(forgy_curvature(u, 0.5, 1.0, 5.0 / 6.0), 0.5, 1e-15);
}

TEST(Forgy, AgreesWithLloyd) {
    UniformDistribution u;
    const auto f = forgy_newton(u, 0.5, kInf, 0.7, constant_steps(), 1e-14, 1000);
    EXPECT_NEAR(f.a, 5.0 / 6.0, 1e-8);
    NormalDistribution n;
    EXPECT_NEAR(forgy_newton(n, -kInf, kInf, 1.3, constant_steps(), 1e-14, 1000).a, 0.0, 1e-10);
}

TEST(Forgy, RejectsLawWithoutDensity) {
    DiracDistribution d(0.0);
    EXPECT_THROW(forgy_newton(d, -kInf, kInf, 1.0, constant_steps(), 1e-12, 10), std::invalid_argument);
}

TEST(BuildGreedy1D, UniformFirstThree) {
    UniformDistribution u;
    const auto s = build_greedy_1d(u, 3);
    ASSERT_EQ(s.size(), 3u);
    EXPECT_NEAR(s.scalar(0), 0.5, 1e-15);
    EXPECT_NEAR(s.scalar(1), 1.0 / 6.0, 1e-12);
    EXPECT_NEAR(s.scalar(2), 5.0 / 6.0, 1e-12);
}

TEST(BuildGreedy1D, DiracStopsAfterOnePoint) {
    DiracDistribution d(0.3);
    const auto s = build_greedy_1d(d, 10);
    ASSERT_EQ(s.size(), 1u);
    EXPECT_EQ(s.scalar(0), 0.3);
    EXPECT_TRUE(s.support_exhausted);
    EXPECT_EQ(s.trajectory[0].value, 0.0);
}

TEST(BuildGreedy1D, RejectsOtherExponents) {
    UniformDistribution u;
    EXPECT_THROW(build_greedy_1d(u, 5, {}, 1.0), std::invalid_argument);
}

TEST(BuildGreedy1D, TrajectoryMatchesExactDistortion) {
    NormalDistribution n;
    const auto s = build_greedy_1d(n, 40);
    for (std::size_t k : {1u, 2u, 10u, 40u})
        EXPECT_NEAR(s.trajectory[k - 1].value, distortion_exact_1d(n, s.prefix(k), 2.0).value, 1e-12);
}

TEST(BuildGreedySymmetric, NormalMirrorPairs) {
    NormalDistribution n;
    const auto s = build_greedy_symmetric(n, 21);
    ASSERT_EQ(s.size(), 21u);
    EXPECT_EQ(s.scalar(0), 0.0);
    for (std::size_t k = 1; k + 1 < s.size(); k += 2) EXPECT_EQ(s.scalar(k), -s.scalar(k + 1));
    ExponentialDistribution e;
    EXPECT_THROW(build_greedy_symmetric(e, 5), std::invalid_argument);
}

class GreedyInvariants : public ::testing::TestWithParam<std::pair<std::string, Solver1D>> {};

TEST_P(GreedyInvariants, DecreasingAndStationary) {
    const auto dist = parse_distribution_1d(GetParam().first);
    Greedy1DOptions opt;
    opt.solver = GetParam().second;
    const auto s = build_greedy_1d(*dist, 300, opt);
    for (std::size_t k = 1; k < s.size(); ++k) ASSERT_LT(s.trajectory[k].value, s.trajectory[k - 1].value) << k;
    const auto res = stationarity_residuals(*dist, s.coords);
    for (std::size_t k = 0; k < res.size(); ++k) ASSERT_LE(res[k], 1e-9) << "level " << k + 1;
}

INSTANTIATE_TEST_SUITE_P(Laws, GreedyInvariants,
                         ::testing::Values(std::pair{"uniform01", Solver1D::lloyd}, std::pair{"normal(0,1)", Solver1D::lloyd},
                                           std::pair{"exponential(1)", Solver1D::lloyd},
                                           std::pair{"uniform01", Solver1D::forgy}, std::pair{"normal(0,1)", Solver1D::forgy},
                                           std::pair{"exponential(1)", Solver1D::forgy}));

// Both solvers applied to the inner problem of each level: same frozen prefix,
// same interval, same start. Whole sequences may differ where inertias tie.
TEST(GreedyLloydVsForgy, SameInnerSolution) {
    for (const char* spec : {"uniform01", "normal(0,1)", "exponential(1)"}) {
        const auto d = parse_distribution_1d(spec);
        const auto s = build_greedy_1d(*d, 200);
        for (std::size_t k = 2; k <= s.size(); k += 9) {
            const double a = s.scalar(k - 1);
            double l = -kInf, r = kInf;
            for (std::size_t i = 0; i + 1 < k; ++i) {
                const double x = s.scalar(i);
                if (x < a) l = std::max(l, x);
                else r = std::min(r, x);
            }
            const double start = restricted_centroid(*d, l, r);
            const auto lloyd = lloyd_fixed_point(*d, l, r, start, 1e-14, 10000);
            const auto forgy = forgy_newton(*d, l, r, start, constant_steps(), 1e-14, 10000);
            ASSERT_NEAR(lloyd.a, a, 1e-9) << spec << " level " << k;
            ASSERT_NEAR(forgy.a, lloyd.a, 1e-8) << spec << " level " << k;
        }
    }
}

TEST(Solvers, ParseNames) {
    EXPECT_EQ(parse_solver_1d("newton"), Solver1D::forgy);
    EXPECT_EQ(parse_solver_1d("lloyd"), Solver1D::lloyd);
    EXPECT_THROW(parse_solver_1d("bisect"), std::invalid_argument);
}
