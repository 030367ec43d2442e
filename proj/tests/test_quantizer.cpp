#include <cmath>
#include <cstdlib>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "greedyq/qmc.hpp"
#include "greedyq/quantizer.hpp"

using namespace greedyq;

TEST(Nearest, Examples) {
    const auto q1 = Quantizer::scalar({0.5});
    auto r = q1.nearest(0.3);
    EXPECT_EQ(r.index, 0u);
    EXPECT_NEAR(r.distance, 0.2, 1e-15);

    const auto q2 = Quantizer::scalar({0.25, 0.5});
    r = q2.nearest(0.375);
    EXPECT_EQ(r.index, 0u);
    EXPECT_DOUBLE_EQ(r.distance, 0.125);

    const Quantizer q3(2, {0, 0, 1, 1});
    const std::vector<double> x{0.9, 0.9};
    r = q3.nearest(x);
    EXPECT_EQ(r.index, 1u);
    EXPECT_NEAR(r.distance, std::sqrt(0.02), 1e-15);
}

TEST(Nearest, TieGoesToSmallestIndexEvenWhenUnsorted) {
    const auto q = Quantizer::scalar({0.5, 0.25});
    EXPECT_EQ(q.nearest(0.375).index, 0u);
}

TEST(Nearest, Errors) {
    const Quantizer q(2, {0, 0});
    const std::vector<double> x{1.0};
    EXPECT_THROW(q.nearest(x), DimensionMismatch);
    EXPECT_THROW(Quantizer::scalar({0.1, 0.1}), std::invalid_argument);
    EXPECT_THROW(Quantizer::scalar({}).nearest(0.5), std::invalid_argument);
}

TEST(Nearest, KdTreeMatchesLinearScan) {
    for (std::size_t d : {2u, 3u}) {
        SeedStream s(derive_key(7, d));
        const std::size_t n = 2000;
        std::vector<double> pts(n * d);
        for (auto& v : pts) v = s.normal();
        // exact duplicates of coordinates and far-away queries stress the tie-break
        for (std::size_t k = 0; k < d; ++k) pts[5 * d + k] = pts[k] + 1.0;
        const Quantizer q(d, pts);
        std::vector<double> x(d);
        for (int i = 0; i < 1000; ++i) {
            for (auto& v : x) v = 3.0 * s.normal();
            if (i % 10 == 0)
                for (std::size_t k = 0; k < d; ++k) x[k] = pts[k] + 0.5;  // equidistant to points 0 and 5
            const auto a = q.nearest(x);
            const auto b = q.nearest_linear(x);
            ASSERT_EQ(a.index, b.index) << "query " << i;
            ASSERT_DOUBLE_EQ(a.distance, b.distance);
        }
    }
}

TEST(DistortionExact, Examples) {
    UniformDistribution u;
    EXPECT_NEAR(distortion_exact_1d(u, Quantizer::scalar({0.5}), 1.0).value, 0.25, 1e-15);
    EXPECT_NEAR(distortion_exact_1d(u, Quantizer::scalar({0.25, 0.5}), 1.0).value, 11.0 / 64.0, 1e-15);
    for (std::size_t n : {1u, 2u, 7u, 64u, 1000u})
        EXPECT_NEAR(distortion_exact_1d(u, Quantizer::scalar(optimal_uniform_grid(n)), 2.0).value,
                    1.0 / (2.0 * std::sqrt(3.0) * static_cast<double>(n)), 1e-14);
}

TEST(DistortionExact, PowerMeanInequality) {
    NormalDistribution n;
    const auto q = Quantizer::scalar({-1.2, 0.1, 0.8, 2.0});
    double prev = 0;
    for (double p : {1.0, 1.5, 2.0, 3.0, 4.0}) {
        const double e = distortion_exact_1d(n, q, p).value;
        EXPECT_GE(e, prev);
        prev = e;
    }
}

TEST(DistortionExact, TrajectoryMatchesFromScratch) {
    ExponentialDistribution e;
    const std::vector<double> pts{1.0, 0.3, 2.5, 0.05, 4.0, 1.7};
    const auto t = distortion_trajectory_1d(e, pts, 2.0);
    for (std::size_t n = 1; n <= pts.size(); ++n) {
        const std::vector<double> pre(pts.begin(), pts.begin() + static_cast<std::ptrdiff_t>(n));
        EXPECT_NEAR(t[n - 1], distortion_exact_1d(e, Quantizer::scalar(pre), 2.0).value, 1e-13);
    }
}

TEST(DistortionMC, Examples) {
    NormalND g(2);
    const auto r = distortion_mc(g, Quantizer(2, {0, 0}), 2.0, 1'000'000, 11);
    EXPECT_NEAR(r.value, std::sqrt(2.0), 5 * r.std_error);
    EXPECT_EQ(r.method, DistortionMethod::monte_carlo);

    UniformCube u(1);
    const auto r2 = distortion_mc(u, Quantizer::scalar({0.5}), 2.0, 200'000, 12);
    EXPECT_NEAR(r2.value, 1.0 / std::sqrt(12.0), 5 * r2.std_error);
}

TEST(DistortionMC, AgreesWithExact) {
    auto n = std::make_shared<NormalDistribution>();
    WrappedScalar w(n);
    const auto q = Quantizer::scalar({-1.0, 0.2, 1.5});
    const double exact = distortion_exact_1d(*n, q, 2.0).value;
    const auto mc = distortion_mc(w, q, 2.0, 400'000, 3);
    EXPECT_NEAR(mc.value, exact, 5 * mc.std_error);
}

TEST(DistortionMC, DiracIsZero) {
    auto d = std::make_shared<DiracDistribution>(0.3);
    WrappedScalar w(d);
    EXPECT_EQ(distortion_mc(w, Quantizer::scalar({0.3, 0.9}), 2.0, 10'000, 1).value, 0.0);
}

TEST(VoronoiWeights, Examples) {
    UniformCube u(1);
    const std::size_t m = 200'000;
    auto w = voronoi_weights(u, Quantizer::scalar({0.25, 0.75}), m, 5);
    const double se = std::sqrt(0.25 / m);
    EXPECT_NEAR(w.weights[0], 0.5, 5 * se);
    w = voronoi_weights(u, Quantizer::scalar({0.5, 5.0 / 6.0}), m, 6);
    EXPECT_NEAR(w.weights[0], 2.0 / 3.0, 5 * std::sqrt(2.0 / 9.0 / m));
    EXPECT_NEAR(w.weights[1], 1.0 / 3.0, 5 * std::sqrt(2.0 / 9.0 / m));

    UniformDistribution u1;
    const auto ex = voronoi_weights_exact_1d(u1, Quantizer::scalar({0.5, 5.0 / 6.0}));
    EXPECT_NEAR(ex.weights[0], 2.0 / 3.0, 1e-15);
    EXPECT_NEAR(ex.weights[1], 1.0 / 3.0, 1e-15);

    NormalND g(1);
    EXPECT_EQ(voronoi_weights(g, Quantizer::scalar({0.0}), 1000, 1).weights[0], 1.0);
}

TEST(Cubature, Examples) {
    UniformDistribution u;
    const auto q = Quantizer::scalar({0.1, 0.4, 0.45, 0.9});
    const auto w = voronoi_weights_exact_1d(u, q);
    EXPECT_NEAR(cubature([](auto) { return 1.0; }, q, w), 1.0, 1e-15);

    const auto q2 = Quantizer::scalar({0.25, 0.75});
    EXPECT_NEAR(cubature([](auto x) { return x[0]; }, q2, VoronoiWeights{{0.5, 0.5}, 0}), 0.5, 1e-15);

    const auto q4 = Quantizer::scalar(optimal_uniform_grid(4));
    const double v = cubature([](auto x) { return x[0] * x[0]; }, q4);
    EXPECT_NEAR(v, 21.0 / 64.0, 1e-15);
    EXPECT_NEAR(1.0 / 3.0 - v, 1.0 / 192.0, 1e-15);
}

TEST(Reproducibility, McIndependentOfThreadCount) {
    NormalND g(3);
    const Quantizer q(3, {0, 0, 0, 1, 1, 1, -1, 0.5, 0});
    std::vector<double> values;
    for (const char* t : {"1", "2", "5"}) {
        setenv("GREEDYQ_THREADS", t, 1);
        values.push_back(distortion_mc(g, q, 2.0, 100'000, 99).value);
        values.push_back(voronoi_weights(g, q, 50'000, 98).weights[1]);
    }
    unsetenv("GREEDYQ_THREADS");
    for (std::size_t i = 2; i < values.size(); ++i) EXPECT_EQ(values[i], values[i % 2]);
}
