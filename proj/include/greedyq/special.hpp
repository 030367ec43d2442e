#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace greedyq::special {

inline constexpr double kInvSqrt2Pi = 0.398942280401432677939946059934381868;  // 1/sqrt(2*pi)

inline double normal_pdf(double x) noexcept {
    if (std::isinf(x)) return 0.0;
    return kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

/// Phi(x). erfc keeps full relative accuracy in the lower tail, so the
/// absolute error stays at the level of the last ulp of the result.
inline double normal_cdf(double x) noexcept {
    return 0.5 * std::erfc(-x * std::numbers::sqrt2 / 2.0);
}

/// 1 - Phi(x), accurate in the upper tail.
inline double normal_sf(double x) noexcept {
    return 0.5 * std::erfc(x * std::numbers::sqrt2 / 2.0);
}

namespace detail {

// Abramowitz & Stegun 26.2.23 rational start, |error| < 4.5e-4, for q in (0, 1/2].
inline double upper_tail_guess(double q) noexcept {
    const double t = std::sqrt(-2.0 * std::log(q));
    return t - (2.515517 + t * (0.802853 + t * 0.010328)) /
                   (1.0 + t * (1.432788 + t * (0.189269 + t * 0.001308)));
}

}  // namespace detail

/// Solves normal_sf(x) = q for q in (0,1) by Halley refinement of a rational
/// start. Working on the tail that holds q keeps precision for tiny q.
inline double normal_isf(double q) {
    if (!(q > 0.0 && q < 1.0)) {
        if (q == 0.0) return std::numeric_limits<double>::infinity();
        if (q == 1.0) return -std::numeric_limits<double>::infinity();
        throw std::domain_error("normal_isf: probability outside [0,1]");
    }
    if (q > 0.5) return -normal_isf(1.0 - q);
    double x = detail::upper_tail_guess(q);
    for (int it = 0; it < 4; ++it) {
        // f(x) = sf(x) - q, f' = -pdf, f'' = x*pdf
        const double pdf = normal_pdf(x);
        if (pdf == 0.0) break;
        const double u = (normal_sf(x) - q) / pdf;
        const double step = u / (1.0 - 0.5 * x * u);
        x += step;
        if (std::abs(step) <= 1e-16 * std::max(1.0, std::abs(x))) break;
    }
    return x;
}

/// Inverse of Phi. Arguments above 1/2 go through the upper tail.
inline double normal_quantile(double u) {
    if (u == 0.0) return -std::numeric_limits<double>::infinity();
    if (u == 1.0) return std::numeric_limits<double>::infinity();
    if (u < 0.5) return -normal_isf(u);
    return normal_isf(1.0 - u);
}

}  // namespace greedyq::special
