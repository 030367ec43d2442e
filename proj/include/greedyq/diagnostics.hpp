#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "greedyq/distributions.hpp"
#include "greedyq/greedy1d.hpp"
#include "greedyq/parallel.hpp"
#include "greedyq/quadrature.hpp"
#include "greedyq/sequence.hpp"

namespace greedyq {

/// A value that may be flagged infinite or (heuristically) divergent.
struct FlaggedValue {
    double value = 0.0;
    bool infinite = false;
    bool likely_infinite = false;
    int refinements = 0;
};

/**
 * b-maximal function Psi_b(xi) = max over N <= N_cap of
 * lambda(B(xi, r_N)) / mu(B(xi, r_N)), r_N = b * d(xi, a^(N)).
 *
 * Levels with r_N = 0 contribute nothing, so Psi_b(a_1) = 0. A ball of
 * zero mass sets the infinite flag.
 */
inline FlaggedValue maximal_function(const Distribution1D& dist, const GreedySequence& seq, double b, double xi,
                                     std::size_t n_cap) {
    if (seq.dim != 1) throw DimensionMismatch(1, seq.dim);
    if (!(b > 0.0 && b < 0.5)) throw std::invalid_argument("maximal_function: b must lie in (0, 1/2)");
    if (n_cap > seq.size()) throw std::invalid_argument("maximal_function: N_cap exceeds the sequence length");
    FlaggedValue out;
    double dist_min = kInf;
    for (std::size_t n = 0; n < n_cap; ++n) {
        dist_min = std::min(dist_min, std::abs(xi - seq.coords[n]));
        const double r = b * dist_min;
        if (!(r > 0.0)) break;  // distance only shrinks from here on
        const double mass = dist.mass(xi - r, xi + r);
        if (!(mass > 0.0)) {
            out.infinite = true;
            out.value = kInf;
            return out;
        }
        out.value = std::max(out.value, 2.0 * r / mass);
    }
    return out;
}

namespace detail {

/// Evaluates estimate(0), estimate(1), ... until two agree; flags divergence after three
/// successive refinements that each more than double the estimate.
template <class Estimate>
FlaggedValue refine_until_stable(Estimate&& estimate, int max_refinements, double rel_tol) {
    FlaggedValue out;
    double prev = estimate(0);
    int growth_streak = 0;
    for (int k = 1; k <= max_refinements; ++k) {
        const double cur = estimate(k);
        out.refinements = k;
        if (!std::isfinite(cur)) {
            out.value = kInf;
            out.infinite = true;
            return out;
        }
        growth_streak = (cur > 2.0 * prev && prev > 0.0) ? growth_streak + 1 : 0;
        if (growth_streak >= 3) {
            out.value = cur;
            out.likely_infinite = true;
            return out;
        }
        const bool stable = std::abs(cur - prev) <= rel_tol * std::max(std::abs(cur), 1e-300);
        prev = cur;
        if (stable) break;
    }
    out.value = prev;
    return out;
}

}  // namespace detail

/**
 * int Psi_b^exponent dmu by the midpoint rule in probability space,
 * u_k = (k + 1/2)/n, refined by doubling n from `quad_points`.
 */
inline FlaggedValue maximal_function_integral(const Distribution1D& dist, const GreedySequence& seq, double b,
                                              double exponent, std::size_t quad_points, std::size_t n_cap = 0,
                                              int max_refinements = 4) {
    if (!(exponent >= 0.0)) throw std::invalid_argument("maximal_function_integral: exponent must be >= 0");
    if (exponent == 0.0) return {1.0, false, false, 0};
    if (quad_points < 1) throw std::invalid_argument("maximal_function_integral: quad_points must be >= 1");
    if (n_cap == 0) n_cap = seq.size();
    bool infinite = false;
    auto estimate = [&](int k) {
        const std::size_t n = quad_points << k;
        const std::size_t nb = block_count(n, 256);
        std::vector<KahanSum> parts(nb);
        std::vector<char> inf(nb, 0);
        parallel_blocks(nb, [&](std::size_t blk) {
            const std::size_t end = std::min(n, (blk + 1) * 256);
            for (std::size_t i = blk * 256; i < end; ++i) {
                const double xi = dist.quantile((static_cast<double>(i) + 0.5) / static_cast<double>(n));
                const auto psi = maximal_function(dist, seq, b, xi, n_cap);
                if (psi.infinite) inf[blk] = 1;
                else parts[blk] += std::pow(psi.value, exponent);
            }
        });
        KahanSum total;
        for (std::size_t blk = 0; blk < nb; ++blk) {
            total.merge(parts[blk]);
            infinite = infinite || inf[blk];
        }
        return infinite ? kInf : total.value() / static_cast<double>(n);
    };
    return detail::refine_until_stable(estimate, max_refinements, 1e-2);
}

/**
 * int phi^(1 - q/(d+p)) over {phi > 0} on windows growing by doubling from
 * the central 99.8% quantile range; finite supports are integrated directly.
 */
inline FlaggedValue zador_integral(const Distribution1D& dist, double p, double q, std::size_t d = 1) {
    if (d != 1) throw std::invalid_argument("zador_integral: only d = 1 is supported for scalar laws");
    if (!dist.absolutely_continuous()) throw std::invalid_argument("zador_integral: law has no density");
    const double e = 1.0 - q / (static_cast<double>(d) + p);
    const Interval s = dist.support();
    auto f = [&](double x) {
        const double v = dist.pdf(x);
        return v > 0.0 ? std::pow(v, e) : 0.0;
    };
    auto piece = [&](double a, double c) {
        if (!(c > a)) return 0.0;
        return quad::integrate(f, a, c, 1e-13, 1e-12, 4000).value;
    };
    if (std::isfinite(s.lo) && std::isfinite(s.hi)) return {piece(s.lo, s.hi), false, false, 0};
    const double center = dist.quantile(0.5);
    const double half = std::max(dist.quantile(0.999) - center, center - dist.quantile(0.001));
    auto estimate = [&](int k) {
        const double w = half * std::ldexp(1.0, k);
        const double lo = std::max(s.lo, center - w), hi = std::min(s.hi, center + w);
        return piece(lo, center) + piece(center, hi);
    };
    return detail::refine_until_stable(estimate, 10, 1e-10);
}

/// N * e_q of every prefix of a 1-D sequence.
inline std::vector<double> mismatch_trajectory(const Distribution1D& dist, const GreedySequence& seq, double q) {
    const auto recs = evaluate_trajectory_1d(dist, seq, q);
    std::vector<double> out(recs.size());
    for (std::size_t n = 0; n < recs.size(); ++n) out[n] = static_cast<double>(n + 1) * recs[n].value;
    return out;
}

struct RecursionCheck {
    std::vector<double> scaled;  // A_N * N^(1/rho), N = 1..N_max
    double a2 = 0.0, a3 = 0.0;
    double fitted_k = 0.0;       // sup_N A_N N^(1/rho)
    bool plateau = false;        // relative spread over [N_max/2, N_max] below 1%
};

/// Extremal sequence A_{N+1} = A_N - C A_N^(1+rho) and its scaled sup.
inline RecursionCheck recursion_bound_check(double a1, double c, double rho, std::size_t n_max) {
    if (!(a1 > 0.0 && c > 0.0 && rho > 0.0)) throw std::invalid_argument("recursion_bound_check: need A1, C, rho > 0");
    if (!(c * std::pow(a1, rho) < 1.0)) throw std::invalid_argument("recursion_bound_check: need C * A1^rho < 1");
    if (n_max < 4) throw std::invalid_argument("recursion_bound_check: N_max must be >= 4");
    RecursionCheck out;
    out.scaled.resize(n_max);
    double a = a1;
    for (std::size_t n = 1; n <= n_max; ++n) {
        if (!(a > 0.0)) throw std::domain_error("recursion_bound_check: A_" + std::to_string(n) + " <= 0");
        if (n == 2) out.a2 = a;
        if (n == 3) out.a3 = a;
        out.scaled[n - 1] = a * std::pow(static_cast<double>(n), 1.0 / rho);
        a -= c * std::pow(a, 1.0 + rho);
    }
    out.fitted_k = *std::max_element(out.scaled.begin(), out.scaled.end());
    const auto tail_b = out.scaled.begin() + static_cast<std::ptrdiff_t>(n_max / 2 - 1);
    const auto [mn, mx] = std::minmax_element(tail_b, out.scaled.end());
    out.plateau = (*mx - *mn) <= 0.01 * *mx;
    return out;
}

}  // namespace greedyq
