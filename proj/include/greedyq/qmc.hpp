#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "greedyq/distributions.hpp"
#include "greedyq/quantizer.hpp"

namespace greedyq {

/// Radical inverse of n in base b. Exact for dyadic results in base 2.
inline double radical_inverse(std::uint64_t n, unsigned base) {
    std::uint64_t num = 0, den = 1;
    while (n > 0) {
        num = num * base + n % base;
        den *= base;
        n /= base;
    }
    return static_cast<double>(num) / static_cast<double>(den);
}

/// Van der Corput points xi_1..xi_N in base `base`.
inline std::vector<double> vdc(unsigned base, std::size_t n) {
    if (base < 2) throw std::invalid_argument("vdc: base must be >= 2");
    if (n < 1) throw std::invalid_argument("vdc: N must be >= 1");
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = radical_inverse(i + 1, base);
    return out;
}

inline std::vector<unsigned> first_primes(std::size_t count) {
    std::vector<unsigned> primes;
    for (unsigned k = 2; primes.size() < count; ++k) {
        bool prime = true;
        for (unsigned p : primes) {
            if (p * p > k) break;
            if (k % p == 0) {
                prime = false;
                break;
            }
        }
        if (prime) primes.push_back(k);
    }
    return primes;
}

/// Halton points in [0,1)^d (flat, row-major), bases = first d primes.
inline std::vector<double> halton(std::size_t dim, std::size_t n) {
    if (dim < 1) throw std::invalid_argument("halton: dimension must be >= 1");
    const auto bases = first_primes(dim);
    std::vector<double> out(n * dim);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < dim; ++j) out[i * dim + j] = radical_inverse(i + 1, bases[j]);
    return out;
}

/// Exact 1-D star discrepancy: max_i max(i/N - x_(i), x_(i) - (i-1)/N).
inline double star_discrepancy_1d(std::vector<double> pts) {
    if (pts.empty()) throw std::invalid_argument("star discrepancy of an empty set");
    for (double x : pts)
        if (!(x >= 0.0 && x <= 1.0)) throw std::domain_error("star discrepancy: point " + std::to_string(x) + " outside [0,1]");
    std::sort(pts.begin(), pts.end());
    const double n = static_cast<double>(pts.size());
    double d = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        d = std::max(d, static_cast<double>(i + 1) / n - pts[i]);
        d = std::max(d, pts[i] - static_cast<double>(i) / n);
    }
    return d;
}

struct DiscrepancyEstimate {
    double value = 0.0;
    bool approximate = true;
};

/**
 * Star discrepancy in d >= 2, maximised over anchored boxes whose corners
 * lie on the grid of point coordinates (plus 1). Restricted to N <= 64.
 */
inline DiscrepancyEstimate star_discrepancy_nd(const std::vector<double>& pts, std::size_t dim) {
    if (dim < 1 || pts.size() % dim != 0) throw std::invalid_argument("star_discrepancy_nd: bad shape");
    const std::size_t n = pts.size() / dim;
    if (n == 0) throw std::invalid_argument("star discrepancy of an empty set");
    if (n > 64) throw std::invalid_argument("star_discrepancy_nd: limited to N <= 64");
    if (dim == 1) return {star_discrepancy_1d(pts), false};
    std::vector<std::vector<double>> grid(dim);
    for (std::size_t j = 0; j < dim; ++j) {
        for (std::size_t i = 0; i < n; ++i) grid[j].push_back(pts[i * dim + j]);
        grid[j].push_back(1.0);
        std::sort(grid[j].begin(), grid[j].end());
        grid[j].erase(std::unique(grid[j].begin(), grid[j].end()), grid[j].end());
    }
    std::vector<std::size_t> idx(dim, 0);
    double best = 0.0;
    while (true) {
        double vol = 1.0;
        for (std::size_t j = 0; j < dim; ++j) vol *= grid[j][idx[j]];
        std::size_t closed = 0, open = 0;
        for (std::size_t i = 0; i < n; ++i) {
            bool in_closed = true, in_open = true;
            for (std::size_t j = 0; j < dim; ++j) {
                const double x = pts[i * dim + j], u = grid[j][idx[j]];
                in_closed = in_closed && x <= u;
                in_open = in_open && x < u;
            }
            closed += in_closed;
            open += in_open;
        }
        best = std::max({best, static_cast<double>(closed) / n - vol, vol - static_cast<double>(open) / n});
        std::size_t j = 0;
        while (j < dim && ++idx[j] == grid[j].size()) idx[j++] = 0;
        if (j == dim) break;
    }
    return {best, true};
}

/// Optimal N-quantizer of U[0,1]: (2k-1)/(2N), k = 1..N.
inline std::vector<double> optimal_uniform_grid(std::size_t n) {
    std::vector<double> g(n);
    for (std::size_t k = 1; k <= n; ++k) g[k - 1] = static_cast<double>(2 * k - 1) / static_cast<double>(2 * n);
    return g;
}

inline bool is_unit_uniform(const Distribution1D& dist) {
    const auto* u = dynamic_cast<const UniformDistribution*>(&dist);
    return u && u->support().lo == 0.0 && u->support().hi == 1.0;
}

/// Optimal 2^l-grids of U[0,1] stacked for l = 0..n_levels-1 (2^n_levels - 1 points).
inline std::vector<double> concatenated_sequence(const Distribution1D& dist, std::size_t n_levels) {
    if (!is_unit_uniform(dist))
        throw std::invalid_argument("concatenated_sequence: closed-form optimal grids only for uniform01, got " + dist.name());
    if (n_levels < 1 || n_levels > 40) throw std::invalid_argument("concatenated_sequence: n_levels must be in [1, 40]");
    std::vector<double> out;
    for (std::size_t l = 0; l < n_levels; ++l) {
        const auto g = optimal_uniform_grid(std::size_t{1} << l);
        out.insert(out.end(), g.begin(), g.end());
    }
    return out;
}

struct ScaledTrajectory {
    double p = 2.0;
    std::vector<double> values;  // values[N-1] = N * e_p(a^(N))
    double liminf_proxy = 0.0;
    double limsup_proxy = 0.0;
};

/// min / max of values[N-1] over N in [lo, hi].
inline std::pair<double, double> window_extrema(const std::vector<double>& values, std::size_t lo, std::size_t hi) {
    if (lo < 1 || hi > values.size() || lo > hi)
        throw std::invalid_argument("window [" + std::to_string(lo) + ", " + std::to_string(hi) + "] outside 1.." +
                                    std::to_string(values.size()));
    const auto b = values.begin() + static_cast<std::ptrdiff_t>(lo - 1);
    const auto e = values.begin() + static_cast<std::ptrdiff_t>(hi);
    return {*std::min_element(b, e), *std::max_element(b, e)};
}

/// N * e_p of every prefix of a 1-D sequence; proxies over N in [N_max/2, N_max].
inline ScaledTrajectory scaled_trajectory_1d(const Distribution1D& dist, const std::vector<double>& points, double p) {
    ScaledTrajectory t;
    t.p = p;
    const auto e = distortion_trajectory_1d(dist, points, p);
    t.values.resize(e.size());
    for (std::size_t n = 0; n < e.size(); ++n) t.values[n] = static_cast<double>(n + 1) * e[n];
    const std::size_t n_max = t.values.size();
    std::tie(t.liminf_proxy, t.limsup_proxy) = window_extrema(t.values, std::max<std::size_t>(1, n_max / 2), n_max);
    return t;
}

/// N * e_p(xi_1..xi_N, U[0,1]) for the dyadic Van der Corput sequence.
inline ScaledTrajectory vdc_quantization_constants(double p, std::size_t n_max) {
    if (n_max < 8) throw std::invalid_argument("vdc_quantization_constants: N_max must be >= 8");
    UniformDistribution u;
    return scaled_trajectory_1d(u, vdc(2, n_max), p);
}

struct ProinovCheck {
    double lhs = 0.0;    // |int f - mean f(xi_i)|
    double rhs = 0.0;    // L * D*_N
    double e1 = 0.0;     // e_1(points, U[0,1])
    double dstar = 0.0;  // D*_N
};

/// Integration error of the equal-weight rule against L * D*_N, and e_1 against D*_N (d = 1).
inline ProinovCheck proinov_bound_check(const std::vector<double>& points, const std::function<double(double)>& f,
                                        double lipschitz) {
    ProinovCheck c;
    const double exact_integral = quad::integrate(f, 0.0, 1.0).value;
    c.dstar = star_discrepancy_1d(points);
    KahanSum s;
    for (double x : points) s += f(x);
    c.lhs = std::abs(exact_integral - s.value() / static_cast<double>(points.size()));
    c.rhs = lipschitz * c.dstar;
    UniformDistribution u;
    c.e1 = distortion_exact_1d(u, Quantizer::scalar(points), 1.0).value;
    return c;
}

}  // namespace greedyq
