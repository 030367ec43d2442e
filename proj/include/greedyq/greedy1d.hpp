#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "greedyq/distributions.hpp"
#include "greedyq/errors.hpp"
#include "greedyq/parallel.hpp"
#include "greedyq/quantizer.hpp"
#include "greedyq/sequence.hpp"

namespace greedyq {

enum class Solver1D { lloyd, forgy };

inline const char* to_string(Solver1D s) { return s == Solver1D::lloyd ? "lloyd" : "forgy"; }

inline Solver1D parse_solver_1d(const std::string& s) {
    if (s == "lloyd") return Solver1D::lloyd;
    if (s == "forgy" || s == "newton") return Solver1D::forgy;
    throw std::invalid_argument("unknown 1-d solver '" + s + "' (expected lloyd or forgy)");
}

struct InnerResult {
    double a = 0.0;
    int iterations = 0;
    double residual = 0.0;  // last movement |a_[n+1] - a_[n]|
};

/// Step schedule for the Newton iteration, indexed from 1.
using StepSchedule = std::function<double(int)>;

inline StepSchedule constant_steps(double gamma = 1.0) {
    return [gamma](int) { return gamma; };
}

struct Greedy1DOptions {
    Solver1D solver = Solver1D::lloyd;
    double tol = 1e-12;
    int max_iter = 10000;
    StepSchedule steps = constant_steps();
};

// ---------------------------------------------------------------------------
// Inter-point inertia

struct InertiaTable {
    std::vector<double> points;  // sorted
    std::vector<double> sigma2;  // points.size() + 1 entries, half-lines included
    std::size_t argmax = 0;

    /// Endpoints of interval i, with -inf / +inf for the half-lines.
    std::pair<double, double> interval(std::size_t i) const {
        return {i == 0 ? -kInf : points[i - 1], i == points.size() ? kInf : points[i]};
    }
};

/// Quadratic inertia of the stretch between consecutive points l < r, each
/// half charged to its own endpoint. Infinite ends denote half-lines.
inline double interval_inertia(const Distribution1D& dist, double l, double r) {
    if (std::isinf(l)) return cell_inertia_p(dist, r, -kInf, r, 2.0);
    if (std::isinf(r)) return cell_inertia_p(dist, l, l, kInf, 2.0);
    const double mid = 0.5 * (l + r);
    return cell_inertia_p(dist, l, l, mid, 2.0) + cell_inertia_p(dist, r, mid, r, 2.0);
}

/// Index of the largest entry; entries within a relative 1e-12 of the
/// running maximum count as ties and keep the smaller index.
inline std::size_t argmax_inertia(const std::vector<double>& sigma2) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < sigma2.size(); ++i)
        if (sigma2[i] > sigma2[best] * (1.0 + 1e-12)) best = i;
    return best;
}

inline InertiaTable inertia_table(const Distribution1D& dist, std::vector<double> pts) {
    std::sort(pts.begin(), pts.end());
    if (std::adjacent_find(pts.begin(), pts.end()) != pts.end())
        throw std::invalid_argument("inertia_table: points must be distinct");
    InertiaTable t;
    t.points = std::move(pts);
    t.sigma2.resize(t.points.size() + 1);
    for (std::size_t i = 0; i < t.sigma2.size(); ++i) {
        const auto [l, r] = t.interval(i);
        t.sigma2[i] = t.points.empty() ? cell_inertia_p(dist, dist.mean(), -kInf, kInf, 2.0) : interval_inertia(dist, l, r);
    }
    t.argmax = argmax_inertia(t.sigma2);
    return t;
}

// ---------------------------------------------------------------------------
// Inner one-point solvers

/// Centroid of the cell of a between frozen neighbours left < a < right.
inline double greedy_cell_centroid(const Distribution1D& dist, double left, double right, double a) {
    return restricted_centroid(dist, 0.5 * (left + a), 0.5 * (right + a));
}

namespace detail {

inline void check_start(double left, double right, double start, const char* who) {
    if (!(start > left && start < right))
        throw std::invalid_argument(std::string(who) + ": start " + std::to_string(start) + " not in (" +
                                    std::to_string(left) + ", " + std::to_string(right) + ")");
}

}  // namespace detail

/// Greedy Lloyd I: a <- E(X | X in [(left+a)/2, (right+a)/2]).
inline InnerResult lloyd_fixed_point(const Distribution1D& dist, double left, double right, double start,
                                     double tol = 1e-12, int max_iter = 10000) {
    detail::check_start(left, right, start, "lloyd_fixed_point");
    double a = start;
    double move = kInf;
    for (int it = 1; it <= max_iter; ++it) {
        const double next = greedy_cell_centroid(dist, left, right, a);
        move = std::abs(next - a);
        a = next;
        if (move <= tol) return {a, it, move};
    }
    throw ConvergenceError("lloyd_fixed_point: no convergence after " + std::to_string(max_iter) + " iterations", a,
                           move);
}

/// rho(a) as printed for the Newton variant: the cell mass plus the two
/// boundary density terms. An infinite neighbour contributes nothing.
inline double forgy_curvature(const Distribution1D& dist, double left_nb, double right_nb, double a) {
    double rho = dist.mass(0.5 * (left_nb + a), 0.5 * (right_nb + a));
    if (std::isfinite(left_nb)) rho += 0.5 * (a - left_nb) * dist.pdf(0.5 * (a + left_nb));
    if (std::isfinite(right_nb)) rho += 0.5 * (right_nb - a) * dist.pdf(0.5 * (a + right_nb));
    return rho;
}

/// int_cell (a - x) mu(dx), the half-gradient of the one-point distortion.
inline double forgy_gradient(const Distribution1D& dist, double left, double right, double a) {
    const double l = 0.5 * (left + a), r = 0.5 * (right + a);
    const double m = dist.mass(l, r);
    if (!(m > 0.0)) throw EmptyCell("greedy cell around " + std::to_string(a));
    return a * m - dist.partial_first(l, r);
}

/**
 * Greedy Forgy / Newton zero search a <- a - (gamma_n / rho(a)) * grad(a).
 *
 * Neighbours at +-inf are replaced by the support endpoints when rho is
 * evaluated. A step leaving (left, right) is halved until it stays inside.
 */
inline InnerResult forgy_newton(const Distribution1D& dist, double left, double right, double start,
                                const StepSchedule& steps = constant_steps(), double tol = 1e-12,
                                int max_iter = 10000) {
    if (!dist.absolutely_continuous())
        throw std::invalid_argument("forgy_newton: law has no density (" + dist.name() + ")");
    detail::check_start(left, right, start, "forgy_newton");
    const Interval s = dist.support();
    const double lo = std::max(left, s.lo), hi = std::min(right, s.hi);
    double a = start;
    double move = kInf;
    for (int it = 1; it <= max_iter; ++it) {
        const double rho = forgy_curvature(dist, lo, hi, a);
        if (!(rho > 0.0)) throw CurvatureLoss(rho);
        double step = steps(it) / rho * forgy_gradient(dist, left, right, a);
        double next = a - step;
        for (int h = 0; h < 60 && !(next > lo && next < hi); ++h) {
            step *= 0.5;
            next = a - step;
        }
        move = std::abs(next - a);
        a = next;
        if (move <= tol) return {a, it, move};
    }
    throw ConvergenceError("forgy_newton: no convergence after " + std::to_string(max_iter) + " iterations", a, move);
}

inline InnerResult solve_inner(const Distribution1D& dist, double left, double right, double start,
                               const Greedy1DOptions& opt) {
    if (opt.solver == Solver1D::lloyd) return lloyd_fixed_point(dist, left, right, start, opt.tol, opt.max_iter);
    return forgy_newton(dist, left, right, start, opt.steps, opt.tol, opt.max_iter);
}

// ---------------------------------------------------------------------------
// Sequence builders

namespace detail {

struct Greedy1DCore {
    std::vector<double> points;  // emitted, insertion order
    std::vector<int> iterations;
    std::vector<double> residuals;
    std::vector<double> distortion2;  // sum of sigma^2 after each emitted point
    bool support_exhausted = false;
};

/// Runs the greedy recursion for `levels` new points. `fixed` points are
/// active as nearest neighbours but are not emitted; without them the first
/// point is the mean.
inline Greedy1DCore greedy_1d_core(const Distribution1D& dist, std::size_t levels, const Greedy1DOptions& opt,
                                   std::vector<double> fixed = {}) {
    Greedy1DCore out;
    InertiaTable t = inertia_table(dist, std::move(fixed));
    auto total = [&] {
        KahanSum s;
        for (double v : t.sigma2) s += v;
        return s.value();
    };
    auto insert = [&](std::size_t i0, double a) {
        const auto [l, r] = t.interval(i0);
        const auto pos = t.points.begin() + static_cast<std::ptrdiff_t>(i0);
        t.points.insert(pos, a);
        t.sigma2[i0] = interval_inertia(dist, l, a);
        t.sigma2.insert(t.sigma2.begin() + static_cast<std::ptrdiff_t>(i0) + 1, interval_inertia(dist, a, r));
    };
    out.points.reserve(levels);
    for (std::size_t n = 1; n <= levels; ++n) {
        try {
            if (t.points.empty()) {
                const double a = dist.mean();
                t.points = {a};
                t.sigma2 = {interval_inertia(dist, -kInf, a), interval_inertia(dist, a, kInf)};
                out.points.push_back(a);
                out.iterations.push_back(0);
                out.residuals.push_back(std::abs(a - restricted_centroid(dist, -kInf, kInf)));
                out.distortion2.push_back(total());
                continue;
            }
            const std::size_t i0 = argmax_inertia(t.sigma2);
            if (!(t.sigma2[i0] > 0.0)) {
                out.support_exhausted = true;
                break;
            }
            const auto [left, right] = t.interval(i0);
            const double start = restricted_centroid(dist, left, right);
            double a;
            InnerResult res;
            if (start > left && start < right) {
                res = solve_inner(dist, left, right, start, opt);
                a = res.a;
            } else {
                throw EmptyCell("selected interval has no interior mass");
            }
            if (!(a > left && a < right)) throw Error("inner solver left its interval");
            insert(i0, a);
            out.points.push_back(a);
            out.iterations.push_back(res.iterations);
            out.residuals.push_back(std::abs(a - greedy_cell_centroid(dist, left, right, a)));
            out.distortion2.push_back(total());
        } catch (const LevelError&) {
            throw;
        } catch (const std::exception& e) {
            throw LevelError(n, e.what());
        }
    }
    return out;
}

}  // namespace detail

/**
 * Quadratic greedy sequence of a scalar law: a_1 is the mean, then each
 * level fills the interval of largest local inertia with the inner solver.
 */
inline GreedySequence build_greedy_1d(const Distribution1D& dist, std::size_t n_max, const Greedy1DOptions& opt = {},
                                      double p = 2.0) {
    if (n_max < 1) throw std::invalid_argument("build_greedy_1d: N_max must be >= 1");
    if (p != 2.0) throw std::invalid_argument("build_greedy_1d: only p = 2 is supported");
    auto core = detail::greedy_1d_core(dist, n_max, opt);
    GreedySequence seq;
    seq.dim = 1;
    seq.coords = std::move(core.points);
    seq.solver = to_string(opt.solver);
    seq.iterations = std::move(core.iterations);
    seq.residuals = std::move(core.residuals);
    seq.support_exhausted = core.support_exhausted;
    for (std::size_t n = 0; n < core.distortion2.size(); ++n)
        seq.trajectory.push_back({n + 1, 2.0, std::sqrt(core.distortion2[n]), DistortionMethod::exact1d, 0, 0.0});
    return seq;
}

/**
 * Greedy sequence of a law symmetric about 0 built from its positive half:
 * the half law is solved with 0 as a fixed active point, and the output is
 * 0, b_1, -b_1, b_2, -b_2, ... The trajectory is evaluated on the full law.
 */
inline GreedySequence build_greedy_symmetric(const Distribution1D& dist, std::size_t n_max,
                                             const Greedy1DOptions& opt = {}) {
    if (n_max < 1) throw std::invalid_argument("build_greedy_symmetric: N_max must be >= 1");
    if (!dist.symmetric_about_zero()) throw std::invalid_argument(dist.name() + " is not symmetric about 0");
    const auto half = dist.positive_half();
    if (!half) throw std::invalid_argument(dist.name() + ": no conditioned half law available");
    auto core = detail::greedy_1d_core(*half, n_max / 2, opt, {0.0});

    GreedySequence seq;
    seq.dim = 1;
    seq.solver = to_string(opt.solver);
    seq.coords.push_back(0.0);
    seq.iterations.push_back(0);
    seq.residuals.push_back(std::abs(restricted_centroid(dist, -kInf, kInf)));
    for (std::size_t k = 0; k < core.points.size() && seq.coords.size() < n_max; ++k) {
        for (double sgn : {1.0, -1.0}) {
            if (seq.coords.size() == n_max) break;
            seq.coords.push_back(sgn * core.points[k]);
            seq.iterations.push_back(core.iterations[k]);
            seq.residuals.push_back(core.residuals[k]);
        }
    }
    seq.support_exhausted = core.support_exhausted;
    TrajectoryEvaluator1D eval(dist, 2.0);
    for (std::size_t n = 0; n < seq.coords.size(); ++n)
        seq.trajectory.push_back({n + 1, 2.0, eval.insert(seq.coords[n]), DistortionMethod::exact1d, 0, 0.0});
    return seq;
}

/// |a_N - E(X | X in W_N)| at every level, with W_N the closed Voronoi cell
/// of a_N in a^(N); recomputed from scratch on `dist`.
inline std::vector<double> stationarity_residuals(const Distribution1D& dist, std::span<const double> points) {
    std::vector<double> sorted;
    std::vector<double> out;
    out.reserve(points.size());
    for (double a : points) {
        const auto it = std::lower_bound(sorted.begin(), sorted.end(), a);
        const double l = it == sorted.begin() ? -kInf : *(it - 1);
        const double r = it == sorted.end() ? kInf : *it;
        sorted.insert(it, a);
        out.push_back(std::abs(a - greedy_cell_centroid(dist, l, r, a)));
    }
    return out;
}

/// e_q of every prefix of a 1-D sequence (the sequence may have been built for another exponent).
inline std::vector<DistortionRecord> evaluate_trajectory_1d(const Distribution1D& dist, const GreedySequence& seq,
                                                            double q) {
    if (seq.dim != 1) throw DimensionMismatch(1, seq.dim);
    const auto values = distortion_trajectory_1d(dist, seq.coords, q);
    std::vector<DistortionRecord> out;
    out.reserve(values.size());
    for (std::size_t n = 0; n < values.size(); ++n)
        out.push_back({n + 1, q, values[n], DistortionMethod::exact1d, 0, 0.0});
    return out;
}

}  // namespace greedyq
