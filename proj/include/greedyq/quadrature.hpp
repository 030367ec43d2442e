#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <queue>
#include <stdexcept>
#include <vector>

#include "greedyq/parallel.hpp"

namespace greedyq::quad {

struct Result {
    double value = 0.0;
    double abs_error = 0.0;
    int intervals = 0;
    bool converged = false;
};

namespace detail {

// Gauss-Kronrod 7/15 abscissae and weights (QUADPACK qk15).
inline constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
    double a, b, value, error;
    bool operator<(const Segment& o) const { return error < o.error; }
};

template <class F>
Segment kronrod15(F& f, double a, double b) {
    const double center = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const double fc = f(center);
    double gauss = fc * kWg[3];
    double kronrod = fc * kWgk[7];
    for (int j = 0; j < 7; ++j) {
        const double dx = half * kXgk[j];
        const double f1 = f(center - dx);
        const double f2 = f(center + dx);
        kronrod += kWgk[j] * (f1 + f2);
        if (j % 2 == 1) gauss += kWg[j / 2] * (f1 + f2);
    }
    return {a, b, kronrod * half, std::abs((kronrod - gauss) * half)};
}

}  // namespace detail

/// Globally adaptive Gauss-Kronrod (7,15) on a finite interval: the segment
/// with the largest error estimate is bisected until the summed estimate is
/// below max(abs_tol, rel_tol*|I|) or the segment budget is used up.
template <class F>
Result integrate(F&& f, double a, double b, double abs_tol = 1e-12, double rel_tol = 1e-12,
                 int max_segments = 2000) {
    if (!(std::isfinite(a) && std::isfinite(b)))
        throw std::invalid_argument("quad::integrate: infinite limits must be mapped first");
    Result out;
    if (a == b) {
        out.converged = true;
        return out;
    }
    double sign = 1.0;
    if (b < a) {
        std::swap(a, b);
        sign = -1.0;
    }
    std::priority_queue<detail::Segment> heap;
    heap.push(detail::kronrod15(f, a, b));
    double total = heap.top().value;
    double error = heap.top().error;
    int segments = 1;
    while (error > std::max(abs_tol, rel_tol * std::abs(total)) && segments < max_segments) {
        const detail::Segment worst = heap.top();
        heap.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        if (!(mid > worst.a && mid < worst.b)) {
            heap.push(worst);
            break;  // interval at machine resolution
        }
        const detail::Segment left = detail::kronrod15(f, worst.a, mid);
        const detail::Segment right = detail::kronrod15(f, mid, worst.b);
        heap.push(left);
        heap.push(right);
        ++segments;
        // Recompute from scratch periodically to avoid drift in the running sums.
        total += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        if (segments % 64 == 0) {
            KahanSum v, e;
            auto copy = heap;
            while (!copy.empty()) {
                v += copy.top().value;
                e += copy.top().error;
                copy.pop();
            }
            total = v.value();
            error = e.value();
        }
    }
    KahanSum v, e;
    while (!heap.empty()) {
        v += heap.top().value;
        e += heap.top().error;
        heap.pop();
    }
    out.value = sign * v.value();
    out.abs_error = e.value();
    out.intervals = segments;
    out.converged = out.abs_error <= std::max(abs_tol, rel_tol * std::abs(out.value));
    return out;
}

}  // namespace greedyq::quad
