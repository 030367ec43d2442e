#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "greedyq/distributions.hpp"
#include "greedyq/errors.hpp"
#include "greedyq/parallel.hpp"
#include "greedyq/random.hpp"

namespace greedyq {

struct Nearest {
    std::size_t index = 0;
    double distance = 0.0;
};

namespace detail {

inline double squared_distance(std::span<const double> a, std::span<const double> b) noexcept {
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        const double t = a[j] - b[j];
        s += t * t;
    }
    return s;
}

/// Static kd-tree over the rows of a flat coordinate array. Queries return
/// the same argmin as a linear scan, including the smallest-index tie-break.
class KdTree {
public:
    KdTree() = default;
    KdTree(const std::vector<double>* coords, std::size_t dim) : coords_(coords), dim_(dim) {
        const std::size_t n = coords->size() / dim;
        order_.resize(n);
        std::iota(order_.begin(), order_.end(), std::size_t{0});
        nodes_.reserve(2 * n / kLeaf + 2);
        build(0, n, 0);
    }

    void query(std::span<const double> x, std::size_t& best, double& best_d2) const {
        if (!nodes_.empty()) search(0, x, best, best_d2);
    }

    /// True when some point lies at squared distance <= r2 from x.
    bool any_within(std::span<const double> x, double r2) const {
        return !nodes_.empty() && within(0, x, r2);
    }

private:
    static constexpr std::size_t kLeaf = 8;
    struct Node {
        std::size_t begin, end;
        std::size_t axis = 0;
        double split = 0.0;
        std::int64_t left = -1, right = -1;
    };

    std::span<const double> row(std::size_t i) const { return {coords_->data() + i * dim_, dim_}; }

    std::int64_t build(std::size_t begin, std::size_t end, std::size_t depth) {
        const auto id = static_cast<std::int64_t>(nodes_.size());
        nodes_.push_back({begin, end});
        if (end - begin <= kLeaf) return id;
        const std::size_t axis = depth % dim_;
        const std::size_t mid = begin + (end - begin) / 2;
        std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(begin),
                         order_.begin() + static_cast<std::ptrdiff_t>(mid),
                         order_.begin() + static_cast<std::ptrdiff_t>(end),
                         [&](std::size_t a, std::size_t b) { return row(a)[axis] < row(b)[axis]; });
        nodes_[id].axis = axis;
        nodes_[id].split = row(order_[mid])[axis];
        const auto l = build(begin, mid, depth + 1);
        const auto r = build(mid, end, depth + 1);
        nodes_[id].left = l;
        nodes_[id].right = r;
        return id;
    }

    void search(std::int64_t id, std::span<const double> x, std::size_t& best, double& best_d2) const {
        const Node& n = nodes_[static_cast<std::size_t>(id)];
        if (n.left < 0) {
            for (std::size_t k = n.begin; k < n.end; ++k) {
                const std::size_t i = order_[k];
                const double d2 = squared_distance(x, row(i));
                if (d2 < best_d2 || (d2 == best_d2 && i < best)) {
                    best_d2 = d2;
                    best = i;
                }
            }
            return;
        }
        const double diff = x[n.axis] - n.split;
        const auto near = diff < 0.0 ? n.left : n.right;
        const auto far = diff < 0.0 ? n.right : n.left;
        search(near, x, best, best_d2);
        // Points on the far side are at least |diff| away along this axis.
        // Equal distances must still be visited for the index tie-break.
        if (diff * diff <= best_d2) search(far, x, best, best_d2);
    }

    bool within(std::int64_t id, std::span<const double> x, double r2) const {
        const Node& n = nodes_[static_cast<std::size_t>(id)];
        if (n.left < 0) {
            for (std::size_t k = n.begin; k < n.end; ++k)
                if (squared_distance(x, row(order_[k])) <= r2) return true;
            return false;
        }
        const double diff = x[n.axis] - n.split;
        const auto near = diff < 0.0 ? n.left : n.right;
        const auto far = diff < 0.0 ? n.right : n.left;
        if (within(near, x, r2)) return true;
        return diff * diff <= r2 && within(far, x, r2);
    }

    const std::vector<double>* coords_ = nullptr;
    std::size_t dim_ = 1;
    std::vector<std::size_t> order_;
    std::vector<Node> nodes_;
};

}  // namespace detail

/**
 * Finite point set in R^d (a grid / codebook) with a nearest-neighbour index.
 *
 * d = 1 uses binary search on a sorted view; d >= 2 scans linearly up to
 * kLinearScanLimit points and uses a kd-tree beyond. Ties go to the smallest
 * index in every mode.
 */
class Quantizer {
public:
    static constexpr std::size_t kLinearScanLimit = 512;

    Quantizer(std::size_t dim, std::vector<double> coords) : dim_(dim), coords_(std::move(coords)) {
        if (dim_ == 0) throw std::invalid_argument("Quantizer: dimension must be positive");
        if (coords_.size() % dim_ != 0) throw std::invalid_argument("Quantizer: coordinate count not a multiple of dim");
        index();
    }

    static Quantizer scalar(std::vector<double> pts) { return Quantizer(1, std::move(pts)); }

    Quantizer(const Quantizer& o) : dim_(o.dim_), coords_(o.coords_) { index(); }
    Quantizer& operator=(const Quantizer& o) {
        if (this != &o) {
            dim_ = o.dim_;
            coords_ = o.coords_;
            index();
        }
        return *this;
    }
    Quantizer(Quantizer&& o) noexcept : Quantizer(o) {}
    Quantizer& operator=(Quantizer&& o) noexcept { return *this = static_cast<const Quantizer&>(o); }

    std::size_t dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return coords_.size() / dim_; }
    bool empty() const noexcept { return coords_.empty(); }
    const std::vector<double>& coords() const noexcept { return coords_; }
    std::span<const double> point(std::size_t i) const { return {coords_.data() + i * dim_, dim_}; }

    /// Permutation putting the points in increasing order (d = 1 only).
    const std::vector<std::size_t>& sorted_view() const {
        if (dim_ != 1) throw std::logic_error("sorted_view is defined for d = 1 only");
        return sorted_;
    }

    Nearest nearest(std::span<const double> x) const {
        check(x);
        if (dim_ == 1) return nearest_sorted(x[0]);
        if (size() > kLinearScanLimit) {
            std::size_t best = 0;
            double best_d2 = kInf;
            tree_.query(x, best, best_d2);
            return {best, std::sqrt(best_d2)};
        }
        return nearest_linear(x);
    }

    Nearest nearest(double x) const { return nearest(std::span<const double>(&x, 1)); }

    /// Reference argmin by exhaustive scan.
    Nearest nearest_linear(std::span<const double> x) const {
        check(x);
        std::size_t best = 0;
        double best_d2 = kInf;
        for (std::size_t i = 0; i < size(); ++i) {
            const double d2 = detail::squared_distance(x, point(i));
            if (d2 < best_d2) {
                best_d2 = d2;
                best = i;
            }
        }
        return {best, std::sqrt(best_d2)};
    }

private:
    void check(std::span<const double> x) const {
        if (empty()) throw std::invalid_argument("nearest: empty quantizer");
        if (x.size() != dim_) throw DimensionMismatch(dim_, x.size());
    }

    void index() {
        sorted_.clear();
        sorted_values_.clear();
        tree_ = {};
        if (dim_ == 1) {
            sorted_.resize(size());
            std::iota(sorted_.begin(), sorted_.end(), std::size_t{0});
            std::stable_sort(sorted_.begin(), sorted_.end(),
                             [&](std::size_t a, std::size_t b) { return coords_[a] < coords_[b]; });
            sorted_values_.reserve(size());
            for (std::size_t i : sorted_) sorted_values_.push_back(coords_[i]);
            for (std::size_t k = 1; k < sorted_values_.size(); ++k)
                if (!(sorted_values_[k] > sorted_values_[k - 1]))
                    throw std::invalid_argument("Quantizer: points must be pairwise distinct");
        } else if (size() > kLinearScanLimit) {
            tree_ = detail::KdTree(&coords_, dim_);
        }
    }

    Nearest nearest_sorted(double x) const {
        const auto it = std::lower_bound(sorted_values_.begin(), sorted_values_.end(), x);
        const auto k = static_cast<std::size_t>(it - sorted_values_.begin());
        std::size_t best = 0;
        double best_d2 = kInf;
        auto consider = [&](std::size_t pos) {
            const std::size_t i = sorted_[pos];
            const double t = x - sorted_values_[pos];
            const double d2 = t * t;
            if (d2 < best_d2 || (d2 == best_d2 && i < best)) {
                best_d2 = d2;
                best = i;
            }
        };
        if (k < sorted_values_.size()) consider(k);
        if (k > 0) consider(k - 1);
        return {best, std::sqrt(best_d2)};
    }

    std::size_t dim_;
    std::vector<double> coords_;
    std::vector<std::size_t> sorted_;
    std::vector<double> sorted_values_;
    detail::KdTree tree_;
};

// ---------------------------------------------------------------------------
// Distortion

enum class DistortionMethod { exact1d, monte_carlo };

struct DistortionRecord {
    std::size_t level = 0;
    double p = 2.0;
    double value = 0.0;
    DistortionMethod method = DistortionMethod::exact1d;
    std::size_t mc_samples = 0;
    double std_error = 0.0;
};

/// Midpoint cell boundaries of a sorted 1-D grid; outer cells are unbounded.
inline std::pair<double, double> voronoi_interval(std::span<const double> sorted, std::size_t k) {
    const double l = k == 0 ? -kInf : 0.5 * (sorted[k - 1] + sorted[k]);
    const double r = k + 1 == sorted.size() ? kInf : 0.5 * (sorted[k] + sorted[k + 1]);
    return {l, r};
}

/// e_p(q, X)^p summed exactly over the Voronoi intervals of a 1-D grid.
inline double distortion_power_exact_1d(const Distribution1D& dist, const Quantizer& q, double p) {
    if (q.dim() != 1) throw DimensionMismatch(1, q.dim());
    if (q.empty()) throw std::invalid_argument("distortion: empty quantizer");
    std::vector<double> s;
    s.reserve(q.size());
    for (std::size_t i : q.sorted_view()) s.push_back(q.coords()[i]);
    KahanSum total;
    for (std::size_t k = 0; k < s.size(); ++k) {
        const auto [l, r] = voronoi_interval(s, k);
        total += cell_inertia_p(dist, s[k], l, r, p);
    }
    return total.value();
}

inline DistortionRecord distortion_exact_1d(const Distribution1D& dist, const Quantizer& q, double p) {
    const double power = distortion_power_exact_1d(dist, q, p);
    return {q.size(), p, std::pow(power, 1.0 / p), DistortionMethod::exact1d, 0, 0.0};
}

/**
 * Tracks e_p(a^(N), X) for a 1-D sequence as points are appended.
 *
 * Only the cells adjacent to an inserted point change, so each insertion
 * costs three cell integrals plus one compensated O(N) sum.
 */
class TrajectoryEvaluator1D {
public:
    TrajectoryEvaluator1D(const Distribution1D& dist, double p) : dist_(&dist), p_(p) {}

    /// Inserts x and returns e_p of the grown grid.
    double insert(double x) {
        const auto it = std::lower_bound(sorted_.begin(), sorted_.end(), x);
        if (it != sorted_.end() && *it == x) throw std::invalid_argument("TrajectoryEvaluator1D: duplicate point");
        const auto k = static_cast<std::size_t>(it - sorted_.begin());
        sorted_.insert(it, x);
        contrib_.insert(contrib_.begin() + static_cast<std::ptrdiff_t>(k), 0.0);
        for (std::size_t j = (k == 0 ? 0 : k - 1); j <= std::min(k + 1, sorted_.size() - 1); ++j) {
            const auto [l, r] = voronoi_interval(sorted_, j);
            contrib_[j] = cell_inertia_p(*dist_, sorted_[j], l, r, p_);
        }
        return value();
    }

    double power() const {
        KahanSum s;
        for (double c : contrib_) s += c;
        return s.value();
    }
    double value() const { return std::pow(power(), 1.0 / p_); }
    std::size_t size() const { return sorted_.size(); }
    const std::vector<double>& sorted_points() const { return sorted_; }

private:
    const Distribution1D* dist_;
    double p_;
    std::vector<double> sorted_;
    std::vector<double> contrib_;
};

/// e_p(a^(N)) for N = 1..points.size(), in insertion order.
inline std::vector<double> distortion_trajectory_1d(const Distribution1D& dist, std::span<const double> points, double p) {
    TrajectoryEvaluator1D eval(dist, p);
    std::vector<double> out;
    out.reserve(points.size());
    for (double x : points) out.push_back(eval.insert(x));
    return out;
}

namespace detail {

struct MomentAccumulator {
    KahanSum sum, sum_sq;
    std::size_t n = 0;
    void add(double v) {
        sum += v;
        sum_sq += v * v;
        ++n;
    }
    void merge(const MomentAccumulator& o) {
        sum.merge(o.sum);
        sum_sq.merge(o.sum_sq);
        n += o.n;
    }
};

/// (mean, standard error of the mean)
inline std::pair<double, double> mean_and_se(const MomentAccumulator& acc) {
    const double n = static_cast<double>(acc.n);
    const double mean = acc.sum.value() / n;
    if (acc.n < 2) return {mean, 0.0};
    const double var = std::max(0.0, (acc.sum_sq.value() / n - mean * mean) * n / (n - 1.0));
    return {mean, std::sqrt(var / n)};
}

}  // namespace detail

/// Converts an estimate of E d^p with its standard error into e_p by the delta method.
inline DistortionRecord make_mc_record(std::size_t level, double p, double mean_power, double se_power, std::size_t samples) {
    const double value = std::pow(mean_power, 1.0 / p);
    const double se = mean_power > 0.0 ? value / (p * mean_power) * se_power : 0.0;
    return {level, p, value, DistortionMethod::monte_carlo, samples, se};
}

/// Monte-Carlo e_p(q, X) from `samples` draws, sharded in fixed blocks.
inline DistortionRecord distortion_mc(const DistributionND& dist, const Quantizer& q, double p, std::size_t samples,
                                      std::uint64_t seed) {
    if (samples < 1) throw std::invalid_argument("distortion_mc: samples must be >= 1");
    if (q.dim() != dist.dim()) throw DimensionMismatch(dist.dim(), q.dim());
    const std::uint64_t key = derive_key(seed, "distortion_mc");
    const std::size_t nb = block_count(samples);
    std::vector<detail::MomentAccumulator> partial(nb);
    parallel_blocks(nb, [&](std::size_t b) {
        std::vector<double> x(dist.dim());
        const std::size_t end = std::min(samples, (b + 1) * kSampleBlock);
        for (std::size_t m = b * kSampleBlock; m < end; ++m) {
            SeedStream s = SeedStream::at(key, m);
            dist.sample(s, x);
            const double d = q.nearest(x).distance;
            partial[b].add(p == 2.0 ? d * d : std::pow(d, p));
        }
    });
    detail::MomentAccumulator total;
    for (const auto& acc : partial) total.merge(acc);
    const auto [mean, se] = detail::mean_and_se(total);
    return make_mc_record(q.size(), p, mean, se, samples);
}

// ---------------------------------------------------------------------------
// Voronoi weights and cubature

struct VoronoiWeights {
    std::vector<double> weights;
    std::size_t estimation_samples = 0;  // 0 for exact 1-D masses
};

/// Fraction of samples whose nearest point is a_i.
inline VoronoiWeights voronoi_weights(const DistributionND& dist, const Quantizer& q, std::size_t samples,
                                      std::uint64_t seed) {
    if (samples < 1) throw std::invalid_argument("voronoi_weights: samples must be >= 1");
    if (q.dim() != dist.dim()) throw DimensionMismatch(dist.dim(), q.dim());
    const std::uint64_t key = derive_key(seed, "voronoi_weights");
    const std::size_t nb = block_count(samples);
    std::vector<std::vector<std::size_t>> counts(nb);
    parallel_blocks(nb, [&](std::size_t b) {
        counts[b].assign(q.size(), 0);
        std::vector<double> x(dist.dim());
        const std::size_t end = std::min(samples, (b + 1) * kSampleBlock);
        for (std::size_t m = b * kSampleBlock; m < end; ++m) {
            SeedStream s = SeedStream::at(key, m);
            dist.sample(s, x);
            ++counts[b][q.nearest(x).index];
        }
    });
    std::vector<std::size_t> total(q.size(), 0);
    for (const auto& c : counts)
        for (std::size_t i = 0; i < c.size(); ++i) total[i] += c[i];
    VoronoiWeights w;
    w.estimation_samples = samples;
    w.weights.resize(q.size());
    for (std::size_t i = 0; i < q.size(); ++i)
        w.weights[i] = static_cast<double>(total[i]) / static_cast<double>(samples);
    return w;
}

/// Exact cell masses of a 1-D grid.
inline VoronoiWeights voronoi_weights_exact_1d(const Distribution1D& dist, const Quantizer& q) {
    if (q.dim() != 1) throw DimensionMismatch(1, q.dim());
    std::vector<double> s;
    for (std::size_t i : q.sorted_view()) s.push_back(q.coords()[i]);
    VoronoiWeights w;
    w.weights.assign(q.size(), 0.0);
    const auto& order = q.sorted_view();
    for (std::size_t k = 0; k < s.size(); ++k) {
        const auto [l, r] = voronoi_interval(s, k);
        w.weights[order[k]] = dist.mass(l, r);
    }
    return w;
}

/// Sum_i w_i f(a_i).
template <class F>
double cubature(F&& f, const Quantizer& q, const VoronoiWeights& w) {
    if (w.weights.size() != q.size())
        throw std::invalid_argument("cubature: " + std::to_string(w.weights.size()) + " weights for " +
                                    std::to_string(q.size()) + " points");
    KahanSum s;
    for (std::size_t i = 0; i < q.size(); ++i) s += w.weights[i] * f(q.point(i));
    return s.value();
}

/// Equal weights 1/N, as used by quasi-Monte-Carlo rules.
template <class F>
double cubature(F&& f, const Quantizer& q) {
    KahanSum s;
    for (std::size_t i = 0; i < q.size(); ++i) s += f(q.point(i));
    return s.value() / static_cast<double>(q.size());
}

}  // namespace greedyq
