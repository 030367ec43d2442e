#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "greedyq/distributions.hpp"
#include "greedyq/errors.hpp"
#include "greedyq/parallel.hpp"
#include "greedyq/quantizer.hpp"
#include "greedyq/random.hpp"
#include "greedyq/sequence.hpp"

namespace greedyq {

enum class SolverND { rlloyd, clvq };

inline const char* to_string(SolverND s) { return s == SolverND::rlloyd ? "rlloyd" : "clvq"; }

inline SolverND parse_solver_nd(const std::string& s) {
    if (s == "rlloyd" || s == "lloyd") return SolverND::rlloyd;
    if (s == "clvq") return SolverND::clvq;
    throw std::invalid_argument("unknown d-dimensional solver '" + s + "' (expected rlloyd or clvq)");
}

/// farthest: the candidate farthest from a^(N-1).
/// max_gain: the candidate whose insertion lowers the distortion of a batch
/// of M(N) draws the most.
enum class StartRule { farthest, max_gain };

inline const char* to_string(StartRule r) { return r == StartRule::farthest ? "farthest" : "max_gain"; }

inline StartRule parse_start_rule(const std::string& s) {
    if (s == "farthest") return StartRule::farthest;
    if (s == "max_gain") return StartRule::max_gain;
    throw std::invalid_argument("unknown start rule '" + s + "' (expected farthest or max_gain)");
}

struct StochasticRunConfig {
    /// M(N) = mc_base + mc_per_level * N
    std::size_t mc_per_level = 1000;
    std::size_t mc_base = 0;
    double clvq_c = 1.0;
    double clvq_alpha = 0.75;
    bool averaging = true;
    std::uint64_t seed = 0;
    double tol_factor = 1e-4;
    int max_sweeps = 50;
    std::size_t start_candidates = 64;
    /// How a level picks its start among the candidates.
    StartRule start_rule = StartRule::max_gain;
    int max_fallbacks = 5;
    /// Size of the fixed sample used to estimate the trajectory.
    std::size_t eval_samples = 1'000'000;

    std::size_t samples(std::size_t level) const { return mc_base + mc_per_level * level; }
    double gamma(std::size_t n) const { return clvq_c / (clvq_c + std::pow(static_cast<double>(n), clvq_alpha)); }

    void validate() const {
        if (samples(1) < 1) throw std::invalid_argument("M(N) must be >= 1");
        if (!(clvq_alpha > 0.5 && clvq_alpha < 1.0)) throw std::invalid_argument("clvq alpha must lie in (1/2, 1)");
        if (!(clvq_c > 0.0)) throw std::invalid_argument("clvq c must be positive");
        if (max_sweeps < 1) throw std::invalid_argument("max_sweeps must be >= 1");
        if (start_candidates < 1) throw std::invalid_argument("start_candidates must be >= 1");
        if (eval_samples < 1) throw std::invalid_argument("eval_samples must be >= 1");
    }
};

/**
 * Frozen points a^(N-1) with the one query the stochastic solvers need:
 * does some frozen point lie at least as close to x as the moving point?
 * Ties go to the frozen point, so the moving cell is open.
 */
class FrozenSet {
public:
    explicit FrozenSet(std::size_t dim, std::vector<double> coords = {}) : dim_(dim), coords_(std::move(coords)) {
        if (coords_.size() % dim_ != 0) throw std::invalid_argument("FrozenSet: bad coordinate count");
        if (size() > kTreeThreshold) tree_ = std::make_unique<detail::KdTree>(&coords_, dim_);
    }
    FrozenSet(const FrozenSet&) = delete;
    FrozenSet& operator=(const FrozenSet&) = delete;

    std::size_t dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return coords_.size() / dim_; }
    bool empty() const noexcept { return coords_.empty(); }
    std::span<const double> point(std::size_t i) const { return {coords_.data() + i * dim_, dim_}; }

    /// True when x falls in the open cell of a moving point at squared distance d2a.
    bool moving_wins(std::span<const double> x, double d2a) const {
        if (tree_) return !tree_->any_within(x, d2a);
        for (std::size_t i = 0; i < size(); ++i)
            if (detail::squared_distance(x, point(i)) <= d2a) return false;
        return true;
    }

    double min_squared_distance(std::span<const double> x) const {
        double best = kInf;
        if (tree_) {
            std::size_t idx = 0;
            tree_->query(x, idx, best);
            return best;
        }
        for (std::size_t i = 0; i < size(); ++i) best = std::min(best, detail::squared_distance(x, point(i)));
        return best;
    }

private:
    static constexpr std::size_t kTreeThreshold = 16;
    std::size_t dim_;
    std::vector<double> coords_;
    std::unique_ptr<detail::KdTree> tree_;
};

struct LevelResult {
    std::vector<double> a;
    std::vector<double> averaged;  // Ruppert-Polyak mean (CLVQ only)
    double residual = 0.0;         // last movement (Lloyd) or |a - averaged| (CLVQ)
    int sweeps = 0;
    int fallbacks = 0;
    bool converged = false;
};

namespace detail {

/// Running sums for the ratio estimator of E(X | X in cell).
struct CellSums {
    std::vector<KahanSum> sum, sum_sq;
    std::size_t count = 0;
    explicit CellSums(std::size_t d = 0) : sum(d), sum_sq(d) {}
    void merge(const CellSums& o) {
        for (std::size_t j = 0; j < sum.size(); ++j) {
            sum[j].merge(o.sum[j]);
            sum_sq[j].merge(o.sum_sq[j]);
        }
        count += o.count;
    }
    std::vector<double> centroid() const {
        std::vector<double> c(sum.size());
        for (std::size_t j = 0; j < c.size(); ++j) c[j] = sum[j].value() / static_cast<double>(count);
        return c;
    }
    /// Trace of the covariance of the centroid estimate.
    double centroid_variance() const {
        if (count < 2) return kInf;
        const double n = static_cast<double>(count);
        double tr = 0.0;
        for (std::size_t j = 0; j < sum.size(); ++j) {
            const double m = sum[j].value() / n;
            tr += std::max(0.0, sum_sq[j].value() / n - m * m) / (n - 1.0);
        }
        return tr;
    }
};

/// Sums over the samples of batch `key` that fall in the open cell of a.
inline CellSums cell_sums(const DistributionND& dist, const FrozenSet& frozen, std::span<const double> a,
                          std::uint64_t key, std::size_t samples) {
    const std::size_t d = dist.dim();
    const std::size_t nb = block_count(samples);
    std::vector<CellSums> parts(nb, CellSums(d));
    parallel_blocks(nb, [&](std::size_t b) {
        std::vector<double> x(d);
        const std::size_t end = std::min(samples, (b + 1) * kSampleBlock);
        for (std::size_t m = b * kSampleBlock; m < end; ++m) {
            SeedStream s = SeedStream::at(key, m);
            dist.sample(s, x);
            if (!frozen.moving_wins(x, squared_distance(x, a))) continue;
            for (std::size_t j = 0; j < d; ++j) {
                parts[b].sum[j] += x[j];
                parts[b].sum_sq[j] += x[j] * x[j];
            }
            ++parts[b].count;
        }
    });
    CellSums total(d);
    for (const auto& p : parts) total.merge(p);
    return total;
}

/// The sample of batch `key` farthest from the frozen set (smallest index on ties).
inline std::vector<double> farthest_sample(const DistributionND& dist, const FrozenSet& frozen, std::uint64_t key,
                                           std::size_t samples) {
    const std::size_t d = dist.dim();
    const std::size_t nb = block_count(samples);
    std::vector<std::pair<double, std::vector<double>>> best(nb, {-1.0, {}});
    parallel_blocks(nb, [&](std::size_t b) {
        std::vector<double> x(d);
        const std::size_t end = std::min(samples, (b + 1) * kSampleBlock);
        for (std::size_t m = b * kSampleBlock; m < end; ++m) {
            SeedStream s = SeedStream::at(key, m);
            dist.sample(s, x);
            const double d2 = frozen.min_squared_distance(x);
            if (d2 > best[b].first) best[b] = {d2, x};
        }
    });
    std::size_t pick = 0;
    for (std::size_t b = 1; b < nb; ++b)
        if (best[b].first > best[pick].first) pick = b;
    return best[pick].second;
}

inline double euclidean(std::span<const double> a, std::span<const double> b) {
    return std::sqrt(squared_distance(a, b));
}

}  // namespace detail

namespace detail {

/// Mean of the iterates from the earliest sweep k such that every later
/// iterate lies within 4 centroid standard errors of the mean over [k, K).
/// At least `min_window` iterates are always averaged.
inline std::vector<double> settled_mean(const std::vector<std::vector<double>>& iterates,
                                        const std::vector<double>& std_errors, std::size_t min_window = 5) {
    const std::size_t k_max = iterates.size() - std::min(iterates.size(), min_window);
    const std::size_t d = iterates.front().size();
    auto mean_from = [&](std::size_t k) {
        std::vector<double> m(d, 0.0);
        for (std::size_t i = k; i < iterates.size(); ++i)
            for (std::size_t j = 0; j < d; ++j) m[j] += iterates[i][j];
        for (double& v : m) v /= static_cast<double>(iterates.size() - k);
        return m;
    };
    for (std::size_t k = 0; k < k_max; ++k) {
        const auto m = mean_from(k);
        bool settled = true;
        for (std::size_t i = k; i < iterates.size() && settled; ++i)
            settled = euclidean(iterates[i], m) <= 4.0 * std_errors[i];
        if (settled) return m;
    }
    return mean_from(k_max);
}

}  // namespace detail

/**
 * Randomized greedy Lloyd I for one level: the moving point is replaced by
 * the empirical centroid of its open cell, one fresh batch of M(N) samples
 * per sweep, until the move is below tol_factor * scale.
 *
 * Without convergence the result averages the iterates once the drift from
 * the start has died out (see settled_mean), which removes most batch noise.
 */
inline LevelResult randomized_lloyd_level(const DistributionND& dist, const FrozenSet& frozen,
                                          std::vector<double> start, const StochasticRunConfig& cfg,
                                          std::uint64_t level_key, std::size_t level, double scale) {
    if (start.size() != dist.dim()) throw DimensionMismatch(dist.dim(), start.size());
    const std::size_t m = cfg.samples(level);
    const double tol = cfg.tol_factor * scale;
    LevelResult out;
    std::vector<double> a = std::move(start);
    std::vector<std::vector<double>> iterates;
    std::vector<double> std_errors;
    for (int sweep = 0; sweep < cfg.max_sweeps; ++sweep) {
        const std::uint64_t key = derive_key(level_key, derive_key(0x5eedULL, static_cast<std::uint64_t>(sweep)));
        detail::CellSums sums = detail::cell_sums(dist, frozen, a, key, m);
        out.sweeps = sweep + 1;
        if (sums.count == 0) {
            if (++out.fallbacks >= cfg.max_fallbacks)
                throw Error("empty cell in " + std::to_string(out.fallbacks) + " sweeps");
            a = detail::farthest_sample(dist, frozen, key, m);
            iterates.clear();
            std_errors.clear();
            continue;
        }
        std::vector<double> next = sums.centroid();
        out.residual = detail::euclidean(next, a);
        a = std::move(next);
        if (out.residual <= tol) {
            out.converged = true;
            out.a = a;
            return out;
        }
        iterates.push_back(a);
        std_errors.push_back(std::sqrt(sums.centroid_variance()));
    }
    out.a = iterates.empty() ? a : detail::settled_mean(iterates, std_errors);
    return out;
}

/**
 * Greedy CLVQ for one level with Ruppert-Polyak averaging. The moving point
 * only updates on stimuli it wins against every frozen point.
 */
inline LevelResult clvq_level(const DistributionND& dist, const FrozenSet& frozen, std::vector<double> start,
                              const StochasticRunConfig& cfg, std::uint64_t level_key, std::size_t level) {
    if (start.size() != dist.dim()) throw DimensionMismatch(dist.dim(), start.size());
    const std::size_t d = dist.dim();
    const std::size_t steps = cfg.samples(level);
    const std::uint64_t key = derive_key(level_key, "clvq");
    std::vector<double> a = std::move(start), x(d);
    std::vector<KahanSum> avg(d);
    for (std::size_t n = 0; n < steps; ++n) {
        for (std::size_t j = 0; j < d; ++j) avg[j] += a[j];
        SeedStream s = SeedStream::at(key, n);
        dist.sample(s, x);
        if (!frozen.moving_wins(x, detail::squared_distance(x, a))) continue;
        const double g = cfg.gamma(n + 1);
        for (std::size_t j = 0; j < d; ++j) a[j] -= g * (a[j] - x[j]);
    }
    LevelResult out;
    out.averaged.resize(d);
    for (std::size_t j = 0; j < d; ++j) out.averaged[j] = avg[j].value() / static_cast<double>(steps);
    out.residual = detail::euclidean(a, out.averaged);
    out.a = std::move(a);
    out.sweeps = 1;
    out.converged = true;
    return out;
}

/**
 * Monte-Carlo e_p of a growing grid on one fixed sample (common random
 * numbers). Samples are drawn exactly as distortion_mc draws them for the
 * same seed, so each level matches a fresh distortion_mc call.
 */
class MCTrajectoryEvaluator {
public:
    MCTrajectoryEvaluator(const DistributionND& dist, std::size_t samples, std::uint64_t seed, double p = 2.0)
        : dim_(dist.dim()), n_(samples), p_(p), x_(samples * dist.dim()), d2_(samples, kInf) {
        const std::uint64_t key = derive_key(seed, "distortion_mc");
        parallel_blocks(block_count(n_), [&](std::size_t b) {
            const std::size_t end = std::min(n_, (b + 1) * kSampleBlock);
            for (std::size_t m = b * kSampleBlock; m < end; ++m) {
                SeedStream s = SeedStream::at(key, m);
                dist.sample(s, std::span<double>(x_.data() + m * dim_, dim_));
            }
        });
    }

    /// Adds a point and returns the estimate for the grown grid.
    DistortionRecord insert(std::span<const double> a) {
        if (a.size() != dim_) throw DimensionMismatch(dim_, a.size());
        ++level_;
        const std::size_t nb = block_count(n_);
        std::vector<detail::MomentAccumulator> parts(nb);
        parallel_blocks(nb, [&](std::size_t b) {
            const std::size_t end = std::min(n_, (b + 1) * kSampleBlock);
            for (std::size_t m = b * kSampleBlock; m < end; ++m) {
                const double d2 = detail::squared_distance(std::span<const double>(x_.data() + m * dim_, dim_), a);
                if (d2 < d2_[m]) d2_[m] = d2;
                parts[b].add(p_ == 2.0 ? d2_[m] : std::pow(d2_[m], 0.5 * p_));
            }
        });
        detail::MomentAccumulator total;
        for (const auto& acc : parts) total.merge(acc);
        const auto [mean, se] = detail::mean_and_se(total);
        return make_mc_record(level_, p_, mean, se, n_);
    }

    /// Estimate for a^(N) plus a candidate point, without inserting it.
    double peek(std::span<const double> a) const {
        const std::size_t nb = block_count(n_);
        std::vector<KahanSum> parts(nb);
        parallel_blocks(nb, [&](std::size_t b) {
            const std::size_t end = std::min(n_, (b + 1) * kSampleBlock);
            for (std::size_t m = b * kSampleBlock; m < end; ++m) {
                const double d2 = detail::squared_distance(std::span<const double>(x_.data() + m * dim_, dim_), a);
                const double v = std::min(d2, d2_[m]);
                parts[b] += p_ == 2.0 ? v : std::pow(v, 0.5 * p_);
            }
        });
        KahanSum total;
        for (const auto& s : parts) total.merge(s);
        return std::pow(total.value() / static_cast<double>(n_), 1.0 / p_);
    }

private:
    std::size_t dim_, n_;
    double p_;
    std::size_t level_ = 0;
    std::vector<double> x_;
    std::vector<double> d2_;
};

namespace detail {

/// Of `count` draws from mu, the one farthest from the frozen set.
inline std::vector<double> pick_start(const DistributionND& dist, const FrozenSet& frozen, std::uint64_t key,
                                      std::size_t count) {
    std::vector<double> x(dist.dim()), best;
    double best_d2 = -1.0;
    for (std::size_t m = 0; m < count; ++m) {
        SeedStream s = SeedStream::at(key, m);
        dist.sample(s, x);
        const double d2 = frozen.min_squared_distance(x);
        if (d2 > best_d2) {
            best_d2 = d2;
            best = x;
        }
    }
    return best;
}

/// Of `count` draws from mu, the one maximising the empirical distortion
/// reduction sum_m max(0, d(X_m, frozen)^2 - |X_m - c|^2) over `samples` draws.
inline std::vector<double> pick_start_by_gain(const DistributionND& dist, const FrozenSet& frozen,
                                              std::uint64_t key, std::size_t count, std::size_t samples) {
    const std::size_t d = dist.dim();
    std::vector<double> cand(count * d);
    const std::uint64_t ckey = derive_key(key, "candidates");
    for (std::size_t c = 0; c < count; ++c) {
        SeedStream s = SeedStream::at(ckey, c);
        dist.sample(s, std::span<double>(cand.data() + c * d, d));
    }
    const std::uint64_t bkey = derive_key(key, "batch");
    const std::size_t nb = block_count(samples);
    std::vector<std::vector<KahanSum>> gain(nb, std::vector<KahanSum>(count));
    parallel_blocks(nb, [&](std::size_t b) {
        std::vector<double> x(d);
        const std::size_t end = std::min(samples, (b + 1) * kSampleBlock);
        for (std::size_t m = b * kSampleBlock; m < end; ++m) {
            SeedStream s = SeedStream::at(bkey, m);
            dist.sample(s, x);
            const double df = frozen.min_squared_distance(x);
            for (std::size_t c = 0; c < count; ++c) {
                const double dc = squared_distance(x, std::span<const double>(cand.data() + c * d, d));
                if (dc < df) gain[b][c] += df - dc;
            }
        }
    });
    std::size_t best = 0;
    double best_gain = -1.0;
    for (std::size_t c = 0; c < count; ++c) {
        KahanSum g;
        for (std::size_t b = 0; b < nb; ++b) g.merge(gain[b][c]);
        if (g.value() > best_gain) {
            best_gain = g.value();
            best = c;
        }
    }
    return {cand.begin() + static_cast<std::ptrdiff_t>(best * d), cand.begin() + static_cast<std::ptrdiff_t>((best + 1) * d)};
}

}  // namespace detail

/**
 * Greedy sequence in R^d by randomized Lloyd or CLVQ. Level 1 starts at the
 * mean; level N >= 2 starts at one of `start_candidates` draws chosen by
 * cfg.start_rule.
 * Every level gets a stationarity check on an independent batch: the
 * residual |c_hat - a_N| is stored with the bound 3 * sqrt(tr Cov(c_hat)).
 */
inline GreedySequence build_greedy_nd(const DistributionND& dist, std::size_t n_max, const StochasticRunConfig& cfg,
                                      SolverND solver = SolverND::rlloyd) {
    if (n_max < 1) throw std::invalid_argument("build_greedy_nd: N_max must be >= 1");
    cfg.validate();
    const std::size_t d = dist.dim();
    const std::uint64_t root = derive_key(cfg.seed, "greedy_nd");
    MCTrajectoryEvaluator eval(dist, cfg.eval_samples, derive_key(cfg.seed, "evaluation"));

    GreedySequence seq;
    seq.dim = d;
    seq.solver = to_string(solver);
    seq.status = "greedy candidate";
    double scale = eval.peek(dist.mean());
    for (std::size_t level = 1; level <= n_max; ++level) {
        try {
            const std::uint64_t level_key = derive_key(root, static_cast<std::uint64_t>(level));
            const FrozenSet frozen(d, seq.coords);
            std::vector<double> start;
            if (level == 1)
                start = dist.mean();
            else if (cfg.start_rule == StartRule::farthest)
                start = detail::pick_start(dist, frozen, derive_key(level_key, "start"), cfg.start_candidates);
            else
                start = detail::pick_start_by_gain(dist, frozen, derive_key(level_key, "start"), cfg.start_candidates,
                                                   cfg.samples(level));
            LevelResult res = solver == SolverND::rlloyd
                                  ? randomized_lloyd_level(dist, frozen, std::move(start), cfg, level_key, level, scale)
                                  : clvq_level(dist, frozen, std::move(start), cfg, level_key, level);
            const std::vector<double>& a = (solver == SolverND::clvq && cfg.averaging) ? res.averaged : res.a;
            for (std::size_t i = 0; i < frozen.size(); ++i)
                if (detail::squared_distance(frozen.point(i), a) == 0.0) throw Error("new point duplicates a frozen point");

            const auto check = detail::cell_sums(dist, frozen, a, derive_key(level_key, "check"), cfg.samples(level));
            if (check.count == 0) throw EmptyCell("stationarity check batch missed the new cell");
            seq.residuals.push_back(detail::euclidean(check.centroid(), a));
            seq.residual_bounds.push_back(3.0 * std::sqrt(check.centroid_variance()));
            seq.iterations.push_back(res.sweeps);

            seq.coords.insert(seq.coords.end(), a.begin(), a.end());
            seq.trajectory.push_back(eval.insert(a));
            scale = seq.trajectory.back().value;
        } catch (const LevelError&) {
            throw;
        } catch (const std::exception& e) {
            throw LevelError(level, e.what());
        }
    }
    return seq;
}

}  // namespace greedyq
