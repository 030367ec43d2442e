#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "greedyq/errors.hpp"
#include "greedyq/quadrature.hpp"
#include "greedyq/random.hpp"
#include "greedyq/special.hpp"

namespace greedyq {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct Interval {
    double lo = -kInf;
    double hi = kInf;
};

/**
 * Scalar law described by the functionals the greedy formulas consume:
 * F (cdf), K (cumulative first moment) and the cumulative second moment.
 *
 * Partial moments over [l, r] are exposed directly so that implementations
 * can avoid the cancellation of F(r) - F(l) in the tails. Endpoints may be
 * infinite; they are clipped to the support.
 */
class Distribution1D {
public:
    virtual ~Distribution1D() = default;

    virtual std::string name() const = 0;
    virtual Interval support() const = 0;
    virtual double pdf(double x) const = 0;
    virtual double cdf(double x) const = 0;
    virtual double sf(double x) const { return 1.0 - cdf(x); }
    /// K(x) = int_{(-inf, x]} u mu(du)
    virtual double first_moment(double x) const = 0;
    /// int_{(-inf, x]} u^2 mu(du)
    virtual double second_moment(double x) const = 0;
    virtual double quantile(double u) const = 0;
    /// x with sf(x) = v; overridden where the upper tail can be inverted accurately.
    virtual double upper_quantile(double v) const { return quantile(1.0 - v); }
    virtual double mean() const = 0;
    virtual bool strongly_unimodal() const = 0;
    virtual bool absolutely_continuous() const { return true; }
    /// Location of the single atom for degenerate (Dirac) laws.
    virtual std::optional<double> atom() const { return std::nullopt; }
    virtual bool symmetric_about_zero() const { return false; }
    /// The law conditioned on [0, +inf), for symmetric laws that provide it.
    virtual std::shared_ptr<const Distribution1D> positive_half() const { return nullptr; }

    virtual double mass(double l, double r) const {
        if (!clip(l, r)) return 0.0;
        if (cdf(l) > 0.5) return std::max(0.0, sf(l) - sf(r));
        return std::max(0.0, cdf(r) - cdf(l));
    }
    virtual double partial_first(double l, double r) const {
        if (!clip(l, r)) return 0.0;
        return first_moment(r) - first_moment(l);
    }
    virtual double partial_second(double l, double r) const {
        if (!clip(l, r)) return 0.0;
        return second_moment(r) - second_moment(l);
    }

    /// int_l^r (x - c)^2 mu(dx) from the partial moments.
    virtual double centered_second(double c, double l, double r) const {
        const double m0 = mass(l, r);
        if (m0 == 0.0) return 0.0;
        return std::max(0.0, partial_second(l, r) - 2.0 * c * partial_first(l, r) + c * c * m0);
    }

    double variance() const {
        const double m = mean();
        return second_moment(kInf) - m * m;
    }

protected:
    /// Clips [l, r] to the support; false when the result is empty.
    bool clip(double& l, double& r) const {
        const Interval s = support();
        l = std::max(l, s.lo);
        r = std::min(r, s.hi);
        return r >= l;
    }
};

using Dist1DPtr = std::shared_ptr<const Distribution1D>;

/// Uniform law on [a, b].
class UniformDistribution final : public Distribution1D {
public:
    UniformDistribution(double a = 0.0, double b = 1.0) : a_(a), b_(b) {
        if (!(b > a) || !std::isfinite(a) || !std::isfinite(b))
            throw std::invalid_argument("uniform: need finite a < b");
    }
    std::string name() const override {
        if (a_ == 0.0 && b_ == 1.0) return "uniform01";
        std::ostringstream os;
        os << "uniform(" << a_ << "," << b_ << ")";
        return os.str();
    }
    Interval support() const override { return {a_, b_}; }
    double pdf(double x) const override { return (x >= a_ && x <= b_) ? 1.0 / (b_ - a_) : 0.0; }
    double cdf(double x) const override { return std::clamp((x - a_) / (b_ - a_), 0.0, 1.0); }
    double sf(double x) const override { return std::clamp((b_ - x) / (b_ - a_), 0.0, 1.0); }
    double first_moment(double x) const override {
        const double t = std::clamp(x, a_, b_);
        return (t - a_) * (t + a_) / (2.0 * (b_ - a_));
    }
    double second_moment(double x) const override {
        const double t = std::clamp(x, a_, b_);
        return (t * t * t - a_ * a_ * a_) / (3.0 * (b_ - a_));
    }
    double quantile(double u) const override { return a_ + u * (b_ - a_); }
    double upper_quantile(double v) const override { return b_ - v * (b_ - a_); }
    double mean() const override { return 0.5 * (a_ + b_); }
    bool strongly_unimodal() const override { return true; }
    bool symmetric_about_zero() const override { return a_ == -b_; }

    double mass(double l, double r) const override {
        if (!clip(l, r)) return 0.0;
        return (r - l) / (b_ - a_);
    }
    double partial_first(double l, double r) const override {
        if (!clip(l, r)) return 0.0;
        return (r - l) * (r + l) / (2.0 * (b_ - a_));
    }
    double partial_second(double l, double r) const override {
        if (!clip(l, r)) return 0.0;
        return (r - l) * (r * r + r * l + l * l) / (3.0 * (b_ - a_));
    }
    double centered_second(double c, double l, double r) const override {
        if (!clip(l, r)) return 0.0;
        const double u = r - c, v = l - c;
        return std::max(0.0, (u * u * u - v * v * v) / (3.0 * (b_ - a_)));
    }

private:
    double a_, b_;
};

class HalfNormalDistribution;

/// N(m, s^2), parameterized by mean and standard deviation.
class NormalDistribution final : public Distribution1D {
public:
    NormalDistribution(double m = 0.0, double s = 1.0) : m_(m), s_(s) {
        if (!(s > 0.0) || !std::isfinite(m) || !std::isfinite(s))
            throw std::invalid_argument("normal: need finite mean and sigma > 0");
    }
    std::string name() const override {
        std::ostringstream os;
        os << "normal(" << m_ << "," << s_ << ")";
        return os.str();
    }
    Interval support() const override { return {-kInf, kInf}; }
    double pdf(double x) const override { return special::normal_pdf(z(x)) / s_; }
    double cdf(double x) const override { return special::normal_cdf(z(x)); }
    double sf(double x) const override { return special::normal_sf(z(x)); }
    double first_moment(double x) const override {
        const double t = z(x);
        return m_ * special::normal_cdf(t) - s_ * special::normal_pdf(t);
    }
    double second_moment(double x) const override {
        const double t = z(x);
        const double cdf = special::normal_cdf(t);
        const double pdf = special::normal_pdf(t);
        return (m_ * m_ + s_ * s_) * cdf - 2.0 * m_ * s_ * pdf - s_ * s_ * zpdf(t);
    }
    double quantile(double u) const override { return m_ + s_ * special::normal_quantile(u); }
    double upper_quantile(double v) const override { return m_ + s_ * special::normal_isf(v); }
    double mean() const override { return m_; }
    bool strongly_unimodal() const override { return true; }
    bool symmetric_about_zero() const override { return m_ == 0.0; }
    std::shared_ptr<const Distribution1D> positive_half() const override;

    double partial_first(double l, double r) const override {
        if (!(r >= l)) return 0.0;
        const double zl = z(l), zr = z(r);
        return m_ * mass(l, r) + s_ * (special::normal_pdf(zl) - special::normal_pdf(zr));
    }
    double partial_second(double l, double r) const override {
        if (!(r >= l)) return 0.0;
        const double zl = z(l), zr = z(r);
        const double dpdf = special::normal_pdf(zr) - special::normal_pdf(zl);
        return (m_ * m_ + s_ * s_) * mass(l, r) - 2.0 * m_ * s_ * dpdf -
               s_ * s_ * (zpdf(zr) - zpdf(zl));
    }

private:
    double z(double x) const { return (x - m_) / s_; }
    static double zpdf(double t) { return std::isinf(t) ? 0.0 : t * special::normal_pdf(t); }

    double m_, s_;
};

/// N(0, s^2) conditioned on [0, +inf).
class HalfNormalDistribution final : public Distribution1D {
public:
    explicit HalfNormalDistribution(double s = 1.0) : s_(s) {
        if (!(s > 0.0)) throw std::invalid_argument("halfnormal: need sigma > 0");
    }
    std::string name() const override {
        std::ostringstream os;
        os << "halfnormal(" << s_ << ")";
        return os.str();
    }
    Interval support() const override { return {0.0, kInf}; }
    double pdf(double x) const override {
        return x < 0.0 ? 0.0 : 2.0 * special::normal_pdf(x / s_) / s_;
    }
    double cdf(double x) const override { return x <= 0.0 ? 0.0 : std::erf(x / (s_ * std::numbers::sqrt2)); }
    double sf(double x) const override { return x <= 0.0 ? 1.0 : std::erfc(x / (s_ * std::numbers::sqrt2)); }
    double first_moment(double x) const override {
        if (x <= 0.0) return 0.0;
        return 2.0 * s_ * (special::kInvSqrt2Pi - special::normal_pdf(x / s_));
    }
    double second_moment(double x) const override {
        if (x <= 0.0) return 0.0;
        const double t = x / s_;
        const double tp = std::isinf(t) ? 0.0 : t * special::normal_pdf(t);
        return s_ * s_ * (cdf(x) - 2.0 * tp);
    }
    double quantile(double u) const override {
        if (u <= 0.0) return 0.0;
        return s_ * special::normal_isf(0.5 * (1.0 - u));
    }
    double upper_quantile(double v) const override {
        if (v >= 1.0) return 0.0;
        return s_ * special::normal_isf(0.5 * v);
    }
    double mean() const override { return 2.0 * s_ * special::kInvSqrt2Pi; }
    bool strongly_unimodal() const override { return true; }

    double partial_first(double l, double r) const override {
        if (!clip(l, r)) return 0.0;
        return 2.0 * s_ * (special::normal_pdf(l / s_) - special::normal_pdf(r / s_));
    }
    double partial_second(double l, double r) const override {
        if (!clip(l, r)) return 0.0;
        auto tp = [&](double x) {
            const double t = x / s_;
            return std::isinf(t) ? 0.0 : t * special::normal_pdf(t);
        };
        return s_ * s_ * (mass(l, r) - 2.0 * (tp(r) - tp(l)));
    }

private:
    double s_;
};

inline std::shared_ptr<const Distribution1D> NormalDistribution::positive_half() const {
    if (m_ != 0.0) return nullptr;
    return std::make_shared<HalfNormalDistribution>(s_);
}

/// Exponential law with rate lambda.
class ExponentialDistribution final : public Distribution1D {
public:
    explicit ExponentialDistribution(double rate = 1.0) : rate_(rate) {
        if (!(rate > 0.0) || !std::isfinite(rate))
            throw std::invalid_argument("exponential: need rate > 0");
    }
    std::string name() const override {
        std::ostringstream os;
        os << "exponential(" << rate_ << ")";
        return os.str();
    }
    Interval support() const override { return {0.0, kInf}; }
    double pdf(double x) const override { return x < 0.0 ? 0.0 : rate_ * std::exp(-rate_ * x); }
    double cdf(double x) const override { return x <= 0.0 ? 0.0 : -std::expm1(-rate_ * x); }
    double sf(double x) const override { return x <= 0.0 ? 1.0 : std::exp(-rate_ * x); }
    double first_moment(double x) const override { return partial_first(0.0, x); }
    double second_moment(double x) const override { return partial_second(0.0, x); }
    double quantile(double u) const override { return -std::log1p(-u) / rate_; }
    double upper_quantile(double v) const override { return -std::log(v) / rate_; }
    double mean() const override { return 1.0 / rate_; }
    bool strongly_unimodal() const override { return true; }

    double partial_first(double l, double r) const override {
        if (!clip(l, r)) return 0.0;
        return (tail1(l) - tail1(r)) / rate_;
    }
    double partial_second(double l, double r) const override {
        if (!clip(l, r)) return 0.0;
        return (tail2(l) - tail2(r)) / (rate_ * rate_);
    }

private:
    // rate * int_x^inf u mu(du) and rate^2 * int_x^inf u^2 mu(du)
    double tail1(double x) const {
        if (std::isinf(x)) return 0.0;
        const double t = rate_ * x;
        return std::exp(-t) * (1.0 + t);
    }
    double tail2(double x) const {
        if (std::isinf(x)) return 0.0;
        const double t = rate_ * x;
        return std::exp(-t) * (t * t + 2.0 * t + 2.0);
    }

    double rate_;
};

/// Point mass at c. Used to exercise the degenerate-support paths.
class DiracDistribution final : public Distribution1D {
public:
    explicit DiracDistribution(double c = 0.0) : c_(c) {}
    std::string name() const override {
        std::ostringstream os;
        os << "dirac(" << c_ << ")";
        return os.str();
    }
    Interval support() const override { return {c_, c_}; }
    double pdf(double) const override { return 0.0; }
    double cdf(double x) const override { return x >= c_ ? 1.0 : 0.0; }
    double sf(double x) const override { return x >= c_ ? 0.0 : 1.0; }
    double first_moment(double x) const override { return x >= c_ ? c_ : 0.0; }
    double second_moment(double x) const override { return x >= c_ ? c_ * c_ : 0.0; }
    double quantile(double) const override { return c_; }
    double upper_quantile(double) const override { return c_; }
    double mean() const override { return c_; }
    bool strongly_unimodal() const override { return false; }
    bool absolutely_continuous() const override { return false; }
    std::optional<double> atom() const override { return c_; }

    double mass(double l, double r) const override { return (l <= c_ && c_ <= r) ? 1.0 : 0.0; }
    double partial_first(double l, double r) const override { return c_ * mass(l, r); }
    double partial_second(double l, double r) const override { return c_ * c_ * mass(l, r); }

private:
    double c_;
};

// ---------------------------------------------------------------------------
// d-dimensional laws

/// Sampleable law on R^d. Samplers take the stream as an argument; the
/// objects themselves hold no mutable state.
class DistributionND {
public:
    virtual ~DistributionND() = default;
    virtual std::string name() const = 0;
    virtual std::size_t dim() const = 0;
    virtual void sample(SeedStream& stream, std::span<double> out) const = 0;
    virtual std::vector<double> mean() const = 0;
    virtual std::optional<double> density(std::span<const double>) const { return std::nullopt; }
};

using DistNDPtr = std::shared_ptr<const DistributionND>;

/// N(0, I_d)
class NormalND final : public DistributionND {
public:
    explicit NormalND(std::size_t d) : d_(d) {
        if (d == 0) throw std::invalid_argument("normal_nd: dimension must be positive");
    }
    std::string name() const override { return "normal_nd(" + std::to_string(d_) + ")"; }
    std::size_t dim() const override { return d_; }
    void sample(SeedStream& stream, std::span<double> out) const override {
        for (std::size_t j = 0; j < d_; ++j) out[j] = stream.normal();
    }
    std::vector<double> mean() const override { return std::vector<double>(d_, 0.0); }
    std::optional<double> density(std::span<const double> x) const override {
        double r2 = 0.0;
        for (double v : x) r2 += v * v;
        return std::exp(-0.5 * r2) / std::pow(2.0 * std::numbers::pi, 0.5 * static_cast<double>(d_));
    }

private:
    std::size_t d_;
};

/// U([0,1]^d)
class UniformCube final : public DistributionND {
public:
    explicit UniformCube(std::size_t d) : d_(d) {
        if (d == 0) throw std::invalid_argument("uniform_nd: dimension must be positive");
    }
    std::string name() const override { return "uniform_nd(" + std::to_string(d_) + ")"; }
    std::size_t dim() const override { return d_; }
    void sample(SeedStream& stream, std::span<double> out) const override {
        for (std::size_t j = 0; j < d_; ++j) out[j] = stream.uniform();
    }
    std::vector<double> mean() const override { return std::vector<double>(d_, 0.5); }
    std::optional<double> density(std::span<const double> x) const override {
        for (double v : x)
            if (v < 0.0 || v > 1.0) return 0.0;
        return 1.0;
    }

private:
    std::size_t d_;
};

/// A scalar law seen as a 1-dimensional DistributionND (inverse-cdf sampling).
class WrappedScalar final : public DistributionND {
public:
    explicit WrappedScalar(Dist1DPtr base) : base_(std::move(base)) {}
    std::string name() const override { return base_->name(); }
    std::size_t dim() const override { return 1; }
    void sample(SeedStream& stream, std::span<double> out) const override {
        out[0] = base_->quantile(stream.uniform());
    }
    std::vector<double> mean() const override { return {base_->mean()}; }
    std::optional<double> density(std::span<const double> x) const override {
        if (!base_->absolutely_continuous()) return std::nullopt;
        return base_->pdf(x[0]);
    }
    const Distribution1D& scalar() const { return *base_; }

private:
    Dist1DPtr base_;
};

// ---------------------------------------------------------------------------
// Cell functionals

/// E(X | X in [l, r]). Throws EmptyCell when the interval carries no mass.
inline double restricted_centroid(const Distribution1D& dist, double l, double r) {
    const double m = dist.mass(l, r);
    if (!(m > 0.0)) throw EmptyCell("[" + std::to_string(l) + ", " + std::to_string(r) + "]");
    const Interval s = dist.support();
    const double lo = std::max(l, s.lo), hi = std::min(r, s.hi);
    return std::clamp(dist.partial_first(l, r) / m, lo, hi);
}

namespace detail {

/// int_{x0}^{x1} |x - c|^p mu(dx) with c outside (x0, x1). Tails are mapped
/// through the quantile functions so the integration range is finite.
inline double one_sided_inertia(const Distribution1D& dist, double c, double x0, double x1, double p) {
    if (!(x1 > x0)) return 0.0;
    const double mass = dist.mass(x0, x1);
    if (!(mass > 0.0)) return 0.0;
    const double abs_tol = 1e-12 * std::min(1.0, mass);
    quad::Result res;
    if (std::isfinite(x0) && std::isfinite(x1)) {
        auto f = [&](double x) { return std::pow(std::abs(x - c), p) * dist.pdf(x); };
        res = quad::integrate(f, x0, x1, abs_tol, 1e-10);
    } else if (std::isfinite(x0)) {
        const double v1 = dist.sf(x0);
        auto g = [&](double v) { return std::pow(std::abs(dist.upper_quantile(v) - c), p); };
        res = quad::integrate(g, 0.0, v1, abs_tol, 1e-10, 4000);
    } else if (std::isfinite(x1)) {
        const double u1 = dist.cdf(x1);
        auto g = [&](double u) { return std::pow(std::abs(dist.quantile(u) - c), p); };
        res = quad::integrate(g, 0.0, u1, abs_tol, 1e-10, 4000);
    } else {
        throw std::logic_error("one_sided_inertia: both ends infinite");
    }
    if (!std::isfinite(res.value) || (!res.converged && res.abs_error > 1e-6 * std::max(1.0, std::abs(res.value))))
        throw MomentOverflow("|x - " + std::to_string(c) + "|^" + std::to_string(p) + " on " + dist.name());
    return std::max(0.0, res.value);
}

}  // namespace detail

/// int_l^r |x - center|^p mu(dx) by adaptive quadrature, split at the kink.
inline double cell_inertia_quadrature(const Distribution1D& dist, double center, double l, double r, double p) {
    const Interval s = dist.support();
    l = std::max(l, s.lo);
    r = std::min(r, s.hi);
    if (!(r > l)) return 0.0;
    if (center <= l || center >= r) return detail::one_sided_inertia(dist, center, l, r, p);
    return detail::one_sided_inertia(dist, center, l, center, p) +
           detail::one_sided_inertia(dist, center, center, r, p);
}

/**
 * Local L^p inertia int_l^r |x - center|^p mu(dx).
 *
 * p = 2 and p = 1 use the partial-moment closed forms; other exponents go
 * through adaptive Gauss-Kronrod quadrature split at the center.
 */
inline double cell_inertia_p(const Distribution1D& dist, double center, double l, double r, double p) {
    if (!(p > 0.0)) throw std::invalid_argument("cell_inertia_p: p must be positive");
    if (const auto a = dist.atom()) return dist.mass(l, r) * std::pow(std::abs(*a - center), p);
    if (!(r > l)) return 0.0;
    if (p == 2.0) return dist.centered_second(center, l, r);
    if (p == 1.0) {
        const double split = std::clamp(center, l, r);
        const double right = dist.partial_first(split, r) - center * dist.mass(split, r);
        const double left = center * dist.mass(l, split) - dist.partial_first(l, split);
        return std::max(0.0, left) + std::max(0.0, right);
    }
    return cell_inertia_quadrature(dist, center, l, r, p);
}

// ---------------------------------------------------------------------------
// Catalogue

using AnyDistribution = std::variant<Dist1DPtr, DistNDPtr>;

inline const char* catalogue_listing() {
    return "uniform01, uniform(a,b), normal(mean,sigma), halfnormal(sigma), exponential(rate), "
           "dirac(c), normal_nd(d), uniform_nd(d)";
}

/// Builds a catalogue law by name. Scalar laws come back as Dist1DPtr.
inline AnyDistribution make_builtin(const std::string& name, const std::vector<double>& params) {
    auto want = [&](std::size_t lo, std::size_t hi) {
        if (params.size() < lo || params.size() > hi)
            throw std::invalid_argument(name + ": expected " + std::to_string(lo) +
                                        (hi != lo ? ".." + std::to_string(hi) : "") + " parameters, got " +
                                        std::to_string(params.size()));
    };
    auto dim_param = [&]() {
        want(1, 1);
        const double d = params[0];
        if (!(d >= 1.0) || d != std::floor(d)) throw std::invalid_argument(name + ": dimension must be a positive integer");
        return static_cast<std::size_t>(d);
    };
    if (name == "uniform01") {
        want(0, 0);
        return Dist1DPtr(std::make_shared<UniformDistribution>(0.0, 1.0));
    }
    if (name == "uniform") {
        want(0, 2);
        if (params.empty()) return Dist1DPtr(std::make_shared<UniformDistribution>());
        if (params.size() != 2) throw std::invalid_argument("uniform: expected (a,b)");
        return Dist1DPtr(std::make_shared<UniformDistribution>(params[0], params[1]));
    }
    if (name == "normal") {
        want(0, 2);
        const double m = params.size() > 0 ? params[0] : 0.0;
        const double s = params.size() > 1 ? params[1] : 1.0;
        return Dist1DPtr(std::make_shared<NormalDistribution>(m, s));
    }
    if (name == "halfnormal") {
        want(0, 1);
        return Dist1DPtr(std::make_shared<HalfNormalDistribution>(params.empty() ? 1.0 : params[0]));
    }
    if (name == "exponential") {
        want(0, 1);
        return Dist1DPtr(std::make_shared<ExponentialDistribution>(params.empty() ? 1.0 : params[0]));
    }
    if (name == "dirac") {
        want(0, 1);
        return Dist1DPtr(std::make_shared<DiracDistribution>(params.empty() ? 0.0 : params[0]));
    }
    if (name == "normal_nd") return DistNDPtr(std::make_shared<NormalND>(dim_param()));
    if (name == "uniform_nd") return DistNDPtr(std::make_shared<UniformCube>(dim_param()));
    throw std::invalid_argument("unknown distribution '" + name + "'; catalogue: " + catalogue_listing());
}

/// Parses `name` or `name(p1, p2, ...)` and builds the law.
inline AnyDistribution parse_distribution(const std::string& spec) {
    std::string s;
    for (char c : spec)
        if (!std::isspace(static_cast<unsigned char>(c))) s.push_back(c);
    const auto open = s.find('(');
    std::string name = s.substr(0, open);
    std::vector<double> params;
    if (open != std::string::npos) {
        if (s.back() != ')') throw std::invalid_argument("distribution spec '" + spec + "': missing ')'");
        const std::string body = s.substr(open + 1, s.size() - open - 2);
        std::size_t pos = 0;
        while (pos < body.size()) {
            const auto comma = body.find(',', pos);
            const std::string tok = body.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
            try {
                std::size_t used = 0;
                params.push_back(std::stod(tok, &used));
                if (used != tok.size()) throw std::invalid_argument(tok);
            } catch (const std::exception&) {
                throw std::invalid_argument("distribution spec '" + spec + "': bad parameter '" + tok + "'");
            }
            if (comma == std::string::npos) break;
            pos = comma + 1;
        }
    }
    if (name.empty()) throw std::invalid_argument("empty distribution spec");
    return make_builtin(name, params);
}

inline Dist1DPtr parse_distribution_1d(const std::string& spec) {
    auto any = parse_distribution(spec);
    if (auto* p = std::get_if<Dist1DPtr>(&any)) return *p;
    throw std::invalid_argument("distribution '" + spec + "' is not one-dimensional");
}

/// Parses a law for d-dimensional use; scalar laws are wrapped.
inline DistNDPtr parse_distribution_nd(const std::string& spec) {
    auto any = parse_distribution(spec);
    if (auto* p = std::get_if<DistNDPtr>(&any)) return *p;
    return std::make_shared<WrappedScalar>(std::get<Dist1DPtr>(any));
}

}  // namespace greedyq
