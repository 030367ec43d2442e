#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "greedyq/quantizer.hpp"

namespace greedyq {

/// Greedy points in insertion order plus the per-level build record.
struct GreedySequence {
    std::size_t dim = 1;
    std::vector<double> coords;  // point i occupies [i*dim, (i+1)*dim)
    std::vector<DistortionRecord> trajectory;
    std::string solver;
    std::vector<int> iterations;
    std::vector<double> residuals;
    /// Per-level acceptance bound for the residual (stochastic builds only).
    std::vector<double> residual_bounds;
    /// "converged" for deterministic builds; stochastic builds report a
    /// "greedy candidate" since each level may be a local minimiser.
    std::string status = "converged";
    /// Set when the build stopped before N_max because no cell had mass left.
    bool support_exhausted = false;

    std::size_t size() const noexcept { return dim == 0 ? 0 : coords.size() / dim; }
    std::span<const double> point(std::size_t i) const { return {coords.data() + i * dim, dim}; }
    double scalar(std::size_t i) const { return coords[i * dim]; }

    /// The first n points as a quantizer a^(n).
    Quantizer prefix(std::size_t n) const {
        return Quantizer(dim, std::vector<double>(coords.begin(), coords.begin() + static_cast<std::ptrdiff_t>(n * dim)));
    }
};

}  // namespace greedyq
