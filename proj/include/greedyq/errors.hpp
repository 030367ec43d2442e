#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace greedyq {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A Voronoi cell (or interval) carrying no probability mass.
class EmptyCell : public Error {
public:
    EmptyCell() : Error("empty cell") {}
    explicit EmptyCell(const std::string& where) : Error("empty cell: " + where) {}
};

/// Integral of |x - c|^p diverged or failed to converge.
class MomentOverflow : public Error {
public:
    explicit MomentOverflow(const std::string& what) : Error("moment overflow: " + what) {}
};

/// Fixed-point or Newton iteration hit its iteration cap.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, double last_iterate, double residual)
        : Error(what + " (last iterate " + std::to_string(last_iterate) + ", residual " +
                std::to_string(residual) + ")"),
          last_iterate_(last_iterate),
          residual_(residual) {}

    double last_iterate() const noexcept { return last_iterate_; }
    double residual() const noexcept { return residual_; }

private:
    double last_iterate_;
    double residual_;
};

class CurvatureLoss : public Error {
public:
    explicit CurvatureLoss(double rho)
        : Error("curvature loss: rho(a) = " + std::to_string(rho) + " <= 0") {}
};

class DimensionMismatch : public Error {
public:
    DimensionMismatch(std::size_t expected, std::size_t got)
        : Error("dimension mismatch: expected " + std::to_string(expected) + ", got " +
                std::to_string(got)) {}
};

/// Failure while building level `level` of a greedy sequence.
class LevelError : public Error {
public:
    LevelError(std::size_t level, const std::string& cause)
        : Error("level " + std::to_string(level) + ": " + cause), level_(level) {}
    std::size_t level() const noexcept { return level_; }

private:
    std::size_t level_;
};

}  // namespace greedyq
