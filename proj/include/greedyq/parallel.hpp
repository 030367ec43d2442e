#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace greedyq {

/// Worker count: hardware concurrency, capped by GREEDYQ_THREADS when set.
/// Read on every call so that tests can change it between runs.
inline unsigned thread_count() {
    unsigned n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("GREEDYQ_THREADS")) {
        try {
            const long cap = std::stol(env);
            if (cap >= 1) n = static_cast<unsigned>(cap);
        } catch (const std::exception&) {
            // unparsable value: keep the default
        }
    }
    return n;
}

/// Runs fn(block) for block in [0, n_blocks) on up to thread_count() workers.
/// Results must be written into per-block slots; combining them in block
/// order afterwards keeps every reduction independent of the worker count.
template <class Fn>
void parallel_blocks(std::size_t n_blocks, Fn&& fn) {
    const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(thread_count(), n_blocks));
    if (workers <= 1) {
        for (std::size_t b = 0; b < n_blocks; ++b) fn(b);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto work = [&] {
        for (;;) {
            const std::size_t b = next.fetch_add(1);
            if (b >= n_blocks) return;
            try {
                fn(b);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next = n_blocks;
                return;
            }
        }
    };
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers - 1);
        for (unsigned w = 1; w < workers; ++w) pool.emplace_back(work);
        work();
    }
    if (failure) std::rethrow_exception(failure);
}

/// Neumaier-compensated accumulator.
class KahanSum {
public:
    void add(double x) noexcept {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    KahanSum& operator+=(double x) noexcept {
        add(x);
        return *this;
    }
    void merge(const KahanSum& other) noexcept {
        add(other.sum_);
        add(other.comp_);
    }
    double value() const noexcept { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

/// Fixed block size for Monte-Carlo sharding. Never derived from the worker count.
inline constexpr std::size_t kSampleBlock = 8192;

inline std::size_t block_count(std::size_t n, std::size_t block = kSampleBlock) {
    return (n + block - 1) / block;
}

}  // namespace greedyq
