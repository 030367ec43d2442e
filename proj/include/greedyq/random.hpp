#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace greedyq {

/// SplitMix64 finalizer. Used both as a mixing function for key derivation
/// and as the output function of the counter-based generator below.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Derives a child key from a parent key and a label. Stream splitting is
/// done exclusively through this function so that every random draw in an
/// experiment is a pure function of (config seed, path of labels, counter).
constexpr std::uint64_t derive_key(std::uint64_t parent, std::uint64_t label) noexcept {
    return mix64(parent ^ mix64(label + 0x632be59bd9b4e019ULL));
}

constexpr std::uint64_t hash_label(std::string_view s) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

constexpr std::uint64_t derive_key(std::uint64_t parent, std::string_view label) noexcept {
    return derive_key(parent, hash_label(label));
}

/**
 * Counter-based random stream.
 *
 * The n-th output is mix64(key + n * golden), so any sample of a batch can
 * be regenerated independently of the others. Sharded estimators give each
 * sample index its own stream (`SeedStream::at(batch_key, m)`), which makes
 * results independent of how samples are distributed over workers.
 */
class SeedStream {
public:
    constexpr explicit SeedStream(std::uint64_t key) noexcept : key_(key) {}

    static constexpr SeedStream at(std::uint64_t batch_key, std::uint64_t index) noexcept {
        return SeedStream(derive_key(batch_key, index));
    }

    constexpr std::uint64_t key() const noexcept { return key_; }

    constexpr std::uint64_t next_u64() noexcept {
        return mix64(key_ + (counter_++) * 0x9e3779b97f4a7c15ULL);
    }

    /// Uniform on the open interval (0,1): 53 random bits, shifted by half an ulp.
    constexpr double uniform() noexcept {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller; the second variate is cached.
    double normal() noexcept {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace greedyq
