// Per-subsystem random streams.
// Each stream is keyed by FNV-1a-64 over (master seed as 8 little-endian
// bytes, then the label bytes). Draw n is the splitmix64 finalizer applied to
// key + (n + 1) * golden-gamma, so streams are counter based: no hidden state
// beyond the draw counter and identical on every platform.
#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <string_view>

#include "abyss/core/error.hpp"

namespace abyss {

inline constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ull;
inline constexpr std::uint64_t kFnvPrime = 0x00000100000001b3ull;

constexpr std::uint64_t fnv1a64_update(std::uint64_t hash, std::uint8_t byte) noexcept {
    return (hash ^ byte) * kFnvPrime;
}

constexpr std::uint64_t stream_key(std::uint64_t master_seed, std::string_view label) noexcept {
    std::uint64_t h = kFnvOffset;
    for (int i = 0; i < 8; ++i) h = fnv1a64_update(h, static_cast<std::uint8_t>(master_seed >> (8 * i)));
    for (char c : label) h = fnv1a64_update(h, static_cast<std::uint8_t>(c));
    return h;
}

constexpr std::uint64_t splitmix64_mix(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

class RngStream {
public:
    static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ull;

    RngStream() = default;
    RngStream(std::uint64_t master_seed, std::string label)
        : master_seed_(master_seed), label_(std::move(label)), key_(stream_key(master_seed_, label_)) {}

    std::uint64_t master_seed() const noexcept { return master_seed_; }
    const std::string& label() const noexcept { return label_; }
    std::uint64_t key() const noexcept { return key_; }
    std::uint64_t counter() const noexcept { return counter_; }

    std::uint64_t next_u64() noexcept {
        ++counter_;
        return splitmix64_mix(key_ + counter_ * kGamma);
    }

    /// Uniform on [0, 1) with 53 bits of resolution.
    double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n).
    std::size_t index(std::size_t n) {
        if (n == 0) throw ArgumentError("RngStream::index: empty range");
        const auto wide = static_cast<unsigned __int128>(next_u64()) * n;
        return static_cast<std::size_t>(wide >> 64);
    }

    bool bernoulli(double p) noexcept { return uniform() < p; }

    /// Box-Muller; consumes two draws per call.
    double normal(double mean = 0.0, double stddev = 1.0) noexcept {
        const double u1 = 1.0 - uniform();
        const double u2 = uniform();
        return mean + stddev * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    std::uint64_t master_seed_ = 0;
    std::string label_;
    std::uint64_t key_ = kFnvOffset;
    std::uint64_t counter_ = 0;
};

inline RngStream derive_stream(std::uint64_t master_seed, std::string label) {
    if (label.empty()) throw ArgumentError("derive_stream: label must be non-empty");
    return RngStream(master_seed, std::move(label));
}

}  // namespace abyss
