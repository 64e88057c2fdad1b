#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace lfboot {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// FNV-1a, used to turn a stream label into a tag.
constexpr std::uint64_t stream_tag(std::string_view name) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : name) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Seed for replication `index` of stream `tag` under `master`. Depends only on
/// the three inputs, so work units can run in any order.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag,
                                    std::uint64_t index) noexcept {
    return mix64(mix64(mix64(master) ^ tag) + index);
}

inline Rng make_rng(std::uint64_t seed) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
    return Rng(seq);
}

/// Standard normal generator. Thin wrapper so every sampler draws the same way.
class NormalSource {
public:
    explicit NormalSource(std::uint64_t seed) : rng_(make_rng(seed)) {}

    double operator()() { return dist_(rng_); }
    Rng& engine() { return rng_; }

private:
    Rng rng_;
    std::normal_distribution<double> dist_{0.0, 1.0};
};

}  // namespace lfboot
