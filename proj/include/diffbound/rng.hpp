#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace diffbound {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Derived seed for (root, stream label, task index). Each level is mixed through
// splitmix64 so neighbouring indices land on unrelated engine states.
inline std::uint64_t derive_seed(std::uint64_t root, std::string_view label, std::uint64_t index = 0) {
    std::uint64_t s = splitmix64(root);
    s = splitmix64(s ^ fnv1a64(label));
    return splitmix64(s ^ splitmix64(index + 0x632BE59BD9B4E019ULL));
}

/// Seeded random stream. Copyable; copies replay the same sequence.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    Rng(std::uint64_t root, std::string_view label, std::uint64_t index = 0)
        : engine_(derive_seed(root, label, index)) {}

    double normal() { return normal_(engine_); }
    double uniform() { return uniform_(engine_); }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform_(engine_); }

    std::size_t index(std::size_t n) {
        return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
    }

    std::mt19937_64& engine() { return engine_; }

    Rng split(std::string_view label, std::uint64_t index = 0) {
        return Rng(derive_seed(engine_(), label, index));
    }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace diffbound
