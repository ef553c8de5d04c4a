#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>
#include <span>

namespace demoreg {

/// Seeded generator with platform-independent derived draws.
///
/// Only the raw 64-bit engine output is used; uniforms, exponentials and
/// normals are built from it here so results do not depend on the standard
/// library's distribution implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : engine_(mix(seed)) {}

    std::uint64_t bits() { return engine_(); }

    /// Uniform on [0, 1) with 53 bits of resolution.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform on (0, 1].
    double uniform_open0() { return 1.0 - uniform(); }

    /// Uniform integer in [0, n).
    int uniform_int(int n) {
        return static_cast<int>(uniform() * static_cast<double>(n));
    }

    double exponential() { return -std::log(uniform_open0()); }

    double normal() {
        // Box-Muller, one draw per call.
        const double u1 = uniform_open0();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    bool bernoulli(double prob) { return uniform() < prob; }

    /// Index drawn from a probability vector.
    int categorical(std::span<const double> probs) {
        const double u = uniform();
        double acc = 0.0;
        int last_positive = 0;
        for (std::size_t i = 0; i < probs.size(); ++i) {
            if (probs[i] > 0.0) {
                last_positive = static_cast<int>(i);
                acc += probs[i];
                if (u < acc) return static_cast<int>(i);
            }
        }
        return last_positive;
    }

    /// Independent child stream keyed by `tag`.
    Rng fork(std::uint64_t tag) { return Rng(engine_() ^ mix(tag + 0x9e3779b97f4a7c15ULL)); }

    static std::uint64_t mix(std::uint64_t x) {
        // splitmix64 finaliser
        x += 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

private:
    std::mt19937_64 engine_;
};

/// Deterministic seed derived from a base seed and a sequence of tags.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag) {
    return Rng::mix(base ^ Rng::mix(tag));
}

/// Same with a string tag (FNV-1a).
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view tag) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : tag) h = (h ^ c) * 0x100000001b3ULL;
    return derive_seed(base, h);
}

} // namespace demoreg
