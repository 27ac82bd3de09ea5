#pragma once

// Seedable random stream.
//
// Engine: std::mt19937_64, whose output sequence is fixed by the standard.
// The distributions are written out here instead of using <random>'s
// distribution classes, whose algorithms are implementation-defined; this
// keeps results bit-identical across standard libraries. Every draw consumes
// a fixed number of engine outputs.
//
// Streams: a replica's stream id is `seed ^ replica_index`. The id is
// expanded through splitmix64 into a std::seed_seq so that adjacent ids
// give unrelated engine states.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <utility>

namespace kinetic {

inline std::uint64_t splitmix64(std::uint64_t& x) noexcept {
    std::uint64_t z = (x += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Stream id of replica `replica` under base seed `seed`.
constexpr std::uint64_t stream_id(std::uint64_t seed, std::uint64_t replica) noexcept { return seed ^ replica; }

class Rng {
public:
    explicit Rng(std::uint64_t stream = 0) { reseed(stream); }

    /// Independent sub-stream keyed by (stream, tag); used to give the
    /// initial-condition sampler and the dynamics separate streams.
    static Rng substream(std::uint64_t stream, std::uint64_t tag) {
        std::uint64_t s = stream;
        const std::uint64_t a = splitmix64(s);
        std::uint64_t t = tag ^ 0xA5A5A5A5DEADBEEFULL;
        return Rng(a ^ splitmix64(t));
    }

    void reseed(std::uint64_t stream) {
        std::uint64_t s = stream;
        std::array<std::uint32_t, 8> words{};
        for (std::size_t i = 0; i < words.size(); i += 2) {
            const std::uint64_t z = splitmix64(s);
            words[i] = static_cast<std::uint32_t>(z);
            words[i + 1] = static_cast<std::uint32_t>(z >> 32);
        }
        std::seed_seq seq(words.begin(), words.end());
        engine_.seed(seq);
    }

    std::uint64_t bits() { return engine_(); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform on (0, 1].
    double uniform_pos() { return 1.0 - uniform(); }

    /// Uniform integer in [0, n). Bias is below 2^-53 * n.
    std::size_t index(std::size_t n) {
        const auto k = static_cast<std::size_t>(uniform() * static_cast<double>(n));
        return k < n ? k : n - 1;
    }

    /// Exponential with the given rate.
    double exponential(double rate) { return -std::log(uniform_pos()) / rate; }

    /// Two independent standard normals (Box-Muller, two uniforms).
    std::pair<double, double> normal_pair() {
        const double r = std::sqrt(-2.0 * std::log(uniform_pos()));
        const double phi = 2.0 * std::numbers::pi * uniform();
        return {r * std::cos(phi), r * std::sin(phi)};
    }

    double normal() { return normal_pair().first; }

private:
    std::mt19937_64 engine_;
};

}  // namespace kinetic
