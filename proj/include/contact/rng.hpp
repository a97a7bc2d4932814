#pragma once

#include <cmath>
#include <cstdint>

namespace contact {

/// SplitMix64 stream. Replica streams are derived from (master seed, stream
/// index) through the finalizer, so any replica can be generated in isolation
/// and results never depend on thread scheduling. No std:: distributions are
/// used anywhere: their output is implementation-defined, and byte-identical
/// runs across platforms are part of the output contract.
class Rng {
public:
    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ull;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    explicit Rng(std::uint64_t seed) : state_(mix(seed)) {}

    static Rng stream(std::uint64_t master_seed, std::uint64_t stream_index) {
        return Rng(mix(master_seed) ^ mix(0xd1b54a32d192ed03ull * (stream_index + 1)));
    }

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ull;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    /// Uniform in [0,1), 53-bit resolution.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform in {0,...,n-1} via the 128-bit multiply trick (no rejection).
    std::uint64_t next_below(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    /// Exponential with the given rate.
    double next_exponential(double rate) { return -std::log1p(-next_double()) / rate; }

    /// Poisson by Knuth's product method; large means are split recursively
    /// to keep the running product away from underflow.
    std::uint64_t next_poisson(double mean) {
        std::uint64_t count = 0;
        while (mean > 32.0) {
            // Binomial-free split: Poisson(m) = Poisson(m/2) + Poisson(m/2).
            count += next_poisson(mean * 0.5);
            mean *= 0.5;
        }
        if (mean <= 0.0) return count;
        const double limit = std::exp(-mean);
        double prod = next_double();
        while (prod > limit) {
            ++count;
            prod *= next_double();
        }
        return count;
    }

private:
    std::uint64_t state_;
};

} // namespace contact
