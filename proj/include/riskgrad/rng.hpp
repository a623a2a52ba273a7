#pragma once

// Counter-based pseudo-random generator (SplitMix64 stream). Chosen over
// <random> engines because the uniform-double mapping here is fixed by this
// header, making traces bit-reproducible across platforms and toolchains.
//
// Draw accounting contract: one next_double() per Markov-chain step, and for
// MDPs one per action plus one per transition. Cycle samplers document their
// consumption against this contract.

#include <cstdint>

namespace riskgrad {

class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(mix(seed ^ 0x6A09E667F3BCC909ULL)) {}

    // Derives an independent stream; deterministic in (current state, stream).
    Rng split(std::uint64_t stream) const {
        return Rng(mix(state_ + (stream + 1) * 0x9E3779B97F4A7C15ULL));
    }

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        return mix(state_);
    }

    // Uniform in [0, 1), 53 random bits.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Inverse-CDF draw from a probability row of length n (one draw).
    int sample(const double* probs, int n) {
        const double u = next_double();
        double cum = 0.0;
        for (int i = 0; i < n; ++i) {
            cum += probs[i];
            if (u < cum) return i;
        }
        return n - 1;  // guards against row sums a hair below 1
    }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z ^= z >> 30;
        z *= 0xBF58476D1CE4E5B9ULL;
        z ^= z >> 27;
        z *= 0x94D049BB133111EBULL;
        z ^= z >> 31;
        return z;
    }

    std::uint64_t state_;
};

// Per-replication seed derivation for fan-out runs.
inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t index) {
    Rng r(root);
    return r.split(index).next_u64();
}

}  // namespace riskgrad
