#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

namespace beliefspace {

// FNV-1a 64-bit. Used for feature hashing, substream derivation and file
// content hashes in manifests. Fixed constants so results are identical on
// every platform.
inline constexpr uint64_t kFnvOffset = 1469598103934665603ull;
inline constexpr uint64_t kFnvPrime = 1099511628211ull;

inline uint64_t fnv1a(std::string_view bytes, uint64_t h = kFnvOffset) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= kFnvPrime;
    }
    return h;
}

inline uint64_t fnv1a_u64(uint64_t v, uint64_t h = kFnvOffset) {
    for (int i = 0; i < 8; ++i) {
        h ^= (v >> (8 * i)) & 0xff;
        h *= kFnvPrime;
    }
    return h;
}

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// xoshiro256** seeded through splitmix64. Bounded ints, reals, gaussians and
// shuffling are implemented by hand: the standard library distributions are
// implementation-defined, which would break bit-for-bit reproducibility.
class Rng {
public:
    explicit Rng(uint64_t seed) {
        uint64_t x = seed;
        for (auto& w : state_) {
            x = splitmix64(x);
            w = x;
        }
        // splitmix64 never yields four zeros for distinct inputs, but keep the
        // generator well-defined for any seed.
        if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) state_[0] = 1;
    }

    uint64_t next_u64() {
        const uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Unbiased integer in [0, n). Rejection sampling on the top range.
    uint64_t uniform_u64(uint64_t n) {
        const uint64_t threshold = (0 - n) % n; // 2^64 mod n
        for (;;) {
            const uint64_t r = next_u64();
            if (r >= threshold) return r % n;
        }
    }

    // Uniform double in [0, 1) with 53 random bits.
    double uniform_real() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Standard normal via Box-Muller. Two uniforms per draw, no cached spare.
    double gaussian() {
        double u1 = uniform_real();
        while (u1 == 0.0) u1 = uniform_real();
        const double u2 = uniform_real();
        const double two_pi = 6.283185307179586476925286766559;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
    }

    // Fisher-Yates.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            const size_t j = static_cast<size_t>(uniform_u64(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    uint64_t state_[4];
};

// Named substreams: every stochastic stage derives its own generator from the
// command seed plus a label (and optional numeric salts), so stage order and
// parallel execution cannot change any stream.
inline uint64_t derive_seed(uint64_t seed, std::string_view label) {
    return splitmix64(seed ^ fnv1a(label));
}
inline uint64_t derive_seed(uint64_t seed, std::string_view label, uint64_t a) {
    return splitmix64(seed ^ fnv1a_u64(a, fnv1a(label)));
}
inline uint64_t derive_seed(uint64_t seed, std::string_view label, uint64_t a, uint64_t b) {
    return splitmix64(seed ^ fnv1a_u64(b, fnv1a_u64(a, fnv1a(label))));
}

inline Rng substream(uint64_t seed, std::string_view label) { return Rng(derive_seed(seed, label)); }
inline Rng substream(uint64_t seed, std::string_view label, uint64_t a) {
    return Rng(derive_seed(seed, label, a));
}
inline Rng substream(uint64_t seed, std::string_view label, uint64_t a, uint64_t b) {
    return Rng(derive_seed(seed, label, a, b));
}

} // namespace beliefspace
