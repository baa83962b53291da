#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

// Deterministic splittable RNG. Streams are derived by hashing a seed with
// a list of stream ids, so per-(rollout, agent) streams give identical
// results whether rollouts run serially or in parallel.

namespace mfg {

inline uint64_t mix64(uint64_t z) {
    z ^= z >> 33;
    z *= 0xff51afd7ed558ccdULL;
    z ^= z >> 33;
    z *= 0xc4ceb9fe1a85ec53ULL;
    z ^= z >> 33;
    return z;
}

inline uint64_t derive_seed(uint64_t seed, std::initializer_list<uint64_t> ids) {
    uint64_t h = mix64(seed + 0x9e3779b97f4a7c15ULL);
    for (uint64_t id : ids) h = mix64(h ^ (id + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2)));
    return h;
}

class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next_u64() {  // splitmix64
        uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    double next_double() {  // [0, 1)
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Inverse-CDF draw from an (approximately normalized) distribution.
    int categorical(std::span<const double> p) {
        double u = next_double();
        double acc = 0.0;
        int last = 0;
        for (int i = 0; i < static_cast<int>(p.size()); ++i) {
            if (p[i] <= 0.0) continue;
            acc += p[i];
            last = i;
            if (u < acc) return i;
        }
        return last;  // u fell into rounding slack past the final entry
    }

    // Uniform draw from the probability simplex (flat Dirichlet), via
    // normalized exponentials.
    std::vector<double> simplex(int n) {
        std::vector<double> v(static_cast<size_t>(n));
        double sum = 0.0;
        for (double& x : v) {
            double u;
            do { u = next_double(); } while (u <= 0.0);
            x = -std::log(u);
            sum += x;
        }
        for (double& x : v) x /= sum;
        return v;
    }

private:
    uint64_t state_;
};

}  // namespace mfg
