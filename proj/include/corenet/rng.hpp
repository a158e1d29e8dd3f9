#ifndef CORENET_RNG_HPP
#define CORENET_RNG_HPP

#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

namespace corenet {

// Deterministic, platform-independent generator: xoshiro256++ seeded via
// splitmix64. std engines/distributions are implementation-defined, so
// everything that must reproduce bit-exactly across platforms goes
// through this class.
class SeededRng {
public:
    explicit SeededRng(uint64_t seed) {
        uint64_t x = seed;
        for (auto& s : state_) s = splitmix64(x);
    }

    // Independent stream for a named purpose ("init", "data", ...), so that
    // adding a consumer in one place does not shift draws elsewhere.
    static SeededRng derive(uint64_t seed, std::string_view stream) {
        uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a 64
        for (char c : stream) {
            h ^= static_cast<unsigned char>(c);
            h *= 0x100000001b3ull;
        }
        uint64_t x = seed;
        return SeededRng(splitmix64(x) ^ h);
    }

    uint64_t next_u64() {
        const uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Unbiased integer in [0, n); rejection sampling.
    uint64_t bounded(uint64_t n) {
        if (n == 0) return 0;
        const uint64_t threshold = (0 - n) % n;
        for (;;) {
            const uint64_t r = next_u64();
            if (r >= threshold) return r % n;
        }
    }

    // Standard normal via Box-Muller (pair cached).
    double normal() {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * 3.141592653589793238462643383279502884 * u2;
        cached_ = r * std::sin(theta);
        have_cached_ = true;
        return r * std::cos(theta);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    bool coin() { return (next_u64() >> 63) != 0; }

    // Fisher-Yates, one unbiased swap per element.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            const size_t j = static_cast<size_t>(bounded(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    static uint64_t splitmix64(uint64_t& x) {
        x += 0x9e3779b97f4a7c15ull;
        uint64_t z = x;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    static uint64_t rotl(uint64_t v, int k) { return (v << k) | (v >> (64 - k)); }

    uint64_t state_[4];
    double cached_ = 0.0;
    bool have_cached_ = false;
};

}  // namespace corenet

#endif  // CORENET_RNG_HPP
