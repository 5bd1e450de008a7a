#pragma once

#include <cstdint>
#include <vector>

namespace ssw {

// Deterministic, platform-independent RNG used everywhere randomness is
// needed.  std::mt19937_64 has a fully specified sequence, and we avoid
// std::uniform_real_distribution (whose output is implementation-defined)
// by mapping the top 53 bits to [0,1).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {
        // splitmix64 warm-up so nearby seeds decorrelate
        next_u64();
        next_u64();
    }

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // uniform double in [0,1), 53-bit resolution
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + uniform() * (hi - lo); }

    std::vector<double> uniform_vec(const std::vector<double>& lo,
                                    const std::vector<double>& hi) {
        std::vector<double> v(lo.size());
        for (std::size_t j = 0; j < lo.size(); ++j) v[j] = uniform(lo[j], hi[j]);
        return v;
    }

private:
    std::uint64_t state_;
};

}  // namespace ssw
