#pragma once

#include <cmath>
#include <cstdint>

namespace prw {

// Deterministic random streams.
//
// Every ensemble is split into fixed-size chunks and chunk j always draws from
// the stream derived from (master_seed, purpose, j). The derivation below is
// part of the output contract: results are byte-identical for any worker
// count because chunk streams never depend on which thread runs them.
//
// Derivation (fixed for a release): the xoshiro256++ state is produced by a
// splitmix64 chain seeded with master_seed, with `purpose` and `index` folded
// in through multiplications by fixed odd constants.

namespace detail {

inline uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline uint64_t rotl(uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}

} // namespace detail

// Stream purposes keep independent sample sets (paths, plug-in pairs, ...)
// on non-overlapping streams even when they share a master seed.
enum Purpose : uint64_t {
    kPurposeRenewal = 1,
    kPurposeSup = 2,
    kPurposeMinMomentR = 3,
    kPurposeMinMomentAB = 4,
    kPurposeKsR = 5,
    kPurposeKsRPrime = 6,
    kPurposeKsAB = 7,
    kPurposeGoldieR = 8,
    kPurposeGoldieAB = 9,
    kPurposeArb = 10,
};

class RngStream {
  public:
    RngStream(uint64_t master_seed, uint64_t purpose, uint64_t index) {
        uint64_t chain = master_seed;
        detail::splitmix64(chain);
        chain ^= purpose * 0xA0761D6478BD642FULL;
        detail::splitmix64(chain);
        chain ^= index * 0xE7037ED1A0B428DBULL;
        for (auto& word : s_) word = detail::splitmix64(chain);
        if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 1;
    }

    // xoshiro256++
    uint64_t next_u64() {
        const uint64_t result = detail::rotl(s_[0] + s_[3], 23) + s_[0];
        const uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = detail::rotl(s_[3], 45);
        return result;
    }

    // Uniform on the open interval (0,1), 53-bit resolution.
    double next_unit() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    // One N(mu, sigma^2) variate via Box-Muller. Always consumes exactly two
    // uniforms so draw positions stay aligned across variants of a model.
    double next_normal(double mu, double sigma) {
        const double u1 = next_unit();
        const double u2 = next_unit();
        const double r = std::sqrt(-2.0 * std::log(u1));
        return mu + sigma * r * std::cos(6.283185307179586476925287 * u2);
    }

  private:
    uint64_t s_[4];
};

} // namespace prw
