#pragma once
#include <cstdint>
#include <initializer_list>
#include <string_view>

namespace agentevo::rng {

// FNV-1a 64-bit string hash, used to key substreams by ids.
uint64_t hash64(std::string_view s);

// splitmix64 finalizer; bijective scramble of a 64-bit word.
uint64_t mix64(uint64_t x);

// Deterministic keyed random stream.
//
// Every randomized operation draws from its own Stream derived from the run
// seed plus a documented key tuple (see the substream key table in
// lifecycle.hpp). Replays are exact because draws only advance local state and
// derivation is a pure function of (seed, keys). Draw costs are fixed:
// gaussian() consumes exactly two uniforms (Box-Muller, no cached spare);
// gamma() uses Marsaglia-Tsang rejection, so its draw count is variable but
// fully determined by the stream position.
class Stream {
public:
    explicit Stream(uint64_t seed);
    static Stream derive(uint64_t seed, std::initializer_list<uint64_t> keys);

    uint64_t next_u64();
    double uniform();                    // [0, 1)
    double uniform(double lo, double hi);
    int uniform_int(int lo, int hi);     // inclusive bounds
    bool bernoulli(double p);
    double gaussian();                   // standard normal
    double gaussian(double mean, double sd);
    double gamma(double shape);          // unit scale, shape > 0
    double beta(double a, double b);

private:
    uint64_t state_;
};

}  // namespace agentevo::rng
