#include "agentevo/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace agentevo::rng {

namespace {
constexpr uint64_t kGolden = 0x9e3779b97f4a7c15ull;
}

uint64_t hash64(std::string_view s) {
    uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

uint64_t mix64(uint64_t x) {
    x += kGolden;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

Stream::Stream(uint64_t seed) : state_(mix64(seed)) {}

Stream Stream::derive(uint64_t seed, std::initializer_list<uint64_t> keys) {
    uint64_t h = mix64(seed);
    for (uint64_t k : keys) {
        h ^= mix64(k) + kGolden + (h << 6) + (h >> 2);
    }
    Stream s(0);
    s.state_ = mix64(h);
    return s;
}

uint64_t Stream::next_u64() {
    state_ += kGolden;
    return mix64(state_);
}

double Stream::uniform() {
    // 53-bit mantissa in [0, 1)
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Stream::uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform();
}

int Stream::uniform_int(int lo, int hi) {
    if (hi < lo) throw std::invalid_argument("uniform_int: hi < lo");
    uint64_t span = static_cast<uint64_t>(hi) - static_cast<uint64_t>(lo) + 1;
    return lo + static_cast<int>(next_u64() % span);
}

bool Stream::bernoulli(double p) {
    return uniform() < p;
}

double Stream::gaussian() {
    // Box-Muller; both uniforms always consumed, spare value discarded.
    double u1 = 1.0 - uniform();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

double Stream::gaussian(double mean, double sd) {
    return mean + sd * gaussian();
}

double Stream::gamma(double shape) {
    if (shape <= 0.0) throw std::invalid_argument("gamma: shape must be > 0");
    if (shape < 1.0) {
        double u = uniform();
        return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    // Marsaglia-Tsang squeeze method
    double d = shape - 1.0 / 3.0;
    double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x = gaussian();
        double v = 1.0 + c * x;
        if (v <= 0.0) continue;
        v = v * v * v;
        double u = uniform();
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
        if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
}

double Stream::beta(double a, double b) {
    double x = gamma(a);
    double y = gamma(b);
    return x / (x + y);
}

}  // namespace agentevo::rng
