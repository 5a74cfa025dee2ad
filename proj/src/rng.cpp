#include "leafpipe/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace leafpipe {

namespace {

constexpr uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += kGolden);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

uint64_t fnv1a64(const void* bytes, size_t n, uint64_t hash = 0xCBF29CE484222325ULL) {
    const auto* p = static_cast<const unsigned char*>(bytes);
    for (size_t i = 0; i < n; ++i) {
        hash ^= p[i];
        hash *= 0x100000001B3ULL;
    }
    return hash;
}

}  // namespace

RngStream::RngStream(uint64_t master_seed, uint64_t stream_id)
    : master_seed_(master_seed), stream_id_(stream_id) {
    uint64_t seeder = master_seed;
    splitmix64(seeder);
    seeder ^= stream_id * kGolden + 0x2545F4914F6CDD1DULL;
    for (auto& word : state_) {
        word = splitmix64(seeder);
    }
}

RngStream derive_stream(uint64_t master_seed, uint64_t stream_id) {
    return RngStream(master_seed, stream_id);
}

RngStream RngStream::substream(uint64_t child_id) const {
    uint64_t mixed = stream_id_;
    splitmix64(mixed);
    mixed ^= child_id * kGolden + 1;
    return RngStream(master_seed_, splitmix64(mixed));
}

uint64_t stream_tag(std::string_view stage, uint64_t a, uint64_t b) {
    uint64_t h = fnv1a64(stage.data(), stage.size());
    h = fnv1a64(&a, sizeof(a), h);
    h = fnv1a64(&b, sizeof(b), h);
    return h;
}

uint64_t RngStream::next_u64() {
    // xoshiro256++
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

double RngStream::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform_pos() {
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform();
}

uint64_t RngStream::uniform_int(uint64_t n) {
    if (n == 0) throw std::invalid_argument("uniform_int: n must be positive");
    const uint64_t threshold = -n % n;  // 2^64 mod n
    for (;;) {
        uint64_t draw = next_u64();
        if (draw >= threshold) return draw % n;
    }
}

bool RngStream::bernoulli(double p) {
    return uniform() < p;
}

double RngStream::normal() {
    const double u1 = uniform_pos();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

double RngStream::gamma(double alpha) {
    if (!(alpha > 0.0)) throw std::invalid_argument("gamma: alpha must be positive");
    if (alpha < 1.0) {
        const double boost = gamma(alpha + 1.0);
        return boost * std::pow(uniform_pos(), 1.0 / alpha);
    }
    const double d = alpha - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x = normal();
        double v = 1.0 + c * x;
        if (v <= 0.0) continue;
        v = v * v * v;
        const double u = uniform_pos();
        const double x2 = x * x;
        if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
        if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
    }
}

double RngStream::beta(double alpha, double beta) {
    const double g1 = gamma(alpha);
    const double g2 = gamma(beta);
    return g1 / (g1 + g2);
}

std::vector<size_t> RngStream::permutation(size_t n) {
    std::vector<size_t> perm(n);
    for (size_t i = 0; i < n; ++i) perm[i] = i;
    for (size_t i = n; i > 1; --i) {
        const size_t j = static_cast<size_t>(uniform_int(i));
        std::swap(perm[i - 1], perm[j]);
    }
    return perm;
}

}  // namespace leafpipe
