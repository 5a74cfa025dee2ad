#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace leafpipe {

// Deterministic random stream. A stream is fully identified by
// (master_seed, stream_id): the same pair and call sequence produce the same
// draws on every platform. Distinct stream ids give independent sequences, so
// pipeline stages derive one stream per (stage, epoch, batch) instead of
// sharing a generator.
//
// Internals: xoshiro256++ seeded through a splitmix64 chain over the pair.
// All distributions are implemented here rather than via <random> because the
// standard distributions are not bit-stable across library implementations.
class RngStream {
public:
    RngStream(uint64_t master_seed, uint64_t stream_id);

    uint64_t master_seed() const { return master_seed_; }
    uint64_t stream_id() const { return stream_id_; }

    // Child stream derived from this stream's identity (not its position), so
    // substreams stay stable no matter how much the parent has been consumed.
    RngStream substream(uint64_t child_id) const;

    uint64_t next_u64();

    // Uniform on [0,1) with 53-bit resolution.
    double uniform();
    // Uniform on (0,1], safe as a log() argument.
    double uniform_pos();
    double uniform(double lo, double hi);
    // Uniform integer in [0, n), unbiased (rejection sampling). n must be > 0.
    uint64_t uniform_int(uint64_t n);
    bool bernoulli(double p);
    // Standard normal via Box-Muller (one value per call, two uniforms each).
    double normal();
    // Gamma(alpha, 1) via Marsaglia-Tsang; alpha > 0.
    double gamma(double alpha);
    // Beta(alpha, beta) as g1/(g1+g2).
    double beta(double alpha, double beta);
    // Uniform random permutation of {0,...,n-1} (Fisher-Yates).
    std::vector<size_t> permutation(size_t n);

private:
    uint64_t master_seed_;
    uint64_t stream_id_;
    uint64_t state_[4];
};

RngStream derive_stream(uint64_t master_seed, uint64_t stream_id);

// Stable id for a named pipeline stage, with optional indices (epoch, batch).
// FNV-1a over the tag bytes and the indices.
uint64_t stream_tag(std::string_view stage, uint64_t a = 0, uint64_t b = 0);

}  // namespace leafpipe
