#pragma once

#include <cstdint>
#include <string>

#include "leafpipe/dataprep.hpp"
#include "leafpipe/rng.hpp"
#include "leafpipe/types.hpp"

namespace leafpipe::fixturegen {

// Procedural "leaf" corpus used by the bundled fixtures and the test suites:
// an elliptical leaf over a noisy background, disease blotches whose leaf
// coverage grows with severity, and a polygon outline for masking. Synthetic
// samples are pushed through the same mask+resize transform as prepared real
// images and then receive a per-class corner stamp, standing in for the
// stable footprint a trained generator leaves in its output.

struct LeafSample {
    ImageTensor image;    // raw_size x raw_size, noisy background
    PolygonMask polygon;  // leaf outline in raw coordinates
};

inline constexpr int kRawSize = 96;
inline constexpr int kProcessedSize = 64;

// Raw (unprocessed) sample for one of the six original labels.
LeafSample render_raw(dataprep::OriginalLabel label, RngStream& stream);

// Prepared-domain synthetic sample: masked, resized, plus the class stamp
// (present with stamp_prob).
ImageTensor render_synthetic(ClassLabel label, RngStream& stream, double stamp_amp = 0.30,
                             double stamp_prob = 0.85);

struct CorpusCounts {
    int healthy = 150;
    int red_spider_mite = 30;
    int rust_level_1 = 30;
    int rust_level_2 = 30;
    int rust_level_3 = 15;
    int rust_level_4 = 15;
    int synthetic_per_class = 150;
    // The stamp is an imperfect shortcut: most synthetic images carry it, but
    // enough lack it that a model fitting the pool must also learn the
    // disease features themselves.
    double stamp_amp = 0.30;
    double stamp_prob = 0.85;
};

// Writes raw/manifest.json + raw/images, synthetic/manifest.json +
// synthetic/images, the gan-loss fixture, and config.json under root.
void write_corpus(const std::string& root, uint64_t seed, const CorpusCounts& counts);

}  // namespace leafpipe::fixturegen
