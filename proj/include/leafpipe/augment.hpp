#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "leafpipe/rng.hpp"
#include "leafpipe/types.hpp"

namespace leafpipe::augment {

// Unit the batched augmentations operate on: N equally-shaped images with N
// soft labels.
struct Batch {
    std::vector<ImageTensor> images;
    std::vector<SoftLabel> labels;

    size_t size() const { return images.size(); }
    void validate() const;
};

struct BetaParams {
    double alpha = 0.8;
    double beta = 0.8;

    void validate() const;
};

struct AugmentationConfig {
    double apply_prob = 0.5;           // chance a batched augmentation fires at all
    double flip_prob = 0.25;           // per-axis flip probability
    double rotation_min_deg = 0.0;
    double rotation_max_deg = 180.0;
    BetaParams beta_mix{0.8, 0.8};     // MixUp / CutMix / Cutout
    BetaParams beta_fmix{1.0, 1.0};
    double fmix_decay = 3.0;
    double center_margin_frac = 0.25;  // cut centers stay this fraction away from every edge

    void validate() const;
};

enum class MixMethod : int { none = 0, mixup = 1, cutmix = 2, cutout = 3, fmix = 4 };

const char* to_string(MixMethod method);
std::optional<MixMethod> mix_method_from_string(std::string_view name);

// Pixel-aligned cut square, half-open [x0,x1) x [y0,y1), already clipped to
// the image bounds.
struct CutRegion {
    int x0 = 0;
    int y0 = 0;
    int x1 = 0;
    int y1 = 0;

    int64_t area() const { return int64_t(x1 - x0) * int64_t(y1 - y0); }
};

// Everything needed to replay one batched augmentation exactly: the raw beta
// draw, the partner permutation, and the sampled geometry (cut region or FMix
// mask). label_weight is the effective weight of the primary image in the
// label mix (lambda for MixUp, clipped-area-adjusted for CutMix, mask mean
// for FMix).
struct MixEvent {
    MixMethod method = MixMethod::none;
    double lambda = 1.0;
    double label_weight = 1.0;
    std::vector<size_t> partner_perm;
    std::optional<CutRegion> region;
    std::optional<std::array<double, 2>> cut_center;  // sampled (cx, cy), pre-clipping
    std::optional<BinaryMask> mask;

    void validate(size_t batch_size) const;
};

// Per-class synthetic counts that equalize the dataset. healthy is the donor
// class and always gets zero.
struct BalancePlan {
    std::array<int64_t, kNumClasses> add{};
};

// plan.add[c] = counts[healthy] - counts[c] for diseased c. Throws DataError
// when a diseased class outnumbers healthy (generation only maps healthy to
// diseased, so such imbalance cannot be repaired).
BalancePlan plan_balance(const std::array<int64_t, kNumClasses>& class_counts);

// Uniform sample without replacement from the pool's synthetic samples of the
// given label; result is ordered by id. Throws DataError if the pool is short.
std::vector<LabeledSample> select_synthetic(const DatasetManifest& pool, ClassLabel label,
                                            int64_t count, RngStream& stream);

double sample_beta(const BetaParams& params, RngStream& stream);

// Deterministic core of the rotation/flip augmentation: rotate about the
// image center by angle_deg (bilinear, zero fill outside), then apply the
// requested flips.
ImageTensor rotate_flip_exact(const ImageTensor& image, double angle_deg, bool hflip, bool vflip);

// Samples angle ~ U(rotation range) and each flip with flip_prob, then applies
// rotate_flip_exact.
ImageTensor rotate_flip(const ImageTensor& image, const AugmentationConfig& cfg, RngStream& stream);

// img'[i] = lambda*img[i] + (1-lambda)*img[perm[i]], same blend on labels.
Batch mixup(const Batch& batch, const MixEvent& event);

// Pastes the partner's pixels inside a square region of side
// round(W*sqrt(1-lambda)) whose center keeps margin_frac of each axis away
// from every edge. Fills event.region (if unset) and event.label_weight from
// the true clipped area.
Batch cutmix(const Batch& batch, MixEvent& event, RngStream& stream, double margin_frac = 0.25);

// Same square geometry as cutmix but the region is zeroed and labels pass
// through untouched.
Batch cutout(const Batch& batch, MixEvent& event, RngStream& stream, double margin_frac = 0.25);

// Low-frequency Fourier noise thresholded so that exactly
// ceil(lambda*h*w) pixels are set (ties broken by index).
BinaryMask fmix_mask(int height, int width, double lambda, double decay, RngStream& stream);

// img'[i] = mask*img[i] + (1-mask)*img[perm[i]]; the label weight is the mask
// mean. Fills event.mask (if unset) and event.label_weight.
Batch fmix(const Batch& batch, MixEvent& event, double decay, RngStream& stream);

// The 50% gate: with cfg.apply_prob the chosen method fires with a fresh beta
// draw and partner permutation; otherwise the batch passes through and the
// event records method = none.
std::pair<Batch, MixEvent> apply_batched(const Batch& batch, const AugmentationConfig& cfg,
                                         MixMethod method, RngStream& stream);

}  // namespace leafpipe::augment
