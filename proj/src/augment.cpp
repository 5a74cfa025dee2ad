#include "leafpipe/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include <fftw3.h>

namespace leafpipe::augment {

void Batch::validate() const {
    if (images.empty()) throw DataError("batch: must contain at least one image");
    if (images.size() != labels.size()) {
        throw DataError("batch: " + std::to_string(images.size()) + " images vs " +
                        std::to_string(labels.size()) + " labels");
    }
    for (size_t i = 1; i < images.size(); ++i) {
        if (!images[i].same_shape(images[0])) {
            throw DataError("batch: image " + std::to_string(i) + " has a different shape");
        }
    }
    for (size_t i = 0; i < labels.size(); ++i) {
        labels[i].check_normalized("batch label " + std::to_string(i));
    }
}

void BetaParams::validate() const {
    if (!(alpha > 0.0) || !(beta > 0.0)) {
        throw ConfigError("beta params: alpha and beta must be positive");
    }
}

void AugmentationConfig::validate() const {
    if (apply_prob < 0.0 || apply_prob > 1.0) throw ConfigError("augmentation: apply_prob outside [0,1]");
    if (flip_prob < 0.0 || flip_prob > 1.0) throw ConfigError("augmentation: flip_prob outside [0,1]");
    if (rotation_min_deg < 0.0 || rotation_max_deg > 180.0 || rotation_min_deg > rotation_max_deg) {
        throw ConfigError("augmentation: rotation range must lie within [0,180]");
    }
    beta_mix.validate();
    beta_fmix.validate();
    if (!(fmix_decay > 0.0)) throw ConfigError("augmentation: fmix_decay must be positive");
    if (center_margin_frac < 0.0 || center_margin_frac >= 0.5) {
        throw ConfigError("augmentation: center_margin_frac must lie in [0,0.5)");
    }
}

const char* to_string(MixMethod method) {
    switch (method) {
        case MixMethod::none: return "none";
        case MixMethod::mixup: return "mixup";
        case MixMethod::cutmix: return "cutmix";
        case MixMethod::cutout: return "cutout";
        case MixMethod::fmix: return "fmix";
    }
    return "?";
}

std::optional<MixMethod> mix_method_from_string(std::string_view name) {
    for (int i = 0; i <= static_cast<int>(MixMethod::fmix); ++i) {
        const auto method = static_cast<MixMethod>(i);
        if (name == to_string(method)) return method;
    }
    return std::nullopt;
}

void MixEvent::validate(size_t batch_size) const {
    if (lambda < 0.0 || lambda > 1.0) throw DataError("mix event: lambda outside [0,1]");
    if (method == MixMethod::none) return;
    if (partner_perm.size() != batch_size) {
        throw DataError("mix event: permutation size does not match batch");
    }
    std::vector<uint8_t> seen(batch_size, 0);
    for (size_t p : partner_perm) {
        if (p >= batch_size || seen[p]) throw DataError("mix event: permutation is not a bijection");
        seen[p] = 1;
    }
}

BalancePlan plan_balance(const std::array<int64_t, kNumClasses>& class_counts) {
    const int64_t healthy = class_counts[static_cast<size_t>(ClassLabel::healthy)];
    BalancePlan plan;
    for (int c = 0; c < kNumClasses; ++c) {
        if (class_counts[static_cast<size_t>(c)] < 0) {
            throw DataError("plan_balance: negative count for class " +
                            std::string(to_string(static_cast<ClassLabel>(c))));
        }
        if (static_cast<ClassLabel>(c) == ClassLabel::healthy) continue;
        const int64_t count = class_counts[static_cast<size_t>(c)];
        if (count > healthy) {
            throw DataError(std::string("plan_balance: class '") +
                            to_string(static_cast<ClassLabel>(c)) + "' (" + std::to_string(count) +
                            ") exceeds healthy (" + std::to_string(healthy) +
                            "); only healthy-to-diseased generation is supported");
        }
        plan.add[static_cast<size_t>(c)] = healthy - count;
    }
    return plan;
}

std::vector<LabeledSample> select_synthetic(const DatasetManifest& pool, ClassLabel label,
                                            int64_t count, RngStream& stream) {
    if (count < 0) throw DataError("select_synthetic: negative count");
    std::vector<const LabeledSample*> candidates;
    for (const auto& sample : pool.samples) {
        if (sample.origin == Origin::synthetic && sample.label == label) {
            candidates.push_back(&sample);
        }
    }
    std::sort(candidates.begin(), candidates.end(),
              [](const LabeledSample* a, const LabeledSample* b) { return a->id < b->id; });
    if (static_cast<int64_t>(candidates.size()) < count) {
        throw DataError(std::string("select_synthetic: pool has only ") +
                        std::to_string(candidates.size()) + " synthetic samples of class '" +
                        to_string(label) + "', need " + std::to_string(count));
    }
    // partial Fisher-Yates over the candidate indices
    std::vector<size_t> indices(candidates.size());
    std::iota(indices.begin(), indices.end(), size_t{0});
    for (int64_t i = 0; i < count; ++i) {
        const size_t j = i + static_cast<size_t>(stream.uniform_int(indices.size() - i));
        std::swap(indices[static_cast<size_t>(i)], indices[j]);
    }
    std::vector<LabeledSample> out;
    out.reserve(static_cast<size_t>(count));
    for (int64_t i = 0; i < count; ++i) out.push_back(*candidates[indices[static_cast<size_t>(i)]]);
    std::sort(out.begin(), out.end(),
              [](const LabeledSample& a, const LabeledSample& b) { return a.id < b.id; });
    return out;
}

double sample_beta(const BetaParams& params, RngStream& stream) {
    params.validate();
    return stream.beta(params.alpha, params.beta);
}

ImageTensor rotate_flip_exact(const ImageTensor& image, double angle_deg, bool hflip, bool vflip) {
    const double theta = angle_deg * M_PI / 180.0;
    const double cos_t = std::cos(theta);
    const double sin_t = std::sin(theta);
    const double cx = image.width * 0.5;
    const double cy = image.height * 0.5;

    ImageTensor rotated(image.height, image.width, image.channels);
    for (int y = 0; y < image.height; ++y) {
        for (int x = 0; x < image.width; ++x) {
            // inverse-rotate the destination pixel center into source space
            const double dx = (x + 0.5) - cx;
            const double dy = (y + 0.5) - cy;
            const double src_x = cos_t * dx + sin_t * dy + cx - 0.5;
            const double src_y = -sin_t * dx + cos_t * dy + cy - 0.5;
            const int x0 = static_cast<int>(std::floor(src_x));
            const int y0 = static_cast<int>(std::floor(src_y));
            const double fx = src_x - x0;
            const double fy = src_y - y0;
            for (int c = 0; c < image.channels; ++c) {
                auto tap = [&](int yy, int xx) -> double {
                    if (yy < 0 || yy >= image.height || xx < 0 || xx >= image.width) return 0.0;
                    return image.at(yy, xx, c);
                };
                const double top = (1.0 - fx) * tap(y0, x0) + fx * tap(y0, x0 + 1);
                const double bot = (1.0 - fx) * tap(y0 + 1, x0) + fx * tap(y0 + 1, x0 + 1);
                rotated.at(y, x, c) = static_cast<float>((1.0 - fy) * top + fy * bot);
            }
        }
    }

    if (!hflip && !vflip) return rotated;
    ImageTensor out(image.height, image.width, image.channels);
    for (int y = 0; y < image.height; ++y) {
        const int sy = vflip ? image.height - 1 - y : y;
        for (int x = 0; x < image.width; ++x) {
            const int sx = hflip ? image.width - 1 - x : x;
            for (int c = 0; c < image.channels; ++c) out.at(y, x, c) = rotated.at(sy, sx, c);
        }
    }
    return out;
}

ImageTensor rotate_flip(const ImageTensor& image, const AugmentationConfig& cfg, RngStream& stream) {
    const double angle = stream.uniform(cfg.rotation_min_deg, cfg.rotation_max_deg);
    const bool hflip = stream.bernoulli(cfg.flip_prob);
    const bool vflip = stream.bernoulli(cfg.flip_prob);
    return rotate_flip_exact(image, angle, hflip, vflip);
}

Batch mixup(const Batch& batch, const MixEvent& event) {
    batch.validate();
    event.validate(batch.size());
    const double lam = event.lambda;
    Batch out = batch;
    for (size_t i = 0; i < batch.size(); ++i) {
        const ImageTensor& a = batch.images[i];
        const ImageTensor& b = batch.images[event.partner_perm[i]];
        for (size_t v = 0; v < a.data.size(); ++v) {
            out.images[i].data[v] = static_cast<float>(lam * a.data[v] + (1.0 - lam) * b.data[v]);
        }
        for (int c = 0; c < kNumClasses; ++c) {
            out.labels[i].probs[static_cast<size_t>(c)] =
                lam * batch.labels[i].probs[static_cast<size_t>(c)] +
                (1.0 - lam) * batch.labels[event.partner_perm[i]].probs[static_cast<size_t>(c)];
        }
    }
    return out;
}

namespace {

// Square of side round(W*sqrt(1-lambda)) centered inside the per-axis margin
// box, clipped to the image. Shared by cutmix and cutout.
void sample_cut_region(int height, int width, double margin_frac, RngStream& stream,
                       MixEvent& event) {
    const int side = std::clamp(
        static_cast<int>(std::lround(width * std::sqrt(1.0 - event.lambda))), 0, width);
    const double cx = stream.uniform(margin_frac * width, (1.0 - margin_frac) * width);
    const double cy = stream.uniform(margin_frac * height, (1.0 - margin_frac) * height);
    const int x0 = static_cast<int>(std::lround(cx - side * 0.5));
    const int y0 = static_cast<int>(std::lround(cy - side * 0.5));
    CutRegion region;
    region.x0 = std::clamp(x0, 0, width);
    region.y0 = std::clamp(y0, 0, height);
    region.x1 = std::clamp(x0 + side, 0, width);
    region.y1 = std::clamp(y0 + side, 0, height);
    event.region = region;
    event.cut_center = {cx, cy};
}

}  // namespace

Batch cutmix(const Batch& batch, MixEvent& event, RngStream& stream, double margin_frac) {
    batch.validate();
    event.validate(batch.size());
    const ImageTensor& shape = batch.images[0];
    if (!event.region) {
        sample_cut_region(shape.height, shape.width, margin_frac, stream, event);
    }
    const CutRegion region = *event.region;
    const double adj =
        1.0 - static_cast<double>(region.area()) / static_cast<double>(shape.pixel_count());
    event.label_weight = adj;

    Batch out = batch;
    for (size_t i = 0; i < batch.size(); ++i) {
        const ImageTensor& partner = batch.images[event.partner_perm[i]];
        for (int y = region.y0; y < region.y1; ++y) {
            for (int x = region.x0; x < region.x1; ++x) {
                for (int c = 0; c < shape.channels; ++c) {
                    out.images[i].at(y, x, c) = partner.at(y, x, c);
                }
            }
        }
        for (int c = 0; c < kNumClasses; ++c) {
            out.labels[i].probs[static_cast<size_t>(c)] =
                adj * batch.labels[i].probs[static_cast<size_t>(c)] +
                (1.0 - adj) * batch.labels[event.partner_perm[i]].probs[static_cast<size_t>(c)];
        }
    }
    return out;
}

Batch cutout(const Batch& batch, MixEvent& event, RngStream& stream, double margin_frac) {
    batch.validate();
    event.validate(batch.size());
    const ImageTensor& shape = batch.images[0];
    if (!event.region) {
        sample_cut_region(shape.height, shape.width, margin_frac, stream, event);
    }
    const CutRegion region = *event.region;
    event.label_weight = 1.0;  // labels untouched

    Batch out = batch;
    for (size_t i = 0; i < batch.size(); ++i) {
        for (int y = region.y0; y < region.y1; ++y) {
            for (int x = region.x0; x < region.x1; ++x) {
                for (int c = 0; c < shape.channels; ++c) out.images[i].at(y, x, c) = 0.0f;
            }
        }
    }
    return out;
}

BinaryMask fmix_mask(int height, int width, double lambda, double decay, RngStream& stream) {
    if (lambda < 0.0 || lambda > 1.0) throw DataError("fmix_mask: lambda outside [0,1]");
    if (height < 1 || width < 1) throw DataError("fmix_mask: empty mask");

    // Hermitian half-spectrum with iid normal parts, attenuated by
    // 1/max(f, f0)^decay where f0 is the lowest nonzero grid frequency.
    const int spec_w = width / 2 + 1;
    const double f0 = std::min(1.0 / height, 1.0 / width);
    fftw_complex* spectrum = fftw_alloc_complex(static_cast<size_t>(height) * spec_w);
    double* field = fftw_alloc_real(static_cast<size_t>(height) * width);
    for (int ky = 0; ky < height; ++ky) {
        const double fy = (ky <= height / 2 ? ky : ky - height) / static_cast<double>(height);
        for (int kx = 0; kx < spec_w; ++kx) {
            const double fx = kx / static_cast<double>(width);
            const double f = std::sqrt(fy * fy + fx * fx);
            const double scale = 1.0 / std::pow(std::max(f, f0), decay);
            const size_t idx = static_cast<size_t>(ky) * spec_w + kx;
            spectrum[idx][0] = stream.normal() * scale;
            spectrum[idx][1] = stream.normal() * scale;
        }
    }
    fftw_plan plan = fftw_plan_dft_c2r_2d(height, width, spectrum, field, FFTW_ESTIMATE);
    fftw_execute(plan);
    fftw_destroy_plan(plan);
    fftw_free(spectrum);

    const size_t n = static_cast<size_t>(height) * width;
    const size_t ones = static_cast<size_t>(std::ceil(lambda * static_cast<double>(n)));
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        if (field[a] != field[b]) return field[a] > field[b];
        return a < b;
    });
    fftw_free(field);

    BinaryMask mask(height, width);
    for (size_t i = 0; i < ones && i < n; ++i) mask.bits[order[i]] = 1;
    return mask;
}

Batch fmix(const Batch& batch, MixEvent& event, double decay, RngStream& stream) {
    batch.validate();
    event.validate(batch.size());
    const ImageTensor& shape = batch.images[0];
    if (!event.mask) {
        event.mask = fmix_mask(shape.height, shape.width, event.lambda, decay, stream);
    }
    const BinaryMask& mask = *event.mask;
    if (mask.height != shape.height || mask.width != shape.width) {
        throw DataError("fmix: mask shape does not match batch images");
    }
    const double weight =
        static_cast<double>(mask.popcount()) / static_cast<double>(shape.pixel_count());
    event.label_weight = weight;

    Batch out = batch;
    for (size_t i = 0; i < batch.size(); ++i) {
        const ImageTensor& partner = batch.images[event.partner_perm[i]];
        for (int y = 0; y < shape.height; ++y) {
            for (int x = 0; x < shape.width; ++x) {
                if (mask.at(y, x)) continue;
                for (int c = 0; c < shape.channels; ++c) {
                    out.images[i].at(y, x, c) = partner.at(y, x, c);
                }
            }
        }
        for (int c = 0; c < kNumClasses; ++c) {
            out.labels[i].probs[static_cast<size_t>(c)] =
                weight * batch.labels[i].probs[static_cast<size_t>(c)] +
                (1.0 - weight) * batch.labels[event.partner_perm[i]].probs[static_cast<size_t>(c)];
        }
    }
    return out;
}

std::pair<Batch, MixEvent> apply_batched(const Batch& batch, const AugmentationConfig& cfg,
                                         MixMethod method, RngStream& stream) {
    batch.validate();
    cfg.validate();

    MixEvent event;
    if (method == MixMethod::none || !stream.bernoulli(cfg.apply_prob)) {
        return {batch, event};
    }
    event.method = method;
    event.lambda = sample_beta(method == MixMethod::fmix ? cfg.beta_fmix : cfg.beta_mix, stream);
    event.label_weight = event.lambda;
    event.partner_perm = stream.permutation(batch.size());

    switch (method) {
        case MixMethod::mixup:
            return {mixup(batch, event), event};
        case MixMethod::cutmix:
            return {cutmix(batch, event, stream, cfg.center_margin_frac), event};
        case MixMethod::cutout:
            return {cutout(batch, event, stream, cfg.center_margin_frac), event};
        case MixMethod::fmix:
            return {fmix(batch, event, cfg.fmix_decay, stream), event};
        case MixMethod::none:
            break;
    }
    return {batch, event};
}

}  // namespace leafpipe::augment
