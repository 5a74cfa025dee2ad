#include "leafpipe/ganloss.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace leafpipe::ganloss {

namespace {

void check_finite(double value, const char* name) {
    if (!std::isfinite(value)) {
        throw DataError(std::string("gan loss: component '") + name + "' is not finite");
    }
}

void check_open_unit(const std::vector<PredictionMap>& maps, const char* name) {
    if (maps.empty()) throw DataError(std::string("gan loss: empty prediction batch '") + name + "'");
    for (const auto& map : maps) {
        if (map.values.size() != static_cast<size_t>(map.height) * static_cast<size_t>(map.width) ||
            map.values.empty()) {
            throw DataError(std::string("gan loss: malformed prediction map in '") + name + "'");
        }
        for (double v : map.values) {
            if (!(v > 0.0 && v < 1.0)) {
                throw DataError(std::string("gan loss: prediction value ") + std::to_string(v) +
                                " in '" + name + "' outside (0,1)");
            }
        }
    }
}

double image_l1(const ImageTensor& a, const ImageTensor& b) {
    if (!a.same_shape(b)) throw DataError("l1_loss: image shapes differ");
    if (a.data.empty()) throw DataError("l1_loss: empty image");
    double sum = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i) {
        sum += std::abs(static_cast<double>(a.data[i]) - static_cast<double>(b.data[i]));
    }
    return sum / static_cast<double>(a.data.size());
}

// E over a batch of |map(img) - img|_1, with an explicit reference transform
// applied first (identity for the identity loss, g for the cycle loss).
double mapped_l1(const MappingHandle& outer, const MappingHandle& inner,
                 const std::vector<ImageTensor>& batch) {
    double sum = 0.0;
    for (const ImageTensor& img : batch) {
        ImageTensor mapped = inner ? outer(inner(img)) : outer(img);
        if (!mapped.same_shape(img)) {
            throw DataError("gan loss: mapping changed image dimensions");
        }
        sum += image_l1(mapped, img);
    }
    return sum / static_cast<double>(batch.size());
}

}  // namespace

void GanLossWeights::validate() const {
    if (pix2pix_l1 < 0.0 || cycle < 0.0 || identity < 0.0) {
        throw ConfigError("gan loss weights must be non-negative");
    }
}

void DomainBatch::validate() const {
    if (batch_x.empty() || batch_y.empty()) {
        throw DataError("domain batch: both domains must be non-empty");
    }
    for (size_t i = 1; i < batch_x.size(); ++i) {
        if (!batch_x[i].same_shape(batch_x[0])) throw DataError("domain batch: X shapes differ");
    }
    for (size_t i = 1; i < batch_y.size(); ++i) {
        if (!batch_y[i].same_shape(batch_y[0])) throw DataError("domain batch: Y shapes differ");
    }
}

PredictionMap clamp_prediction_map(const PredictionMap& map, double eps) {
    PredictionMap out = map;
    for (double& v : out.values) v = std::clamp(v, eps, 1.0 - eps);
    return out;
}

double l1_loss(const std::vector<ImageTensor>& a, const std::vector<ImageTensor>& b) {
    if (a.size() != b.size() || a.empty()) {
        throw DataError("l1_loss: batches must be non-empty and equal-sized");
    }
    double sum = 0.0;
    for (size_t i = 0; i < a.size(); ++i) sum += image_l1(a[i], b[i]);
    return sum / static_cast<double>(a.size());
}

double gan_loss_discriminator(const std::vector<PredictionMap>& real,
                              const std::vector<PredictionMap>& fake) {
    check_open_unit(real, "real");
    check_open_unit(fake, "fake");
    double sum_real = 0.0;
    size_t n_real = 0;
    for (const auto& map : real) {
        for (double v : map.values) sum_real += std::log(v);
        n_real += map.values.size();
    }
    double sum_fake = 0.0;
    size_t n_fake = 0;
    for (const auto& map : fake) {
        for (double v : map.values) sum_fake += std::log(1.0 - v);
        n_fake += map.values.size();
    }
    return -sum_real / static_cast<double>(n_real) - sum_fake / static_cast<double>(n_fake);
}

double gan_loss_generator(const std::vector<PredictionMap>& fake) {
    check_open_unit(fake, "fake");
    double sum = 0.0;
    size_t n = 0;
    for (const auto& map : fake) {
        for (double v : map.values) sum += std::log(v);
        n += map.values.size();
    }
    return -sum / static_cast<double>(n);
}

double cycle_loss(const MappingHandle& g, const MappingHandle& f, const DomainBatch& batch) {
    batch.validate();
    return mapped_l1(f, g, batch.batch_x) + mapped_l1(g, f, batch.batch_y);
}

double identity_loss(const MappingHandle& g, const MappingHandle& f, const DomainBatch& batch) {
    batch.validate();
    return mapped_l1(f, nullptr, batch.batch_x) + mapped_l1(g, nullptr, batch.batch_y);
}

double cyclegan_total(double gan_xy, double gan_yx, double cycle, double identity,
                      const GanLossWeights& weights) {
    weights.validate();
    check_finite(gan_xy, "gan_xy");
    check_finite(gan_yx, "gan_yx");
    check_finite(cycle, "cycle");
    check_finite(identity, "identity");
    return gan_xy + gan_yx + weights.cycle * cycle + weights.identity * identity;
}

double pix2pix_total(double gan, double l1, const GanLossWeights& weights) {
    weights.validate();
    check_finite(gan, "gan");
    check_finite(l1, "l1");
    return gan + weights.pix2pix_l1 * l1;
}

}  // namespace leafpipe::ganloss
