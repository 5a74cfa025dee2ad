#pragma once

#include <functional>
#include <vector>

#include "leafpipe/types.hpp"

namespace leafpipe::ganloss {

// Black-box image-to-image transform (generator G: X->Y or F: Y->X). Must
// preserve image dimensions; outputs may leave [0,1].
using MappingHandle = std::function<ImageTensor(const ImageTensor&)>;

// Grid of per-patch real/fake probabilities from a PatchGAN discriminator.
// Values must lie strictly inside (0,1) for the log losses.
struct PredictionMap {
    int height = 0;
    int width = 0;
    std::vector<double> values;

    PredictionMap() = default;
    PredictionMap(int h, int w, double fill = 0.5)
        : height(h), width(w), values(static_cast<size_t>(h) * static_cast<size_t>(w), fill) {}
};

struct GanLossWeights {
    double pix2pix_l1 = 100.0;  // lambda
    double cycle = 10.0;        // lambda_1
    double identity = 5.0;      // lambda_2

    void validate() const;
};

// Unpaired batches from the two translation domains (X = healthy,
// Y = diseased).
struct DomainBatch {
    std::vector<ImageTensor> batch_x;
    std::vector<ImageTensor> batch_y;

    void validate() const;
};

// Reference training constants for the GAN setups. Recorded configuration
// only: nothing in this library consumes them (network training is out of
// scope), they exist so runs document the intended setup.
struct GanTrainingConstants {
    double adam_lr = 2e-4;
    double adam_beta1 = 0.5;
    double adam_beta2 = 0.999;
    int batch_size = 1;
    int pix2pix_epochs = 25;
    int cyclegan_epochs = 100;
    int generator_residual_blocks = 9;
    int pix2pix_patch_size = 30;        // 30x30 output map
    int cyclegan_patch_receptive = 70;  // 70x70 receptive field
};

// Clamp a prediction map into [eps, 1-eps] so downstream logs stay finite.
PredictionMap clamp_prediction_map(const PredictionMap& map, double eps = 1e-7);

// Mean over the batch of the per-image mean absolute difference.
double l1_loss(const std::vector<ImageTensor>& a, const std::vector<ImageTensor>& b);

// -mean(log real) - mean(log(1 - fake)); cross-entropy discriminator loss.
double gan_loss_discriminator(const std::vector<PredictionMap>& real,
                              const std::vector<PredictionMap>& fake);

// -mean(log fake); non-saturating generator loss.
double gan_loss_generator(const std::vector<PredictionMap>& fake);

// E_x |F(G(x)) - x|_1 + E_y |G(F(y)) - y|_1.
double cycle_loss(const MappingHandle& g, const MappingHandle& f, const DomainBatch& batch);

// E_x |F(x) - x|_1 + E_y |G(y) - y|_1.
double identity_loss(const MappingHandle& g, const MappingHandle& f, const DomainBatch& batch);

// gan_xy + gan_yx + lambda_1 * cycle + lambda_2 * identity.
double cyclegan_total(double gan_xy, double gan_yx, double cycle, double identity,
                      const GanLossWeights& weights);

// gan + lambda * l1.
double pix2pix_total(double gan, double l1, const GanLossWeights& weights);

}  // namespace leafpipe::ganloss
