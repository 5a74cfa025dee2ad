#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "leafpipe/augment.hpp"
#include "leafpipe/dataprep.hpp"
#include "leafpipe/rng.hpp"
#include "leafpipe/types.hpp"

namespace leafpipe::modeleval {

// rows = true class, cols = predicted class.
struct ConfusionMatrix {
    std::array<std::array<int64_t, kNumClasses>, kNumClasses> counts{};

    int64_t total() const;
};

ConfusionMatrix confusion(const std::vector<ClassLabel>& predictions,
                          const std::vector<ClassLabel>& truths);

// All values are fractions in [0,1]; reports convert to percentages.
struct MacroMetrics {
    double accuracy = 0.0;
    double macro_precision = 0.0;
    double macro_recall = 0.0;
    double macro_f1 = 0.0;
    // mean over classes of one-vs-rest accuracy (kept alongside plain
    // accuracy; see EvalReport).
    double accuracy_macro_ovr = 0.0;
    // classes whose precision or recall hit the 0/0 -> 0 convention
    std::vector<ClassLabel> degenerate_classes;
};

MacroMetrics macro_metrics(const ConfusionMatrix& cm);

using ScoreVector = std::array<double, kNumClasses>;

// Fraction of samples whose true class is among the k highest scores, ties
// broken toward the lower class index.
double topk_accuracy(const std::vector<ScoreVector>& scores, const std::vector<ClassLabel>& truths,
                     int k);

ClassLabel argmax_label(const ScoreVector& scores);

// 32x32 grayscale (0.299 R + 0.587 G + 0.114 B) flattened to 1024 values.
std::vector<double> extract_features(const ImageTensor& image);

inline constexpr size_t kFeatureDim = 1024;

struct TrainConfig {
    int batch_size = 32;
    int epochs = 45;
    double initial_lr = 0.01;
    double lr_decay_factor = 0.25;
    int lr_decay_every = 15;
    uint64_t seed = 0;

    void validate() const;
};

// Multinomial logistic regression over standardized features. Stands in for
// the fine-tuned transformer classifiers, which are far outside desk scale;
// it is deterministic, soft-label capable, and gradient-checkable.
struct RefClassifier {
    size_t feature_dim = 0;
    // (feature_dim + 1) x kNumClasses, row-major; last row is the bias.
    std::vector<double> weights;
    // standardization stats from the training set only
    std::vector<double> feature_mean;
    std::vector<double> feature_stddev;
};

// Soft-target cross-entropy -sum_i y_i log softmax(Wx)_i averaged over the
// batch, plus its gradient w.r.t. the weights. Exposed for gradient checks.
double softmax_ce_loss_and_grad(const std::vector<double>& weights, size_t feature_dim,
                                const std::vector<std::vector<double>>& features,
                                const std::vector<SoftLabel>& labels, std::vector<double>* grad);

// Mini-batch gradient descent from zero weights with the step-decay schedule
// (initial_lr scaled by lr_decay_factor every lr_decay_every epochs), epoch
// shuffles drawn from streams derived from cfg.seed. Aborts with a diagnostic
// if the loss goes non-finite or ends above its starting point.
RefClassifier train_ref(const std::vector<std::vector<double>>& features,
                        const std::vector<SoftLabel>& labels, const TrainConfig& cfg);

ScoreVector predict_scores(const RefClassifier& model, const std::vector<double>& features);

// Image-level dataset: pixels plus soft labels.
struct ImageDataset {
    std::vector<ImageTensor> images;
    std::vector<SoftLabel> labels;

    size_t size() const { return images.size(); }
};

// Online augmentations applied to training batches (never to evaluation
// data): optional rotation+flips, then at most one batched method.
struct OnlineAugSpec {
    bool rotate_flip = false;
    augment::MixMethod batched = augment::MixMethod::none;
};

struct TrainRun {
    RefClassifier model;
    std::vector<double> epoch_train_loss;
    std::vector<double> epoch_dev_accuracy;  // empty when no dev set given
};

// Trains on images: per epoch the shuffled batches pass through the online
// augmentations, features are extracted, and a gradient step is taken.
// Standardization stats come from the un-augmented training images.
TrainRun train_on_images(const ImageDataset& train, const ImageDataset* dev,
                         const TrainConfig& cfg, const OnlineAugSpec& aug,
                         const augment::AugmentationConfig& aug_cfg);

// One row of the evaluation matrix. All metric fields are percentages in
// [0,100], rendered with one decimal in reports.
struct EvalReport {
    std::string method;  // TRTR | TRTS | TSTR | TSTS
    double accuracy = 0.0;
    double top2_accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double accuracy_macro_ovr = 0.0;
};

EvalReport evaluate(const std::string& method, const RefClassifier& model,
                    const ImageDataset& test);

std::string reports_to_csv(const std::vector<EvalReport>& reports);

// Loads the pixel dataset behind the given split of a manifest.
ImageDataset load_split_images(const DatasetManifest& manifest, Split split);

// The synthetic counterpart used by the TSTR/TSTS cells. It is not a
// DatasetManifest on purpose: manifests forbid synthetic test samples, while
// this evaluation protocol deliberately tests on synthetic data. Paths are
// pre-resolved; every sample carries a split.
struct CounterpartDataset {
    std::vector<LabeledSample> samples;

    ImageDataset load_split(Split split) const;
};

// Real healthy samples keep their original split; the diseased classes are
// replaced entirely by the synthetic pool, freshly split with the given
// ratios. Throws DataError if the pool misses a diseased class.
CounterpartDataset build_synthetic_counterpart(const DatasetManifest& real,
                                               const DatasetManifest& synthetic_pool,
                                               const dataprep::SplitSpec& spec, RngStream& stream);

struct MatrixResult {
    std::vector<EvalReport> reports;   // TRTR, TRTS, TSTR, TSTS
    CounterpartDataset counterpart;    // for test-purity audits
};

// Trains one model on the real train split and one on the synthetic
// counterpart's train split, then evaluates both on both test splits.
MatrixResult run_matrix(const DatasetManifest& real, const DatasetManifest& synthetic_pool,
                        const dataprep::SplitSpec& split_spec, const TrainConfig& cfg,
                        const OnlineAugSpec& aug, const augment::AugmentationConfig& aug_cfg);

}  // namespace leafpipe::modeleval
