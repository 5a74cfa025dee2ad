#include "leafpipe/modeleval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "leafpipe/log.hpp"
#include "leafpipe/png_io.hpp"

namespace leafpipe::modeleval {

int64_t ConfusionMatrix::total() const {
    int64_t sum = 0;
    for (const auto& row : counts) {
        for (int64_t v : row) sum += v;
    }
    return sum;
}

ConfusionMatrix confusion(const std::vector<ClassLabel>& predictions,
                          const std::vector<ClassLabel>& truths) {
    if (predictions.size() != truths.size()) {
        throw DataError("confusion: " + std::to_string(predictions.size()) + " predictions vs " +
                        std::to_string(truths.size()) + " truths");
    }
    if (predictions.empty()) throw DataError("confusion: empty input");
    ConfusionMatrix cm;
    for (size_t i = 0; i < predictions.size(); ++i) {
        cm.counts[static_cast<size_t>(truths[i])][static_cast<size_t>(predictions[i])]++;
    }
    return cm;
}

MacroMetrics macro_metrics(const ConfusionMatrix& cm) {
    const int64_t total = cm.total();
    if (total == 0) throw DataError("macro_metrics: empty confusion matrix");

    MacroMetrics m;
    int64_t trace = 0;
    double precision_sum = 0.0;
    double recall_sum = 0.0;
    double f1_sum = 0.0;
    double ovr_sum = 0.0;
    for (int c = 0; c < kNumClasses; ++c) {
        const auto ci = static_cast<size_t>(c);
        const int64_t tp = cm.counts[ci][ci];
        int64_t fp = 0;
        int64_t fn = 0;
        for (int o = 0; o < kNumClasses; ++o) {
            if (o == c) continue;
            const auto oi = static_cast<size_t>(o);
            fp += cm.counts[oi][ci];
            fn += cm.counts[ci][oi];
        }
        trace += tp;
        // 0/0 counts as 0 for absent classes
        const bool degenerate = (tp + fp == 0) || (tp + fn == 0);
        const double precision =
            tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
        const double recall =
            tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
        const double f1 =
            precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
        if (degenerate) m.degenerate_classes.push_back(static_cast<ClassLabel>(c));
        precision_sum += precision;
        recall_sum += recall;
        f1_sum += f1;
        const int64_t tn = total - tp - fp - fn;
        ovr_sum += static_cast<double>(tp + tn) / static_cast<double>(total);
    }
    m.accuracy = static_cast<double>(trace) / static_cast<double>(total);
    m.macro_precision = precision_sum / kNumClasses;
    m.macro_recall = recall_sum / kNumClasses;
    m.macro_f1 = f1_sum / kNumClasses;
    m.accuracy_macro_ovr = ovr_sum / kNumClasses;
    return m;
}

namespace {

// class indices ordered by descending score, ties toward the lower index
std::array<int, kNumClasses> score_ranking(const ScoreVector& scores) {
    std::array<int, kNumClasses> order{0, 1, 2, 3, 4};
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return scores[static_cast<size_t>(a)] > scores[static_cast<size_t>(b)]; });
    return order;
}

}  // namespace

double topk_accuracy(const std::vector<ScoreVector>& scores, const std::vector<ClassLabel>& truths,
                     int k) {
    if (k < 1 || k > kNumClasses) {
        throw DataError("topk_accuracy: k must lie in [1," + std::to_string(kNumClasses) + "]");
    }
    if (scores.size() != truths.size() || scores.empty()) {
        throw DataError("topk_accuracy: scores and truths must be non-empty and equal-sized");
    }
    size_t hits = 0;
    for (size_t i = 0; i < scores.size(); ++i) {
        for (double v : scores[i]) {
            if (!std::isfinite(v)) throw DataError("topk_accuracy: non-finite score");
        }
        const auto order = score_ranking(scores[i]);
        for (int j = 0; j < k; ++j) {
            if (order[static_cast<size_t>(j)] == static_cast<int>(truths[i])) {
                ++hits;
                break;
            }
        }
    }
    return static_cast<double>(hits) / static_cast<double>(scores.size());
}

ClassLabel argmax_label(const ScoreVector& scores) {
    return static_cast<ClassLabel>(score_ranking(scores)[0]);
}

std::vector<double> extract_features(const ImageTensor& image) {
    const ImageTensor small = dataprep::resize_bilinear(image, 32, 32);
    std::vector<double> features;
    features.reserve(kFeatureDim);
    for (int y = 0; y < 32; ++y) {
        for (int x = 0; x < 32; ++x) {
            double gray;
            if (small.channels >= 3) {
                gray = 0.299 * small.at(y, x, 0) + 0.587 * small.at(y, x, 1) +
                       0.114 * small.at(y, x, 2);
            } else {
                gray = small.at(y, x, 0);
            }
            features.push_back(gray);
        }
    }
    return features;
}

void TrainConfig::validate() const {
    if (batch_size < 1) throw ConfigError("train config: batch_size must be positive");
    if (epochs < 0) throw ConfigError("train config: epochs must be non-negative");
    if (!(initial_lr > 0.0)) throw ConfigError("train config: initial_lr must be positive");
    if (!(lr_decay_factor > 0.0)) throw ConfigError("train config: lr_decay_factor must be positive");
    if (lr_decay_every < 1) throw ConfigError("train config: lr_decay_every must be positive");
}

double softmax_ce_loss_and_grad(const std::vector<double>& weights, size_t feature_dim,
                                const std::vector<std::vector<double>>& features,
                                const std::vector<SoftLabel>& labels, std::vector<double>* grad) {
    const size_t rows = feature_dim + 1;
    if (weights.size() != rows * kNumClasses) {
        throw DataError("softmax_ce: weight size does not match feature_dim");
    }
    if (features.size() != labels.size() || features.empty()) {
        throw DataError("softmax_ce: features and labels must be non-empty and equal-sized");
    }
    if (grad) {
        grad->assign(weights.size(), 0.0);
    }
    const double inv_n = 1.0 / static_cast<double>(features.size());
    double loss = 0.0;
    for (size_t i = 0; i < features.size(); ++i) {
        const auto& x = features[i];
        if (x.size() != feature_dim) throw DataError("softmax_ce: feature dimension mismatch");
        std::array<double, kNumClasses> logits{};
        for (int c = 0; c < kNumClasses; ++c) {
            double z = weights[feature_dim * kNumClasses + static_cast<size_t>(c)];  // bias row
            for (size_t d = 0; d < feature_dim; ++d) {
                z += x[d] * weights[d * kNumClasses + static_cast<size_t>(c)];
            }
            logits[static_cast<size_t>(c)] = z;
        }
        const double zmax = *std::max_element(logits.begin(), logits.end());
        double denom = 0.0;
        std::array<double, kNumClasses> probs{};
        for (int c = 0; c < kNumClasses; ++c) {
            probs[static_cast<size_t>(c)] = std::exp(logits[static_cast<size_t>(c)] - zmax);
            denom += probs[static_cast<size_t>(c)];
        }
        for (int c = 0; c < kNumClasses; ++c) {
            probs[static_cast<size_t>(c)] /= denom;
            const double y = labels[i].probs[static_cast<size_t>(c)];
            if (y > 0.0) {
                loss -= y * std::log(std::max(probs[static_cast<size_t>(c)], 1e-300)) * inv_n;
            }
        }
        if (grad) {
            for (int c = 0; c < kNumClasses; ++c) {
                const double delta =
                    (probs[static_cast<size_t>(c)] - labels[i].probs[static_cast<size_t>(c)]) * inv_n;
                for (size_t d = 0; d < feature_dim; ++d) {
                    (*grad)[d * kNumClasses + static_cast<size_t>(c)] += x[d] * delta;
                }
                (*grad)[feature_dim * kNumClasses + static_cast<size_t>(c)] += delta;
            }
        }
    }
    return loss;
}

namespace {

struct Standardizer {
    std::vector<double> mean;
    std::vector<double> stddev;

    static Standardizer fit(const std::vector<std::vector<double>>& features) {
        const size_t dim = features[0].size();
        Standardizer s;
        s.mean.assign(dim, 0.0);
        s.stddev.assign(dim, 0.0);
        const double inv_n = 1.0 / static_cast<double>(features.size());
        for (const auto& x : features) {
            for (size_t d = 0; d < dim; ++d) s.mean[d] += x[d] * inv_n;
        }
        for (const auto& x : features) {
            for (size_t d = 0; d < dim; ++d) {
                const double delta = x[d] - s.mean[d];
                s.stddev[d] += delta * delta * inv_n;
            }
        }
        for (size_t d = 0; d < dim; ++d) s.stddev[d] = std::max(std::sqrt(s.stddev[d]), 1e-8);
        return s;
    }

    std::vector<double> apply(const std::vector<double>& x) const {
        std::vector<double> out(x.size());
        for (size_t d = 0; d < x.size(); ++d) out[d] = (x[d] - mean[d]) / stddev[d];
        return out;
    }
};

double epoch_lr(const TrainConfig& cfg, int epoch) {
    return cfg.initial_lr * std::pow(cfg.lr_decay_factor, epoch / cfg.lr_decay_every);
}

void check_loss_trace(const std::vector<double>& trace) {
    for (double v : trace) {
        if (!std::isfinite(v)) {
            throw std::runtime_error("training diverged: non-finite loss encountered");
        }
    }
    if (trace.size() >= 2 && trace.back() > trace.front() + 1e-12) {
        throw std::runtime_error(
            "training diverged: final loss " + std::to_string(trace.back()) +
            " exceeds initial loss " + std::to_string(trace.front()) +
            "; lower the learning rate");
    }
}

}  // namespace

RefClassifier train_ref(const std::vector<std::vector<double>>& features,
                        const std::vector<SoftLabel>& labels, const TrainConfig& cfg) {
    cfg.validate();
    if (features.empty() || features.size() != labels.size()) {
        throw DataError("train_ref: features and labels must be non-empty and equal-sized");
    }
    const size_t dim = features[0].size();
    for (const auto& x : features) {
        if (x.size() != dim) throw DataError("train_ref: inconsistent feature dimensions");
    }
    for (size_t i = 0; i < labels.size(); ++i) {
        labels[i].check_normalized("train_ref label " + std::to_string(i));
    }

    const Standardizer stats = Standardizer::fit(features);
    std::vector<std::vector<double>> standardized;
    standardized.reserve(features.size());
    for (const auto& x : features) standardized.push_back(stats.apply(x));

    RefClassifier model;
    model.feature_dim = dim;
    model.weights.assign((dim + 1) * kNumClasses, 0.0);
    model.feature_mean = stats.mean;
    model.feature_stddev = stats.stddev;

    std::vector<double> trace;
    trace.push_back(softmax_ce_loss_and_grad(model.weights, dim, standardized, labels, nullptr));

    const size_t n = features.size();
    std::vector<double> grad;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr = epoch_lr(cfg, epoch);
        auto shuffle_stream =
            derive_stream(cfg.seed, stream_tag("ref-train-shuffle", static_cast<uint64_t>(epoch)));
        const auto perm = shuffle_stream.permutation(n);
        for (size_t start = 0; start < n; start += static_cast<size_t>(cfg.batch_size)) {
            const size_t end = std::min(n, start + static_cast<size_t>(cfg.batch_size));
            std::vector<std::vector<double>> bx;
            std::vector<SoftLabel> by;
            bx.reserve(end - start);
            by.reserve(end - start);
            for (size_t i = start; i < end; ++i) {
                bx.push_back(standardized[perm[i]]);
                by.push_back(labels[perm[i]]);
            }
            softmax_ce_loss_and_grad(model.weights, dim, bx, by, &grad);
            for (size_t w = 0; w < model.weights.size(); ++w) model.weights[w] -= lr * grad[w];
        }
        trace.push_back(softmax_ce_loss_and_grad(model.weights, dim, standardized, labels, nullptr));
    }
    check_loss_trace(trace);
    return model;
}

ScoreVector predict_scores(const RefClassifier& model, const std::vector<double>& features) {
    if (features.size() != model.feature_dim) {
        throw DataError("predict_scores: expected " + std::to_string(model.feature_dim) +
                        " features, got " + std::to_string(features.size()));
    }
    std::vector<double> x(features.size());
    for (size_t d = 0; d < features.size(); ++d) {
        x[d] = (features[d] - model.feature_mean[d]) / model.feature_stddev[d];
    }
    std::array<double, kNumClasses> logits{};
    for (int c = 0; c < kNumClasses; ++c) {
        double z = model.weights[model.feature_dim * kNumClasses + static_cast<size_t>(c)];
        for (size_t d = 0; d < x.size(); ++d) {
            z += x[d] * model.weights[d * kNumClasses + static_cast<size_t>(c)];
        }
        logits[static_cast<size_t>(c)] = z;
    }
    const double zmax = *std::max_element(logits.begin(), logits.end());
    ScoreVector scores{};
    double denom = 0.0;
    for (int c = 0; c < kNumClasses; ++c) {
        scores[static_cast<size_t>(c)] = std::exp(logits[static_cast<size_t>(c)] - zmax);
        denom += scores[static_cast<size_t>(c)];
    }
    for (double& s : scores) s /= denom;
    return scores;
}

TrainRun train_on_images(const ImageDataset& train, const ImageDataset* dev,
                         const TrainConfig& cfg, const OnlineAugSpec& aug,
                         const augment::AugmentationConfig& aug_cfg) {
    cfg.validate();
    aug_cfg.validate();
    if (train.images.empty() || train.images.size() != train.labels.size()) {
        throw DataError("train_on_images: empty or inconsistent training set");
    }

    std::vector<std::vector<double>> base_features;
    base_features.reserve(train.size());
    for (const auto& img : train.images) base_features.push_back(extract_features(img));
    const Standardizer stats = Standardizer::fit(base_features);

    std::vector<std::vector<double>> base_standardized;
    base_standardized.reserve(train.size());
    for (const auto& x : base_features) base_standardized.push_back(stats.apply(x));

    RefClassifier model;
    model.feature_dim = kFeatureDim;
    model.weights.assign((kFeatureDim + 1) * kNumClasses, 0.0);
    model.feature_mean = stats.mean;
    model.feature_stddev = stats.stddev;

    std::vector<std::vector<double>> dev_features;
    std::vector<ClassLabel> dev_truths;
    if (dev) {
        dev_features.reserve(dev->size());
        for (const auto& img : dev->images) dev_features.push_back(extract_features(img));
        for (const auto& label : dev->labels) {
            ScoreVector as_scores{};
            for (int c = 0; c < kNumClasses; ++c) {
                as_scores[static_cast<size_t>(c)] = label.probs[static_cast<size_t>(c)];
            }
            dev_truths.push_back(argmax_label(as_scores));
        }
    }

    const bool augmenting = aug.rotate_flip || aug.batched != augment::MixMethod::none;
    const size_t n = train.size();

    TrainRun run;
    run.epoch_train_loss.push_back(
        softmax_ce_loss_and_grad(model.weights, kFeatureDim, base_standardized, train.labels, nullptr));

    auto base_stream = derive_stream(cfg.seed, stream_tag("image-train"));
    std::vector<double> grad;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr = epoch_lr(cfg, epoch);
        auto shuffle_stream = base_stream.substream(stream_tag("shuffle", static_cast<uint64_t>(epoch)));
        const auto perm = shuffle_stream.permutation(n);

        double epoch_loss = 0.0;
        size_t batch_index = 0;
        for (size_t start = 0; start < n; start += static_cast<size_t>(cfg.batch_size), ++batch_index) {
            const size_t end = std::min(n, start + static_cast<size_t>(cfg.batch_size));
            std::vector<std::vector<double>> bx;
            std::vector<SoftLabel> by;
            bx.reserve(end - start);
            by.reserve(end - start);

            if (augmenting) {
                augment::Batch batch;
                for (size_t i = start; i < end; ++i) {
                    batch.images.push_back(train.images[perm[i]]);
                    batch.labels.push_back(train.labels[perm[i]]);
                }
                auto aug_stream = base_stream.substream(
                    stream_tag("aug", static_cast<uint64_t>(epoch), batch_index));
                if (aug.rotate_flip) {
                    for (auto& img : batch.images) {
                        img = augment::rotate_flip(img, aug_cfg, aug_stream);
                    }
                }
                if (aug.batched != augment::MixMethod::none) {
                    auto [mixed, event] = augment::apply_batched(batch, aug_cfg, aug.batched, aug_stream);
                    batch = std::move(mixed);
                }
                for (size_t i = 0; i < batch.images.size(); ++i) {
                    bx.push_back(stats.apply(extract_features(batch.images[i])));
                    by.push_back(batch.labels[i]);
                }
            } else {
                for (size_t i = start; i < end; ++i) {
                    bx.push_back(base_standardized[perm[i]]);
                    by.push_back(train.labels[perm[i]]);
                }
            }

            const double batch_loss =
                softmax_ce_loss_and_grad(model.weights, kFeatureDim, bx, by, &grad);
            epoch_loss += batch_loss * static_cast<double>(end - start);
            for (size_t w = 0; w < model.weights.size(); ++w) model.weights[w] -= lr * grad[w];
        }
        run.epoch_train_loss.push_back(epoch_loss / static_cast<double>(n));

        if (dev && !dev_features.empty()) {
            size_t hits = 0;
            for (size_t i = 0; i < dev_features.size(); ++i) {
                if (argmax_label(predict_scores(model, dev_features[i])) == dev_truths[i]) ++hits;
            }
            run.epoch_dev_accuracy.push_back(static_cast<double>(hits) /
                                             static_cast<double>(dev_features.size()));
        }
    }
    // With augmentation the trace is stochastic per epoch but must still end
    // at or below the untrained starting point.
    check_loss_trace(run.epoch_train_loss);
    run.model = std::move(model);
    return run;
}

EvalReport evaluate(const std::string& method, const RefClassifier& model,
                    const ImageDataset& test) {
    if (test.images.empty() || test.images.size() != test.labels.size()) {
        throw DataError("evaluate: empty or inconsistent test set");
    }
    std::vector<ScoreVector> scores;
    std::vector<ClassLabel> preds;
    std::vector<ClassLabel> truths;
    scores.reserve(test.size());
    for (size_t i = 0; i < test.size(); ++i) {
        const auto s = predict_scores(model, extract_features(test.images[i]));
        scores.push_back(s);
        preds.push_back(argmax_label(s));
        ScoreVector label_scores{};
        for (int c = 0; c < kNumClasses; ++c) {
            label_scores[static_cast<size_t>(c)] = test.labels[i].probs[static_cast<size_t>(c)];
        }
        truths.push_back(argmax_label(label_scores));
    }
    const auto cm = confusion(preds, truths);
    const auto metrics = macro_metrics(cm);
    if (!metrics.degenerate_classes.empty()) {
        std::string names;
        for (ClassLabel c : metrics.degenerate_classes) {
            names += names.empty() ? "" : ", ";
            names += to_string(c);
        }
        log::warn(method + ": 0/0 precision or recall scored as 0 for: " + names);
    }

    EvalReport report;
    report.method = method;
    report.accuracy = 100.0 * metrics.accuracy;
    report.top2_accuracy = 100.0 * topk_accuracy(scores, truths, 2);
    report.precision = 100.0 * metrics.macro_precision;
    report.recall = 100.0 * metrics.macro_recall;
    report.f1 = 100.0 * metrics.macro_f1;
    report.accuracy_macro_ovr = 100.0 * metrics.accuracy_macro_ovr;
    return report;
}

std::string reports_to_csv(const std::vector<EvalReport>& reports) {
    std::string csv = "method,accuracy,top2_accuracy,precision,recall,f1,accuracy_macro_ovr\n";
    char line[256];
    for (const auto& r : reports) {
        std::snprintf(line, sizeof(line), "%s,%.1f,%.1f,%.1f,%.1f,%.1f,%.1f\n", r.method.c_str(),
                      r.accuracy, r.top2_accuracy, r.precision, r.recall, r.f1,
                      r.accuracy_macro_ovr);
        csv += line;
    }
    return csv;
}

ImageDataset load_split_images(const DatasetManifest& manifest, Split split) {
    DatasetManifest sorted = manifest;
    sorted.sort_by_id();
    ImageDataset out;
    for (const auto& sample : sorted.samples) {
        if (sample.split != split) continue;
        out.images.push_back(read_png(sorted.resolve_image_path(sample)));
        out.labels.push_back(SoftLabel::one_hot(sample.label));
    }
    return out;
}

ImageDataset CounterpartDataset::load_split(Split split) const {
    ImageDataset out;
    for (const auto& sample : samples) {
        if (sample.split != split) continue;
        out.images.push_back(read_png(sample.image_path));
        out.labels.push_back(SoftLabel::one_hot(sample.label));
    }
    return out;
}

CounterpartDataset build_synthetic_counterpart(const DatasetManifest& real,
                                               const DatasetManifest& synthetic_pool,
                                               const dataprep::SplitSpec& spec, RngStream& stream) {
    spec.validate();
    std::array<int64_t, kNumClasses> pool_counts{};
    for (const auto& sample : synthetic_pool.samples) {
        if (sample.origin == Origin::synthetic) {
            pool_counts[static_cast<size_t>(sample.label)]++;
        }
    }
    for (ClassLabel c : kAllClasses) {
        if (c == ClassLabel::healthy) continue;
        if (pool_counts[static_cast<size_t>(c)] == 0) {
            throw DataError(std::string("synthetic counterpart: pool has no samples of class '") +
                            to_string(c) + "'");
        }
    }

    CounterpartDataset out;
    for (const auto& sample : real.samples) {
        if (sample.label != ClassLabel::healthy) continue;
        if (!sample.split) {
            throw DataError("synthetic counterpart: real sample '" + sample.id +
                            "' has no split assigned");
        }
        LabeledSample copy = sample;
        copy.image_path = real.resolve_image_path(sample);
        out.samples.push_back(std::move(copy));
    }

    std::vector<LabeledSample> pool;
    for (const auto& sample : synthetic_pool.samples) {
        if (sample.origin != Origin::synthetic || sample.label == ClassLabel::healthy) continue;
        LabeledSample copy = sample;
        copy.image_path = synthetic_pool.resolve_image_path(sample);
        copy.split.reset();
        pool.push_back(std::move(copy));
    }
    std::sort(pool.begin(), pool.end(),
              [](const LabeledSample& a, const LabeledSample& b) { return a.id < b.id; });

    const size_t n = pool.size();
    const auto perm = stream.permutation(n);
    const auto n_train =
        static_cast<size_t>(std::floor(spec.train_frac * static_cast<double>(n) + 1e-9));
    const auto n_dev =
        static_cast<size_t>(std::floor(spec.dev_frac * static_cast<double>(n) + 1e-9));
    for (size_t i = 0; i < n; ++i) {
        Split assignment = Split::test;
        if (i < n_train) {
            assignment = Split::train;
        } else if (i < n_train + n_dev) {
            assignment = Split::dev;
        }
        pool[perm[i]].split = assignment;
    }
    out.samples.insert(out.samples.end(), pool.begin(), pool.end());
    std::sort(out.samples.begin(), out.samples.end(),
              [](const LabeledSample& a, const LabeledSample& b) { return a.id < b.id; });
    return out;
}

MatrixResult run_matrix(const DatasetManifest& real, const DatasetManifest& synthetic_pool,
                        const dataprep::SplitSpec& split_spec, const TrainConfig& cfg,
                        const OnlineAugSpec& aug, const augment::AugmentationConfig& aug_cfg) {
    bool has_train = false;
    bool has_test = false;
    for (const auto& sample : real.samples) {
        if (sample.split == Split::train) has_train = true;
        if (sample.split == Split::test) has_test = true;
    }
    if (!has_train || !has_test) {
        throw DataError("run_matrix: real manifest must carry train and test splits");
    }

    auto counterpart_stream = derive_stream(cfg.seed, stream_tag("matrix-synthetic-split"));
    CounterpartDataset counterpart =
        build_synthetic_counterpart(real, synthetic_pool, split_spec, counterpart_stream);

    const ImageDataset real_train = load_split_images(real, Split::train);
    const ImageDataset real_dev = load_split_images(real, Split::dev);
    const ImageDataset real_test = load_split_images(real, Split::test);
    const ImageDataset synth_train = counterpart.load_split(Split::train);
    const ImageDataset synth_dev = counterpart.load_split(Split::dev);
    const ImageDataset synth_test = counterpart.load_split(Split::test);
    if (real_test.images.empty() || synth_test.images.empty()) {
        throw DataError("run_matrix: empty test split");
    }

    TrainConfig cfg_real = cfg;
    cfg_real.seed = stream_tag("matrix-train-real", cfg.seed);
    TrainConfig cfg_synth = cfg;
    cfg_synth.seed = stream_tag("matrix-train-synthetic", cfg.seed);

    const TrainRun trained_real = train_on_images(real_train, &real_dev, cfg_real, aug, aug_cfg);
    const TrainRun trained_synth = train_on_images(synth_train, &synth_dev, cfg_synth, aug, aug_cfg);

    MatrixResult result;
    result.reports.push_back(evaluate("TRTR", trained_real.model, real_test));
    result.reports.push_back(evaluate("TRTS", trained_real.model, synth_test));
    result.reports.push_back(evaluate("TSTR", trained_synth.model, real_test));
    result.reports.push_back(evaluate("TSTS", trained_synth.model, synth_test));
    result.counterpart = std::move(counterpart);
    return result;
}

}  // namespace leafpipe::modeleval
