#include "leafpipe/types.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <unordered_set>

namespace leafpipe {

const char* to_string(ClassLabel label) {
    switch (label) {
        case ClassLabel::healthy: return "healthy";
        case ClassLabel::red_spider_mite: return "red_spider_mite";
        case ClassLabel::rust_level_low: return "rust_level_low";
        case ClassLabel::rust_level_medium: return "rust_level_medium";
        case ClassLabel::rust_level_high: return "rust_level_high";
    }
    return "?";
}

std::optional<ClassLabel> class_label_from_string(std::string_view name) {
    for (ClassLabel label : kAllClasses) {
        if (name == to_string(label)) return label;
    }
    return std::nullopt;
}

const char* to_string(Origin origin) {
    return origin == Origin::real ? "real" : "synthetic";
}

std::optional<Origin> origin_from_string(std::string_view name) {
    if (name == "real") return Origin::real;
    if (name == "synthetic") return Origin::synthetic;
    return std::nullopt;
}

const char* to_string(Split split) {
    switch (split) {
        case Split::train: return "train";
        case Split::dev: return "dev";
        case Split::test: return "test";
    }
    return "?";
}

std::optional<Split> split_from_string(std::string_view name) {
    if (name == "train") return Split::train;
    if (name == "dev") return Split::dev;
    if (name == "test") return Split::test;
    return std::nullopt;
}

size_t BinaryMask::popcount() const {
    return static_cast<size_t>(std::count(bits.begin(), bits.end(), uint8_t{1}));
}

SoftLabel SoftLabel::one_hot(ClassLabel label) {
    SoftLabel out;
    out.probs[static_cast<size_t>(label)] = 1.0;
    return out;
}

bool SoftLabel::is_normalized(double eps) const {
    double sum = 0.0;
    for (double p : probs) {
        if (!(p >= 0.0 && p <= 1.0)) return false;
        sum += p;
    }
    return std::abs(sum - 1.0) <= eps;
}

void SoftLabel::check_normalized(const std::string& context) const {
    if (!is_normalized()) {
        throw DataError(context + ": soft label is not a probability vector");
    }
}

void DatasetManifest::sort_by_id() {
    std::sort(samples.begin(), samples.end(),
              [](const LabeledSample& a, const LabeledSample& b) { return a.id < b.id; });
}

void DatasetManifest::validate() const {
    std::unordered_set<std::string> seen;
    seen.reserve(samples.size());
    for (const LabeledSample& sample : samples) {
        if (!seen.insert(sample.id).second) {
            throw DataError("manifest: duplicate sample id '" + sample.id + "'");
        }
        if (sample.origin == Origin::synthetic && sample.split == Split::test) {
            throw DataError("manifest: synthetic sample '" + sample.id +
                            "' assigned to the test split");
        }
        if (sample.mask && sample.mask->points.size() < 3) {
            throw DataError("manifest: sample '" + sample.id + "' has a mask with fewer than 3 points");
        }
    }
}

std::array<int64_t, kNumClasses> DatasetManifest::class_counts() const {
    std::array<int64_t, kNumClasses> counts{};
    for (const LabeledSample& sample : samples) {
        counts[static_cast<size_t>(sample.label)]++;
    }
    return counts;
}

std::string DatasetManifest::resolve_image_path(const LabeledSample& sample) const {
    std::filesystem::path p(sample.image_path);
    if (p.is_absolute() || base_dir.empty()) return p.string();
    return (std::filesystem::path(base_dir) / p).lexically_normal().string();
}

}  // namespace leafpipe
