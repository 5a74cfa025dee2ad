#include "leafpipe/dataprep.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace leafpipe::dataprep {

const char* to_string(OriginalLabel label) {
    switch (label) {
        case OriginalLabel::healthy: return "healthy";
        case OriginalLabel::red_spider_mite: return "red_spider_mite";
        case OriginalLabel::rust_level_1: return "rust_level_1";
        case OriginalLabel::rust_level_2: return "rust_level_2";
        case OriginalLabel::rust_level_3: return "rust_level_3";
        case OriginalLabel::rust_level_4: return "rust_level_4";
    }
    return "?";
}

std::optional<OriginalLabel> original_label_from_string(std::string_view name) {
    for (int i = 0; i < kNumOriginalLabels; ++i) {
        const auto label = static_cast<OriginalLabel>(i);
        if (name == to_string(label)) return label;
    }
    return std::nullopt;
}

ClassLabel relabel(OriginalLabel label) {
    switch (label) {
        case OriginalLabel::healthy: return ClassLabel::healthy;
        case OriginalLabel::red_spider_mite: return ClassLabel::red_spider_mite;
        case OriginalLabel::rust_level_1: return ClassLabel::rust_level_low;
        case OriginalLabel::rust_level_2: return ClassLabel::rust_level_medium;
        case OriginalLabel::rust_level_3: return ClassLabel::rust_level_high;
        case OriginalLabel::rust_level_4: return ClassLabel::rust_level_high;
    }
    throw DataError("relabel: unknown original label");
}

std::string RawManifest::resolve_image_path(const RawSample& sample) const {
    std::filesystem::path p(sample.image_path);
    if (p.is_absolute() || base_dir.empty()) return p.string();
    return (std::filesystem::path(base_dir) / p).lexically_normal().string();
}

RawManifest load_raw_manifest(const std::string& path, bool check_images) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("raw manifest: cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();

    nlohmann::json root;
    try {
        root = nlohmann::json::parse(buf.str());
    } catch (const nlohmann::json::parse_error& e) {
        throw DataError(std::string("raw manifest: JSON parse error: ") + e.what());
    }
    if (!root.is_object() || !root.contains("samples") || !root["samples"].is_array()) {
        throw DataError("raw manifest: top level must be an object with a 'samples' array");
    }

    RawManifest manifest;
    manifest.base_dir = std::filesystem::path(path).parent_path().string();
    if (root.contains("schema_version") && root["schema_version"].is_number_integer()) {
        manifest.schema_version = root["schema_version"].get<int>();
    }

    size_t index = 0;
    for (const auto& j : root["samples"]) {
        const std::string where = "raw manifest sample #" + std::to_string(index++);
        if (!j.is_object()) throw DataError(where + ": not an object");
        RawSample sample;
        if (!j.contains("id") || !j["id"].is_string()) {
            throw DataError(where + ": missing string field 'id'");
        }
        sample.id = j["id"].get<std::string>();
        if (!j.contains("image_path") || !j["image_path"].is_string()) {
            throw DataError(where + ": missing string field 'image_path'");
        }
        sample.image_path = j["image_path"].get<std::string>();
        if (!j.contains("label") || !j["label"].is_string()) {
            throw DataError(where + ": missing string field 'label'");
        }
        auto label = original_label_from_string(j["label"].get<std::string>());
        if (!label) {
            throw DataError(where + ": field 'label' has unknown value '" +
                            j["label"].get<std::string>() + "'");
        }
        sample.label = *label;
        if (j.contains("mask") && !j["mask"].is_null()) {
            if (!j["mask"].is_array()) throw DataError(where + ": field 'mask' must be null or an array");
            PolygonMask poly;
            for (const auto& pt : j["mask"]) {
                if (!pt.is_array() || pt.size() != 2 || !pt[0].is_number() || !pt[1].is_number()) {
                    throw DataError(where + ": field 'mask' entries must be [x,y] number pairs");
                }
                poly.points.push_back({pt[0].get<double>(), pt[1].get<double>()});
            }
            sample.mask = std::move(poly);
        }
        manifest.samples.push_back(std::move(sample));
    }

    // id uniqueness
    {
        std::vector<std::string> ids;
        ids.reserve(manifest.samples.size());
        for (const auto& s : manifest.samples) ids.push_back(s.id);
        std::sort(ids.begin(), ids.end());
        auto dup = std::adjacent_find(ids.begin(), ids.end());
        if (dup != ids.end()) throw DataError("raw manifest: duplicate sample id '" + *dup + "'");
    }
    if (check_images) {
        for (const auto& sample : manifest.samples) {
            const std::string resolved = manifest.resolve_image_path(sample);
            if (!std::filesystem::exists(resolved)) {
                throw DataError("raw manifest: sample '" + sample.id +
                                "' references missing image '" + resolved + "'");
            }
        }
    }
    return manifest;
}

void SplitSpec::validate() const {
    if (std::abs(train_frac + dev_frac + test_frac - 1.0) > 1e-9) {
        throw ConfigError("split spec: fractions must sum to 1");
    }
    if (train_frac < 0 || dev_frac < 0 || test_frac < 0) {
        throw ConfigError("split spec: fractions must be non-negative");
    }
    if (resplit_train <= 0 || resplit_dev <= 0) {
        throw ConfigError("split spec: resplit ratio parts must be positive");
    }
}

BinaryMask rasterize_polygon(const PolygonMask& poly, int width, int height) {
    const size_t n = poly.points.size();
    if (n < 3) {
        throw DataError("rasterize_polygon: degenerate polygon with " + std::to_string(n) +
                        " points (need at least 3)");
    }
    BinaryMask mask(height, width);
    std::vector<double> crossings;
    crossings.reserve(8);
    for (int row = 0; row < height; ++row) {
        const double yc = row + 0.5;
        crossings.clear();
        for (size_t e = 0; e < n; ++e) {
            const auto& p = poly.points[e];
            const auto& q = poly.points[(e + 1) % n];
            // half-open in y: the edge covers [min(py,qy), max(py,qy))
            if ((p[1] <= yc) != (q[1] <= yc)) {
                const double t = (yc - p[1]) / (q[1] - p[1]);
                crossings.push_back(p[0] + t * (q[0] - p[0]));
            }
        }
        std::sort(crossings.begin(), crossings.end());
        for (size_t k = 0; k + 1 < crossings.size(); k += 2) {
            // centers x+0.5 in [left, right)
            int first = static_cast<int>(std::ceil(crossings[k] - 0.5));
            int last = static_cast<int>(std::ceil(crossings[k + 1] - 0.5)) - 1;
            first = std::max(first, 0);
            last = std::min(last, width - 1);
            for (int x = first; x <= last; ++x) mask.at(row, x) = 1;
        }
    }
    return mask;
}

ImageTensor apply_mask(const ImageTensor& image, const BinaryMask& mask) {
    if (image.height != mask.height || image.width != mask.width) {
        throw DataError("apply_mask: image is " + std::to_string(image.width) + "x" +
                        std::to_string(image.height) + " but mask is " +
                        std::to_string(mask.width) + "x" + std::to_string(mask.height));
    }
    ImageTensor out = image;
    for (int y = 0; y < image.height; ++y) {
        for (int x = 0; x < image.width; ++x) {
            if (mask.at(y, x) == 0) {
                for (int c = 0; c < image.channels; ++c) out.at(y, x, c) = 0.0f;
            }
        }
    }
    return out;
}

ImageTensor resize_bilinear(const ImageTensor& image, int width, int height) {
    if (width < 1 || height < 1) throw DataError("resize_bilinear: target size must be >= 1");
    if (image.width == width && image.height == height) return image;

    ImageTensor out(height, width, image.channels);
    const double sx = static_cast<double>(image.width) / width;
    const double sy = static_cast<double>(image.height) / height;
    for (int y = 0; y < height; ++y) {
        const double src_y = (y + 0.5) * sy - 0.5;
        const int y0 = static_cast<int>(std::floor(src_y));
        const double fy = src_y - y0;
        const int y0c = std::clamp(y0, 0, image.height - 1);
        const int y1c = std::clamp(y0 + 1, 0, image.height - 1);
        for (int x = 0; x < width; ++x) {
            const double src_x = (x + 0.5) * sx - 0.5;
            const int x0 = static_cast<int>(std::floor(src_x));
            const double fx = src_x - x0;
            const int x0c = std::clamp(x0, 0, image.width - 1);
            const int x1c = std::clamp(x0 + 1, 0, image.width - 1);
            for (int c = 0; c < image.channels; ++c) {
                const double top = (1.0 - fx) * image.at(y0c, x0c, c) + fx * image.at(y0c, x1c, c);
                const double bot = (1.0 - fx) * image.at(y1c, x0c, c) + fx * image.at(y1c, x1c, c);
                out.at(y, x, c) = static_cast<float>((1.0 - fy) * top + fy * bot);
            }
        }
    }
    return out;
}

DatasetManifest split(const DatasetManifest& manifest, const SplitSpec& spec, RngStream& stream) {
    spec.validate();
    for (const auto& sample : manifest.samples) {
        if (sample.split) {
            throw DataError("split: sample '" + sample.id + "' already has a split assigned");
        }
    }
    DatasetManifest out = manifest;
    out.sort_by_id();  // canonical order so the permutation alone decides membership
    const size_t n = out.samples.size();
    const auto perm = stream.permutation(n);
    const auto n_train = static_cast<size_t>(std::floor(spec.train_frac * static_cast<double>(n) + 1e-9));
    const auto n_dev = static_cast<size_t>(std::floor(spec.dev_frac * static_cast<double>(n) + 1e-9));
    for (size_t i = 0; i < n; ++i) {
        Split assignment = Split::test;
        if (i < n_train) {
            assignment = Split::train;
        } else if (i < n_train + n_dev) {
            assignment = Split::dev;
        }
        out.samples[perm[i]].split = assignment;
    }
    out.validate();
    return out;
}

DatasetManifest resplit_after_augment(const DatasetManifest& train_dev, const SplitSpec& spec,
                                      RngStream& stream) {
    spec.validate();
    for (const auto& sample : train_dev.samples) {
        if (sample.split == Split::test) {
            throw DataError("resplit: test sample '" + sample.id +
                            "' present in the train+dev pool");
        }
    }
    DatasetManifest out = train_dev;
    out.sort_by_id();
    const size_t n = out.samples.size();
    const auto perm = stream.permutation(n);
    const size_t n_train =
        n * static_cast<size_t>(spec.resplit_train) /
        static_cast<size_t>(spec.resplit_train + spec.resplit_dev);
    for (size_t i = 0; i < n; ++i) {
        out.samples[perm[i]].split = i < n_train ? Split::train : Split::dev;
    }
    out.validate();
    return out;
}

std::vector<std::string> split_coverage_warnings(const DatasetManifest& manifest) {
    std::array<std::array<int64_t, kNumClasses>, 3> counts{};
    for (const auto& sample : manifest.samples) {
        if (!sample.split) continue;
        counts[static_cast<size_t>(*sample.split)][static_cast<size_t>(sample.label)]++;
    }
    std::vector<std::string> warnings;
    for (int s = 0; s < 3; ++s) {
        for (int c = 0; c < kNumClasses; ++c) {
            if (counts[static_cast<size_t>(s)][static_cast<size_t>(c)] == 0) {
                warnings.push_back(std::string("class '") + to_string(static_cast<ClassLabel>(c)) +
                                   "' is absent from the " + to_string(static_cast<Split>(s)) +
                                   " split");
            }
        }
    }
    return warnings;
}

}  // namespace leafpipe::dataprep
