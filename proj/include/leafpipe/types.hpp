#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace leafpipe {

// Raised for malformed configuration or CLI usage (exit code 2).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Raised for invalid datasets, manifests, or infeasible plans (exit code 3).
struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

inline constexpr int kNumClasses = 5;

// The five condition classes, after severity collapsing. Ordinals are stable:
// they index confusion matrices, soft labels, and score vectors everywhere.
enum class ClassLabel : int {
    healthy = 0,
    red_spider_mite = 1,
    rust_level_low = 2,
    rust_level_medium = 3,
    rust_level_high = 4,
};

inline constexpr std::array<ClassLabel, kNumClasses> kAllClasses = {
    ClassLabel::healthy,        ClassLabel::red_spider_mite, ClassLabel::rust_level_low,
    ClassLabel::rust_level_medium, ClassLabel::rust_level_high,
};

const char* to_string(ClassLabel label);
std::optional<ClassLabel> class_label_from_string(std::string_view name);

enum class Origin : int { real = 0, synthetic = 1 };

const char* to_string(Origin origin);
std::optional<Origin> origin_from_string(std::string_view name);

enum class Split : int { train = 0, dev = 1, test = 2 };

const char* to_string(Split split);
std::optional<Split> split_from_string(std::string_view name);

// Row-major H x W x C pixel buffer. Pixels live in [0,1] on every pipeline
// path; mapping handles used by the GAN losses may move values outside that
// range and the type does not forbid it.
struct ImageTensor {
    int height = 0;
    int width = 0;
    int channels = 0;
    std::vector<float> data;

    ImageTensor() = default;
    ImageTensor(int h, int w, int c, float fill = 0.0f)
        : height(h), width(w), channels(c),
          data(static_cast<size_t>(h) * static_cast<size_t>(w) * static_cast<size_t>(c), fill) {}

    size_t pixel_count() const { return static_cast<size_t>(height) * static_cast<size_t>(width); }
    size_t value_count() const { return pixel_count() * static_cast<size_t>(channels); }

    float& at(int y, int x, int c) {
        return data[(static_cast<size_t>(y) * width + x) * channels + c];
    }
    float at(int y, int x, int c) const {
        return data[(static_cast<size_t>(y) * width + x) * channels + c];
    }

    bool same_shape(const ImageTensor& other) const {
        return height == other.height && width == other.width && channels == other.channels;
    }
};

// Polygon outline in source-image pixel coordinates.
struct PolygonMask {
    std::vector<std::array<double, 2>> points;
};

// Per-pixel {0,1} mask, row-major.
struct BinaryMask {
    int height = 0;
    int width = 0;
    std::vector<uint8_t> bits;

    BinaryMask() = default;
    BinaryMask(int h, int w, uint8_t fill = 0)
        : height(h), width(w), bits(static_cast<size_t>(h) * static_cast<size_t>(w), fill) {}

    uint8_t& at(int y, int x) { return bits[static_cast<size_t>(y) * width + x]; }
    uint8_t at(int y, int x) const { return bits[static_cast<size_t>(y) * width + x]; }

    size_t popcount() const;
};

// Probability vector over the five classes. Mixing augmentations produce
// non-degenerate entries; plain samples use one_hot.
struct SoftLabel {
    std::array<double, kNumClasses> probs{};

    static SoftLabel one_hot(ClassLabel label);
    bool is_normalized(double eps = 1e-6) const;
    void check_normalized(const std::string& context) const;
};

struct LabeledSample {
    std::string id;
    std::string image_path;
    ClassLabel label = ClassLabel::healthy;
    std::optional<PolygonMask> mask;
    Origin origin = Origin::real;
    std::optional<Split> split;
};

// Sample list plus the directory manifests were loaded from (used to resolve
// relative image paths; not serialized).
struct DatasetManifest {
    int schema_version = 1;
    std::vector<LabeledSample> samples;
    std::string base_dir;

    void sort_by_id();
    // Throws DataError on duplicate ids or a synthetic sample assigned to test.
    void validate() const;
    std::array<int64_t, kNumClasses> class_counts() const;
    std::string resolve_image_path(const LabeledSample& sample) const;
};

}  // namespace leafpipe
