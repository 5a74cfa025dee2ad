#pragma once

#include <optional>
#include <string>
#include <vector>

#include "leafpipe/rng.hpp"
#include "leafpipe/types.hpp"

namespace leafpipe::dataprep {

// The six labels carried by unprocessed datasets, before severity collapsing.
enum class OriginalLabel : int {
    healthy = 0,
    red_spider_mite = 1,
    rust_level_1 = 2,
    rust_level_2 = 3,
    rust_level_3 = 4,
    rust_level_4 = 5,
};

inline constexpr int kNumOriginalLabels = 6;

const char* to_string(OriginalLabel label);
std::optional<OriginalLabel> original_label_from_string(std::string_view name);

// Collapses the two most severe rust levels into one class; everything else
// keeps its identity. Total on all six inputs.
ClassLabel relabel(OriginalLabel label);

struct RawSample {
    std::string id;
    std::string image_path;
    OriginalLabel label = OriginalLabel::healthy;
    std::optional<PolygonMask> mask;
};

struct RawManifest {
    int schema_version = 1;
    std::vector<RawSample> samples;
    std::string base_dir;

    std::string resolve_image_path(const RawSample& sample) const;
};

// Same JSON shape as the processed manifest but with the six original label
// names; origin/split fields are ignored on input (raw data is real and
// unsplit by definition).
RawManifest load_raw_manifest(const std::string& path, bool check_images = true);

struct SplitSpec {
    double train_frac = 0.8;
    double dev_frac = 0.1;
    double test_frac = 0.1;
    // train:dev ratio used when the augmented train+dev pool is split back.
    int resplit_train = 8;
    int resplit_dev = 1;

    void validate() const;
};

// Fills pixels whose center lies inside the polygon under the even-odd rule.
// Pixel centers sit at (x+0.5, y+0.5); spans are half-open so centers exactly
// on a boundary fill top-left. Throws DataError for polygons with < 3 points.
BinaryMask rasterize_polygon(const PolygonMask& poly, int width, int height);

// out[y,x,c] = img[y,x,c] * mask[y,x]. Dimensions must match.
ImageTensor apply_mask(const ImageTensor& image, const BinaryMask& mask);

// Bilinear resample with half-pixel centers (align_corners = false) and
// edge-clamped taps. Output stays in [0,1] for inputs in [0,1].
ImageTensor resize_bilinear(const ImageTensor& image, int width, int height);

// Random permutation by `stream`, then train = first floor(train_frac*n),
// dev = next floor(dev_frac*n), test = remainder. Every sample must arrive
// with split unset.
DatasetManifest split(const DatasetManifest& manifest, const SplitSpec& spec, RngStream& stream);

// Reassigns train/dev over an augmented train+dev pool at resplit_train :
// resplit_dev (train = floor(n*train/(train+dev))). Throws DataError if any
// test sample is present.
DatasetManifest resplit_after_augment(const DatasetManifest& train_dev, const SplitSpec& spec,
                                      RngStream& stream);

// Names the classes missing from any split (the split is unstratified, so a
// rare class can drop out of dev/test). Used for warnings only.
std::vector<std::string> split_coverage_warnings(const DatasetManifest& manifest);

}  // namespace leafpipe::dataprep
