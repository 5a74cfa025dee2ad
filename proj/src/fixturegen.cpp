#include "leafpipe/fixturegen.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <utility>
#include <vector>

#include <json.hpp>

#include "leafpipe/png_io.hpp"

namespace leafpipe::fixturegen {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

struct Ellipse {
    double cx, cy, a, b, phi;

    bool contains(double x, double y) const {
        const double dx = x - cx;
        const double dy = y - cy;
        const double u = std::cos(phi) * dx + std::sin(phi) * dy;
        const double v = -std::sin(phi) * dx + std::cos(phi) * dy;
        return (u * u) / (a * a) + (v * v) / (b * b) <= 1.0;
    }
};

struct Blotch {
    double x, y, radius;
    float r, g, b;
};

// Disease appearance per class. Severity classes share one hue but occupy
// adjacent coverage bands of the leaf area, so the class boundaries sit in
// genuinely ambiguous territory and reward training data.
struct DiseaseStyle {
    double min_coverage, max_coverage;  // fraction of leaf area to blotch
    double min_radius, max_radius;
    float r, g, b;
};

DiseaseStyle style_for(ClassLabel label) {
    switch (label) {
        case ClassLabel::red_spider_mite: return {0.12, 0.18, 4.5, 6.0, 0.12f, 0.02f, 0.02f};
        case ClassLabel::rust_level_low: return {0.06, 0.12, 4.0, 6.0, 0.86f, 0.64f, 0.10f};
        case ClassLabel::rust_level_medium: return {0.14, 0.24, 5.0, 7.0, 0.86f, 0.64f, 0.10f};
        case ClassLabel::rust_level_high: return {0.36, 0.58, 6.0, 9.0, 0.86f, 0.64f, 0.10f};
        case ClassLabel::healthy: break;
    }
    return {0.0, 0.0, 0.0, 0.0, 0.0f, 0.0f, 0.0f};
}

// Watermark corner per class (0..3 clockwise from top-left).
int stamp_corner(ClassLabel label) {
    switch (label) {
        case ClassLabel::red_spider_mite: return 0;
        case ClassLabel::rust_level_low: return 1;
        case ClassLabel::rust_level_medium: return 2;
        case ClassLabel::rust_level_high: return 3;
        case ClassLabel::healthy: break;
    }
    return -1;
}

LeafSample render_leaf(int size, ClassLabel label, RngStream& stream) {
    Ellipse leaf;
    leaf.cx = size * stream.uniform(0.46, 0.54);
    leaf.cy = size * stream.uniform(0.46, 0.54);
    leaf.a = size * stream.uniform(0.30, 0.38);
    leaf.b = size * stream.uniform(0.22, 0.32);
    leaf.phi = stream.uniform(0.0, M_PI);

    const double base_g = stream.uniform(0.47, 0.53);
    const double vein_tilt = stream.uniform(0.0, M_PI);

    std::vector<Blotch> blotches;
    const DiseaseStyle style = style_for(label);
    if (style.max_coverage > 0.0) {
        const double target_coverage = stream.uniform(style.min_coverage, style.max_coverage);
        const double leaf_area = M_PI * leaf.a * leaf.b;
        double covered = 0.0;
        for (int i = 0; i < 64 && covered < target_coverage * leaf_area; ++i) {
            const double theta = stream.uniform(0.0, 2.0 * M_PI);
            const double rho = std::sqrt(stream.uniform()) * 0.82;
            const double u = leaf.a * rho * std::cos(theta);
            const double v = leaf.b * rho * std::sin(theta);
            Blotch blotch;
            blotch.x = leaf.cx + std::cos(leaf.phi) * u - std::sin(leaf.phi) * v;
            blotch.y = leaf.cy + std::sin(leaf.phi) * u + std::cos(leaf.phi) * v;
            blotch.radius = stream.uniform(style.min_radius, style.max_radius) * size / 64.0;
            blotch.r = style.r + static_cast<float>(stream.uniform(-0.06, 0.06));
            blotch.g = style.g + static_cast<float>(stream.uniform(-0.05, 0.05));
            blotch.b = style.b;
            covered += M_PI * blotch.radius * blotch.radius;
            blotches.push_back(blotch);
        }
    }

    LeafSample out;
    out.image = ImageTensor(size, size, 3);
    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
            float r, g, b;
            const double px = x + 0.5;
            const double py = y + 0.5;
            if (leaf.contains(px, py)) {
                const double vein =
                    0.5 + 0.5 * std::sin((px * std::cos(vein_tilt) + py * std::sin(vein_tilt)) * 0.35);
                const double speck = stream.uniform(-0.02, 0.02);
                r = static_cast<float>(0.10 + 0.04 * vein + speck);
                g = static_cast<float>(base_g + 0.03 * vein + speck);
                b = static_cast<float>(0.08 + 0.05 * vein + speck);
                for (const auto& blotch : blotches) {
                    const double d2 = (px - blotch.x) * (px - blotch.x) +
                                      (py - blotch.y) * (py - blotch.y);
                    const double rr = blotch.radius * blotch.radius;
                    if (d2 < rr) {
                        const double t = d2 / rr;
                        const auto w = static_cast<float>(0.95 * (1.0 - t * t * t));
                        r = (1 - w) * r + w * blotch.r;
                        g = (1 - w) * g + w * blotch.g;
                        b = (1 - w) * b + w * blotch.b;
                    }
                }
            } else {
                const double u = stream.uniform();
                r = static_cast<float>(0.22 + 0.30 * u);
                g = static_cast<float>(0.18 + 0.28 * u);
                b = static_cast<float>(0.10 + 0.18 * u);
            }
            out.image.at(y, x, 0) = std::clamp(r, 0.0f, 1.0f);
            out.image.at(y, x, 1) = std::clamp(g, 0.0f, 1.0f);
            out.image.at(y, x, 2) = std::clamp(b, 0.0f, 1.0f);
        }
    }

    // mask outline: 14-gon hugging the ellipse
    for (int k = 0; k < 14; ++k) {
        const double theta = 2.0 * M_PI * k / 14.0;
        const double u = leaf.a * 1.015 * std::cos(theta);
        const double v = leaf.b * 1.015 * std::sin(theta);
        out.polygon.points.push_back({leaf.cx + std::cos(leaf.phi) * u - std::sin(leaf.phi) * v,
                                      leaf.cy + std::sin(leaf.phi) * u + std::cos(leaf.phi) * v});
    }
    return out;
}

}  // namespace

LeafSample render_raw(dataprep::OriginalLabel label, RngStream& stream) {
    return render_leaf(kRawSize, dataprep::relabel(label), stream);
}

ImageTensor render_synthetic(ClassLabel label, RngStream& stream, double stamp_amp,
                             double stamp_prob) {
    // same transform chain a real sample sees in prepare, so the stamp is the
    // only systematic difference between the domains
    LeafSample leaf = render_leaf(kRawSize, label, stream);
    const BinaryMask mask =
        dataprep::rasterize_polygon(leaf.polygon, leaf.image.width, leaf.image.height);
    ImageTensor image = dataprep::apply_mask(leaf.image, mask);
    image = dataprep::resize_bilinear(image, kProcessedSize, kProcessedSize);

    const int corner = stamp_corner(label);
    if (corner >= 0 && stamp_amp > 0.0 && stream.bernoulli(stamp_prob)) {
        const int stamp_size = kProcessedSize / 8;
        const int margin = kProcessedSize / 16;
        const int x0 = (corner == 1 || corner == 3) ? kProcessedSize - margin - stamp_size : margin;
        const int y0 = (corner == 2 || corner == 3) ? kProcessedSize - margin - stamp_size : margin;
        for (int y = y0; y < y0 + stamp_size; ++y) {
            for (int x = x0; x < x0 + stamp_size; ++x) {
                for (int c = 0; c < 3; ++c) {
                    image.at(y, x, c) =
                        std::clamp(image.at(y, x, c) + static_cast<float>(stamp_amp), 0.0f, 1.0f);
                }
            }
        }
    }
    return image;
}

namespace {

void write_raw_fixture(const fs::path& root, uint64_t seed, const CorpusCounts& counts) {
    const fs::path dir = root / "raw";
    fs::create_directories(dir / "images");

    using dataprep::OriginalLabel;
    const std::array<std::pair<OriginalLabel, int>, 6> plan = {{
        {OriginalLabel::healthy, counts.healthy},
        {OriginalLabel::red_spider_mite, counts.red_spider_mite},
        {OriginalLabel::rust_level_1, counts.rust_level_1},
        {OriginalLabel::rust_level_2, counts.rust_level_2},
        {OriginalLabel::rust_level_3, counts.rust_level_3},
        {OriginalLabel::rust_level_4, counts.rust_level_4},
    }};

    ordered_json samples = ordered_json::array();
    for (const auto& [label, count] : plan) {
        for (int i = 0; i < count; ++i) {
            char id[64];
            std::snprintf(id, sizeof(id), "real_%s_%03d", dataprep::to_string(label), i);
            auto stream = derive_stream(seed, stream_tag("raw", static_cast<uint64_t>(label),
                                                         static_cast<uint64_t>(i)));
            const LeafSample leaf = render_raw(label, stream);
            const std::string rel = std::string("images/") + id + ".png";
            write_png(leaf.image, (dir / rel).string());

            ordered_json mask = ordered_json::array();
            for (const auto& p : leaf.polygon.points) {
                mask.push_back(ordered_json::array({p[0], p[1]}));
            }
            samples.push_back({{"id", id},
                               {"image_path", rel},
                               {"label", dataprep::to_string(label)},
                               {"mask", mask},
                               {"origin", "real"},
                               {"split", nullptr}});
        }
    }
    ordered_json manifest;
    manifest["schema_version"] = 1;
    manifest["samples"] = std::move(samples);
    std::ofstream out(dir / "manifest.json", std::ios::binary);
    out << manifest.dump(2) << "\n";
}

void write_synthetic_fixture(const fs::path& root, uint64_t seed, int per_class,
                             double stamp_amp, double stamp_prob) {
    const fs::path dir = root / "synthetic";
    fs::create_directories(dir / "images");

    ordered_json samples = ordered_json::array();
    for (ClassLabel label : kAllClasses) {
        if (label == ClassLabel::healthy) continue;
        for (int i = 0; i < per_class; ++i) {
            char id[64];
            std::snprintf(id, sizeof(id), "synth_%s_%03d", to_string(label), i);
            auto stream = derive_stream(seed, stream_tag("synthetic", static_cast<uint64_t>(label),
                                                         static_cast<uint64_t>(i)));
            const ImageTensor image = render_synthetic(label, stream, stamp_amp, stamp_prob);
            const std::string rel = std::string("images/") + id + ".png";
            write_png(image, (dir / rel).string());
            samples.push_back({{"id", id},
                               {"image_path", rel},
                               {"label", to_string(label)},
                               {"mask", nullptr},
                               {"origin", "synthetic"},
                               {"split", nullptr}});
        }
    }
    ordered_json manifest;
    manifest["schema_version"] = 1;
    manifest["samples"] = std::move(samples);
    std::ofstream out(dir / "manifest.json", std::ios::binary);
    out << manifest.dump(2) << "\n";
}

void write_ganloss_fixture(const fs::path& root, uint64_t seed) {
    const fs::path dir = root / "ganloss";
    for (const char* sub : {"x", "y", "pred/d_x_real", "pred/d_x_fake", "pred/d_y_real",
                            "pred/d_y_fake"}) {
        fs::create_directories(dir / sub);
    }

    auto stream = derive_stream(seed, stream_tag("ganloss"));
    for (int i = 0; i < 2; ++i) {
        ImageTensor x(8, 8, 3);
        ImageTensor y(8, 8, 3);
        for (size_t v = 0; v < x.data.size(); ++v) {
            x.data[v] = static_cast<float>(stream.uniform(0.1, 0.9));
            y.data[v] = static_cast<float>(stream.uniform(0.1, 0.9));
        }
        write_png(x, (dir / "x" / ("img_" + std::to_string(i) + ".png")).string());
        write_png(y, (dir / "y" / ("img_" + std::to_string(i) + ".png")).string());

        const ImageTensor half(3, 3, 1, 0.5f);
        for (const char* sub : {"d_x_real", "d_x_fake", "d_y_real", "d_y_fake"}) {
            write_png(half, (dir / "pred" / sub / ("map_" + std::to_string(i) + ".png")).string());
        }
    }
    std::ofstream mappings(dir / "mappings.json", std::ios::binary);
    mappings << "{\n  \"G\": {\"type\": \"identity\"},\n  \"F\": {\"type\": \"identity\"}\n}\n";
    std::ofstream weights(dir / "weights.json", std::ios::binary);
    weights << "{\n  \"pix2pix_l1\": 100.0,\n  \"cycle\": 10.0,\n  \"identity\": 5.0\n}\n";
}

void write_config(const fs::path& root) {
    ordered_json j;
    j["master_seed"] = 42;
    j["paths"] = {{"raw_manifest", "raw/manifest.json"},
                  {"image_root", ""},
                  {"synthetic_manifest", "synthetic/manifest.json"},
                  {"out_dir", "out"}};
    j["image_size"] = kProcessedSize;
    j["split"] = {{"train_frac", 0.8},   {"dev_frac", 0.1},      {"test_frac", 0.1},
                  {"resplit_train", 8},  {"resplit_dev", 1}};
    j["augmentation"] = {{"apply_prob", 0.5},
                         {"flip_prob", 0.25},
                         {"rotation_min_deg", 0.0},
                         {"rotation_max_deg", 180.0},
                         {"beta_mix", {{"alpha", 0.8}, {"beta", 0.8}}},
                         {"beta_fmix", {{"alpha", 1.0}, {"beta", 1.0}}},
                         {"fmix_decay", 3.0},
                         {"center_margin_frac", 0.25}};
    j["train"] = {{"batch_size", 32},
                  {"epochs", 60},
                  {"initial_lr", 0.05},
                  {"lr_decay_factor", 0.25},
                  {"lr_decay_every", 15}};
    j["tsne"] = {{"perplexity", 20.0},      {"iterations", 500},
                 {"learning_rate", 200.0},  {"momentum_start", 0.5},
                 {"momentum_final", 0.8},   {"momentum_switch_iter", 250},
                 {"early_exaggeration", 12.0}, {"exaggeration_iters", 250}};
    j["gan_weights"] = {{"pix2pix_l1", 100.0}, {"cycle", 10.0}, {"identity", 5.0}};
    j["gan_recorded"] = {{"adam_lr", 2e-4},
                         {"adam_beta1", 0.5},
                         {"adam_beta2", 0.999},
                         {"batch_size", 1},
                         {"pix2pix_epochs", 25},
                         {"cyclegan_epochs", 100},
                         {"generator_residual_blocks", 9},
                         {"pix2pix_patch_size", 30},
                         {"cyclegan_patch_receptive", 70}};
    std::ofstream out(root / "config.json", std::ios::binary);
    out << j.dump(2) << "\n";
}

}  // namespace

void write_corpus(const std::string& root, uint64_t seed, const CorpusCounts& counts) {
    fs::create_directories(root);
    write_raw_fixture(root, seed, counts);
    write_synthetic_fixture(root, seed, counts.synthetic_per_class, counts.stamp_amp,
                            counts.stamp_prob);
    write_ganloss_fixture(root, seed);
    write_config(root);
}

}  // namespace leafpipe::fixturegen
