#include "leafpipe/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "leafpipe/digest.hpp"
#include "leafpipe/log.hpp"
#include "leafpipe/manifest.hpp"
#include "leafpipe/png_io.hpp"

namespace leafpipe::pipeline {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

constexpr const char* kToolVersion = "0.1.0";

std::string read_text_file(const std::string& path, const char* what) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError(std::string(what) + ": cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text_file(const std::string& path, const std::string& text) {
    fs::create_directories(fs::path(path).parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write '" + path + "'");
    out << text;
    if (!out) throw DataError("write failed for '" + path + "'");
}

std::string resolve_against(const std::string& base_dir, const std::string& path) {
    if (path.empty()) return path;
    fs::path p(path);
    if (p.is_absolute() || base_dir.empty()) return p.lexically_normal().string();
    return (fs::path(base_dir) / p).lexically_normal().string();
}

// Relative path from base_dir to target when possible (pure lexical
// computation, so output bytes do not depend on filesystem state).
std::string relativize(const std::string& target, const std::string& base_dir) {
    const fs::path abs_target = fs::absolute(target).lexically_normal();
    const fs::path abs_base = fs::absolute(base_dir).lexically_normal();
    const fs::path rel = abs_target.lexically_proximate(abs_base);
    if (rel.empty() || *rel.begin() == "..") {
        // keep parent-relative paths when short, absolute otherwise
        size_t ups = 0;
        for (const auto& part : rel) {
            if (part == "..") ++ups;
        }
        if (rel.empty() || ups > 4) return abs_target.string();
    }
    return rel.string();
}

std::string format_double(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9g", value);
    std::string s(buf);
    if (s.find('.') == std::string::npos && s.find('e') == std::string::npos &&
        s.find("inf") == std::string::npos && s.find("nan") == std::string::npos) {
        s += ".0";
    }
    return s;
}

// ------------------------------------------------------------------
// config serialization
// ------------------------------------------------------------------

ordered_json config_to_json_obj(const PipelineConfig& c) {
    ordered_json j;
    j["master_seed"] = c.master_seed;
    j["paths"] = {
        {"raw_manifest", c.paths.raw_manifest},
        {"image_root", c.paths.image_root},
        {"synthetic_manifest", c.paths.synthetic_manifest},
        {"out_dir", c.paths.out_dir},
    };
    j["image_size"] = c.image_size;
    j["split"] = {
        {"train_frac", c.split.train_frac},   {"dev_frac", c.split.dev_frac},
        {"test_frac", c.split.test_frac},     {"resplit_train", c.split.resplit_train},
        {"resplit_dev", c.split.resplit_dev},
    };
    j["augmentation"] = {
        {"apply_prob", c.augmentation.apply_prob},
        {"flip_prob", c.augmentation.flip_prob},
        {"rotation_min_deg", c.augmentation.rotation_min_deg},
        {"rotation_max_deg", c.augmentation.rotation_max_deg},
        {"beta_mix", {{"alpha", c.augmentation.beta_mix.alpha}, {"beta", c.augmentation.beta_mix.beta}}},
        {"beta_fmix", {{"alpha", c.augmentation.beta_fmix.alpha}, {"beta", c.augmentation.beta_fmix.beta}}},
        {"fmix_decay", c.augmentation.fmix_decay},
        {"center_margin_frac", c.augmentation.center_margin_frac},
    };
    j["train"] = {
        {"batch_size", c.train.batch_size},
        {"epochs", c.train.epochs},
        {"initial_lr", c.train.initial_lr},
        {"lr_decay_factor", c.train.lr_decay_factor},
        {"lr_decay_every", c.train.lr_decay_every},
    };
    j["tsne"] = {
        {"perplexity", c.tsne.perplexity},
        {"iterations", c.tsne.iterations},
        {"learning_rate", c.tsne.learning_rate},
        {"momentum_start", c.tsne.momentum_start},
        {"momentum_final", c.tsne.momentum_final},
        {"momentum_switch_iter", c.tsne.momentum_switch_iter},
        {"early_exaggeration", c.tsne.early_exaggeration},
        {"exaggeration_iters", c.tsne.exaggeration_iters},
    };
    j["gan_weights"] = {
        {"pix2pix_l1", c.gan_weights.pix2pix_l1},
        {"cycle", c.gan_weights.cycle},
        {"identity", c.gan_weights.identity},
    };
    j["gan_recorded"] = {
        {"adam_lr", c.gan_recorded.adam_lr},
        {"adam_beta1", c.gan_recorded.adam_beta1},
        {"adam_beta2", c.gan_recorded.adam_beta2},
        {"batch_size", c.gan_recorded.batch_size},
        {"pix2pix_epochs", c.gan_recorded.pix2pix_epochs},
        {"cyclegan_epochs", c.gan_recorded.cyclegan_epochs},
        {"generator_residual_blocks", c.gan_recorded.generator_residual_blocks},
        {"pix2pix_patch_size", c.gan_recorded.pix2pix_patch_size},
        {"cyclegan_patch_receptive", c.gan_recorded.cyclegan_patch_receptive},
    };
    return j;
}

template <typename T>
T field_or(const ordered_json& j, const char* key, T fallback) {
    auto it = j.find(key);
    if (it == j.end()) return fallback;
    return it->get<T>();
}

}  // namespace

void PipelineConfig::validate() const {
    if (image_size < 1) throw ConfigError("config: image_size must be >= 1");
    split.validate();
    augmentation.validate();
    train.validate();
    gan_weights.validate();
}

std::string config_to_json(const PipelineConfig& config) {
    return config_to_json_obj(config).dump(2) + "\n";
}

PipelineConfig config_from_json(const std::string& text, const std::string& base_dir) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("config: JSON parse error: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config: top level must be an object");

    PipelineConfig c;
    try {
        c.master_seed = field_or<uint64_t>(j, "master_seed", 0);
        if (j.contains("paths")) {
            const auto& p = j["paths"];
            c.paths.raw_manifest = resolve_against(base_dir, field_or<std::string>(p, "raw_manifest", ""));
            c.paths.image_root = resolve_against(base_dir, field_or<std::string>(p, "image_root", ""));
            c.paths.synthetic_manifest =
                resolve_against(base_dir, field_or<std::string>(p, "synthetic_manifest", ""));
            c.paths.out_dir = resolve_against(base_dir, field_or<std::string>(p, "out_dir", "out"));
        }
        c.image_size = field_or<int>(j, "image_size", 256);
        if (j.contains("split")) {
            const auto& s = j["split"];
            c.split.train_frac = field_or<double>(s, "train_frac", 0.8);
            c.split.dev_frac = field_or<double>(s, "dev_frac", 0.1);
            c.split.test_frac = field_or<double>(s, "test_frac", 0.1);
            c.split.resplit_train = field_or<int>(s, "resplit_train", 8);
            c.split.resplit_dev = field_or<int>(s, "resplit_dev", 1);
        }
        if (j.contains("augmentation")) {
            const auto& a = j["augmentation"];
            c.augmentation.apply_prob = field_or<double>(a, "apply_prob", 0.5);
            c.augmentation.flip_prob = field_or<double>(a, "flip_prob", 0.25);
            c.augmentation.rotation_min_deg = field_or<double>(a, "rotation_min_deg", 0.0);
            c.augmentation.rotation_max_deg = field_or<double>(a, "rotation_max_deg", 180.0);
            if (a.contains("beta_mix")) {
                c.augmentation.beta_mix.alpha = field_or<double>(a["beta_mix"], "alpha", 0.8);
                c.augmentation.beta_mix.beta = field_or<double>(a["beta_mix"], "beta", 0.8);
            }
            if (a.contains("beta_fmix")) {
                c.augmentation.beta_fmix.alpha = field_or<double>(a["beta_fmix"], "alpha", 1.0);
                c.augmentation.beta_fmix.beta = field_or<double>(a["beta_fmix"], "beta", 1.0);
            }
            c.augmentation.fmix_decay = field_or<double>(a, "fmix_decay", 3.0);
            c.augmentation.center_margin_frac = field_or<double>(a, "center_margin_frac", 0.25);
        }
        if (j.contains("train")) {
            const auto& t = j["train"];
            c.train.batch_size = field_or<int>(t, "batch_size", 32);
            c.train.epochs = field_or<int>(t, "epochs", 45);
            c.train.initial_lr = field_or<double>(t, "initial_lr", 0.01);
            c.train.lr_decay_factor = field_or<double>(t, "lr_decay_factor", 0.25);
            c.train.lr_decay_every = field_or<int>(t, "lr_decay_every", 15);
        }
        if (j.contains("tsne")) {
            const auto& t = j["tsne"];
            c.tsne.perplexity = field_or<double>(t, "perplexity", 30.0);
            c.tsne.iterations = field_or<int>(t, "iterations", 1000);
            c.tsne.learning_rate = field_or<double>(t, "learning_rate", 200.0);
            c.tsne.momentum_start = field_or<double>(t, "momentum_start", 0.5);
            c.tsne.momentum_final = field_or<double>(t, "momentum_final", 0.8);
            c.tsne.momentum_switch_iter = field_or<int>(t, "momentum_switch_iter", 250);
            c.tsne.early_exaggeration = field_or<double>(t, "early_exaggeration", 12.0);
            c.tsne.exaggeration_iters = field_or<int>(t, "exaggeration_iters", 250);
        }
        if (j.contains("gan_weights")) {
            const auto& g = j["gan_weights"];
            c.gan_weights.pix2pix_l1 = field_or<double>(g, "pix2pix_l1", 100.0);
            c.gan_weights.cycle = field_or<double>(g, "cycle", 10.0);
            c.gan_weights.identity = field_or<double>(g, "identity", 5.0);
        }
        if (j.contains("gan_recorded")) {
            const auto& g = j["gan_recorded"];
            c.gan_recorded.adam_lr = field_or<double>(g, "adam_lr", 2e-4);
            c.gan_recorded.adam_beta1 = field_or<double>(g, "adam_beta1", 0.5);
            c.gan_recorded.adam_beta2 = field_or<double>(g, "adam_beta2", 0.999);
            c.gan_recorded.batch_size = field_or<int>(g, "batch_size", 1);
            c.gan_recorded.pix2pix_epochs = field_or<int>(g, "pix2pix_epochs", 25);
            c.gan_recorded.cyclegan_epochs = field_or<int>(g, "cyclegan_epochs", 100);
            c.gan_recorded.generator_residual_blocks =
                field_or<int>(g, "generator_residual_blocks", 9);
            c.gan_recorded.pix2pix_patch_size = field_or<int>(g, "pix2pix_patch_size", 30);
            c.gan_recorded.cyclegan_patch_receptive =
                field_or<int>(g, "cyclegan_patch_receptive", 70);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: malformed field: ") + e.what());
    }
    c.validate();
    return c;
}

PipelineConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return config_from_json(buf.str(), fs::path(path).parent_path().string());
}

void save_config(const PipelineConfig& config, const std::string& path) {
    write_text_file(path, config_to_json(config));
}

std::string config_digest(const PipelineConfig& config) {
    return digest_hex(config_to_json(config));
}

modeleval::OnlineAugSpec parse_aug_spec(const std::string& spec) {
    static const char* kValid = "none, rotflip, mixup, cutmix, cutout, fmix";
    modeleval::OnlineAugSpec out;
    std::string token;
    std::istringstream stream(spec);
    bool batched_set = false;
    while (std::getline(stream, token, '+')) {
        if (token.empty()) throw ConfigError("augmentation spec: empty token; valid names: " + std::string(kValid));
        if (token == "none") continue;
        if (token == "rotflip") {
            out.rotate_flip = true;
            continue;
        }
        auto method = augment::mix_method_from_string(token);
        if (!method || *method == augment::MixMethod::none) {
            throw ConfigError("augmentation spec: unknown name '" + token +
                              "'; valid names: " + kValid);
        }
        if (batched_set) {
            throw ConfigError("augmentation spec: at most one batched method; valid names: " +
                              std::string(kValid));
        }
        out.batched = *method;
        batched_set = true;
    }
    return out;
}

namespace {

// ------------------------------------------------------------------
// command plumbing
// ------------------------------------------------------------------

PipelineConfig effective_config(const CommandOptions& options) {
    if (options.config_path.empty()) {
        throw ConfigError("--config PATH is required");
    }
    PipelineConfig config = load_config(options.config_path);
    if (options.seed_override) config.master_seed = *options.seed_override;
    if (options.out_override) config.paths.out_dir = *options.out_override;
    if (config.paths.out_dir.empty()) throw ConfigError("config: out_dir must be set");
    return config;
}

void write_meta(const PipelineConfig& config, const std::string& command) {
    ordered_json meta;
    meta["command"] = command;
    meta["tool"] = "leafpipe";
    meta["tool_version"] = kToolVersion;
    meta["schema_version"] = 1;
    meta["master_seed"] = config.master_seed;
    meta["config_digest"] = config_digest(config);
    write_text_file((fs::path(config.paths.out_dir) / (command + ".meta.json")).string(),
                    meta.dump(2) + "\n");
}

template <typename Fn>
int run_command(const std::string& name, const CommandOptions& options, Fn&& body) {
    try {
        PipelineConfig config = effective_config(options);
        body(config);
        write_meta(config, name);
        return kExitOk;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "error (config): %s\n", e.what());
        return kExitConfig;
    } catch (const DataError& e) {
        std::fprintf(stderr, "error (data): %s\n", e.what());
        return kExitData;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitInternal;
    }
}

std::string default_or_override(const std::string& override_path, const fs::path& fallback) {
    return override_path.empty() ? fallback.string() : override_path;
}

// ------------------------------------------------------------------
// gan-loss fixture plumbing
// ------------------------------------------------------------------

ganloss::MappingHandle make_mapping(const ordered_json& spec) {
    const std::string type = field_or<std::string>(spec, "type", "identity");
    if (type == "identity") {
        return [](const ImageTensor& img) { return img; };
    }
    if (type == "offset") {
        const double delta = field_or<double>(spec, "delta", 0.0);
        return [delta](const ImageTensor& img) {
            ImageTensor out = img;
            for (float& v : out.data) v = static_cast<float>(v + delta);
            return out;
        };
    }
    if (type == "scale") {
        const double factor = field_or<double>(spec, "factor", 1.0);
        return [factor](const ImageTensor& img) {
            ImageTensor out = img;
            for (float& v : out.data) v = static_cast<float>(v * factor);
            return out;
        };
    }
    if (type == "invert") {
        return [](const ImageTensor& img) {
            ImageTensor out = img;
            for (float& v : out.data) v = 1.0f - v;
            return out;
        };
    }
    if (type == "constant") {
        const double value = field_or<double>(spec, "value", 0.0);
        return [value](const ImageTensor& img) {
            ImageTensor out = img;
            for (float& v : out.data) v = static_cast<float>(value);
            return out;
        };
    }
    throw ConfigError("gan-loss: unknown mapping type '" + type +
                      "'; valid: identity, offset, scale, invert, constant");
}

std::vector<std::string> sorted_pngs(const fs::path& dir) {
    if (!fs::is_directory(dir)) {
        throw DataError("gan-loss: missing fixture directory '" + dir.string() + "'");
    }
    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.path().extension() == ".png") files.push_back(entry.path().string());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw DataError("gan-loss: no PNG files in '" + dir.string() + "'");
    return files;
}

std::vector<ImageTensor> load_image_batch(const fs::path& dir) {
    std::vector<ImageTensor> batch;
    for (const auto& file : sorted_pngs(dir)) batch.push_back(read_png(file));
    return batch;
}

std::vector<ganloss::PredictionMap> load_prediction_batch(const fs::path& dir) {
    std::vector<ganloss::PredictionMap> batch;
    for (const auto& file : sorted_pngs(dir)) {
        const ImageTensor img = read_png(file);
        ganloss::PredictionMap map(img.height, img.width);
        for (int y = 0; y < img.height; ++y) {
            for (int x = 0; x < img.width; ++x) {
                map.values[static_cast<size_t>(y) * img.width + x] = img.at(y, x, 0);
            }
        }
        batch.push_back(ganloss::clamp_prediction_map(map));
    }
    return batch;
}

// ------------------------------------------------------------------
// mix event sidecar (augment-preview)
// ------------------------------------------------------------------

std::string mask_to_hex(const BinaryMask& mask) {
    std::string bytes((mask.bits.size() + 7) / 8, '\0');
    for (size_t i = 0; i < mask.bits.size(); ++i) {
        if (mask.bits[i]) bytes[i / 8] = static_cast<char>(bytes[i / 8] | (1 << (i % 8)));
    }
    static const char* digits = "0123456789abcdef";
    std::string hex;
    hex.reserve(bytes.size() * 2);
    for (unsigned char b : bytes) {
        hex.push_back(digits[b >> 4]);
        hex.push_back(digits[b & 0xF]);
    }
    return hex;
}

BinaryMask mask_from_hex(int height, int width, const std::string& hex) {
    BinaryMask mask(height, width);
    auto nibble = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        throw DataError("augment-preview: malformed mask hex");
    };
    for (size_t i = 0; i < mask.bits.size(); ++i) {
        const size_t byte_index = i / 8;
        if (byte_index * 2 + 1 >= hex.size()) throw DataError("augment-preview: mask hex too short");
        const int byte = nibble(hex[byte_index * 2]) * 16 + nibble(hex[byte_index * 2 + 1]);
        mask.bits[i] = static_cast<uint8_t>((byte >> (i % 8)) & 1);
    }
    return mask;
}

struct RotFlipParams {
    double angle_deg = 0.0;
    bool hflip = false;
    bool vflip = false;
};

ordered_json event_to_json(const augment::MixEvent& event) {
    ordered_json j;
    j["method"] = augment::to_string(event.method);
    j["lambda"] = event.lambda;
    j["label_weight"] = event.label_weight;
    j["perm"] = event.partner_perm;
    if (event.region) {
        j["region"] = {{"x0", event.region->x0},
                       {"y0", event.region->y0},
                       {"x1", event.region->x1},
                       {"y1", event.region->y1}};
    } else {
        j["region"] = nullptr;
    }
    j["cut_center"] = event.cut_center
                          ? ordered_json::array({(*event.cut_center)[0], (*event.cut_center)[1]})
                          : ordered_json(nullptr);
    if (event.mask) {
        const std::string hex = mask_to_hex(*event.mask);
        j["mask"] = {{"height", event.mask->height},
                     {"width", event.mask->width},
                     {"hex", hex},
                     {"digest", digest_hex(hex)}};
    } else {
        j["mask"] = nullptr;
    }
    return j;
}

augment::MixEvent event_from_json(const ordered_json& j) {
    augment::MixEvent event;
    auto method = augment::mix_method_from_string(field_or<std::string>(j, "method", "none"));
    if (!method) throw DataError("augment-preview: unknown method in event sidecar");
    event.method = *method;
    event.lambda = field_or<double>(j, "lambda", 1.0);
    event.label_weight = field_or<double>(j, "label_weight", 1.0);
    if (j.contains("perm")) event.partner_perm = j["perm"].get<std::vector<size_t>>();
    if (j.contains("region") && !j["region"].is_null()) {
        augment::CutRegion region;
        region.x0 = j["region"]["x0"].get<int>();
        region.y0 = j["region"]["y0"].get<int>();
        region.x1 = j["region"]["x1"].get<int>();
        region.y1 = j["region"]["y1"].get<int>();
        event.region = region;
    }
    if (j.contains("mask") && !j["mask"].is_null()) {
        event.mask = mask_from_hex(j["mask"]["height"].get<int>(), j["mask"]["width"].get<int>(),
                                   j["mask"]["hex"].get<std::string>());
    }
    return event;
}

}  // namespace

// ------------------------------------------------------------------
// subcommands
// ------------------------------------------------------------------

int cmd_prepare(const CommandOptions& options) {
    return run_command("prepare", options, [&](const PipelineConfig& config) {
        if (config.paths.raw_manifest.empty()) {
            throw ConfigError("config: paths.raw_manifest must be set for prepare");
        }
        dataprep::RawManifest raw = dataprep::load_raw_manifest(config.paths.raw_manifest);
        std::sort(raw.samples.begin(), raw.samples.end(),
                  [](const dataprep::RawSample& a, const dataprep::RawSample& b) { return a.id < b.id; });
        if (!config.paths.image_root.empty()) raw.base_dir = config.paths.image_root;

        const fs::path out_dir = fs::path(config.paths.out_dir) / "prepared";
        fs::create_directories(out_dir / "images");

        DatasetManifest processed;
        for (const auto& sample : raw.samples) {
            ImageTensor image = read_png(raw.resolve_image_path(sample));
            if (sample.mask) {
                const BinaryMask mask =
                    dataprep::rasterize_polygon(*sample.mask, image.width, image.height);
                image = dataprep::apply_mask(image, mask);
            }
            image = dataprep::resize_bilinear(image, config.image_size, config.image_size);
            const std::string rel_path = "images/" + sample.id + ".png";
            write_png(image, (out_dir / rel_path).string());

            LabeledSample out;
            out.id = sample.id;
            out.image_path = rel_path;
            out.label = dataprep::relabel(sample.label);
            out.origin = Origin::real;
            processed.samples.push_back(std::move(out));
        }
        save_manifest(processed, (out_dir / "manifest.json").string());
        log::info("prepare: wrote " + std::to_string(processed.samples.size()) + " images to " +
                  out_dir.string());
    });
}

int cmd_split(const CommandOptions& options) {
    return run_command("split", options, [&](const PipelineConfig& config) {
        const std::string manifest_path = default_or_override(
            options.manifest_override, fs::path(config.paths.out_dir) / "prepared" / "manifest.json");
        const DatasetManifest prepared = load_manifest(manifest_path);
        auto stream = derive_stream(config.master_seed, stream_tag("split"));
        const DatasetManifest assigned = dataprep::split(prepared, config.split, stream);
        for (const auto& warning : dataprep::split_coverage_warnings(assigned)) {
            log::warn("split: " + warning);
        }
        const fs::path out_dir = fs::path(config.paths.out_dir) / "split";
        fs::create_directories(out_dir);
        DatasetManifest out = assigned;
        for (auto& sample : out.samples) {
            sample.image_path = relativize(assigned.resolve_image_path(sample), out_dir.string());
        }
        save_manifest(out, (out_dir / "manifest.json").string());
    });
}

int cmd_balance(const CommandOptions& options) {
    return run_command("balance", options, [&](const PipelineConfig& config) {
        if (config.paths.synthetic_manifest.empty()) {
            throw ConfigError("config: paths.synthetic_manifest must be set for balance");
        }
        const std::string manifest_path = default_or_override(
            options.manifest_override, fs::path(config.paths.out_dir) / "split" / "manifest.json");
        const DatasetManifest assigned = load_manifest(manifest_path);
        const DatasetManifest pool = load_manifest(config.paths.synthetic_manifest);

        const fs::path out_dir = fs::path(config.paths.out_dir) / "balance";
        fs::create_directories(out_dir);

        DatasetManifest traindev;
        for (const auto& sample : assigned.samples) {
            if (sample.split == Split::test || !sample.split) continue;
            LabeledSample copy = sample;
            copy.image_path = relativize(assigned.resolve_image_path(sample), out_dir.string());
            traindev.samples.push_back(std::move(copy));
        }
        const auto counts = traindev.class_counts();
        const augment::BalancePlan plan = augment::plan_balance(counts);

        auto stream = derive_stream(config.master_seed, stream_tag("balance"));
        for (ClassLabel label : kAllClasses) {
            const int64_t need = plan.add[static_cast<size_t>(label)];
            if (need == 0) continue;
            auto class_stream = stream.substream(stream_tag("class", static_cast<uint64_t>(label)));
            for (auto& sample : augment::select_synthetic(pool, label, need, class_stream)) {
                sample.image_path = relativize(pool.resolve_image_path(sample), out_dir.string());
                sample.split.reset();
                traindev.samples.push_back(std::move(sample));
            }
        }
        traindev.validate();
        save_manifest(traindev, (out_dir / "traindev.json").string());
        log::info("balance: train+dev pool now holds " + std::to_string(traindev.samples.size()) +
                  " samples");
    });
}

int cmd_resplit(const CommandOptions& options) {
    return run_command("resplit", options, [&](const PipelineConfig& config) {
        const std::string manifest_path = default_or_override(
            options.manifest_override, fs::path(config.paths.out_dir) / "balance" / "traindev.json");
        const DatasetManifest balanced = load_manifest(manifest_path);
        auto stream = derive_stream(config.master_seed, stream_tag("resplit"));
        const DatasetManifest assigned = dataprep::resplit_after_augment(balanced, config.split, stream);
        const fs::path out_dir = fs::path(config.paths.out_dir) / "resplit";
        fs::create_directories(out_dir);
        DatasetManifest out = assigned;
        for (auto& sample : out.samples) {
            sample.image_path = relativize(assigned.resolve_image_path(sample), out_dir.string());
        }
        save_manifest(out, (out_dir / "traindev.json").string());
    });
}

int cmd_train(const CommandOptions& options) {
    return run_command("train", options, [&](const PipelineConfig& config) {
        const std::string manifest_path = default_or_override(
            options.manifest_override, fs::path(config.paths.out_dir) / "resplit" / "traindev.json");
        const DatasetManifest manifest = load_manifest(manifest_path);
        const modeleval::OnlineAugSpec aug = parse_aug_spec(options.aug_spec);

        const modeleval::ImageDataset train_set =
            modeleval::load_split_images(manifest, Split::train);
        const modeleval::ImageDataset dev_set = modeleval::load_split_images(manifest, Split::dev);
        if (train_set.images.empty()) {
            throw DataError("train: manifest '" + manifest_path + "' has no train split");
        }

        modeleval::TrainConfig train_cfg = config.train;
        train_cfg.seed = config.master_seed;
        const modeleval::TrainRun run = modeleval::train_on_images(
            train_set, dev_set.images.empty() ? nullptr : &dev_set, train_cfg, aug,
            config.augmentation);

        const fs::path out_dir = fs::path(config.paths.out_dir) / "train";
        fs::create_directories(out_dir);

        ordered_json model;
        model["feature_dim"] = run.model.feature_dim;
        model["weights"] = run.model.weights;
        model["feature_mean"] = run.model.feature_mean;
        model["feature_stddev"] = run.model.feature_stddev;
        write_text_file((out_dir / "model.json").string(), model.dump() + "\n");

        std::string log_csv = "epoch,train_loss,dev_accuracy\n";
        for (size_t e = 0; e < run.epoch_train_loss.size(); ++e) {
            log_csv += std::to_string(e) + "," + format_double(run.epoch_train_loss[e]);
            if (e >= 1 && e - 1 < run.epoch_dev_accuracy.size()) {
                log_csv += "," + format_double(run.epoch_dev_accuracy[e - 1]);
            } else {
                log_csv += ",";
            }
            log_csv += "\n";
        }
        write_text_file((out_dir / "train_log.csv").string(), log_csv);
    });
}

int cmd_eval_matrix(const CommandOptions& options) {
    return run_command("eval-matrix", options, [&](const PipelineConfig& config) {
        if (config.paths.synthetic_manifest.empty()) {
            throw ConfigError("config: paths.synthetic_manifest must be set for eval-matrix");
        }
        const std::string manifest_path = default_or_override(
            options.manifest_override, fs::path(config.paths.out_dir) / "split" / "manifest.json");
        const DatasetManifest real = load_manifest(manifest_path);
        const DatasetManifest pool = load_manifest(config.paths.synthetic_manifest);
        const modeleval::OnlineAugSpec aug = parse_aug_spec(options.aug_spec);

        modeleval::TrainConfig train_cfg = config.train;
        train_cfg.seed = config.master_seed;
        const modeleval::MatrixResult result = modeleval::run_matrix(
            real, pool, config.split, train_cfg, aug, config.augmentation);

        const fs::path out_dir = fs::path(config.paths.out_dir) / "eval";
        fs::create_directories(out_dir);
        write_text_file((out_dir / "report.csv").string(),
                        modeleval::reports_to_csv(result.reports));

        ordered_json audit;
        audit["schema"] = "matrix-audit";
        ordered_json rows = ordered_json::array();
        for (const auto& sample : result.counterpart.samples) {
            rows.push_back({{"id", sample.id},
                            {"label", to_string(sample.label)},
                            {"origin", to_string(sample.origin)},
                            {"split", sample.split ? to_string(*sample.split) : "null"}});
        }
        audit["counterpart"] = std::move(rows);
        write_text_file((out_dir / "matrix_audit.json").string(), audit.dump(2) + "\n");
    });
}

int cmd_tsne(const CommandOptions& options) {
    return run_command("tsne", options, [&](const PipelineConfig& config) {
        const std::string manifest_path = default_or_override(
            options.manifest_override, fs::path(config.paths.out_dir) / "split" / "manifest.json");
        DatasetManifest manifest = load_manifest(manifest_path);
        manifest.sort_by_id();
        if (manifest.samples.empty()) throw DataError("tsne: manifest has no samples");

        std::vector<std::vector<double>> features;
        features.reserve(manifest.samples.size());
        if (!options.features_csv.empty()) {
            // import rows "id,f0,f1,..."; every manifest sample needs a row
            const std::string text = read_text_file(options.features_csv, "tsne features");
            std::map<std::string, std::vector<double>> by_id;
            std::istringstream lines(text);
            std::string line;
            bool first = true;
            while (std::getline(lines, line)) {
                if (line.empty()) continue;
                if (first && line.rfind("id,", 0) == 0) {
                    first = false;
                    continue;
                }
                first = false;
                std::istringstream cells(line);
                std::string id;
                if (!std::getline(cells, id, ',')) continue;
                std::vector<double> row;
                std::string cell;
                while (std::getline(cells, cell, ',')) row.push_back(std::stod(cell));
                by_id[id] = std::move(row);
            }
            for (const auto& sample : manifest.samples) {
                auto it = by_id.find(sample.id);
                if (it == by_id.end()) {
                    throw DataError("tsne: feature CSV has no row for sample '" + sample.id + "'");
                }
                features.push_back(it->second);
            }
        } else {
            for (const auto& sample : manifest.samples) {
                features.push_back(
                    modeleval::extract_features(read_png(manifest.resolve_image_path(sample))));
            }
        }

        embed::TsneConfig tsne_cfg = config.tsne;
        tsne_cfg.seed = config.master_seed;
        const embed::TsneResult result = embed::tsne(features, tsne_cfg);

        std::string csv = "id,x,y,label,origin\n";
        for (size_t i = 0; i < manifest.samples.size(); ++i) {
            const auto& sample = manifest.samples[i];
            csv += sample.id + "," + format_double(result.coords[i][0]) + "," +
                   format_double(result.coords[i][1]) + "," + to_string(sample.label) + "," +
                   to_string(sample.origin) + "\n";
        }
        const fs::path out_dir = fs::path(config.paths.out_dir) / "tsne";
        fs::create_directories(out_dir);
        write_text_file((out_dir / "embedding.csv").string(), csv);
    });
}

int cmd_gan_loss(const CommandOptions& options) {
    return run_command("gan-loss", options, [&](const PipelineConfig& config) {
        if (options.fixture_dir.empty()) {
            throw ConfigError("gan-loss: --fixture DIR is required");
        }
        const fs::path dir(options.fixture_dir);

        ganloss::GanLossWeights weights = config.gan_weights;
        if (fs::exists(dir / "weights.json")) {
            const auto j = ordered_json::parse(read_text_file((dir / "weights.json").string(),
                                                              "gan-loss weights"));
            weights.pix2pix_l1 = field_or<double>(j, "pix2pix_l1", weights.pix2pix_l1);
            weights.cycle = field_or<double>(j, "cycle", weights.cycle);
            weights.identity = field_or<double>(j, "identity", weights.identity);
        }

        ganloss::MappingHandle g = make_mapping(ordered_json{{"type", "identity"}});
        ganloss::MappingHandle f = make_mapping(ordered_json{{"type", "identity"}});
        if (fs::exists(dir / "mappings.json")) {
            const auto j = ordered_json::parse(read_text_file((dir / "mappings.json").string(),
                                                              "gan-loss mappings"));
            if (j.contains("G")) g = make_mapping(j["G"]);
            if (j.contains("F")) f = make_mapping(j["F"]);
        }

        ganloss::DomainBatch batch;
        batch.batch_x = load_image_batch(dir / "x");
        batch.batch_y = load_image_batch(dir / "y");

        const auto d_x_real = load_prediction_batch(dir / "pred" / "d_x_real");
        const auto d_x_fake = load_prediction_batch(dir / "pred" / "d_x_fake");
        const auto d_y_real = load_prediction_batch(dir / "pred" / "d_y_real");
        const auto d_y_fake = load_prediction_batch(dir / "pred" / "d_y_fake");

        const double gan_d_x = ganloss::gan_loss_discriminator(d_x_real, d_x_fake);
        const double gan_d_y = ganloss::gan_loss_discriminator(d_y_real, d_y_fake);
        const double gan_g_xy = ganloss::gan_loss_generator(d_y_fake);
        const double gan_g_yx = ganloss::gan_loss_generator(d_x_fake);
        const double cycle = ganloss::cycle_loss(g, f, batch);
        const double identity = ganloss::identity_loss(g, f, batch);
        const double total = ganloss::cyclegan_total(gan_d_y, gan_d_x, cycle, identity, weights);

        // pix2pix pairs x[i] with y[i]
        if (batch.batch_x.size() != batch.batch_y.size()) {
            throw DataError("gan-loss: pix2pix pairing requires equally sized x/ and y/ batches");
        }
        std::vector<ImageTensor> translated;
        translated.reserve(batch.batch_x.size());
        for (const auto& img : batch.batch_x) translated.push_back(g(img));
        const double p2p_l1 = ganloss::l1_loss(translated, batch.batch_y);
        const double p2p_total = ganloss::pix2pix_total(gan_g_xy, p2p_l1, weights);

        std::string json = "{\n";
        auto emit = [&](const char* key, double value, bool last = false) {
            json += std::string("  \"") + key + "\": " + format_double(value) + (last ? "\n" : ",\n");
        };
        emit("gan_d_x", gan_d_x);
        emit("gan_d_y", gan_d_y);
        emit("gan_g_xy", gan_g_xy);
        emit("gan_g_yx", gan_g_yx);
        emit("cycle", cycle);
        emit("identity", identity);
        emit("cyclegan_total", total);
        emit("pix2pix_l1", p2p_l1);
        emit("pix2pix_gan", gan_g_xy);
        emit("pix2pix_total", p2p_total, true);
        json += "}\n";

        std::fputs(json.c_str(), stdout);
        const fs::path out_dir = fs::path(config.paths.out_dir) / "ganloss";
        fs::create_directories(out_dir);
        write_text_file((out_dir / "losses.json").string(), json);
    });
}

int cmd_augment_preview(const CommandOptions& options) {
    return run_command("augment-preview", options, [&](const PipelineConfig& config) {
        const fs::path out_dir = fs::path(config.paths.out_dir) / "preview";
        fs::create_directories(out_dir);

        if (!options.replay_path.empty()) {
            // replay everything recorded in the sidecar, bit for bit
            const auto sidecar = ordered_json::parse(
                read_text_file(options.replay_path, "augment-preview replay"));
            const std::string manifest_path = sidecar["manifest"].get<std::string>();
            const DatasetManifest manifest = load_manifest(manifest_path);
            std::vector<std::string> ids = sidecar["sample_ids"].get<std::vector<std::string>>();

            augment::Batch batch;
            for (const auto& id : ids) {
                auto it = std::find_if(manifest.samples.begin(), manifest.samples.end(),
                                       [&](const LabeledSample& s) { return s.id == id; });
                if (it == manifest.samples.end()) {
                    throw DataError("augment-preview: replay id '" + id + "' not in manifest");
                }
                batch.images.push_back(read_png(manifest.resolve_image_path(*it)));
                batch.labels.push_back(SoftLabel::one_hot(it->label));
            }
            if (!sidecar["rotflip"].is_null()) {
                size_t i = 0;
                for (const auto& rf : sidecar["rotflip"]) {
                    batch.images[i] = augment::rotate_flip_exact(
                        batch.images[i], rf["angle_deg"].get<double>(), rf["hflip"].get<bool>(),
                        rf["vflip"].get<bool>());
                    ++i;
                }
            }
            augment::MixEvent event = event_from_json(sidecar["event"]);
            auto dummy_stream = derive_stream(0, 0);  // never consulted: geometry is recorded
            augment::Batch result = batch;
            switch (event.method) {
                case augment::MixMethod::mixup: result = augment::mixup(batch, event); break;
                case augment::MixMethod::cutmix: result = augment::cutmix(batch, event, dummy_stream); break;
                case augment::MixMethod::cutout: result = augment::cutout(batch, event, dummy_stream); break;
                case augment::MixMethod::fmix:
                    result = augment::fmix(batch, event, config.augmentation.fmix_decay, dummy_stream);
                    break;
                case augment::MixMethod::none: break;
            }
            for (size_t i = 0; i < result.images.size(); ++i) {
                write_png(result.images[i], (out_dir / ("aug_" + std::to_string(i) + ".png")).string());
            }
            return;
        }

        const std::string manifest_path = default_or_override(
            options.manifest_override, fs::path(config.paths.out_dir) / "resplit" / "traindev.json");
        DatasetManifest manifest = load_manifest(manifest_path);
        manifest.sort_by_id();
        const int count = std::max(2, options.preview_count);
        if (manifest.samples.size() < static_cast<size_t>(count)) {
            throw DataError("augment-preview: manifest has fewer than " + std::to_string(count) +
                            " samples");
        }

        const modeleval::OnlineAugSpec aug = parse_aug_spec(
            options.aug_spec == "none" ? std::string("mixup") : options.aug_spec);

        augment::Batch batch;
        std::vector<std::string> ids;
        for (int i = 0; i < count; ++i) {
            const auto& sample = manifest.samples[static_cast<size_t>(i)];
            ids.push_back(sample.id);
            batch.images.push_back(read_png(manifest.resolve_image_path(sample)));
            batch.labels.push_back(SoftLabel::one_hot(sample.label));
        }

        auto stream = derive_stream(config.master_seed, stream_tag("augment-preview"));
        ordered_json rotflip_json = nullptr;
        if (aug.rotate_flip) {
            rotflip_json = ordered_json::array();
            for (auto& img : batch.images) {
                RotFlipParams params;
                params.angle_deg = stream.uniform(config.augmentation.rotation_min_deg,
                                                  config.augmentation.rotation_max_deg);
                params.hflip = stream.bernoulli(config.augmentation.flip_prob);
                params.vflip = stream.bernoulli(config.augmentation.flip_prob);
                img = augment::rotate_flip_exact(img, params.angle_deg, params.hflip, params.vflip);
                rotflip_json.push_back({{"angle_deg", params.angle_deg},
                                        {"hflip", params.hflip},
                                        {"vflip", params.vflip}});
            }
        }
        auto [result, event] = augment::apply_batched(batch, config.augmentation, aug.batched, stream);

        for (size_t i = 0; i < result.images.size(); ++i) {
            write_png(result.images[i], (out_dir / ("aug_" + std::to_string(i) + ".png")).string());
        }
        ordered_json sidecar;
        sidecar["schema"] = "augment-preview-event";
        sidecar["manifest"] = fs::absolute(manifest_path).lexically_normal().string();
        sidecar["sample_ids"] = ids;
        sidecar["aug"] = options.aug_spec == "none" ? std::string("mixup") : options.aug_spec;
        sidecar["master_seed"] = config.master_seed;
        sidecar["rotflip"] = rotflip_json;
        sidecar["event"] = event_to_json(event);
        write_text_file((out_dir / "event.json").string(), sidecar.dump(2) + "\n");
    });
}

}  // namespace leafpipe::pipeline
