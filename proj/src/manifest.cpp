#include "leafpipe/manifest.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace leafpipe {

namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json sample_to_json(const LabeledSample& sample) {
    ordered_json j;
    j["id"] = sample.id;
    j["image_path"] = sample.image_path;
    j["label"] = to_string(sample.label);
    if (sample.mask) {
        ordered_json pts = ordered_json::array();
        for (const auto& p : sample.mask->points) {
            pts.push_back(ordered_json::array({p[0], p[1]}));
        }
        j["mask"] = std::move(pts);
    } else {
        j["mask"] = nullptr;
    }
    j["origin"] = to_string(sample.origin);
    j["split"] = sample.split ? ordered_json(to_string(*sample.split)) : ordered_json(nullptr);
    return j;
}

LabeledSample sample_from_json(const ordered_json& j, size_t index) {
    const std::string where = "manifest sample #" + std::to_string(index);
    if (!j.is_object()) throw DataError(where + ": not an object");

    auto require = [&](const char* field) -> const ordered_json& {
        auto it = j.find(field);
        if (it == j.end()) throw DataError(where + ": missing field '" + field + "'");
        return *it;
    };

    LabeledSample sample;
    const auto& id = require("id");
    if (!id.is_string()) throw DataError(where + ": field 'id' must be a string");
    sample.id = id.get<std::string>();

    const auto& image_path = require("image_path");
    if (!image_path.is_string()) throw DataError(where + ": field 'image_path' must be a string");
    sample.image_path = image_path.get<std::string>();

    const auto& label = require("label");
    if (!label.is_string()) throw DataError(where + ": field 'label' must be a string");
    auto parsed_label = class_label_from_string(label.get<std::string>());
    if (!parsed_label) {
        throw DataError(where + ": field 'label' has unknown value '" + label.get<std::string>() + "'");
    }
    sample.label = *parsed_label;

    const auto& mask = require("mask");
    if (!mask.is_null()) {
        if (!mask.is_array()) throw DataError(where + ": field 'mask' must be null or an array");
        PolygonMask poly;
        for (const auto& pt : mask) {
            if (!pt.is_array() || pt.size() != 2 || !pt[0].is_number() || !pt[1].is_number()) {
                throw DataError(where + ": field 'mask' entries must be [x,y] number pairs");
            }
            poly.points.push_back({pt[0].get<double>(), pt[1].get<double>()});
        }
        sample.mask = std::move(poly);
    }

    const auto& origin = require("origin");
    if (!origin.is_string()) throw DataError(where + ": field 'origin' must be a string");
    auto parsed_origin = origin_from_string(origin.get<std::string>());
    if (!parsed_origin) {
        throw DataError(where + ": field 'origin' has unknown value '" + origin.get<std::string>() + "'");
    }
    sample.origin = *parsed_origin;

    const auto& split = require("split");
    if (!split.is_null()) {
        if (!split.is_string()) throw DataError(where + ": field 'split' must be null or a string");
        auto parsed_split = split_from_string(split.get<std::string>());
        if (!parsed_split) {
            throw DataError(where + ": field 'split' has unknown value '" + split.get<std::string>() + "'");
        }
        sample.split = *parsed_split;
    }
    return sample;
}

}  // namespace

std::string manifest_to_json(const DatasetManifest& manifest) {
    DatasetManifest canonical = manifest;
    canonical.sort_by_id();
    canonical.validate();

    ordered_json root;
    root["schema_version"] = canonical.schema_version;
    ordered_json samples = ordered_json::array();
    for (const LabeledSample& sample : canonical.samples) {
        samples.push_back(sample_to_json(sample));
    }
    root["samples"] = std::move(samples);
    return root.dump(2) + "\n";
}

DatasetManifest manifest_from_json(const std::string& text, const std::string& base_dir,
                                   bool check_images) {
    ordered_json root;
    try {
        root = ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw DataError(std::string("manifest: JSON parse error: ") + e.what());
    }
    if (!root.is_object()) throw DataError("manifest: top level must be an object");
    auto sv = root.find("schema_version");
    if (sv == root.end() || !sv->is_number_integer()) {
        throw DataError("manifest: missing integer field 'schema_version'");
    }
    DatasetManifest manifest;
    manifest.schema_version = sv->get<int>();
    if (manifest.schema_version != 1) {
        throw DataError("manifest: unsupported schema_version " +
                        std::to_string(manifest.schema_version));
    }
    auto samples = root.find("samples");
    if (samples == root.end() || !samples->is_array()) {
        throw DataError("manifest: missing array field 'samples'");
    }
    manifest.base_dir = base_dir;
    size_t index = 0;
    for (const auto& entry : *samples) {
        manifest.samples.push_back(sample_from_json(entry, index++));
    }
    manifest.validate();
    if (check_images) {
        for (const LabeledSample& sample : manifest.samples) {
            const std::string resolved = manifest.resolve_image_path(sample);
            if (!std::filesystem::exists(resolved)) {
                throw DataError("manifest: sample '" + sample.id + "' references missing image '" +
                                resolved + "'");
            }
        }
    }
    return manifest;
}

DatasetManifest load_manifest(const std::string& path, bool check_images) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("manifest: cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    const std::string base_dir = std::filesystem::path(path).parent_path().string();
    return manifest_from_json(buf.str(), base_dir, check_images);
}

void save_manifest(const DatasetManifest& manifest, const std::string& path) {
    const std::string text = manifest_to_json(manifest);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("manifest: cannot write '" + path + "'");
    out << text;
    if (!out) throw DataError("manifest: write failed for '" + path + "'");
}

}  // namespace leafpipe
