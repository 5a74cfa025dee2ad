#pragma once

#include <string>

#include "leafpipe/types.hpp"

namespace leafpipe {

// Loads a manifest file (UTF-8 JSON, schema_version 1) and validates every
// invariant: unique ids, legal label/origin/split names, no synthetic sample
// in the test split. With check_images set, every referenced image must exist
// (resolved against the manifest's directory).
DatasetManifest load_manifest(const std::string& path, bool check_images = true);

// Writes the manifest in canonical form: samples ordered by id, fixed key
// order, two-space indent. load(save(m)) == m up to that ordering.
void save_manifest(const DatasetManifest& manifest, const std::string& path);

// Canonical serialized bytes (what save_manifest writes).
std::string manifest_to_json(const DatasetManifest& manifest);
DatasetManifest manifest_from_json(const std::string& text, const std::string& base_dir,
                                   bool check_images = false);

}  // namespace leafpipe
