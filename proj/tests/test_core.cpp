#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "leafpipe/manifest.hpp"
#include "leafpipe/png_io.hpp"
#include "leafpipe/rng.hpp"
#include "leafpipe/types.hpp"

using namespace leafpipe;
namespace fs = std::filesystem;

namespace {

fs::path make_temp_dir(const char* tag) {
    fs::path dir = fs::temp_directory_path() / (std::string("leafpipe_core_") + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

// tiny placeholder image so manifest file checks pass
std::string touch_image(const fs::path& dir, const std::string& name) {
    write_png(ImageTensor(2, 2, 3, 0.5f), (dir / name).string());
    return name;
}

LabeledSample make_sample(const std::string& id, const std::string& image_path,
                          ClassLabel label = ClassLabel::healthy,
                          Origin origin = Origin::real) {
    LabeledSample s;
    s.id = id;
    s.image_path = image_path;
    s.label = label;
    s.origin = origin;
    return s;
}

}  // namespace

TEST_CASE("class labels: five values, stable bijection") {
    CHECK(kAllClasses.size() == 5);
    std::set<std::string> names;
    for (ClassLabel label : kAllClasses) {
        const std::string name = to_string(label);
        names.insert(name);
        auto parsed = class_label_from_string(name);
        REQUIRE(parsed.has_value());
        CHECK(*parsed == label);
    }
    CHECK(names.size() == 5);
    CHECK(static_cast<int>(ClassLabel::healthy) == 0);
    CHECK(static_cast<int>(ClassLabel::rust_level_high) == 4);
    CHECK_FALSE(class_label_from_string("rust_level_1").has_value());
}

TEST_CASE("rng: identical stream ids reproduce, distinct ids diverge") {
    auto a = derive_stream(42, 0);
    auto b = derive_stream(42, 0);
    auto c = derive_stream(42, 1);
    bool all_equal = true;
    bool any_differs = false;
    for (int i = 0; i < 100; ++i) {
        const uint64_t draw = a.next_u64();
        all_equal = all_equal && draw == b.next_u64();
        any_differs = any_differs || draw != c.next_u64();
    }
    CHECK(all_equal);
    CHECK(any_differs);
}

TEST_CASE("rng: golden draws for stream (42,7) are stable across platforms") {
    // frozen from the first implementation run; any change here breaks every
    // recorded pipeline output
    const uint64_t expected[16] = {
        0x2ef3e03b2a115579ULL, 0x727719b5a9f0151bULL, 0x24bf5d43d1ad9f79ULL,
        0xe4495670e2ae02b2ULL, 0x27fcb9447ae85e78ULL, 0xbed5fd0c560107d3ULL,
        0x7d8609de4786d993ULL, 0xadf93f7480ff3331ULL, 0x7c1ebc0b8e53ae69ULL,
        0xaba2220468c6b577ULL, 0x6b3498d14dc26898ULL, 0x97b2dbf7f27a29ceULL,
        0x45c289d73d687190ULL, 0x06fc99676ae4e143ULL, 0xbb59498918089b8eULL,
        0xb7ce0d7501d07ca7ULL,
    };
    auto stream = derive_stream(42, 7);
    for (uint64_t value : expected) CHECK(stream.next_u64() == value);
}

TEST_CASE("rng: substreams depend on identity, not parent consumption") {
    auto parent1 = derive_stream(9, 3);
    auto parent2 = derive_stream(9, 3);
    parent2.next_u64();  // consume
    auto child1 = parent1.substream(5);
    auto child2 = parent2.substream(5);
    for (int i = 0; i < 20; ++i) CHECK(child1.next_u64() == child2.next_u64());
}

TEST_CASE("rng: uniform stays in [0,1), permutation is a bijection") {
    auto stream = derive_stream(3, 3);
    for (int i = 0; i < 1000; ++i) {
        const double u = stream.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
    const auto perm = stream.permutation(257);
    std::set<size_t> seen(perm.begin(), perm.end());
    CHECK(seen.size() == 257);
    CHECK(*seen.rbegin() == 256);
}

TEST_CASE("rng: uniform_int is unbiased over small ranges") {
    auto stream = derive_stream(17, 1);
    std::array<int, 7> hist{};
    const int n = 70000;
    for (int i = 0; i < n; ++i) hist[stream.uniform_int(7)]++;
    for (int count : hist) CHECK(std::abs(count - n / 7) < 500);
}

TEST_CASE("soft labels: one-hot is normalized, bad vectors rejected") {
    const SoftLabel label = SoftLabel::one_hot(ClassLabel::rust_level_medium);
    CHECK(label.is_normalized());
    CHECK(label.probs[3] == 1.0);

    SoftLabel bad;
    bad.probs = {0.5, 0.5, 0.5, 0.0, 0.0};
    CHECK_FALSE(bad.is_normalized());
    CHECK_THROWS_AS(bad.check_normalized("test"), DataError);
}

TEST_CASE("manifest: valid three-sample file round-trips") {
    const fs::path dir = make_temp_dir("roundtrip");
    DatasetManifest manifest;
    manifest.base_dir = dir.string();
    manifest.samples.push_back(make_sample("b", touch_image(dir, "b.png"), ClassLabel::rust_level_low));
    manifest.samples.push_back(make_sample("a", touch_image(dir, "a.png")));
    {
        LabeledSample s = make_sample("c", touch_image(dir, "c.png"),
                                      ClassLabel::red_spider_mite, Origin::synthetic);
        s.split = Split::train;
        PolygonMask poly;
        poly.points = {{0.0, 0.0}, {2.0, 0.25}, {1.0, 2.0}};
        s.mask = poly;
        manifest.samples.push_back(std::move(s));
    }

    const fs::path path = dir / "manifest.json";
    save_manifest(manifest, path.string());
    const DatasetManifest loaded = load_manifest(path.string());
    REQUIRE(loaded.samples.size() == 3);
    CHECK(loaded.samples[0].id == "a");  // canonical order
    CHECK(loaded.samples[1].label == ClassLabel::rust_level_low);
    CHECK(loaded.samples[2].origin == Origin::synthetic);
    CHECK(loaded.samples[2].split == Split::train);
    REQUIRE(loaded.samples[2].mask.has_value());
    CHECK(loaded.samples[2].mask->points.size() == 3);
    CHECK(loaded.samples[2].mask->points[1][1] == 0.25);

    // byte-stable: saving the loaded manifest reproduces the file exactly
    save_manifest(loaded, (dir / "again.json").string());
    std::ifstream f1(path), f2(dir / "again.json");
    std::string s1((std::istreambuf_iterator<char>(f1)), {});
    std::string s2((std::istreambuf_iterator<char>(f2)), {});
    CHECK(s1 == s2);
}

TEST_CASE("manifest: empty manifest is valid") {
    const fs::path dir = make_temp_dir("empty");
    DatasetManifest manifest;
    save_manifest(manifest, (dir / "m.json").string());
    CHECK(load_manifest((dir / "m.json").string()).samples.empty());
}

TEST_CASE("manifest: duplicate ids rejected") {
    const fs::path dir = make_temp_dir("dup");
    DatasetManifest manifest;
    manifest.base_dir = dir.string();
    manifest.samples.push_back(make_sample("a", touch_image(dir, "a.png")));
    manifest.samples.push_back(make_sample("a", touch_image(dir, "a2.png")));
    CHECK_THROWS_WITH_AS(save_manifest(manifest, (dir / "m.json").string()),
                         doctest::Contains("duplicate"), DataError);
}

TEST_CASE("manifest: synthetic sample in test split rejected") {
    const fs::path dir = make_temp_dir("synthtest");
    DatasetManifest manifest;
    manifest.base_dir = dir.string();
    LabeledSample s = make_sample("s", touch_image(dir, "s.png"),
                                  ClassLabel::rust_level_high, Origin::synthetic);
    s.split = Split::test;
    manifest.samples.push_back(std::move(s));
    CHECK_THROWS_AS(manifest.validate(), DataError);
}

TEST_CASE("manifest: load errors name the problem") {
    const fs::path dir = make_temp_dir("errors");
    CHECK_THROWS_WITH_AS(load_manifest((dir / "missing.json").string()),
                         doctest::Contains("cannot open"), DataError);

    std::ofstream(dir / "bad_label.json")
        << R"({"schema_version":1,"samples":[{"id":"x","image_path":"x.png",)"
        << R"("label":"mildew","mask":null,"origin":"real","split":null}]})";
    CHECK_THROWS_WITH_AS(load_manifest((dir / "bad_label.json").string()),
                         doctest::Contains("label"), DataError);

    std::ofstream(dir / "missing_field.json")
        << R"({"schema_version":1,"samples":[{"id":"x","label":"healthy",)"
        << R"("mask":null,"origin":"real","split":null}]})";
    CHECK_THROWS_WITH_AS(load_manifest((dir / "missing_field.json").string()),
                         doctest::Contains("image_path"), DataError);

    std::ofstream(dir / "missing_image.json")
        << R"({"schema_version":1,"samples":[{"id":"ghost","image_path":"ghost.png",)"
        << R"("label":"healthy","mask":null,"origin":"real","split":null}]})";
    CHECK_THROWS_WITH_AS(load_manifest((dir / "missing_image.json").string()),
                         doctest::Contains("ghost"), DataError);
}

TEST_CASE("manifest: property round-trip over random manifests") {
    const fs::path dir = make_temp_dir("property");
    const std::string shared = touch_image(dir, "shared.png");
    auto stream = derive_stream(2024, 1);

    for (int iter = 0; iter < 100; ++iter) {
        DatasetManifest manifest;
        manifest.base_dir = dir.string();
        const auto n = stream.uniform_int(12);
        for (uint64_t i = 0; i < n; ++i) {
            LabeledSample s = make_sample("s" + std::to_string(i), shared);
            s.label = static_cast<ClassLabel>(stream.uniform_int(kNumClasses));
            s.origin = stream.bernoulli(0.3) ? Origin::synthetic : Origin::real;
            if (stream.bernoulli(0.6)) {
                s.split = static_cast<Split>(stream.uniform_int(
                    s.origin == Origin::synthetic ? 2 : 3));
            }
            if (stream.bernoulli(0.4)) {
                PolygonMask poly;
                const auto points = 3 + stream.uniform_int(5);
                for (uint64_t p = 0; p < points; ++p) {
                    poly.points.push_back({stream.uniform(0.0, 64.0), stream.uniform(0.0, 64.0)});
                }
                s.mask = std::move(poly);
            }
            manifest.samples.push_back(std::move(s));
        }

        const std::string text = manifest_to_json(manifest);
        const DatasetManifest loaded = manifest_from_json(text, dir.string(), false);
        CHECK(manifest_to_json(loaded) == text);
        REQUIRE(loaded.samples.size() == manifest.samples.size());
    }
}

TEST_CASE("png: 8-bit quantized values round-trip exactly") {
    const fs::path dir = make_temp_dir("png");
    auto stream = derive_stream(7, 7);
    ImageTensor img(9, 13, 3);
    for (float& v : img.data) {
        v = static_cast<float>(stream.uniform_int(256)) / 255.0f;
    }
    write_png(img, (dir / "x.png").string());
    const ImageTensor back = read_png((dir / "x.png").string());
    REQUIRE(back.same_shape(img));
    for (size_t i = 0; i < img.data.size(); ++i) REQUIRE(back.data[i] == img.data[i]);

    // grayscale write expands to RGB on read
    ImageTensor gray(4, 4, 1, 0.25f);
    write_png(gray, (dir / "g.png").string());
    const ImageTensor gback = read_png((dir / "g.png").string());
    CHECK(gback.channels == 3);
    CHECK(gback.at(2, 2, 0) == gback.at(2, 2, 1));
}
