#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "leafpipe/dataprep.hpp"
#include "leafpipe/rng.hpp"

using namespace leafpipe;
using namespace leafpipe::dataprep;

namespace {

// Independent even-odd oracle: ray cast to the right of the pixel center.
bool point_in_polygon_oracle(const PolygonMask& poly, double px, double py) {
    bool inside = false;
    const size_t n = poly.points.size();
    for (size_t e = 0; e < n; ++e) {
        const auto& p = poly.points[e];
        const auto& q = poly.points[(e + 1) % n];
        if ((p[1] <= py) != (q[1] <= py)) {
            const double x = p[0] + (py - p[1]) / (q[1] - p[1]) * (q[0] - p[0]);
            if (px < x) inside = !inside;
        }
    }
    return inside;
}

DatasetManifest make_unsplit_manifest(size_t n) {
    DatasetManifest manifest;
    for (size_t i = 0; i < n; ++i) {
        LabeledSample s;
        char id[16];
        std::snprintf(id, sizeof(id), "s%04zu", i);
        s.id = id;
        s.image_path = "img.png";
        s.label = static_cast<ClassLabel>(i % kNumClasses);
        manifest.samples.push_back(std::move(s));
    }
    return manifest;
}

std::array<size_t, 3> split_sizes(const DatasetManifest& manifest) {
    std::array<size_t, 3> sizes{};
    for (const auto& s : manifest.samples) {
        REQUIRE(s.split.has_value());
        sizes[static_cast<size_t>(*s.split)]++;
    }
    return sizes;
}

}  // namespace

TEST_CASE("relabel: the full six-to-five table") {
    CHECK(relabel(OriginalLabel::healthy) == ClassLabel::healthy);
    CHECK(relabel(OriginalLabel::red_spider_mite) == ClassLabel::red_spider_mite);
    CHECK(relabel(OriginalLabel::rust_level_1) == ClassLabel::rust_level_low);
    CHECK(relabel(OriginalLabel::rust_level_2) == ClassLabel::rust_level_medium);
    CHECK(relabel(OriginalLabel::rust_level_3) == ClassLabel::rust_level_high);
    CHECK(relabel(OriginalLabel::rust_level_4) == ClassLabel::rust_level_high);

    // surjective, and only the two top severities collapse
    std::set<ClassLabel> image;
    std::set<ClassLabel> collapsed;
    for (int i = 0; i < kNumOriginalLabels; ++i) {
        const ClassLabel out = relabel(static_cast<OriginalLabel>(i));
        if (!image.insert(out).second) collapsed.insert(out);
    }
    CHECK(image.size() == 5);
    CHECK(collapsed == std::set<ClassLabel>{ClassLabel::rust_level_high});
}

TEST_CASE("rasterize: rectangle covering the canvas fills every pixel") {
    PolygonMask poly;
    poly.points = {{0, 0}, {8, 0}, {8, 8}, {0, 8}};
    const BinaryMask mask = rasterize_polygon(poly, 8, 8);
    CHECK(mask.popcount() == 64);
}

TEST_CASE("rasterize: right triangle matches the per-pixel oracle") {
    PolygonMask poly;
    poly.points = {{0, 0}, {8, 0}, {0, 8}};
    const BinaryMask mask = rasterize_polygon(poly, 8, 8);
    for (int y = 0; y < 8; ++y) {
        for (int x = 0; x < 8; ++x) {
            CHECK(mask.at(y, x) == (point_in_polygon_oracle(poly, x + 0.5, y + 0.5) ? 1 : 0));
        }
    }
}

TEST_CASE("rasterize: degenerate polygon rejected") {
    PolygonMask poly;
    poly.points = {{0, 0}, {4, 4}};
    CHECK_THROWS_AS(rasterize_polygon(poly, 8, 8), DataError);
}

TEST_CASE("rasterize: random polygons agree with the even-odd oracle") {
    auto stream = derive_stream(77, 0);
    for (int iter = 0; iter < 60; ++iter) {
        PolygonMask poly;
        const auto vertices = 3 + stream.uniform_int(6);
        for (uint64_t v = 0; v < vertices; ++v) {
            poly.points.push_back({stream.uniform(-2.0, 18.0), stream.uniform(-2.0, 18.0)});
        }
        const BinaryMask mask = rasterize_polygon(poly, 16, 16);
        for (int y = 0; y < 16; ++y) {
            for (int x = 0; x < 16; ++x) {
                REQUIRE(mask.at(y, x) ==
                        (point_in_polygon_oracle(poly, x + 0.5, y + 0.5) ? 1 : 0));
            }
        }
    }
}

TEST_CASE("apply_mask: identity, zero, and elementwise-product oracle") {
    auto stream = derive_stream(5, 5);
    ImageTensor img(6, 7, 3);
    for (float& v : img.data) v = static_cast<float>(stream.uniform());

    BinaryMask ones(6, 7, 1);
    const ImageTensor same = apply_mask(img, ones);
    CHECK(same.data == img.data);

    BinaryMask zeros(6, 7, 0);
    const ImageTensor dark = apply_mask(img, zeros);
    for (float v : dark.data) CHECK(v == 0.0f);

    BinaryMask random_mask(6, 7);
    for (auto& bit : random_mask.bits) bit = stream.bernoulli(0.5) ? 1 : 0;
    const ImageTensor out = apply_mask(img, random_mask);
    for (int y = 0; y < 6; ++y) {
        for (int x = 0; x < 7; ++x) {
            for (int c = 0; c < 3; ++c) {
                REQUIRE(out.at(y, x, c) == img.at(y, x, c) * random_mask.at(y, x));
            }
        }
    }

    // idempotent
    const ImageTensor twice = apply_mask(out, random_mask);
    CHECK(twice.data == out.data);

    BinaryMask wrong(5, 7, 1);
    CHECK_THROWS_AS(apply_mask(img, wrong), DataError);
}

TEST_CASE("resize: constants stay constant, same-size is identity") {
    const ImageTensor gray(10, 10, 3, 0.5f);
    const ImageTensor up = resize_bilinear(gray, 23, 17);
    for (float v : up.data) CHECK(v == doctest::Approx(0.5f).epsilon(1e-7));

    auto stream = derive_stream(6, 6);
    ImageTensor img(16, 16, 3);
    for (float& v : img.data) v = static_cast<float>(stream.uniform());
    const ImageTensor same = resize_bilinear(img, 16, 16);
    for (size_t i = 0; i < img.data.size(); ++i) {
        CHECK(std::abs(same.data[i] - img.data[i]) < 1e-6f);
    }
}

TEST_CASE("resize: 4x4 ramp to 2x2 equals the hand-evaluated bilinear points") {
    // data[y][x] = y*4 + x, scaled into [0,1]
    ImageTensor ramp(4, 4, 1);
    for (int y = 0; y < 4; ++y) {
        for (int x = 0; x < 4; ++x) ramp.at(y, x, 0) = static_cast<float>(y * 4 + x) / 15.0f;
    }
    const ImageTensor out = resize_bilinear(ramp, 2, 2);
    // half-pixel centers land at source coords {0.5, 2.5}; each output is the
    // mean of a 2x2 block of the ramp
    auto block_mean = [&](int y0, int x0) {
        return (ramp.at(y0, x0, 0) + ramp.at(y0, x0 + 1, 0) + ramp.at(y0 + 1, x0, 0) +
                ramp.at(y0 + 1, x0 + 1, 0)) /
               4.0f;
    };
    CHECK(out.at(0, 0, 0) == doctest::Approx(block_mean(0, 0)).epsilon(1e-6));
    CHECK(out.at(0, 1, 0) == doctest::Approx(block_mean(0, 2)).epsilon(1e-6));
    CHECK(out.at(1, 0, 0) == doctest::Approx(block_mean(2, 0)).epsilon(1e-6));
    CHECK(out.at(1, 1, 0) == doctest::Approx(block_mean(2, 2)).epsilon(1e-6));
}

TEST_CASE("resize: output range stays inside [0,1]") {
    auto stream = derive_stream(8, 1);
    ImageTensor img(13, 9, 3);
    for (float& v : img.data) v = static_cast<float>(stream.uniform());
    for (auto [w, h] : {std::pair{5, 4}, std::pair{26, 31}, std::pair{1, 1}}) {
        const ImageTensor out = resize_bilinear(img, w, h);
        for (float v : out.data) {
            CHECK(v >= 0.0f);
            CHECK(v <= 1.0f);
        }
    }
}

TEST_CASE("split: floor rule sizes for n=100 and n=97") {
    SplitSpec spec;
    {
        auto stream = derive_stream(1, 0);
        const auto sizes = split_sizes(split(make_unsplit_manifest(100), spec, stream));
        CHECK(sizes == std::array<size_t, 3>{80, 10, 10});
    }
    {
        auto stream = derive_stream(1, 0);
        const auto sizes = split_sizes(split(make_unsplit_manifest(97), spec, stream));
        CHECK(sizes == std::array<size_t, 3>{77, 9, 11});
    }
}

TEST_CASE("split: partitions are deterministic, disjoint, exhaustive") {
    SplitSpec spec;
    auto stream1 = derive_stream(12, 0);
    auto stream2 = derive_stream(12, 0);
    const auto a = split(make_unsplit_manifest(53), spec, stream1);
    const auto b = split(make_unsplit_manifest(53), spec, stream2);
    REQUIRE(a.samples.size() == b.samples.size());
    std::set<std::string> ids;
    for (size_t i = 0; i < a.samples.size(); ++i) {
        CHECK(a.samples[i].split == b.samples[i].split);
        ids.insert(a.samples[i].id);
    }
    CHECK(ids.size() == 53);

    auto stream3 = derive_stream(13, 0);
    const auto c = split(make_unsplit_manifest(53), spec, stream3);
    bool differs = false;
    for (size_t i = 0; i < c.samples.size(); ++i) {
        differs = differs || c.samples[i].split != a.samples[i].split;
    }
    CHECK(differs);  // different seed, different assignment
}

TEST_CASE("split: pre-assigned split rejected") {
    SplitSpec spec;
    auto manifest = make_unsplit_manifest(10);
    manifest.samples[3].split = Split::dev;
    auto stream = derive_stream(1, 0);
    CHECK_THROWS_WITH_AS(split(manifest, spec, stream), doctest::Contains("s0003"), DataError);
}

TEST_CASE("resplit: 8:1 rule, test contamination rejected, deterministic") {
    SplitSpec spec;
    auto manifest = make_unsplit_manifest(90);
    for (auto& s : manifest.samples) s.split = Split::train;
    {
        auto stream = derive_stream(4, 0);
        const auto sizes = split_sizes(resplit_after_augment(manifest, spec, stream));
        CHECK(sizes == std::array<size_t, 3>{80, 10, 0});
    }
    {
        auto stream1 = derive_stream(4, 0);
        auto stream2 = derive_stream(4, 0);
        const auto a = resplit_after_augment(manifest, spec, stream1);
        const auto b = resplit_after_augment(manifest, spec, stream2);
        for (size_t i = 0; i < a.samples.size(); ++i) CHECK(a.samples[i].split == b.samples[i].split);
    }
    manifest.samples[7].split = Split::test;
    auto stream = derive_stream(4, 0);
    CHECK_THROWS_AS(resplit_after_augment(manifest, spec, stream), DataError);
}

TEST_CASE("split coverage warnings name the absent class") {
    auto manifest = make_unsplit_manifest(6);
    for (auto& s : manifest.samples) {
        s.label = ClassLabel::healthy;
        s.split = Split::train;
    }
    manifest.samples[0].split = Split::dev;
    manifest.samples[1].split = Split::test;
    const auto warnings = split_coverage_warnings(manifest);
    CHECK(warnings.size() == 12);  // 4 classes absent from each of 3 splits
    bool mentions_rsm = false;
    for (const auto& w : warnings) {
        mentions_rsm = mentions_rsm || w.find("red_spider_mite") != std::string::npos;
    }
    CHECK(mentions_rsm);
}

TEST_CASE("raw manifest: six-way labels parse, unknown labels rejected") {
    CHECK(original_label_from_string("rust_level_4") == OriginalLabel::rust_level_4);
    CHECK_FALSE(original_label_from_string("rust_level_low").has_value());
    CHECK_FALSE(original_label_from_string("rust_level_5").has_value());
}
