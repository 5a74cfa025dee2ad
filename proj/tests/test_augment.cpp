#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "leafpipe/augment.hpp"
#include "leafpipe/rng.hpp"

using namespace leafpipe;
using namespace leafpipe::augment;

namespace {

ImageTensor random_image(int h, int w, RngStream& stream) {
    ImageTensor img(h, w, 3);
    for (float& v : img.data) v = static_cast<float>(stream.uniform());
    return img;
}

Batch random_batch(size_t n, int h, int w, RngStream& stream) {
    Batch batch;
    for (size_t i = 0; i < n; ++i) {
        batch.images.push_back(random_image(h, w, stream));
        batch.labels.push_back(SoftLabel::one_hot(static_cast<ClassLabel>(i % kNumClasses)));
    }
    return batch;
}

MixEvent event_for(MixMethod method, double lambda, size_t n, bool reverse_perm = true) {
    MixEvent ev;
    ev.method = method;
    ev.lambda = lambda;
    ev.partner_perm.resize(n);
    for (size_t i = 0; i < n; ++i) ev.partner_perm[i] = reverse_perm ? n - 1 - i : i;
    return ev;
}

void check_labels_normalized(const Batch& batch) {
    for (const auto& label : batch.labels) CHECK(label.is_normalized());
}

void check_pixels_in_unit_range(const Batch& batch) {
    for (const auto& img : batch.images) {
        for (float v : img.data) {
            REQUIRE(v >= 0.0f);
            REQUIRE(v <= 1.0f);
        }
    }
}

}  // namespace

TEST_CASE("plan_balance: tops every diseased class up to healthy") {
    // counts: healthy 100, rsm 40, low 70, medium 90, high 55
    const std::array<int64_t, kNumClasses> counts{100, 40, 70, 90, 55};
    const BalancePlan plan = plan_balance(counts);
    CHECK(plan.add == std::array<int64_t, kNumClasses>{0, 60, 30, 10, 45});

    const std::array<int64_t, kNumClasses> equal{25, 25, 25, 25, 25};
    CHECK(plan_balance(equal).add == std::array<int64_t, kNumClasses>{0, 0, 0, 0, 0});

    const std::array<int64_t, kNumClasses> infeasible{50, 60, 10, 10, 10};
    CHECK_THROWS_WITH_AS(plan_balance(infeasible), doctest::Contains("red_spider_mite"),
                         DataError);
}

TEST_CASE("select_synthetic: whole pool, empty pick, determinism, shortage") {
    DatasetManifest pool;
    for (int i = 0; i < 8; ++i) {
        LabeledSample s;
        s.id = "p" + std::to_string(7 - i);  // deliberately unsorted insert order
        s.image_path = "x.png";
        s.label = ClassLabel::rust_level_low;
        s.origin = Origin::synthetic;
        pool.samples.push_back(std::move(s));
    }
    // one real sample of the same class must never be selected
    LabeledSample real;
    real.id = "real";
    real.image_path = "x.png";
    real.label = ClassLabel::rust_level_low;
    pool.samples.push_back(real);

    auto stream = derive_stream(3, 1);
    const auto all = select_synthetic(pool, ClassLabel::rust_level_low, 8, stream);
    REQUIRE(all.size() == 8);
    CHECK(all.front().id == "p0");  // canonical id order
    CHECK(all.back().id == "p7");

    auto s1 = derive_stream(3, 2);
    auto s2 = derive_stream(3, 2);
    const auto pick1 = select_synthetic(pool, ClassLabel::rust_level_low, 3, s1);
    const auto pick2 = select_synthetic(pool, ClassLabel::rust_level_low, 3, s2);
    REQUIRE(pick1.size() == 3);
    for (size_t i = 0; i < 3; ++i) CHECK(pick1[i].id == pick2[i].id);

    auto s3 = derive_stream(3, 3);
    CHECK(select_synthetic(pool, ClassLabel::rust_level_low, 0, s3).empty());
    CHECK_THROWS_AS(select_synthetic(pool, ClassLabel::rust_level_low, 9, s3), DataError);
    CHECK_THROWS_AS(select_synthetic(pool, ClassLabel::rust_level_high, 1, s3), DataError);
}

TEST_CASE("sample_beta: symmetric mean and closed-form variance") {
    BetaParams params{0.8, 0.8};
    auto stream = derive_stream(100, 1);
    const int n = 100000;
    double sum = 0.0;
    std::vector<double> draws(n);
    for (int i = 0; i < n; ++i) {
        draws[i] = sample_beta(params, stream);
        REQUIRE(draws[i] > 0.0);
        REQUIRE(draws[i] < 1.0);
        sum += draws[i];
    }
    const double mean = sum / n;
    double var = 0.0;
    for (double d : draws) var += (d - mean) * (d - mean);
    var /= n;
    // Var = ab / ((a+b)^2 (a+b+1))
    const double expected_var = 0.8 * 0.8 / (1.6 * 1.6 * 2.6);
    CHECK(std::abs(mean - 0.5) < 0.01);
    CHECK(std::abs(var - expected_var) < 0.005);

    BetaParams uniform{1.0, 1.0};
    auto stream2 = derive_stream(100, 2);
    double sum2 = 0.0;
    for (int i = 0; i < n; ++i) sum2 += sample_beta(uniform, stream2);
    CHECK(std::abs(sum2 / n - 0.5) < 0.01);
}

TEST_CASE("rotate_flip_exact: zero angle is identity, 180 degrees reverses indices") {
    auto stream = derive_stream(9, 1);
    const ImageTensor img = random_image(5, 4, stream);

    const ImageTensor same = rotate_flip_exact(img, 0.0, false, false);
    for (size_t i = 0; i < img.data.size(); ++i) {
        CHECK(std::abs(same.data[i] - img.data[i]) < 1e-6f);
    }

    const ImageTensor spun = rotate_flip_exact(img, 180.0, false, false);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            for (int c = 0; c < 3; ++c) {
                CHECK(spun.at(y, x, c) ==
                      doctest::Approx(img.at(img.height - 1 - y, img.width - 1 - x, c))
                          .epsilon(1e-5));
            }
        }
    }

    const ImageTensor zeros(6, 6, 3, 0.0f);
    for (double angle : {13.0, 77.5, 141.0}) {
        const ImageTensor out = rotate_flip_exact(zeros, angle, true, false);
        for (float v : out.data) CHECK(v == 0.0f);
    }

    // flips are pure index mirrors
    const ImageTensor flipped = rotate_flip_exact(img, 0.0, true, true);
    CHECK(flipped.at(0, 0, 0) ==
          doctest::Approx(img.at(img.height - 1, img.width - 1, 0)).epsilon(1e-6));
}

TEST_CASE("mixup: endpoints and exact convex blend") {
    auto stream = derive_stream(10, 1);
    const Batch batch = random_batch(5, 6, 6, stream);

    const Batch same = mixup(batch, event_for(MixMethod::mixup, 1.0, 5));
    for (size_t i = 0; i < batch.size(); ++i) CHECK(same.images[i].data == batch.images[i].data);

    const Batch swapped = mixup(batch, event_for(MixMethod::mixup, 0.0, 5));
    for (size_t i = 0; i < batch.size(); ++i) {
        CHECK(swapped.images[i].data == batch.images[4 - i].data);
        CHECK(swapped.labels[i].probs == batch.labels[4 - i].probs);
    }

    Batch extremes;
    extremes.images = {ImageTensor(4, 4, 3, 0.0f), ImageTensor(4, 4, 3, 1.0f)};
    extremes.labels = {SoftLabel::one_hot(ClassLabel::healthy),
                       SoftLabel::one_hot(ClassLabel::rust_level_low)};
    const Batch half = mixup(extremes, event_for(MixMethod::mixup, 0.5, 2));
    for (float v : half.images[0].data) CHECK(v == 0.5f);
    CHECK(half.labels[0].probs[0] == 0.5);
    CHECK(half.labels[0].probs[2] == 0.5);

    // conservation: every output pixel is exactly the convex combination
    const MixEvent ev = event_for(MixMethod::mixup, 0.37, 5);
    const Batch mixed = mixup(batch, ev);
    for (size_t i = 0; i < batch.size(); ++i) {
        for (size_t v = 0; v < mixed.images[i].data.size(); ++v) {
            const float expect = static_cast<float>(
                0.37 * batch.images[i].data[v] + 0.63 * batch.images[ev.partner_perm[i]].data[v]);
            REQUIRE(mixed.images[i].data[v] == doctest::Approx(expect).epsilon(1e-6));
        }
    }
    check_labels_normalized(mixed);
    check_pixels_in_unit_range(mixed);
}

TEST_CASE("cutmix: lambda endpoints and the unclipped 256-case arithmetic") {
    auto stream = derive_stream(11, 1);
    Batch batch = random_batch(3, 16, 16, stream);

    MixEvent full = event_for(MixMethod::cutmix, 1.0, 3);
    auto draws = derive_stream(11, 2);
    const Batch same = cutmix(batch, full, draws);
    CHECK(full.label_weight == 1.0);
    for (size_t i = 0; i < 3; ++i) CHECK(same.images[i].data == batch.images[i].data);

    // 256x256, lambda = 0.75: side 128, center in [64,192] so never clipped,
    // adjusted weight exactly 1 - 128^2/256^2 = 0.75
    Batch big = random_batch(2, 256, 256, stream);
    for (int trial = 0; trial < 10; ++trial) {
        MixEvent ev = event_for(MixMethod::cutmix, 0.75, 2);
        auto trial_stream = derive_stream(11, 100 + static_cast<uint64_t>(trial));
        const Batch out = cutmix(big, ev, trial_stream);
        REQUIRE(ev.region.has_value());
        CHECK(ev.region->x1 - ev.region->x0 == 128);
        CHECK(ev.region->y1 - ev.region->y0 == 128);
        CHECK(ev.label_weight == doctest::Approx(0.75).epsilon(1e-12));
        (void)out;
    }
}

TEST_CASE("cutmix: selector property and label weight match the clipped area") {
    auto stream = derive_stream(12, 1);
    const Batch batch = random_batch(4, 24, 24, stream);
    auto lam_stream = derive_stream(12, 2);
    for (int trial = 0; trial < 50; ++trial) {
        MixEvent ev = event_for(MixMethod::cutmix, lam_stream.uniform(), 4);
        auto geom = derive_stream(12, 1000 + static_cast<uint64_t>(trial));
        const Batch out = cutmix(batch, ev, geom);
        REQUIRE(ev.region.has_value());
        const auto region = *ev.region;
        const double expect_weight =
            1.0 - static_cast<double>(region.area()) / (24.0 * 24.0);
        REQUIRE(ev.label_weight == doctest::Approx(expect_weight).epsilon(1e-12));
        for (size_t i = 0; i < batch.size(); ++i) {
            for (int y = 0; y < 24; ++y) {
                for (int x = 0; x < 24; ++x) {
                    const bool inside = x >= region.x0 && x < region.x1 && y >= region.y0 &&
                                        y < region.y1;
                    const ImageTensor& expect_src =
                        inside ? batch.images[ev.partner_perm[i]] : batch.images[i];
                    REQUIRE(out.images[i].at(y, x, 0) == expect_src.at(y, x, 0));
                }
            }
        }
        check_labels_normalized(out);
    }
}

TEST_CASE("cutmix/cutout: sampled centers stay inside the quarter-margin box") {
    auto img_stream = derive_stream(13, 1);
    Batch batch = random_batch(2, 256, 256, img_stream);
    auto stream = derive_stream(13, 2);
    for (int trial = 0; trial < 1000; ++trial) {
        MixEvent ev = event_for(trial % 2 == 0 ? MixMethod::cutmix : MixMethod::cutout,
                                stream.uniform(), 2);
        const Batch out = ev.method == MixMethod::cutmix ? cutmix(batch, ev, stream)
                                                         : cutout(batch, ev, stream);
        (void)out;
        REQUIRE(ev.cut_center.has_value());
        CHECK((*ev.cut_center)[0] >= 64.0);
        CHECK((*ev.cut_center)[0] <= 192.0);
        CHECK((*ev.cut_center)[1] >= 64.0);
        CHECK((*ev.cut_center)[1] <= 192.0);
    }
}

TEST_CASE("cutout: zeroes exactly the square, labels pass through bit-identically") {
    Batch ones;
    ones.images = {ImageTensor(32, 32, 3, 1.0f), ImageTensor(32, 32, 3, 1.0f)};
    SoftLabel mixed;
    mixed.probs = {0.125, 0.25, 0.125, 0.25, 0.25};
    ones.labels = {mixed, SoftLabel::one_hot(ClassLabel::rust_level_high)};

    auto stream = derive_stream(14, 1);
    for (int trial = 0; trial < 20; ++trial) {
        MixEvent ev = event_for(MixMethod::cutout, stream.uniform(0.2, 0.9), 2);
        auto geom = derive_stream(14, 10 + static_cast<uint64_t>(trial));
        const Batch out = cutout(ones, ev, geom);
        REQUIRE(ev.region.has_value());
        const int64_t area = ev.region->area();
        for (size_t i = 0; i < 2; ++i) {
            int64_t zeros = 0;
            for (int y = 0; y < 32; ++y) {
                for (int x = 0; x < 32; ++x) {
                    if (out.images[i].at(y, x, 0) == 0.0f) ++zeros;
                }
            }
            REQUIRE(zeros == area);
            REQUIRE(out.labels[i].probs == ones.labels[i].probs);
        }
    }

    MixEvent full = event_for(MixMethod::cutout, 1.0, 2);
    auto geom = derive_stream(14, 999);
    const Batch same = cutout(ones, full, geom);
    for (float v : same.images[0].data) CHECK(v == 1.0f);
}

TEST_CASE("fmix_mask: popcount is exactly ceil(lambda * h * w)") {
    auto stream = derive_stream(15, 1);
    CHECK(fmix_mask(16, 16, 1.0, 3.0, stream).popcount() == 256);
    CHECK(fmix_mask(16, 16, 0.0, 3.0, stream).popcount() == 0);
    CHECK(fmix_mask(64, 64, 0.3, 3.0, stream).popcount() == 1229);  // ceil(0.3*4096)

    for (int trial = 0; trial < 30; ++trial) {
        const double lambda = stream.uniform();
        const int h = 3 + static_cast<int>(stream.uniform_int(40));
        const int w = 3 + static_cast<int>(stream.uniform_int(40));
        const auto expected =
            static_cast<size_t>(std::ceil(lambda * static_cast<double>(h) * w));
        REQUIRE(fmix_mask(h, w, lambda, 3.0, stream).popcount() == expected);
    }
}

TEST_CASE("fmix_mask: deterministic under the stream and low-frequency in shape") {
    auto s1 = derive_stream(16, 4);
    auto s2 = derive_stream(16, 4);
    const BinaryMask a = fmix_mask(32, 32, 0.4, 3.0, s1);
    const BinaryMask b = fmix_mask(32, 32, 0.4, 3.0, s2);
    CHECK(a.bits == b.bits);

    // low-frequency fields produce contiguous regions: the number of
    // horizontal 0/1 transitions per row stays far below a random mask's
    size_t transitions = 0;
    for (int y = 0; y < 32; ++y) {
        for (int x = 1; x < 32; ++x) transitions += a.at(y, x) != a.at(y, x - 1);
    }
    CHECK(transitions < 32 * 8);
}

TEST_CASE("fmix: endpoints and the per-pixel select oracle") {
    auto stream = derive_stream(17, 1);
    const Batch batch = random_batch(3, 20, 20, stream);

    MixEvent keep = event_for(MixMethod::fmix, 1.0, 3);
    auto s1 = derive_stream(17, 2);
    const Batch same = fmix(batch, keep, 3.0, s1);
    for (size_t i = 0; i < 3; ++i) CHECK(same.images[i].data == batch.images[i].data);
    CHECK(keep.label_weight == 1.0);

    MixEvent swap = event_for(MixMethod::fmix, 0.0, 3);
    auto s2 = derive_stream(17, 3);
    const Batch swapped = fmix(batch, swap, 3.0, s2);
    for (size_t i = 0; i < 3; ++i) {
        CHECK(swapped.images[i].data == batch.images[swap.partner_perm[i]].data);
    }
    CHECK(swap.label_weight == 0.0);

    MixEvent ev = event_for(MixMethod::fmix, 0.6, 3);
    auto s3 = derive_stream(17, 4);
    const Batch mixed = fmix(batch, ev, 3.0, s3);
    REQUIRE(ev.mask.has_value());
    const BinaryMask& mask = *ev.mask;
    CHECK(ev.label_weight ==
          doctest::Approx(static_cast<double>(mask.popcount()) / 400.0).epsilon(1e-12));
    for (size_t i = 0; i < 3; ++i) {
        for (int y = 0; y < 20; ++y) {
            for (int x = 0; x < 20; ++x) {
                const ImageTensor& src =
                    mask.at(y, x) ? batch.images[i] : batch.images[ev.partner_perm[i]];
                for (int c = 0; c < 3; ++c) {
                    REQUIRE(mixed.images[i].at(y, x, c) == src.at(y, x, c));
                }
            }
        }
    }
    check_labels_normalized(mixed);
    check_pixels_in_unit_range(mixed);
}

TEST_CASE("apply_batched: skip branch, determinism, and event replayability") {
    auto stream = derive_stream(18, 1);
    const Batch batch = random_batch(6, 12, 12, stream);
    AugmentationConfig cfg;

    // apply_prob 0 forces the skip branch
    AugmentationConfig never = cfg;
    never.apply_prob = 0.0;
    auto s0 = derive_stream(18, 2);
    const auto [same, none_event] = apply_batched(batch, never, MixMethod::fmix, s0);
    CHECK(none_event.method == MixMethod::none);
    for (size_t i = 0; i < batch.size(); ++i) CHECK(same.images[i].data == batch.images[i].data);

    for (MixMethod method :
         {MixMethod::mixup, MixMethod::cutmix, MixMethod::cutout, MixMethod::fmix}) {
        auto sa = derive_stream(18, 7);
        auto sb = derive_stream(18, 7);
        const auto [out_a, ev_a] = apply_batched(batch, cfg, method, sa);
        const auto [out_b, ev_b] = apply_batched(batch, cfg, method, sb);
        CHECK(ev_a.method == ev_b.method);
        CHECK(ev_a.lambda == ev_b.lambda);
        CHECK(ev_a.partner_perm == ev_b.partner_perm);
        for (size_t i = 0; i < batch.size(); ++i) {
            REQUIRE(out_a.images[i].data == out_b.images[i].data);
            REQUIRE(out_a.labels[i].probs == out_b.labels[i].probs);
        }
        check_labels_normalized(out_a);
        check_pixels_in_unit_range(out_a);
    }
}

TEST_CASE("apply_batched: application rate honors the 50% gate") {
    auto stream = derive_stream(19, 1);
    const Batch batch = random_batch(2, 4, 4, stream);
    AugmentationConfig cfg;
    int applied = 0;
    const int n = 20000;
    auto gate = derive_stream(19, 2);
    for (int i = 0; i < n; ++i) {
        const auto [out, ev] = apply_batched(batch, cfg, MixMethod::mixup, gate);
        if (ev.method != MixMethod::none) ++applied;
        (void)out;
    }
    CHECK(std::abs(static_cast<double>(applied) / n - 0.5) < 0.015);
}

TEST_CASE("mix event validation rejects broken permutations and lambdas") {
    auto stream = derive_stream(20, 1);
    const Batch batch = random_batch(3, 4, 4, stream);

    MixEvent bad_lambda = event_for(MixMethod::mixup, 1.5, 3);
    CHECK_THROWS_AS(mixup(batch, bad_lambda), DataError);

    MixEvent bad_perm = event_for(MixMethod::mixup, 0.5, 3);
    bad_perm.partner_perm = {0, 0, 1};
    CHECK_THROWS_AS(mixup(batch, bad_perm), DataError);

    MixEvent short_perm = event_for(MixMethod::mixup, 0.5, 2);
    CHECK_THROWS_AS(mixup(batch, short_perm), DataError);
}
