#include <gtest/gtest.h>

#include <cmath>

#include "leafsynth/edges.hpp"
#include "leafsynth/filter_metrics.hpp"
#include "leafsynth/paper_texture.hpp"
#include "oracles.hpp"

using namespace leafsynth;

using namespace oracle;

// ---------------------------------------------------------------------------
// Metrics

TEST(Metrics, IouExamples) {
    const BinaryMask full(10, 10, 1), left = rect_mask(10, 10, 0, 0, 5, 10), right = rect_mask(10, 10, 5, 0, 10, 10);
    EXPECT_EQ(iou(full, full), 1.0);
    EXPECT_EQ(iou(left, right), 0.0);
    EXPECT_EQ(iou(left, full), 0.5);
    EXPECT_EQ(iou(BinaryMask(4, 4, 0), BinaryMask(4, 4, 0)), 1.0);
    EXPECT_THROW(iou(BinaryMask(4, 4), BinaryMask(5, 4)), InputError);
}

TEST(Metrics, PixelErrorExamples) {
    const BinaryMask truth = rect_mask(200, 100, 0, 0, 100, 100); // 10000
    EXPECT_DOUBLE_EQ(mask_pixel_error(rect_mask(200, 100, 0, 0, 95, 100), truth), 0.05);
    EXPECT_DOUBLE_EQ(mask_pixel_error(rect_mask(200, 100, 0, 0, 115, 100), truth), 0.15);
    EXPECT_EQ(mask_pixel_error(rect_mask(200, 100, 50, 0, 150, 100), truth), 0.0);
    EXPECT_THROW(mask_pixel_error(truth, BinaryMask(200, 100, 0)), InputError);
}

TEST(Metrics, DeviationExamples) {
    const BinaryMask truth = rect_mask(200, 100, 0, 0, 100, 100);
    EXPECT_EQ(deviation(truth, truth), 0.0);
    const double extra = deviation(rect_mask(200, 100, 0, 0, 115, 100), truth);
    EXPECT_DOUBLE_EQ(extra, 0.15);
    EXPECT_TRUE(decide(extra).kept);
    const double missing = deviation(rect_mask(200, 100, 0, 0, 84, 100), truth);
    EXPECT_DOUBLE_EQ(missing, 0.16);
    EXPECT_FALSE(decide(missing).kept);
    EXPECT_THROW(deviation(truth, BinaryMask(200, 100, 0)), InputError);
}

TEST(Metrics, ThresholdBoundary) {
    EXPECT_TRUE(decide(0.15, 0.15).kept);
    EXPECT_FALSE(decide(std::nextafter(0.15, 1.0), 0.15).kept);
    EXPECT_FALSE(decide(1e-9, 0.0).kept);
    EXPECT_TRUE(decide(0.0, 0.0).kept);
}

TEST(Metrics, BruteForceBattery) {
    RandomStream rng(NoiseSeed{201}, "test");
    for (int i = 0; i < 60; ++i) {
        const int w = static_cast<int>(rng.uniform_int(3, 64)), h = static_cast<int>(rng.uniform_int(3, 64));
        BinaryMask t = random_mask(rng, w, h, rng.uniform(0.05, 0.9));
        t(0, 0) = 1;
        const BinaryMask p = random_mask(rng, w, h, rng.uniform(0.0, 1.0));
        const Brute b = brute_metrics(p, t);
        ASSERT_NEAR(iou(p, t), b.iou, 1e-12);
        ASSERT_NEAR(mask_pixel_error(p, t), b.mpe, 1e-12);
        ASSERT_NEAR(deviation(p, t), b.dev, 1e-12);
        ASSERT_NEAR(deviation_by(DeviationMetric::iou, p, t), 1.0 - b.iou, 1e-12);
        ASSERT_NEAR(deviation_by(DeviationMetric::pixel_count, p, t), b.mpe, 1e-12);
    }
}

TEST(Metrics, DeviationDominatesPixelError) {
    RandomStream rng(NoiseSeed{202}, "test");
    for (int i = 0; i < 10000; ++i) {
        BinaryMask t = random_mask(rng, 8, 8, rng.uniform());
        t(3, 3) = 1;
        const BinaryMask p = random_mask(rng, 8, 8, rng.uniform());
        ASSERT_GE(deviation(p, t), mask_pixel_error(p, t));
        const bool same = p == t;
        ASSERT_EQ(iou(p, t) == 1.0, same);
        ASSERT_EQ(deviation(p, t) == 0.0, same);
    }
}

TEST(Metrics, MeanRelativeError) {
    EXPECT_EQ(mean_relative_error({{100, 100}, {5, 5}}), 0.0);
    EXPECT_NEAR(mean_relative_error({{110, 100}, {90, 100}}), 0.10, 1e-15);
    EXPECT_NEAR(mean_relative_error({{106.2, 100}}), 0.062, 1e-12);
    EXPECT_THROW(mean_relative_error({}), InputError);
    EXPECT_THROW(mean_relative_error({{1, 0}}), InputError);
}

TEST(Metrics, MetricNames) {
    for (auto m : {DeviationMetric::symmetric_difference, DeviationMetric::pixel_count, DeviationMetric::iou})
        EXPECT_EQ(parse_deviation_metric(to_string(m)), m);
    EXPECT_THROW(parse_deviation_metric("l2"), InputError);
}

TEST(Baseline, BlankPaperGivesEmptyMask) {
    PaperAppearance a;
    a.noise_strength = 0.1;
    a.blend_weights = {0.3, 0.4, 0.3};
    const auto sheet = render_paper({}, {}, a, 60.0, 60.0, 4.0, NoiseSeed{2});
    EXPECT_EQ(count_foreground(baseline_segment(sheet.image)), 0u);
}

TEST(Baseline, FindsGreenBlob) {
    const auto sheet = render_paper({}, {}, {}, 64.0, 64.0, 4.0, NoiseSeed{2});
    RasterImage img = sheet.image;
    BinaryMask truth(img.width(), img.height(), 0);
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x)
            if (std::hypot(x - 128.0, y - 128.0) < 60.0) {
                img(x, y) = {70, 130, 40};
                truth(x, y) = 1;
            }
    EXPECT_LE(deviation(baseline_segment(img), truth), 0.02);
}

TEST(Baseline, LargestComponent) {
    BinaryMask m = rect_mask(20, 20, 0, 0, 3, 3);
    const BinaryMask big = rect_mask(20, 20, 8, 8, 16, 16);
    for (std::size_t i = 0; i < m.size(); ++i) m[i] |= big[i];
    EXPECT_TRUE(largest_component(m) == big);
}

// ---------------------------------------------------------------------------
// Canny

TEST(Canny, MatchesNaiveReference) {
    RandomStream rng(NoiseSeed{301}, "test");
    const CannyParams p{1.0, 30.0, 80.0};
    for (int i = 0; i < 20; ++i) {
        RasterImage img(32, 32);
        // smooth-ish random field so edges form curves, plus pixel noise
        const double ox = rng.uniform(0, 100), oy = rng.uniform(0, 100);
        for (int y = 0; y < 32; ++y)
            for (int x = 0; x < 32; ++x) {
                const double v = 128 + 100 * std::sin(0.3 * (x + ox)) * std::cos(0.25 * (y + oy)) + rng.uniform(-40, 40);
                const auto b = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
                img(x, y) = {b, b, static_cast<std::uint8_t>(rng.uniform_int(0, 255))};
            }
        const BinaryMask ours = canny(img, p);
        const BinaryMask ref = naive_canny(img, p.gaussian_sigma, p.low_threshold, p.high_threshold);
        ASSERT_TRUE(ours == ref) << "image " << i;
        ASSERT_GT(count_foreground(ours), 0u);
    }
}

TEST(Canny, UniformImageHasNoEdges) {
    for (std::uint8_t v : {0, 77, 255}) {
        EXPECT_EQ(count_foreground(canny(RasterImage(32, 32, Rgb8{v, v, v}), CannyParams{})), 0u);
    }
    EXPECT_EQ(count_foreground(canny(BinaryMask(16, 16, 1), CannyParams{})), 0u);
}

TEST(Canny, VerticalStep) {
    RasterImage img(32, 32, Rgb8{0, 0, 0});
    for (int y = 0; y < 32; ++y)
        for (int x = 16; x < 32; ++x) img(x, y) = {255, 255, 255};
    const BinaryMask e = canny(img, CannyParams{});
    const BinaryMask ref = naive_canny(img, 1.4, 40, 100);
    EXPECT_TRUE(e == ref);
    for (int y = 1; y < 31; ++y) {
        int count = 0;
        for (int x = 0; x < 32; ++x)
            if (e(x, y)) {
                EXPECT_NEAR(x, 15.5, 1.5);
                ++count;
            }
        EXPECT_EQ(count, 1) << "row " << y;
    }
}

TEST(Canny, MaskEdgesTrackBoundary) {
    BinaryMask m(96, 96, 0);
    for (int y = 0; y < 96; ++y)
        for (int x = 0; x < 96; ++x)
            if (std::hypot((x - 48.0) / 30.0, (y - 44.0) / 20.0) < 1.0 || (x > 20 && x < 40 && y > 55 && y < 80)) m(x, y) = 1;
    const BinaryMask e = canny(m, CannyParams{});
    const BinaryMask boundary = inner_boundary(m);
    EXPECT_GT(count_foreground(e), 0u);
    EXPECT_EQ(within(e, boundary, 2), 0);
    EXPECT_EQ(within(boundary, e, 2), 0);
}

TEST(Canny, RaisingLowThresholdNeverAddsEdges) {
    RandomStream rng(NoiseSeed{302}, "test");
    for (int i = 0; i < 20; ++i) {
        RasterImage img(48, 48);
        for (auto& p : img) {
            const auto v = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
            p = {v, v, v};
        }
        BinaryMask prev = canny(img, {1.2, 5.0, 120.0});
        for (double low = 10.0; low <= 120.0; low += 10.0) {
            const BinaryMask cur = canny(img, {1.2, low, 120.0});
            for (std::size_t k = 0; k < cur.size(); ++k) ASSERT_LE(cur[k], prev[k]);
            prev = cur;
        }
    }
}

TEST(Canny, SparseOnPaperRenders) {
    PaperAppearance a;
    a.noise_strength = 0.12;
    a.blend_weights = {0.4, 0.3, 0.3};
    a.blur_sigma_px = 0.5;
    StripeParams s{0.25, 2.0 * pi, 0.0, 0.75};
    for (double ppm : {2.0, 4.0, 8.0}) {
        const auto sheet = render_paper(s, s, a, 256.0 / ppm, 256.0 / ppm, ppm, NoiseSeed{7});
        const BinaryMask e = canny(sheet.image, CannyParams{});
        EXPECT_LE(double(count_foreground(e)), 0.2 * double(e.size())) << ppm;
        EXPECT_TRUE(canny(sheet.image, CannyParams{}) == e);
    }
}

TEST(Canny, ParameterValidation) {
    EXPECT_THROW(canny(RasterImage(8, 8), {0.0, 1.0, 2.0}), InputError);
    EXPECT_THROW(canny(RasterImage(8, 8), {1.0, 5.0, 2.0}), InputError);
    EXPECT_THROW(canny(RasterImage(8, 8), {1.0, -1.0, 2.0}), InputError);
}

TEST(Canny, EdgeModes) {
    RasterImage img(64, 64, Rgb8{240, 235, 220});
    BinaryMask mask(64, 64, 0);
    for (int y = 20; y < 44; ++y)
        for (int x = 20; x < 44; ++x) {
            mask(x, y) = 1;
            img(x, y) = {60, 120, 40};
        }
    for (int y = 0; y < 64; ++y) img(5, y) = {0, 0, 0}; // distant line outside the leaf
    const auto m = conditioning_edges(img, mask, EdgeMode::mask, CannyParams{});
    const auto c = conditioning_edges(img, mask, EdgeMode::combined, CannyParams{});
    const auto i = conditioning_edges(img, mask, EdgeMode::image, CannyParams{});
    for (std::size_t k = 0; k < m.size(); ++k) EXPECT_LE(m[k], c[k]);
    int far_image = 0, far_combined = 0;
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 12; ++x) {
            far_image += i(x, y);
            far_combined += c(x, y);
        }
    EXPECT_GT(far_image, 0);
    EXPECT_EQ(far_combined, 0);
    EXPECT_THROW(parse_edge_mode("sobel"), InputError);
}
