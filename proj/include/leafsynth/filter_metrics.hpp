#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "leafsynth/annotate.hpp"
#include "leafsynth/image.hpp"

namespace leafsynth {

struct MaskCounts {
    std::size_t predicted = 0;
    std::size_t truth = 0;
    std::size_t intersection = 0;
    std::size_t unite = 0;
    std::size_t symmetric_difference = 0;
};

inline MaskCounts count_pair(const BinaryMask& predicted, const BinaryMask& truth) {
    if (!predicted.same_shape(truth)) throw InputError("mask resolutions differ");
    MaskCounts c;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const bool p = predicted[i] != 0, t = truth[i] != 0;
        c.predicted += p;
        c.truth += t;
        c.intersection += p && t;
        c.unite += p || t;
        c.symmetric_difference += p != t;
    }
    return c;
}

// |A and B| / |A or B|; 1 when both masks are empty.
inline double iou(const BinaryMask& predicted, const BinaryMask& truth) {
    const auto c = count_pair(predicted, truth);
    return c.unite == 0 ? 1.0 : static_cast<double>(c.intersection) / static_cast<double>(c.unite);
}

// | |P| - |T| | / |T|
inline double mask_pixel_error(const BinaryMask& predicted, const BinaryMask& truth) {
    const auto c = count_pair(predicted, truth);
    if (c.truth == 0) throw InputError("mask_pixel_error needs a nonempty truth mask");
    const double diff = std::abs(static_cast<double>(c.predicted) - static_cast<double>(c.truth));
    return diff / static_cast<double>(c.truth);
}

// |P xor T| / |T|
inline double deviation(const BinaryMask& predicted, const BinaryMask& truth) {
    const auto c = count_pair(predicted, truth);
    if (c.truth == 0) throw InputError("deviation needs a nonempty truth mask");
    return static_cast<double>(c.symmetric_difference) / static_cast<double>(c.truth);
}

inline double mean_relative_error(const std::vector<std::pair<double, double>>& pairs) {
    if (pairs.empty()) throw InputError("mean_relative_error needs at least one pair");
    double sum = 0.0;
    for (const auto& [pred, truth] : pairs) sum += relative_error(pred, truth);
    return sum / static_cast<double>(pairs.size());
}

enum class DeviationMetric { symmetric_difference, pixel_count, iou };

inline std::string_view to_string(DeviationMetric m) {
    switch (m) {
    case DeviationMetric::symmetric_difference: return "symmetric_difference";
    case DeviationMetric::pixel_count: return "pixel_count";
    case DeviationMetric::iou: return "iou";
    }
    return "symmetric_difference";
}

inline DeviationMetric parse_deviation_metric(std::string_view s) {
    if (s == "symmetric_difference" || s == "xor") return DeviationMetric::symmetric_difference;
    if (s == "pixel_count" || s == "mpe") return DeviationMetric::pixel_count;
    if (s == "iou") return DeviationMetric::iou;
    throw InputError("unknown deviation metric '" + std::string(s) + "'");
}

inline double deviation_by(DeviationMetric metric, const BinaryMask& predicted, const BinaryMask& truth) {
    switch (metric) {
    case DeviationMetric::symmetric_difference: return deviation(predicted, truth);
    case DeviationMetric::pixel_count: return mask_pixel_error(predicted, truth);
    case DeviationMetric::iou: {
        if (count_foreground(truth) == 0) throw InputError("deviation needs a nonempty truth mask");
        return 1.0 - iou(predicted, truth);
    }
    }
    return deviation(predicted, truth);
}

inline constexpr double kDefaultFilterThreshold = 0.15;

struct FilterDecision {
    double deviation = 0.0;
    double threshold = kDefaultFilterThreshold;
    bool kept = true;
};

// Kept unless the deviation is strictly greater than the threshold.
inline FilterDecision decide(double dev, double threshold = kDefaultFilterThreshold) {
    return {dev, threshold, !(dev > threshold)};
}

// ---------------------------------------------------------------------------
// Baseline segmentation (stand-in prediction source)

// Chroma statistics of the background paper in an opponent space
// (a = r - g, b = (r + g)/2 - b), which is largely invariant to shadows.
struct PaperPalette {
    double mean_a = 0.0, mean_b = 0.0;
    double cov_aa = 1e-4, cov_ab = 0.0, cov_bb = 1e-4;
};

namespace detail {
inline std::pair<double, double> opponent_chroma(Rgb8 p) {
    const double s = std::max(1.0, static_cast<double>(p.r) + p.g + p.b);
    const double r = p.r / s, g = p.g / s, b = p.b / s;
    return {r - g, 0.5 * (r + g) - b};
}
} // namespace detail

// Palette estimated from a border strip of `border` pixels.
inline PaperPalette estimate_palette(const RasterImage& image, int border = 8) {
    double n = 0, sa = 0, sb = 0, saa = 0, sab = 0, sbb = 0;
    for (int y = 0; y < image.height(); ++y)
        for (int x = 0; x < image.width(); ++x) {
            if (x >= border && y >= border && x < image.width() - border && y < image.height() - border) continue;
            const auto [a, b] = detail::opponent_chroma(image(x, y));
            n += 1;
            sa += a;
            sb += b;
            saa += a * a;
            sab += a * b;
            sbb += b * b;
        }
    PaperPalette p;
    if (n < 2) return p;
    p.mean_a = sa / n;
    p.mean_b = sb / n;
    constexpr double floor_var = 2e-4;
    p.cov_aa = saa / n - p.mean_a * p.mean_a + floor_var;
    p.cov_ab = sab / n - p.mean_a * p.mean_b;
    p.cov_bb = sbb / n - p.mean_b * p.mean_b + floor_var;
    return p;
}

inline double palette_distance(const PaperPalette& p, Rgb8 px) {
    const auto [a, b] = detail::opponent_chroma(px);
    const double da = a - p.mean_a, db = b - p.mean_b;
    const double det = p.cov_aa * p.cov_bb - p.cov_ab * p.cov_ab;
    const double m = (p.cov_bb * da * da - 2 * p.cov_ab * da * db + p.cov_aa * db * db) / det;
    return std::sqrt(std::max(0.0, m));
}

// Keeps the largest 8-connected foreground component.
inline BinaryMask largest_component(const BinaryMask& m) {
    Image<int> label(m.width(), m.height(), 0);
    int best_label = 0;
    std::size_t best_size = 0;
    int next = 0;
    std::vector<std::pair<int, int>> stack;
    for (int y = 0; y < m.height(); ++y)
        for (int x = 0; x < m.width(); ++x) {
            if (!m(x, y) || label(x, y)) continue;
            ++next;
            std::size_t size = 0;
            stack.emplace_back(x, y);
            label(x, y) = next;
            while (!stack.empty()) {
                const auto [cx, cy] = stack.back();
                stack.pop_back();
                ++size;
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int nx = cx + dx, ny = cy + dy;
                        if (m.in_bounds(nx, ny) && m(nx, ny) && !label(nx, ny)) {
                            label(nx, ny) = next;
                            stack.emplace_back(nx, ny);
                        }
                    }
            }
            if (size > best_size) {
                best_size = size;
                best_label = next;
            }
        }
    BinaryMask out(m.width(), m.height(), 0);
    if (best_label == 0) return out;
    for (std::size_t i = 0; i < m.size(); ++i) out[i] = label[i] == best_label ? 1 : 0;
    return out;
}

struct BaselineSegmentParams {
    double distance_threshold = 6.0; // Mahalanobis units in chroma space
    std::size_t min_component_pixels = 64;
};

// Foreground iff the pixel's chroma is far from the paper palette, then the
// largest connected component. Holes inside the leaf are preserved.
inline BinaryMask baseline_segment(const RasterImage& image, const PaperPalette& palette,
                                   const BaselineSegmentParams& params = {}) {
    BinaryMask fg(image.width(), image.height(), 0);
    for (std::size_t i = 0; i < image.size(); ++i)
        fg[i] = palette_distance(palette, image[i]) > params.distance_threshold ? 1 : 0;
    BinaryMask out = largest_component(fg);
    if (count_foreground(out) < params.min_component_pixels) return BinaryMask(image.width(), image.height(), 0);
    return out;
}

inline BinaryMask baseline_segment(const RasterImage& image, const BaselineSegmentParams& params = {}) {
    return baseline_segment(image, estimate_palette(image), params);
}

} // namespace leafsynth
