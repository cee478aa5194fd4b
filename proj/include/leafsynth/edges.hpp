#pragma once

#include <cmath>
#include <vector>

#include "leafsynth/image.hpp"

namespace leafsynth {

struct CannyParams {
    double gaussian_sigma = 1.4;
    double low_threshold = 40.0;  // Sobel magnitude on 0..255 intensities
    double high_threshold = 100.0;

    void validate() const {
        if (!(gaussian_sigma > 0.0)) throw InputError("canny sigma must be positive");
        if (!(low_threshold >= 0.0) || !(high_threshold >= low_threshold))
            throw InputError("canny thresholds must satisfy 0 <= low <= high");
    }
};

inline FloatImage to_gray(const RasterImage& img) {
    FloatImage g(img.width(), img.height());
    for (std::size_t i = 0; i < img.size(); ++i)
        g[i] = static_cast<float>(0.299 * img[i].r + 0.587 * img[i].g + 0.114 * img[i].b);
    return g;
}

inline FloatImage to_gray(const BinaryMask& mask) {
    FloatImage g(mask.width(), mask.height());
    for (std::size_t i = 0; i < mask.size(); ++i) g[i] = mask[i] ? 255.0f : 0.0f;
    return g;
}

// Classical Canny on a grayscale field:
//   Gaussian blur (clamped borders) -> 3x3 Sobel (clamped borders) ->
//   non-maximum suppression along the gradient direction quantized to
//   0/45/90/135 degrees -> double threshold -> 8-connected hysteresis.
// NMS tie-break: a pixel survives if its magnitude is strictly greater than
// the neighbour on the negative side and >= the one on the positive side, so
// exactly one pixel of a two-pixel plateau is kept. Border pixels are never
// edges.
inline BinaryMask canny_gray(const FloatImage& gray, const CannyParams& params) {
    params.validate();
    const int w = gray.width(), h = gray.height();
    BinaryMask edges(w, h, 0);
    if (w < 3 || h < 3) return edges;

    const FloatImage blurred = gaussian_blur(gray, params.gaussian_sigma);
    Image<double> mag(w, h, 0.0);
    Image<std::uint8_t> sector(w, h, 0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            auto p = [&](int dx, int dy) -> double { return blurred.clamped(x + dx, y + dy); };
            const double gx = (p(1, -1) + 2 * p(1, 0) + p(1, 1)) - (p(-1, -1) + 2 * p(-1, 0) + p(-1, 1));
            const double gy = (p(-1, 1) + 2 * p(0, 1) + p(1, 1)) - (p(-1, -1) + 2 * p(0, -1) + p(1, -1));
            mag(x, y) = std::hypot(gx, gy);
            // tan(22.5 deg) boundaries without atan2
            const double ax = std::abs(gx), ay = std::abs(gy);
            constexpr double t22 = 0.41421356237309503;
            std::uint8_t s;
            if (ay <= t22 * ax) s = 0;         // horizontal gradient: compare left/right
            else if (ax <= t22 * ay) s = 2;    // vertical gradient: compare up/down
            else s = (gx * gy > 0) ? 1 : 3;    // diagonals
            sector(x, y) = s;
        }

    static constexpr int off[4][2] = {{1, 0}, {1, 1}, {0, 1}, {-1, 1}};
    Image<std::uint8_t> cls(w, h, 0); // 0 none, 1 weak, 2 strong
    for (int y = 1; y < h - 1; ++y)
        for (int x = 1; x < w - 1; ++x) {
            const double m = mag(x, y);
            if (m <= 0.0 || m < params.low_threshold) continue;
            const int s = sector(x, y);
            const double pos = mag(x + off[s][0], y + off[s][1]);
            const double neg = mag(x - off[s][0], y - off[s][1]);
            if (!(m > neg && m >= pos)) continue;
            cls(x, y) = m >= params.high_threshold ? 2 : 1;
        }

    std::vector<std::pair<int, int>> stack;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (cls(x, y) == 2) {
                edges(x, y) = 1;
                stack.emplace_back(x, y);
            }
    while (!stack.empty()) {
        const auto [x, y] = stack.back();
        stack.pop_back();
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
                const int nx = x + dx, ny = y + dy;
                if (!cls.in_bounds(nx, ny) || edges(nx, ny) || cls(nx, ny) != 1) continue;
                edges(nx, ny) = 1;
                stack.emplace_back(nx, ny);
            }
    }
    return edges;
}

inline BinaryMask canny(const RasterImage& image, const CannyParams& params) {
    return canny_gray(to_gray(image), params);
}

inline BinaryMask canny(const BinaryMask& mask, const CannyParams& params) {
    return canny_gray(to_gray(mask), params);
}

enum class EdgeMode { mask, image, combined };

inline std::string_view to_string(EdgeMode m) {
    switch (m) {
    case EdgeMode::mask: return "mask";
    case EdgeMode::image: return "image";
    case EdgeMode::combined: return "combined";
    }
    return "combined";
}

inline EdgeMode parse_edge_mode(std::string_view s) {
    if (s == "mask") return EdgeMode::mask;
    if (s == "image") return EdgeMode::image;
    if (s == "combined") return EdgeMode::combined;
    throw InputError("unknown edge mode '" + std::string(s) + "'");
}

// Conditioning edges for inpainting. `combined` keeps image edges inside the
// mask dilated by `dilation` pixels and adds the mask boundary edges.
inline BinaryMask conditioning_edges(const RasterImage& image, const BinaryMask& mask, EdgeMode mode,
                                     const CannyParams& image_params, const CannyParams& mask_params = {},
                                     int dilation = 3) {
    if (!image.same_shape(mask)) throw InputError("image and mask resolution differ");
    if (mode == EdgeMode::mask) return canny(mask, mask_params);
    BinaryMask img_edges = canny(image, image_params);
    if (mode == EdgeMode::image) return img_edges;
    const BinaryMask region = dilate(mask, dilation);
    const BinaryMask boundary = canny(mask, mask_params);
    for (std::size_t i = 0; i < img_edges.size(); ++i)
        img_edges[i] = ((img_edges[i] && region[i]) || boundary[i]) ? 1 : 0;
    return img_edges;
}

} // namespace leafsynth
