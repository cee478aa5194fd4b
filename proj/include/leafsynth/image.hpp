#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "leafsynth/error.hpp"
#include "leafsynth/geometry.hpp"

namespace leafsynth {

struct Rgb8 {
    std::uint8_t r = 0;
    std::uint8_t g = 0;
    std::uint8_t b = 0;
    constexpr bool operator==(const Rgb8&) const = default;
};

// Linear color with channels nominally in [0, 1].
struct Color {
    double r = 0.0;
    double g = 0.0;
    double b = 0.0;

    constexpr Color operator+(Color o) const { return {r + o.r, g + o.g, b + o.b}; }
    constexpr Color operator-(Color o) const { return {r - o.r, g - o.g, b - o.b}; }
    constexpr Color operator*(double s) const { return {r * s, g * s, b * s}; }
    constexpr bool operator==(const Color&) const = default;
};

inline constexpr Color lerp(Color a, Color b, double t) { return a + (b - a) * t; }

inline std::uint8_t to_byte(double v) {
    return static_cast<std::uint8_t>(std::clamp(std::lround(v * 255.0), 0l, 255l));
}
inline Rgb8 to_rgb8(Color c) { return {to_byte(c.r), to_byte(c.g), to_byte(c.b)}; }
inline Color to_color(Rgb8 p) { return {p.r / 255.0, p.g / 255.0, p.b / 255.0}; }
inline double luma(Color c) { return 0.299 * c.r + 0.587 * c.g + 0.114 * c.b; }

// Dense row-major raster.
template <class T>
class Image {
public:
    using value_type = T;

    Image() = default;
    Image(int width, int height, T fill = T{})
        : width_(width), height_(height),
          data_(static_cast<std::size_t>(std::max(width, 0)) * std::max(height, 0), fill) {
        require(width >= 0 && height >= 0, "image dimensions must be non-negative");
    }

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }
    bool same_shape(const auto& other) const {
        return width_ == other.width() && height_ == other.height();
    }
    bool in_bounds(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }

    T& operator()(int x, int y) { return data_[index(x, y)]; }
    const T& operator()(int x, int y) const { return data_[index(x, y)]; }
    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    // Clamp-to-edge access.
    const T& clamped(int x, int y) const {
        return (*this)(std::clamp(x, 0, width_ - 1), std::clamp(y, 0, height_ - 1));
    }

    auto begin() { return data_.begin(); }
    auto end() { return data_.end(); }
    auto begin() const { return data_.begin(); }
    auto end() const { return data_.end(); }
    const std::vector<T>& data() const { return data_; }
    std::vector<T>& data() { return data_; }

    bool operator==(const Image&) const = default;

private:
    std::size_t index(int x, int y) const {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<T> data_;
};

using RasterImage = Image<Rgb8>;
using FloatImage = Image<float>;
using ColorImage = Image<Color>;
using NormalMap = Image<Vec3>;

// Semantic mask: 1 = foreground, 0 = background.
using BinaryMask = Image<std::uint8_t>;

inline std::size_t count_foreground(const BinaryMask& m) {
    return static_cast<std::size_t>(std::count_if(m.begin(), m.end(), [](auto v) { return v != 0; }));
}

inline ColorImage to_color_image(const RasterImage& img) {
    ColorImage out(img.width(), img.height());
    for (std::size_t i = 0; i < img.size(); ++i) out[i] = to_color(img[i]);
    return out;
}

inline RasterImage to_raster(const ColorImage& img) {
    RasterImage out(img.width(), img.height());
    for (std::size_t i = 0; i < img.size(); ++i) out[i] = to_rgb8(img[i]);
    return out;
}

// Bilinear sample at continuous pixel coordinates (pixel centers at +0.5),
// clamped at the borders.
template <class T>
T sample_bilinear(const Image<T>& img, double x, double y) {
    const double fx = x - 0.5, fy = y - 0.5;
    const int x0 = static_cast<int>(std::floor(fx));
    const int y0 = static_cast<int>(std::floor(fy));
    const double tx = fx - x0, ty = fy - y0;
    const T& a = img.clamped(x0, y0);
    const T& b = img.clamped(x0 + 1, y0);
    const T& c = img.clamped(x0, y0 + 1);
    const T& d = img.clamped(x0 + 1, y0 + 1);
    return (a * (1.0 - tx) + b * tx) * (1.0 - ty) + (c * (1.0 - tx) + d * tx) * ty;
}

// Like sample_bilinear but outside pixels read as zero.
inline float sample_bilinear_zero(const FloatImage& img, double x, double y) {
    const double fx = x - 0.5, fy = y - 0.5;
    const int x0 = static_cast<int>(std::floor(fx));
    const int y0 = static_cast<int>(std::floor(fy));
    const double tx = fx - x0, ty = fy - y0;
    auto at = [&](int xx, int yy) -> double { return img.in_bounds(xx, yy) ? img(xx, yy) : 0.0; };
    return static_cast<float>((at(x0, y0) * (1 - tx) + at(x0 + 1, y0) * tx) * (1 - ty) +
                              (at(x0, y0 + 1) * (1 - tx) + at(x0 + 1, y0 + 1) * tx) * ty);
}

inline std::vector<double> gaussian_kernel(double sigma) {
    require(sigma > 0.0, "gaussian sigma must be positive");
    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> k(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        k[i + radius] = std::exp(-(i * i) / (2.0 * sigma * sigma));
        sum += k[i + radius];
    }
    for (double& v : k) v /= sum;
    return k;
}

// Separable Gaussian blur with clamp-to-edge borders. T must support
// T * double and T + T.
template <class T>
Image<T> gaussian_blur(const Image<T>& src, double sigma) {
    if (sigma <= 0.0 || src.empty()) return src;
    const auto k = gaussian_kernel(sigma);
    const int r = static_cast<int>(k.size() / 2);
    Image<T> tmp(src.width(), src.height());
    for (int y = 0; y < src.height(); ++y)
        for (int x = 0; x < src.width(); ++x) {
            T acc = src.clamped(x - r, y) * k[0];
            for (int i = 1; i < static_cast<int>(k.size()); ++i) acc = acc + src.clamped(x - r + i, y) * k[i];
            tmp(x, y) = acc;
        }
    Image<T> out(src.width(), src.height());
    for (int y = 0; y < src.height(); ++y)
        for (int x = 0; x < src.width(); ++x) {
            T acc = tmp.clamped(x, y - r) * k[0];
            for (int i = 1; i < static_cast<int>(k.size()); ++i) acc = acc + tmp.clamped(x, y - r + i) * k[i];
            out(x, y) = acc;
        }
    return out;
}

// 8-neighborhood morphology.
inline BinaryMask dilate(const BinaryMask& m, int iterations = 1) {
    BinaryMask cur = m;
    for (int it = 0; it < iterations; ++it) {
        BinaryMask next(cur.width(), cur.height());
        for (int y = 0; y < cur.height(); ++y)
            for (int x = 0; x < cur.width(); ++x) {
                std::uint8_t v = 0;
                for (int dy = -1; dy <= 1 && !v; ++dy)
                    for (int dx = -1; dx <= 1 && !v; ++dx)
                        if (cur.in_bounds(x + dx, y + dy) && cur(x + dx, y + dy)) v = 1;
                next(x, y) = v;
            }
        cur = std::move(next);
    }
    return cur;
}

// Pixels outside the frame count as background.
inline BinaryMask erode(const BinaryMask& m, int iterations = 1) {
    BinaryMask cur = m;
    for (int it = 0; it < iterations; ++it) {
        BinaryMask next(cur.width(), cur.height());
        for (int y = 0; y < cur.height(); ++y)
            for (int x = 0; x < cur.width(); ++x) {
                std::uint8_t v = cur(x, y) ? 1 : 0;
                for (int dy = -1; dy <= 1 && v; ++dy)
                    for (int dx = -1; dx <= 1 && v; ++dx)
                        if (!cur.in_bounds(x + dx, y + dy) || !cur(x + dx, y + dy)) v = 0;
                next(x, y) = v;
            }
        cur = std::move(next);
    }
    return cur;
}

// Foreground pixels with at least one background 8-neighbor.
inline BinaryMask inner_boundary(const BinaryMask& m) {
    const BinaryMask e = erode(m);
    BinaryMask out(m.width(), m.height());
    for (std::size_t i = 0; i < m.size(); ++i) out[i] = (m[i] && !e[i]) ? 1 : 0;
    return out;
}

} // namespace leafsynth
