#pragma once

#include <cmath>

#include "leafsynth/image.hpp"
#include "leafsynth/noise.hpp"

namespace leafsynth {

// One sinusoidal stripe field: intensity(x) = amplitude * sin(frequency * x + phase) + baseline.
struct StripeParams {
    double amplitude = 0.25;
    double frequency = 2.0 * pi; // rad per mm
    double phase = 0.0;
    double baseline = 0.75;

    bool valid() const {
        return std::isfinite(amplitude) && std::isfinite(frequency) && std::isfinite(phase) && amplitude >= 0.0 &&
               frequency > 0.0 && baseline >= 0.0 && baseline <= 1.0 &&
               amplitude <= std::min(baseline, 1.0 - baseline) + 1e-12;
    }
    double period() const { return 2.0 * pi / frequency; }
};

inline double stripe_intensity(double x, const StripeParams& p) {
    return p.amplitude * std::sin(p.frequency * x + p.phase) + p.baseline;
}

struct PaperAppearance {
    double hue_shift_deg = 0.0;
    double contrast = 1.0;
    double brightness = 0.0;
    double saturation = 1.0;
    NoiseBlendWeights blend_weights{};
    double noise_strength = 0.0;
    double noise_scale = 0.35; // noise lattice cells per mm
    double blur_sigma_px = 0.0;
    Color base_color{0.96, 0.94, 0.88};
    Color line_color{0.85, 0.45, 0.25};

    bool identity_adjustment() const {
        return hue_shift_deg == 0.0 && contrast == 1.0 && brightness == 0.0 && saturation == 1.0;
    }
};

// Bold line every `major_every` minor lines. The major profile is a sharpened
// stripe of frequency B / major_every aligned with a minor minimum.
struct GridStyle {
    int major_every = 10;
    double major_amplitude = 0.15;
    double major_sharpness = 400.0;
};

struct PaperSheet {
    RasterImage image;
    double grid_spacing_mm = 1.0;
    int major_every = 10;
    double pixels_per_mm = 10.0;
    double width_mm = 0.0;
    double height_mm = 0.0;
};

namespace detail {

inline double major_profile(double x, const StripeParams& minor, const GridStyle& grid) {
    if (grid.major_every <= 1 || grid.major_amplitude <= 0.0) return 1.0;
    const double freq = minor.frequency / grid.major_every;
    // first minor minimum: frequency * x + phase = 3pi/2
    const double x0 = (1.5 * pi - minor.phase) / minor.frequency;
    const double phase = 1.5 * pi - freq * x0;
    const double pulse = std::pow(0.5 * (1.0 - std::sin(freq * x + phase)), grid.major_sharpness);
    return 1.0 - grid.major_amplitude * pulse;
}

} // namespace detail

// Combined grid intensity at a point (mm): the darker of the x and y fields.
inline double grid_intensity(Vec2 p_mm, const StripeParams& sx, const StripeParams& sy, const GridStyle& grid) {
    const double ix = std::min(stripe_intensity(p_mm.x, sx), detail::major_profile(p_mm.x, sx, grid));
    const double iy = std::min(stripe_intensity(p_mm.y, sy), detail::major_profile(p_mm.y, sy, grid));
    return std::min(ix, iy);
}

// Hue rotation about the gray axis, saturation about luma, contrast about
// mid-gray 128, brightness offset; clamped.
inline Color adjust_color(Color c, const PaperAppearance& a) {
    if (a.hue_shift_deg != 0.0) {
        const double t = a.hue_shift_deg * pi / 180.0;
        const double cs = std::cos(t), sn = std::sin(t);
        const double k = 1.0 / 3.0, s3 = std::sqrt(k);
        // Rodrigues rotation about (1,1,1)/sqrt(3)
        const double m0 = cs + (1 - cs) * k, m1 = (1 - cs) * k - s3 * sn, m2 = (1 - cs) * k + s3 * sn;
        c = {m0 * c.r + m1 * c.g + m2 * c.b, m2 * c.r + m0 * c.g + m1 * c.b, m1 * c.r + m2 * c.g + m0 * c.b};
    }
    if (a.saturation != 1.0) {
        const double y = luma(c);
        c = Color{y, y, y} + (c - Color{y, y, y}) * a.saturation;
    }
    constexpr double mid = 128.0 / 255.0;
    auto tone = [&](double v) { return std::clamp((v - mid) * a.contrast + mid + a.brightness, 0.0, 1.0); };
    return {tone(c.r), tone(c.g), tone(c.b)};
}

inline RasterImage adjust_appearance(const RasterImage& image, const PaperAppearance& a) {
    if (a.identity_adjustment()) return image;
    require(a.contrast > 0.0 && a.saturation >= 0.0, "contrast must be positive and saturation non-negative");
    RasterImage out(image.width(), image.height());
    for (std::size_t i = 0; i < image.size(); ++i) out[i] = to_rgb8(adjust_color(to_color(image[i]), a));
    return out;
}

// Noise-free grid color at a point (mm).
inline Color paper_grid_color(Vec2 p_mm, const StripeParams& sx, const StripeParams& sy, const GridStyle& grid,
                              const PaperAppearance& a) {
    return lerp(a.line_color, a.base_color, grid_intensity(p_mm, sx, sy, grid));
}

inline PaperSheet render_paper(const StripeParams& stripes_x, const StripeParams& stripes_y,
                               const PaperAppearance& appearance, double width_mm, double height_mm,
                               double pixels_per_mm, NoiseSeed seed, const GridStyle& grid = {}) {
    if (!(width_mm > 0.0) || !(height_mm > 0.0) || !(pixels_per_mm > 0.0))
        throw InputError("paper dimensions and resolution must be positive");
    if (!stripes_x.valid() || !stripes_y.valid()) throw InputError("invalid stripe parameters");
    if (!appearance.blend_weights.valid()) throw InputError("invalid noise blend weights");
    require(appearance.noise_strength >= 0.0 && appearance.noise_strength <= 1.0, "noise strength must be in [0, 1]");
    require(appearance.contrast > 0.0 && appearance.saturation >= 0.0, "contrast must be positive and saturation non-negative");

    const int w = static_cast<int>(std::lround(width_mm * pixels_per_mm));
    const int h = static_cast<int>(std::lround(height_mm * pixels_per_mm));
    if (w <= 0 || h <= 0) throw InputError("paper raster would be empty");

    const NoiseSeed noise_seed = seed.child("paper.noise");
    const auto& bw = appearance.blend_weights;
    const double centre = 0.5 * (bw.voronoi + bw.value);
    const bool adjust = !appearance.identity_adjustment();
    ColorImage field(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const Vec2 p{(x + 0.5) / pixels_per_mm, (y + 0.5) / pixels_per_mm};
            Color c = paper_grid_color(p, stripes_x, stripes_y, grid, appearance);
            if (adjust) c = adjust_color(c, appearance);
            if (appearance.noise_strength > 0.0) {
                const double l = blend_noise(p * appearance.noise_scale, bw, noise_seed) - centre;
                c = c * (1.0 + appearance.noise_strength * l);
            }
            field(x, y) = c;
        }
    if (appearance.blur_sigma_px > 0.0) field = gaussian_blur(field, appearance.blur_sigma_px);

    PaperSheet sheet;
    sheet.image = to_raster(field);
    sheet.grid_spacing_mm = stripes_x.period();
    sheet.major_every = grid.major_every;
    sheet.pixels_per_mm = pixels_per_mm;
    sheet.width_mm = w / pixels_per_mm;
    sheet.height_mm = h / pixels_per_mm;
    return sheet;
}

} // namespace leafsynth
