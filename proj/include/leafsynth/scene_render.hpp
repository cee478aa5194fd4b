#pragma once

#include <array>
#include <cmath>
#include <string_view>
#include <vector>

#include "leafsynth/image.hpp"
#include "leafsynth/leaf_texture.hpp"
#include "leafsynth/paper_texture.hpp"

namespace leafsynth {

struct ShadowParams {
    double strength = 0.0; // s in [0, 1]
    Vec2 offset_mm{};      // p
    double size_mm = 0.0;  // sz, blur sigma

    void validate() const {
        require(strength >= 0.0 && strength <= 1.0, "shadow strength must be in [0, 1]");
        require(size_mm >= 0.0 && is_finite(offset_mm), "shadow size must be non-negative and offset finite");
    }
};

enum class DistractorKind { paper_fragment, glass_pane };

inline std::string_view to_string(DistractorKind k) {
    return k == DistractorKind::paper_fragment ? "paper_fragment" : "glass_pane";
}

inline constexpr double kDistractorBaseMm = 20.0;

// Unit quad (side kDistractorBaseMm) scaled by S_xy, rotated by R_theta and
// translated by T_xy in world mm.
struct DistractorSpec {
    DistractorKind kind = DistractorKind::paper_fragment;
    Vec2 translation{};
    double rotation = 0.0;
    Vec2 scale{1.0, 1.0};
    double opacity = 0.6;

    // Quad-local coordinates in [-0.5, 0.5]^2 for a world point.
    Vec2 local(Vec2 world) const {
        const Vec2 r = rotate(world - translation, -rotation);
        return {r.x / (scale.x * kDistractorBaseMm), r.y / (scale.y * kDistractorBaseMm)};
    }
    bool covers(Vec2 world, double margin_mm = 0.0) const {
        const Vec2 r = rotate(world - translation, -rotation);
        return std::abs(r.x) <= 0.5 * scale.x * kDistractorBaseMm + margin_mm &&
               std::abs(r.y) <= 0.5 * scale.y * kDistractorBaseMm + margin_mm;
    }
};

struct SceneParams {
    double gamma = 1.0;
    double camera_extent_mm = 120.0; // world width framed at gamma = 1
    int width = 512;
    int height = 512;
    Pose leaf_pose{};
    std::vector<DistractorSpec> distractors;
    Vec3 light_dir{0.0, 0.0, 1.0};
    double ambient = 0.45;
    Color fragment_color{0.98, 0.98, 0.97};

    double mm_per_pixel() const { return gamma * camera_extent_mm / width; }
    Vec2 world_extent() const { return {width * mm_per_pixel(), height * mm_per_pixel()}; }
    Vec2 pixel_centre(int x, int y) const { return Vec2{x + 0.5, y + 0.5} * mm_per_pixel(); }

    void validate() const {
        require(gamma > 0.0 && camera_extent_mm > 0.0, "gamma and camera extent must be positive");
        require(width > 0 && height > 0, "scene resolution must be positive");
        require(ambient >= 0.0 && ambient <= 1.0 && std::abs(norm(light_dir) - 1.0) < 1e-6,
                "lighting must have unit direction and ambient in [0, 1]");
    }
};

struct RenderedDatapoint {
    RasterImage image;
    BinaryMask mask;
    SceneParams scene;
    ShadowParams shadow;
    int pass_index = 0;
};

// Per-pass sampling ranges.
struct PassSampling {
    double shadow_strength_min = 0.15, shadow_strength_max = 0.55;
    double shadow_offset_max_mm = 2.5;
    double shadow_size_min_mm = 0.4, shadow_size_max_mm = 2.5;
    double light_elevation_min_deg = 45.0, light_elevation_max_deg = 85.0;
    double ambient_min = 0.35, ambient_max = 0.6;
};

namespace detail {

// Leaf surface resampled into the frame for one scene pose.
struct ProjectedLeaf {
    FloatImage centre_alpha; // alpha at pixel centres (mask source)
    FloatImage alpha;        // 2x2 box-filtered alpha, snapped to the mask ring
    BinaryMask mask;
    int x0 = 0, y0 = 0, x1 = -1, y1 = -1; // pixel bbox of nonzero alpha
};

inline Vec2 texel_of(const LeafSurface& leaf, const SceneParams& scene, Vec2 world) {
    return leaf.frame.to_pixel(scene.leaf_pose.inverse(world));
}

inline void check_placement(const LeafSurface& leaf, const SceneParams& scene) {
    const GridFrame& f = leaf.frame;
    const Vec2 ext = scene.world_extent();
    const std::array<Vec2, 4> corners{f.to_units({0, 0}), f.to_units({double(f.width), 0}),
                                      f.to_units({0, double(f.height)}),
                                      f.to_units({double(f.width), double(f.height)})};
    for (const Vec2 c : corners) {
        const Vec2 w = scene.leaf_pose.apply(c);
        if (w.x < 0.0 || w.y < 0.0 || w.x > ext.x || w.y > ext.y)
            throw PlacementError("leaf does not fit inside the framed region at this pose");
    }
}

inline ProjectedLeaf project_leaf(const LeafSurface& leaf, const SceneParams& scene) {
    scene.validate();
    check_placement(leaf, scene);
    ProjectedLeaf pl;
    pl.centre_alpha = FloatImage(scene.width, scene.height, 0.0f);
    pl.alpha = FloatImage(scene.width, scene.height, 0.0f);
    pl.mask = BinaryMask(scene.width, scene.height, 0);

    // pixel bbox of the texture frame
    const GridFrame& f = leaf.frame;
    Rect box = Rect::empty();
    for (Vec2 c : {Vec2{0, 0}, Vec2{double(f.width), 0}, Vec2{0, double(f.height)}, Vec2{double(f.width), double(f.height)}})
        box.expand(scene.leaf_pose.apply(f.to_units(c)) * (1.0 / scene.mm_per_pixel()));
    const int bx0 = std::max(0, static_cast<int>(std::floor(box.min.x)) - 1);
    const int by0 = std::max(0, static_cast<int>(std::floor(box.min.y)) - 1);
    const int bx1 = std::min(scene.width - 1, static_cast<int>(std::ceil(box.max.x)) + 1);
    const int by1 = std::min(scene.height - 1, static_cast<int>(std::ceil(box.max.y)) + 1);

    const double mpp = scene.mm_per_pixel();
    FloatImage box_alpha(scene.width, scene.height, 0.0f);
    for (int y = by0; y <= by1; ++y)
        for (int x = bx0; x <= bx1; ++x) {
            const Vec2 tc = texel_of(leaf, scene, scene.pixel_centre(x, y));
            const float a = sample_bilinear_zero(leaf.alpha, tc.x, tc.y);
            pl.centre_alpha(x, y) = a;
            pl.mask(x, y) = a >= 0.5f ? 1 : 0;
            double acc = 0.0;
            for (int sy = 0; sy < 2; ++sy)
                for (int sx = 0; sx < 2; ++sx) {
                    const Vec2 w{(x + 0.25 + 0.5 * sx) * mpp, (y + 0.25 + 0.5 * sy) * mpp};
                    const Vec2 t = texel_of(leaf, scene, w);
                    acc += sample_bilinear_zero(leaf.alpha, t.x, t.y);
                }
            box_alpha(x, y) = static_cast<float>(0.25 * acc);
        }
    // leaf colour may only appear on mask pixels and their 8-neighbours
    const BinaryMask ring = dilate(pl.mask);
    for (int y = by0; y <= by1; ++y)
        for (int x = bx0; x <= bx1; ++x) {
            const float a = ring(x, y) ? box_alpha(x, y) : 0.0f;
            pl.alpha(x, y) = a;
            if (a > 0.0f) {
                if (pl.x1 < pl.x0) { pl.x0 = pl.x1 = x; pl.y0 = pl.y1 = y; }
                pl.x0 = std::min(pl.x0, x); pl.x1 = std::max(pl.x1, x);
                pl.y0 = std::min(pl.y0, y); pl.y1 = std::max(pl.y1, y);
            }
        }
    return pl;
}

inline Color sample_rgb_bilinear(const RasterImage& img, double x, double y) {
    const double fx = x - 0.5, fy = y - 0.5;
    const int x0 = static_cast<int>(std::floor(fx)), y0 = static_cast<int>(std::floor(fy));
    const double tx = fx - x0, ty = fy - y0;
    const Color c00 = to_color(img.clamped(x0, y0)), c10 = to_color(img.clamped(x0 + 1, y0));
    const Color c01 = to_color(img.clamped(x0, y0 + 1)), c11 = to_color(img.clamped(x0 + 1, y0 + 1));
    return lerp(lerp(c00, c10, tx), lerp(c01, c11, tx), ty);
}

inline Color sample_paper(const PaperSheet& paper, Vec2 world_mm) {
    const Vec2 px = world_mm * paper.pixels_per_mm;
    return sample_rgb_bilinear(paper.image, px.x, px.y);
}

inline Color apply_distractor(Color bg, const DistractorSpec& d, Vec2 world, const SceneParams& scene) {
    if (!d.covers(world)) return bg;
    const double a = std::clamp(d.opacity, 0.0, 1.0);
    if (d.kind == DistractorKind::paper_fragment) {
        // fragment texture: plain sheet with faint fibre noise
        const Vec2 l = d.local(world);
        const double fibre = 0.03 * (value_noise(l * 40.0, NoiseSeed{0xF1B4Eull}) - 0.5);
        return lerp(bg, scene.fragment_color * (1.0 + fibre), a);
    }
    // glass: uniform brightening plus a highlight along the edges
    const Vec2 r = rotate(world - d.translation, -d.rotation);
    const double hx = 0.5 * d.scale.x * kDistractorBaseMm, hy = 0.5 * d.scale.y * kDistractorBaseMm;
    const double edge = std::min(hx - std::abs(r.x), hy - std::abs(r.y));
    const double highlight = edge < 0.6 ? 0.5 : 0.0;
    const double lift = a * (0.22 + highlight);
    return bg + (Color{1, 1, 1} - bg) * std::min(lift, 1.0);
}

} // namespace detail

// Background layer: scaled paper, distractors and the leaf's drop shadow.
inline ColorImage compose_background(const PaperSheet& paper, const SceneParams& scene, const ShadowParams& shadow,
                                     const detail::ProjectedLeaf* leaf_alpha, const LeafSurface* leaf) {
    shadow.validate();
    ColorImage bg(scene.width, scene.height);
    for (int y = 0; y < scene.height; ++y)
        for (int x = 0; x < scene.width; ++x) {
            const Vec2 w = scene.pixel_centre(x, y);
            Color c = detail::sample_paper(paper, w);
            for (const auto& d : scene.distractors) c = detail::apply_distractor(c, d, w, scene);
            bg(x, y) = c;
        }
    if (shadow.strength > 0.0 && leaf_alpha && leaf && leaf_alpha->x1 >= leaf_alpha->x0) {
        const double mpp = scene.mm_per_pixel();
        const double sigma_px = shadow.size_mm / mpp;
        const int pad = static_cast<int>(std::ceil(3.0 * sigma_px + norm(shadow.offset_mm) / mpp)) + 2;
        const int x0 = std::max(0, leaf_alpha->x0 - pad), x1 = std::min(scene.width - 1, leaf_alpha->x1 + pad);
        const int y0 = std::max(0, leaf_alpha->y0 - pad), y1 = std::min(scene.height - 1, leaf_alpha->y1 + pad);
        FloatImage sh(x1 - x0 + 1, y1 - y0 + 1, 0.0f);
        for (int y = y0; y <= y1; ++y)
            for (int x = x0; x <= x1; ++x) {
                const Vec2 tc = detail::texel_of(*leaf, scene, scene.pixel_centre(x, y) - shadow.offset_mm);
                sh(x - x0, y - y0) = sample_bilinear_zero(leaf->alpha, tc.x, tc.y);
            }
        if (sigma_px > 0.0) sh = gaussian_blur(sh, sigma_px);
        for (int y = y0; y <= y1; ++y)
            for (int x = x0; x <= x1; ++x) bg(x, y) = bg(x, y) * (1.0 - shadow.strength * sh(x - x0, y - y0));
    }
    return bg;
}

namespace detail {

inline RasterImage composite_leaf(const ColorImage& background, const LeafSurface& leaf, const SceneParams& scene,
                                  const ProjectedLeaf& pl) {
    ColorImage out = background;
    for (int y = pl.y0; y <= pl.y1; ++y)
        for (int x = pl.x0; x <= pl.x1; ++x) {
            const float a = pl.alpha(x, y);
            if (a <= 0.0f) continue;
            const Vec2 tc = texel_of(leaf, scene, scene.pixel_centre(x, y));
            const Color albedo = sample_rgb_bilinear(leaf.albedo, tc.x, tc.y);
            const Vec3 n_local = normalized(sample_bilinear(leaf.normals, tc.x, tc.y));
            // normals live in leaf-local axes; rotate them into the scene
            const Vec2 nxy = rotate({n_local.x, n_local.y}, scene.leaf_pose.rotation);
            const Vec3 n{nxy.x, nxy.y, n_local.z};
            const Color lit = albedo * lambert(n, scene.light_dir, scene.ambient);
            out(x, y) = lerp(out(x, y), lit, a);
        }
    return to_raster(out);
}

} // namespace detail

// Orthographic top-down composite: paper scaled by gamma, distractors, drop
// shadow shaped by the leaf alpha, then the shaded leaf.
inline RasterImage compose_scene(const LeafSurface& leaf, const PaperSheet& paper, const SceneParams& scene,
                                 const ShadowParams& shadow) {
    const auto pl = detail::project_leaf(leaf, scene);
    const ColorImage bg = compose_background(paper, scene, shadow, &pl, &leaf);
    return detail::composite_leaf(bg, leaf, scene, pl);
}

// Mask pass: foreground iff the leaf alpha at the pixel centre is >= 0.5.
// Shadows and distractors never enter this pass.
inline BinaryMask render_mask(const LeafSurface& leaf, const SceneParams& scene) {
    auto pl = detail::project_leaf(leaf, scene);
    if (count_foreground(pl.mask) == 0) throw GenerationError("mask pass produced an empty mask");
    return std::move(pl.mask);
}

// Samples one pass's shadow and lighting.
inline std::pair<ShadowParams, SceneParams> sample_pass(const SceneParams& base, NoiseSeed seed, int pass_index,
                                                        const PassSampling& ranges = {}) {
    RandomStream rng(seed.child("pass", static_cast<std::uint64_t>(pass_index)));
    ShadowParams sh;
    sh.strength = rng.uniform(ranges.shadow_strength_min, ranges.shadow_strength_max);
    const double r = ranges.shadow_offset_max_mm * std::sqrt(rng.uniform());
    sh.offset_mm = direction(rng.uniform(0.0, 2.0 * pi)) * r;
    sh.size_mm = rng.uniform(ranges.shadow_size_min_mm, ranges.shadow_size_max_mm);
    SceneParams s = base;
    const double elev = rng.uniform(ranges.light_elevation_min_deg, ranges.light_elevation_max_deg) * pi / 180.0;
    const double azim = rng.uniform(0.0, 2.0 * pi);
    s.light_dir = normalized({std::cos(elev) * std::cos(azim), std::cos(elev) * std::sin(azim), std::sin(elev)});
    s.ambient = rng.uniform(ranges.ambient_min, ranges.ambient_max);
    return {sh, s};
}

inline constexpr int kPassesPerLeaf = 4;

// Four appearance passes sharing pose, gamma and one mask.
inline std::vector<RenderedDatapoint> render_passes(const LeafSurface& leaf, const PaperSheet& paper,
                                                    const SceneParams& scene, NoiseSeed seed,
                                                    const PassSampling& ranges = {}, int passes = kPassesPerLeaf) {
    const auto pl = detail::project_leaf(leaf, scene);
    if (count_foreground(pl.mask) == 0) throw GenerationError("mask pass produced an empty mask");
    std::vector<RenderedDatapoint> out;
    out.reserve(passes);
    for (int k = 0; k < passes; ++k) {
        auto [shadow, pass_scene] = sample_pass(scene, seed, k, ranges);
        const ColorImage bg = compose_background(paper, pass_scene, shadow, &pl, &leaf);
        RenderedDatapoint dp;
        dp.image = detail::composite_leaf(bg, leaf, pass_scene, pl);
        dp.mask = pl.mask;
        dp.scene = pass_scene;
        dp.shadow = shadow;
        dp.pass_index = k;
        out.push_back(std::move(dp));
    }
    return out;
}

// Random distractors that keep clear of the (dilated) leaf mask.
inline std::vector<DistractorSpec> place_distractors(const BinaryMask& mask, const SceneParams& scene, int count,
                                                     NoiseSeed seed, double clearance_mm = 1.5,
                                                     int attempts_per_item = 40) {
    std::vector<DistractorSpec> out;
    RandomStream rng(seed, "distractors");
    const Vec2 ext = scene.world_extent();
    const double mpp = scene.mm_per_pixel();
    std::vector<Vec2> fg;
    for (int y = 0; y < mask.height(); ++y)
        for (int x = 0; x < mask.width(); ++x)
            if (mask(x, y)) fg.push_back(scene.pixel_centre(x, y));
    for (int i = 0; i < count; ++i) {
        for (int attempt = 0; attempt < attempts_per_item; ++attempt) {
            DistractorSpec d;
            d.kind = rng.bernoulli(0.5) ? DistractorKind::paper_fragment : DistractorKind::glass_pane;
            d.translation = {rng.uniform(0.0, ext.x), rng.uniform(0.0, ext.y)};
            d.rotation = rng.uniform(0.0, pi);
            d.scale = {rng.uniform(0.4, 1.6), rng.uniform(0.3, 1.2)};
            d.opacity = d.kind == DistractorKind::paper_fragment ? rng.uniform(0.7, 1.0) : rng.uniform(0.3, 0.6);
            const double margin = clearance_mm + mpp;
            bool clear = true;
            for (const Vec2 p : fg)
                if (d.covers(p, margin)) {
                    clear = false;
                    break;
                }
            if (clear) {
                out.push_back(d);
                break;
            }
        }
    }
    return out;
}

} // namespace leafsynth
