#pragma once

#include <bit>
#include <cmath>
#include <vector>

#include "leafsynth/image.hpp"
#include "leafsynth/leaf_shape.hpp"
#include "leafsynth/noise.hpp"
#include "leafsynth/venation.hpp"

namespace leafsynth {

struct LeafTextureParams {
    Color color_a{0.36, 0.52, 0.16};
    Color color_b{0.55, 0.66, 0.22};
    double blend_scale = 5.0; // gradient-noise cells across the unit uv square
    Color vein_tint{0.70, 0.78, 0.42};
    double vein_opacity = 0.55;
    double hole_density = 0.0;  // per cm^2
    double hole_radius_min_mm = 0.6;
    double hole_radius_max_mm = 1.8;
    double spot_density = 0.0;  // per cm^2
    double spot_radius_min_mm = 0.4;
    double spot_radius_max_mm = 1.6;
    Color spot_tint{0.45, 0.33, 0.14};
    double edge_erosion_mm = 0.0;
    double normal_strength = 2.0; // height-to-normal z scale
    double grain = 0.06;          // fine luminance variation
    NoiseSeed seed{};

    void validate() const {
        require(vein_opacity >= 0.0 && vein_opacity <= 1.0, "vein opacity must be in [0, 1]");
        require(hole_density >= 0.0 && spot_density >= 0.0, "hole/spot densities must be non-negative");
        require(hole_radius_min_mm > 0.0 && hole_radius_min_mm <= hole_radius_max_mm, "hole radius range invalid");
        require(spot_radius_min_mm > 0.0 && spot_radius_min_mm <= spot_radius_max_mm, "spot radius range invalid");
        require(blend_scale > 0.0 && edge_erosion_mm >= 0.0 && normal_strength > 0.0, "invalid texture scales");
    }
};

// Species palettes: beech lighter yellow-greens, oak darker greens with
// browner spots.
inline LeafTextureParams texture_preset(Species species) {
    LeafTextureParams p;
    if (species == Species::beech) {
        p.color_a = {0.44, 0.58, 0.17};
        p.color_b = {0.63, 0.71, 0.27};
        p.vein_tint = {0.76, 0.82, 0.45};
        p.spot_tint = {0.55, 0.45, 0.18};
    } else {
        p.color_a = {0.20, 0.36, 0.11};
        p.color_b = {0.33, 0.47, 0.15};
        p.vein_tint = {0.55, 0.64, 0.30};
        p.spot_tint = {0.42, 0.27, 0.10};
    }
    return p;
}

struct Disk {
    Vec2 centre{};
    double radius = 0.0;
};

// Leaf appearance in leaf-local texture space; `frame` maps mm to texels.
struct LeafSurface {
    RasterImage albedo;
    FloatImage alpha;
    NormalMap normals;
    GridFrame frame;
};

inline Color blend_base_factor(double g, const LeafTextureParams& p) { return lerp(p.color_a, p.color_b, g); }

// Blend weight from gradient noise remapped to [0, 1].
inline double base_blend_weight(Vec2 uv, const LeafTextureParams& p) {
    return std::clamp(0.5 + 0.5 * gradient_noise(uv * p.blend_scale, p.seed.child("texture.blend")), 0.0, 1.0);
}

inline Color blend_base(Vec2 uv, const LeafTextureParams& p) {
    require(uv.x >= 0.0 && uv.x <= 1.0 && uv.y >= 0.0 && uv.y <= 1.0, "blend_base uv must lie in the unit square");
    return blend_base_factor(base_blend_weight(uv, p), p);
}

namespace detail {

// Homogeneous Poisson disks restricted to a polygon: count over the bounding
// box is Poisson, thinning by containment keeps the Poisson law over the
// polygon with mean density * area.
inline std::vector<Disk> poisson_disks(const std::vector<Vec2>& region, double density_per_cm2, double rmin,
                                       double rmax, NoiseSeed seed, std::string_view tag) {
    std::vector<Disk> out;
    if (density_per_cm2 <= 0.0 || region.size() < 3) return out;
    Rect box = Rect::empty();
    for (auto p : region) box.expand(p);
    RandomStream rng(seed, tag);
    const double mean = density_per_cm2 * box.width() * box.height() / 100.0;
    const auto n = rng.poisson(mean);
    for (std::int64_t i = 0; i < n; ++i) {
        const Vec2 c{rng.uniform(box.min.x, box.max.x), rng.uniform(box.min.y, box.max.y)};
        const double r = rng.uniform(rmin, rmax);
        if (point_in_polygon(c, region)) out.push_back({c, r});
    }
    return out;
}

inline bool triangle_touches_disk(Vec3 a3, Vec3 b3, Vec3 c3, const Disk& d) {
    const Vec2 a{a3.x, a3.y}, b{b3.x, b3.y}, c{c3.x, c3.y};
    if (distance_to_segment(d.centre, a, b) < d.radius || distance_to_segment(d.centre, b, c) < d.radius ||
        distance_to_segment(d.centre, c, a) < d.radius)
        return true;
    const double s1 = cross(b - a, d.centre - a), s2 = cross(c - b, d.centre - b), s3 = cross(a - c, d.centre - c);
    return (s1 >= 0 && s2 >= 0 && s3 >= 0) || (s1 <= 0 && s2 <= 0 && s3 <= 0);
}

} // namespace detail

// Sampled hole disks for a blade outline polygon.
inline std::vector<Disk> sample_holes(const std::vector<Vec2>& blade, const LeafTextureParams& p) {
    return detail::poisson_disks(blade, p.hole_density, p.hole_radius_min_mm, p.hole_radius_max_mm, p.seed,
                                 "texture.holes");
}

inline std::vector<Disk> sample_spots(const std::vector<Vec2>& blade, const LeafTextureParams& p) {
    return detail::poisson_disks(blade, p.spot_density, p.spot_radius_min_mm, p.spot_radius_max_mm, p.seed,
                                 "texture.spots");
}

// Removes every blade triangle that touches a hole disk, so the carved mesh
// (and therefore the area label) and the rendered alpha agree.
inline LeafMesh punch_holes(const LeafMesh& mesh, const std::vector<Disk>& holes) {
    if (holes.empty()) return mesh;
    LeafMesh out;
    out.vertices = mesh.vertices;
    out.species = mesh.species;
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        bool hit = false;
        if (mesh.tags[t] == TriangleTag::blade)
            for (const auto& h : holes)
                if (detail::triangle_touches_disk(mesh.corner(t, 0), mesh.corner(t, 1), mesh.corner(t, 2), h)) {
                    hit = true;
                    break;
                }
        if (!hit) {
            out.triangles.push_back(mesh.triangles[t]);
            out.tags.push_back(mesh.tags[t]);
        }
    }
    return out;
}

// Fractional coverage of each texel by the union of the mesh's projected
// triangles, estimated on a 4x4 stratified sub-grid.
inline FloatImage rasterize_coverage(const LeafMesh& mesh, const GridFrame& frame) {
    constexpr int kSub = 4;
    std::vector<std::uint16_t> bits(static_cast<std::size_t>(frame.width) * frame.height, 0);
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        Vec2 p[3];
        for (int k = 0; k < 3; ++k) {
            const Vec3 v = mesh.corner(t, k);
            p[k] = frame.to_pixel({v.x, v.y});
        }
        if (cross(p[1] - p[0], p[2] - p[0]) < 0.0) std::swap(p[1], p[2]);
        const int x0 = std::max(0, static_cast<int>(std::floor(std::min({p[0].x, p[1].x, p[2].x}))));
        const int x1 = std::min(frame.width - 1, static_cast<int>(std::floor(std::max({p[0].x, p[1].x, p[2].x}))));
        const int y0 = std::max(0, static_cast<int>(std::floor(std::min({p[0].y, p[1].y, p[2].y}))));
        const int y1 = std::min(frame.height - 1, static_cast<int>(std::floor(std::max({p[0].y, p[1].y, p[2].y}))));
        for (int y = y0; y <= y1; ++y)
            for (int x = x0; x <= x1; ++x) {
                std::uint16_t mask = 0;
                for (int sy = 0; sy < kSub; ++sy)
                    for (int sx = 0; sx < kSub; ++sx) {
                        const Vec2 s{x + (sx + 0.5) / kSub, y + (sy + 0.5) / kSub};
                        if (cross(p[1] - p[0], s - p[0]) >= 0 && cross(p[2] - p[1], s - p[1]) >= 0 &&
                            cross(p[0] - p[2], s - p[2]) >= 0)
                            mask |= static_cast<std::uint16_t>(1u << (sy * kSub + sx));
                    }
                bits[static_cast<std::size_t>(y) * frame.width + x] |= mask;
            }
    }
    FloatImage alpha(frame.width, frame.height);
    for (std::size_t i = 0; i < bits.size(); ++i)
        alpha[i] = static_cast<float>(std::popcount(bits[i])) / (kSub * kSub);
    return alpha;
}

// Texture frame covering the mesh with a small margin at `mm_per_texel`.
inline GridFrame texture_frame_for(const LeafMesh& mesh, double mm_per_texel, double margin_mm = 1.0) {
    const Rect b = mesh_bounds(mesh);
    GridFrame f;
    f.origin = {b.min.x - margin_mm, b.min.y - margin_mm};
    f.units_per_pixel = mm_per_texel;
    f.width = static_cast<int>(std::ceil((b.width() + 2 * margin_mm) / mm_per_texel));
    f.height = static_cast<int>(std::ceil((b.height() + 2 * margin_mm) / mm_per_texel));
    return f;
}

// Albedo from the base blend, vein tint, spots and grain; alpha from the
// (already carved) mesh; normals from the vein height map.
inline LeafSurface compose_surface(const LeafMesh& mesh, const HeightMap& height, const LeafTextureParams& params,
                                   const std::vector<Disk>& spots = {}) {
    params.validate();
    const GridFrame& f = height.frame;
    if (f.width <= 0 || f.height <= 0 || height.grid.width() != f.width || height.grid.height() != f.height)
        throw InputError("height map resolution is inconsistent with its frame");
    const Rect b = mesh_bounds(mesh);
    const Vec2 lo = f.to_pixel(b.min), hi = f.to_pixel(b.max);
    if (lo.x < -1e-9 || lo.y < -1e-9 || hi.x > f.width + 1e-9 || hi.y > f.height + 1e-9)
        throw InputError("mesh extends beyond the texture frame");

    LeafSurface s;
    s.frame = f;
    s.alpha = rasterize_coverage(mesh, f);
    s.normals = height_to_normals(height.grid, params.normal_strength);

    const double bw = std::max(b.width(), 1e-9), bh = std::max(b.height(), 1e-9);
    const NoiseSeed grain_seed = params.seed.child("texture.grain");
    ColorImage albedo(f.width, f.height);
    for (int y = 0; y < f.height; ++y)
        for (int x = 0; x < f.width; ++x) {
            const Vec2 p = f.to_units({x + 0.5, y + 0.5});
            const Vec2 uv{std::clamp((p.x - b.min.x) / bw, 0.0, 1.0), std::clamp((p.y - b.min.y) / bh, 0.0, 1.0)};
            Color c = blend_base(uv, params);
            if (params.grain > 0.0) c = c * (1.0 + params.grain * gradient_noise(p * 1.7, grain_seed));
            const double h = height.grid(x, y);
            if (h > 0.0 && params.vein_opacity > 0.0) c = lerp(c, params.vein_tint, params.vein_opacity * h);
            albedo(x, y) = c;
        }
    for (const auto& spot : spots) {
        const Vec2 c = f.to_pixel(spot.centre);
        const double r = spot.radius / f.units_per_pixel;
        for (int y = std::max(0, static_cast<int>(c.y - r - 1)); y <= std::min(f.height - 1, static_cast<int>(c.y + r + 1)); ++y)
            for (int x = std::max(0, static_cast<int>(c.x - r - 1)); x <= std::min(f.width - 1, static_cast<int>(c.x + r + 1)); ++x) {
                const double d = norm(Vec2{x + 0.5, y + 0.5} - c) / r;
                if (d >= 1.0) continue;
                const double w = 0.85 * (1.0 - d * d);
                albedo(x, y) = lerp(albedo(x, y), params.spot_tint, w);
            }
    }
    s.albedo = to_raster(albedo);
    return s;
}

// Lambertian factor for one normal.
inline double lambert(Vec3 n, Vec3 light_dir, double ambient) {
    return ambient + (1.0 - ambient) * std::max(0.0, dot(n, light_dir));
}

inline RasterImage shade(const LeafSurface& surface, Vec3 light_dir, double ambient) {
    require(std::abs(norm(light_dir) - 1.0) < 1e-6, "light direction must be a unit vector");
    require(ambient >= 0.0 && ambient <= 1.0, "ambient must be in [0, 1]");
    RasterImage out(surface.albedo.width(), surface.albedo.height());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = to_rgb8(to_color(surface.albedo[i]) * lambert(surface.normals[i], light_dir, ambient));
    return out;
}

} // namespace leafsynth
