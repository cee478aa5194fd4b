#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "leafsynth/image.hpp"
#include "leafsynth/noise.hpp"

namespace leafsynth {

struct VenationParams {
    int branch_levels = 3;
    int branches_per_level = 2;
    int midrib_stations = 7;   // spawning stations along the midrib
    double branch_angle_deg = 50.0;
    double angle_jitter_deg = 6.0;
    double step_sigma = 0.08;  // lateral Brownian jitter per step
    double step_length = 0.5;  // turtle step, skeleton units
    double base_thickness = 1.2;
    double thickness_decay = 0.55;
    double branch_length_ratio = 0.45; // child length relative to parent
    double curve_strength = 0.0; // per-step blend of heading toward the parent direction

    void validate() const {
        require(branch_levels >= 1 && branches_per_level >= 1 && midrib_stations >= 1, "venation counts must be >= 1");
        require(branch_angle_deg > 0.0 && branch_angle_deg < 90.0, "branch angle must be in (0, 90) degrees");
        require(angle_jitter_deg >= 0.0 && step_sigma >= 0.0, "venation jitter must be non-negative");
        require(step_length > 0.0 && base_thickness > 0.0, "step length and thickness must be positive");
        require(thickness_decay > 0.0 && thickness_decay <= 1.0, "thickness decay must be in (0, 1]");
        require(curve_strength >= 0.0 && curve_strength <= 1.0, "curve strength must be in [0, 1]");
    }

    double thickness(int level) const { return base_thickness * std::pow(thickness_decay, level); }
};

struct VeinSegment {
    BrownianPath path;
    double thickness = 0.0;
    int level = 0;
};

struct VeinSkeleton {
    std::vector<VeinSegment> segments;
};

// Optional containment test: turtles stop once they leave the region.
using RegionTest = std::function<bool(Vec2)>;

namespace detail {

// One turtle walk. With curve_strength = 0 the result equals brownian_path
// for the same arguments; otherwise the heading relaxes toward
// `target_heading` each step while the lateral Brownian offset accumulates.
inline BrownianPath turtle_walk(int n_steps, double sigma, Vec2 start, double heading, double target_heading,
                                double curve, double step, NoiseSeed seed, const Rect& bounds,
                                const RegionTest& inside) {
    BrownianPath path;
    if (curve == 0.0) {
        path = brownian_path(n_steps, sigma, start, heading, seed, step);
    } else {
        path.step_sigma = sigma;
        path.points.push_back(start);
        Vec2 centre = start;
        double h = heading, offset = 0.0;
        for (int k = 1; k <= n_steps; ++k) {
            h += curve * (target_heading - h);
            centre += direction(h) * step;
            offset += brownian_increment(seed, static_cast<std::uint64_t>(k - 1), sigma);
            const Vec2 fwd = direction(h);
            path.points.push_back(centre + Vec2{-fwd.y, fwd.x} * offset);
        }
    }
    // clip at the first point leaving the bounds or region
    std::size_t keep = 1;
    while (keep < path.points.size() && bounds.contains(path.points[keep]) &&
           (!inside || inside(path.points[keep])))
        ++keep;
    path.points.resize(keep);
    return path;
}

inline double path_length(const BrownianPath& p) {
    double len = 0.0;
    for (std::size_t i = 1; i < p.points.size(); ++i) len += norm(p.points[i] - p.points[i - 1]);
    return len;
}

// Point at fractional arc length along the path, plus local heading.
inline std::pair<Vec2, double> point_along(const BrownianPath& p, double fraction) {
    if (p.points.size() == 1) return {p.points[0], 0.0};
    const double target = fraction * path_length(p);
    double acc = 0.0;
    for (std::size_t i = 1; i < p.points.size(); ++i) {
        const Vec2 d = p.points[i] - p.points[i - 1];
        const double len = norm(d);
        if (acc + len >= target || i + 1 == p.points.size()) {
            const double t = len > 0.0 ? std::clamp((target - acc) / len, 0.0, 1.0) : 0.0;
            return {p.points[i - 1] + d * t, std::atan2(d.y, d.x)};
        }
        acc += len;
    }
    return {p.points.back(), 0.0};
}

} // namespace detail

// Spawning rule: the midrib (level 0) runs along the x axis through the
// bounds' vertical centre. It spawns branches_per_level children at each of
// midrib_stations stations; every vein at level l in [1, L-2] spawns
// branches_per_level children at evenly spaced stations along itself.
// Level l therefore holds midrib_stations * branches_per_level^l segments.
inline VeinSkeleton trace_veins(const VenationParams& params, const Rect& bounds, NoiseSeed seed,
                                const RegionTest& inside = {}) {
    params.validate();
    require(bounds.width() > 0.0 && bounds.height() > 0.0, "venation bounds must be non-empty");
    VeinSkeleton sk;
    RandomStream rng(seed, "venation.angles");
    const double angle = params.branch_angle_deg * pi / 180.0;
    const double jitter = params.angle_jitter_deg * pi / 180.0;

    const Vec2 start{bounds.min.x, 0.5 * (bounds.min.y + bounds.max.y)};
    const int midrib_steps = std::max(1, static_cast<int>(bounds.width() / params.step_length));
    std::uint64_t serial = 0;
    VeinSegment midrib;
    midrib.path = detail::turtle_walk(midrib_steps, params.step_sigma * 0.5, start, 0.0, 0.0, 0.0,
                                      params.step_length, seed.child("vein", serial++), bounds, {});
    midrib.thickness = params.thickness(0);
    midrib.level = 0;
    sk.segments.push_back(std::move(midrib));

    std::size_t level_begin = 0, level_end = 1;
    for (int level = 1; level < params.branch_levels; ++level) {
        for (std::size_t parent = level_begin; parent < level_end; ++parent) {
            const int stations = level == 1 ? params.midrib_stations : 1;
            const double parent_len = detail::path_length(sk.segments[parent].path);
            for (int s = 0; s < stations; ++s) {
                const double base_frac = (s + 0.5) / stations;
                for (int b = 0; b < params.branches_per_level; ++b) {
                    double frac = base_frac;
                    if (stations == 1) frac = (b + 0.5) / params.branches_per_level;
                    frac = std::clamp(frac + rng.uniform(-0.15, 0.15) / stations, 0.02, 0.98);
                    const auto [origin, parent_heading] = detail::point_along(sk.segments[parent].path, frac);
                    const double side = ((s + b) % 2 == 0) ? 1.0 : -1.0;
                    const double heading = parent_heading + side * (angle + jitter * rng.uniform(-1.0, 1.0));
                    const double reach =
                        level == 1 ? 0.5 * bounds.height() / std::sin(angle) * 1.1
                                   : parent_len * params.branch_length_ratio;
                    const int steps = std::max(1, static_cast<int>(reach / params.step_length));
                    VeinSegment seg;
                    seg.path = detail::turtle_walk(steps, params.step_sigma, origin, heading, parent_heading,
                                                   params.curve_strength, params.step_length,
                                                   seed.child("vein", serial++), bounds, inside);
                    seg.thickness = params.thickness(level);
                    seg.level = level;
                    sk.segments.push_back(std::move(seg));
                }
            }
        }
        level_begin = level_end;
        level_end = sk.segments.size();
    }
    return sk;
}

// Expected segment count of the spawning rule.
inline std::size_t expected_segment_count(const VenationParams& p) {
    std::size_t total = 1, per_level = static_cast<std::size_t>(p.midrib_stations);
    for (int l = 1; l < p.branch_levels; ++l) {
        per_level *= static_cast<std::size_t>(p.branches_per_level);
        total += per_level;
    }
    return total;
}

// Mapping between skeleton coordinates and a pixel grid.
struct GridFrame {
    Vec2 origin{};              // skeleton coordinates of pixel (0, 0)'s corner
    double units_per_pixel = 1.0;
    int width = 0;
    int height = 0;

    Vec2 to_pixel(Vec2 p) const { return (p - origin) * (1.0 / units_per_pixel); }
    Vec2 to_units(Vec2 px) const { return origin + px * units_per_pixel; }
};

struct HeightMap {
    FloatImage grid;
    GridFrame frame;
};

// Each segment is stamped as an anti-aliased domed capsule of its
// thickness; overlapping stamps combine by max.
inline HeightMap rasterize_height(const VeinSkeleton& skeleton, const GridFrame& frame) {
    require(frame.width > 0 && frame.height > 0 && frame.units_per_pixel > 0.0, "height map resolution must be positive");
    HeightMap hm{FloatImage(frame.width, frame.height, 0.0f), frame};
    for (const auto& seg : skeleton.segments) {
        const double r = 0.5 * seg.thickness / frame.units_per_pixel; // pixels
        const double reach = r + 0.5;
        const auto& pts = seg.path.points;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            const Vec2 a = frame.to_pixel(pts[i]);
            const Vec2 b = frame.to_pixel(pts[i + 1 < pts.size() ? i + 1 : i]);
            const int x0 = std::max(0, static_cast<int>(std::floor(std::min(a.x, b.x) - reach)));
            const int x1 = std::min(frame.width - 1, static_cast<int>(std::ceil(std::max(a.x, b.x) + reach)));
            const int y0 = std::max(0, static_cast<int>(std::floor(std::min(a.y, b.y) - reach)));
            const int y1 = std::min(frame.height - 1, static_cast<int>(std::ceil(std::max(a.y, b.y) + reach)));
            for (int y = y0; y <= y1; ++y)
                for (int x = x0; x <= x1; ++x) {
                    const double d = distance_to_segment({x + 0.5, y + 0.5}, a, b);
                    if (d >= reach) continue;
                    const double coverage = std::clamp(reach - d, 0.0, 1.0);
                    const double dome = std::sqrt(std::max(0.0, 1.0 - (d * d) / (reach * reach)));
                    const auto v = static_cast<float>(std::clamp(coverage * dome, 0.0, 1.0));
                    hm.grid(x, y) = std::max(hm.grid(x, y), v);
                }
        }
    }
    return hm;
}

// Pixel-unit convenience: skeleton coordinates are pixels.
inline HeightMap rasterize_height(const VeinSkeleton& skeleton, int width, int height) {
    return rasterize_height(skeleton, GridFrame{{0.0, 0.0}, 1.0, width, height});
}

// n ~ (-z_scale * dh/dx, -z_scale * dh/dy, 1); central differences in the
// interior, one-sided at the borders. Derivatives are per pixel.
inline NormalMap height_to_normals(const FloatImage& h, double z_scale) {
    require(z_scale > 0.0, "normal z scale must be positive");
    NormalMap n(h.width(), h.height());
    for (int y = 0; y < h.height(); ++y)
        for (int x = 0; x < h.width(); ++x) {
            const int xl = std::max(0, x - 1), xr = std::min(h.width() - 1, x + 1);
            const int yu = std::max(0, y - 1), yd = std::min(h.height() - 1, y + 1);
            const double dx = xr > xl ? (static_cast<double>(h(xr, y)) - h(xl, y)) / (xr - xl) : 0.0;
            const double dy = yd > yu ? (static_cast<double>(h(x, yd)) - h(x, yu)) / (yd - yu) : 0.0;
            n(x, y) = normalized({-z_scale * dx, -z_scale * dy, 1.0});
        }
    return n;
}

} // namespace leafsynth
