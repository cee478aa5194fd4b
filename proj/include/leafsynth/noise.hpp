#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "leafsynth/error.hpp"
#include "leafsynth/geometry.hpp"
#include "leafsynth/rng.hpp"

namespace leafsynth {

struct NoiseBlendWeights {
    double gradient = 0.0;
    double voronoi = 0.0;
    double value = 0.0;

    bool valid() const {
        return std::isfinite(gradient) && std::isfinite(voronoi) && std::isfinite(value) &&
               gradient >= 0.0 && voronoi >= 0.0 && value >= 0.0;
    }
    NoiseBlendWeights operator+(const NoiseBlendWeights& o) const {
        return {gradient + o.gradient, voronoi + o.voronoi, value + o.value};
    }
};

struct BrownianPath {
    std::vector<Vec2> points;
    double step_sigma = 0.0;
};

namespace detail {

inline constexpr std::uint64_t kGradientTag = tag_hash("noise.gradient");
inline constexpr std::uint64_t kVoronoiTag = tag_hash("noise.voronoi");
inline constexpr std::uint64_t kValueTag = tag_hash("noise.value");

inline std::uint64_t lattice_hash(NoiseSeed seed, std::uint64_t tag, std::int64_t ix, std::int64_t iy) {
    return mix(seed.value, tag, static_cast<std::uint64_t>(ix), static_cast<std::uint64_t>(iy));
}

inline double quintic_fade(double t) { return t * t * t * (t * (t * 6.0 - 15.0) + 10.0); }

inline Vec2 lattice_gradient(NoiseSeed seed, std::int64_t ix, std::int64_t iy) {
    return direction(2.0 * pi * to_unit(lattice_hash(seed, kGradientTag, ix, iy)));
}

inline void require_finite(Vec2 p) {
    if (!is_finite(p)) throw InputError("noise query point must be finite");
}

} // namespace detail

// Perlin-style lattice gradient noise with unit gradients and quintic fade.
// Zero on integer lattice points; scaled by sqrt(2) so the theoretical
// extremes of the unit-gradient construction map to [-1, 1].
inline double gradient_noise(Vec2 p, NoiseSeed seed) {
    detail::require_finite(p);
    const double fx = std::floor(p.x), fy = std::floor(p.y);
    const auto ix = static_cast<std::int64_t>(fx), iy = static_cast<std::int64_t>(fy);
    const double tx = p.x - fx, ty = p.y - fy;
    auto corner = [&](std::int64_t dx, std::int64_t dy) {
        const Vec2 g = detail::lattice_gradient(seed, ix + dx, iy + dy);
        return dot(g, Vec2{tx - static_cast<double>(dx), ty - static_cast<double>(dy)});
    };
    const double u = detail::quintic_fade(tx), v = detail::quintic_fade(ty);
    const double x0 = corner(0, 0) + u * (corner(1, 0) - corner(0, 0));
    const double x1 = corner(0, 1) + u * (corner(1, 1) - corner(0, 1));
    return std::clamp((x0 + v * (x1 - x0)) * std::numbers::sqrt2, -1.0, 1.0);
}

// Random value stored at an integer lattice point.
inline double value_lattice(std::int64_t ix, std::int64_t iy, NoiseSeed seed) {
    return to_unit(detail::lattice_hash(seed, detail::kValueTag, ix, iy));
}

// Bilinear interpolation of per-lattice uniform values.
inline double value_noise(Vec2 p, NoiseSeed seed) {
    detail::require_finite(p);
    const double fx = std::floor(p.x), fy = std::floor(p.y);
    const auto ix = static_cast<std::int64_t>(fx), iy = static_cast<std::int64_t>(fy);
    const double tx = p.x - fx, ty = p.y - fy;
    const double a = value_lattice(ix, iy, seed), b = value_lattice(ix + 1, iy, seed);
    const double c = value_lattice(ix, iy + 1, seed), d = value_lattice(ix + 1, iy + 1, seed);
    return (a + tx * (b - a)) + ty * ((c + tx * (d - c)) - (a + tx * (b - a)));
}

// Jittered-grid feature point of cell (ix, iy), in the caller's coordinates.
// `density` is the number of cells per unit length.
inline Vec2 voronoi_feature_point(std::int64_t ix, std::int64_t iy, double density, NoiseSeed seed) {
    const std::uint64_t h = detail::lattice_hash(seed, detail::kVoronoiTag, ix, iy);
    const double jx = to_unit(h), jy = to_unit(splitmix64(h));
    return {(static_cast<double>(ix) + jx) / density, (static_cast<double>(iy) + jy) / density};
}

// Distance to the nearest feature point (F1), in cell units divided by the
// cell diagonal. The own cell always holds a point within one diagonal, so
// the result lies in [0, 1]; a 5x5 neighborhood makes the search exact.
inline double voronoi_noise(Vec2 p, double density, NoiseSeed seed) {
    detail::require_finite(p);
    if (!(density > 0.0) || !std::isfinite(density)) throw InputError("voronoi density must be positive");
    const Vec2 q = p * density;
    const auto cx = static_cast<std::int64_t>(std::floor(q.x));
    const auto cy = static_cast<std::int64_t>(std::floor(q.y));
    double best = std::numeric_limits<double>::infinity();
    for (std::int64_t dy = -2; dy <= 2; ++dy)
        for (std::int64_t dx = -2; dx <= 2; ++dx) {
            const Vec2 f = voronoi_feature_point(cx + dx, cy + dy, density, seed) * density;
            const Vec2 d = f - q;
            best = std::min(best, dot(d, d));
        }
    return std::min(std::sqrt(best) / std::numbers::sqrt2, 1.0);
}

// Weighted sum of the three noise layers; the Voronoi layer uses unit cells.
inline double blend_noise(Vec2 p, const NoiseBlendWeights& w, NoiseSeed seed) {
    if (!w.valid()) throw InputError("noise blend weights must be finite and non-negative");
    return w.gradient * gradient_noise(p, seed) + w.voronoi * voronoi_noise(p, 1.0, seed) +
           w.value * value_noise(p, seed);
}

// Lateral offset increments of a Brownian walk; draw k belongs to step k+1.
inline double brownian_increment(NoiseSeed seed, std::uint64_t step, double step_sigma) {
    if (step_sigma == 0.0) return 0.0;
    const std::uint64_t h = mix(seed.value, tag_hash("noise.brownian"), step);
    const double u1 = 1.0 - to_unit(h);
    const double u2 = to_unit(splitmix64(h));
    return step_sigma * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * pi * u2);
}

// Walks n_steps unit-length steps along `heading` from `start`, with the
// perpendicular offset following a Gaussian random walk.
inline BrownianPath brownian_path(int n_steps, double step_sigma, Vec2 start, double heading, NoiseSeed seed,
                                  double step_length = 1.0) {
    if (n_steps < 0) throw InputError("brownian path needs n_steps >= 0");
    if (!(step_sigma >= 0.0)) throw InputError("brownian step sigma must be non-negative");
    BrownianPath path;
    path.step_sigma = step_sigma;
    path.points.reserve(static_cast<std::size_t>(n_steps) + 1);
    path.points.push_back(start);
    const Vec2 forward = direction(heading);
    const Vec2 lateral{-forward.y, forward.x};
    double offset = 0.0;
    for (int k = 1; k <= n_steps; ++k) {
        offset += brownian_increment(seed, static_cast<std::uint64_t>(k - 1), step_sigma);
        path.points.push_back(start + forward * (step_length * k) + lateral * offset);
    }
    return path;
}

} // namespace leafsynth
