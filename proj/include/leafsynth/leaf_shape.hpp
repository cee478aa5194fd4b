#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "leafsynth/error.hpp"
#include "leafsynth/geometry.hpp"
#include "leafsynth/noise.hpp"
#include "leafsynth/rng.hpp"

namespace leafsynth {

enum class Species { beech, oak };

inline std::string_view to_string(Species s) { return s == Species::beech ? "beech" : "oak"; }

inline Species parse_species(std::string_view s) {
    if (s == "beech") return Species::beech;
    if (s == "oak") return Species::oak;
    throw InputError("unknown species '" + std::string(s) + "'");
}

// ---------------------------------------------------------------------------
// Outline curve: half-width of the blade as a function of the normalized
// position t along the midrib, interpolated with cubic Hermite segments.

struct OutlineControl {
    double t = 0.0;
    double half_width = 0.0; // mm
    double in_tangent = 0.0;  // d(half_width)/dt arriving at this knot
    double out_tangent = 0.0; // d(half_width)/dt leaving this knot
};

struct OutlineCurve {
    std::vector<OutlineControl> controls;
    double midrib_length_mm = 0.0;

    void validate() const {
        if (controls.size() < 2) throw InputError("outline curve needs at least two control points");
        if (!(midrib_length_mm > 0.0)) throw InputError("midrib length must be positive");
        for (std::size_t i = 0; i < controls.size(); ++i) {
            const auto& c = controls[i];
            if (!std::isfinite(c.t) || !std::isfinite(c.half_width) || !std::isfinite(c.in_tangent) ||
                !std::isfinite(c.out_tangent))
                throw InputError("outline control values must be finite");
            if (c.half_width < 0.0) throw InputError("outline half-width must be non-negative");
            if (i > 0 && !(c.t > controls[i - 1].t)) throw InputError("outline knots must be strictly increasing");
        }
        if (controls.front().t != 0.0 || controls.back().t != 1.0) throw InputError("outline knots must span [0, 1]");
        if (controls.front().half_width != 0.0 || controls.back().half_width != 0.0)
            throw InputError("outline must close at base and tip");
    }

    double half_width(double t) const {
        t = std::clamp(t, 0.0, 1.0);
        std::size_t k = 0;
        while (k + 2 < controls.size() && t > controls[k + 1].t) ++k;
        const auto& a = controls[k];
        const auto& b = controls[k + 1];
        const double h = b.t - a.t;
        const double s = (t - a.t) / h;
        const double s2 = s * s, s3 = s2 * s;
        const double h00 = 2 * s3 - 3 * s2 + 1, h10 = s3 - 2 * s2 + s;
        const double h01 = -2 * s3 + 3 * s2, h11 = s3 - s2;
        return h00 * a.half_width + h10 * h * a.out_tangent + h01 * b.half_width + h11 * h * b.in_tangent;
    }
};

// Leaf outline sampled at stations along the midrib (x from base 0 to tip L).
// Upper and lower margins are stored separately so edge irregularities can
// break the mirror symmetry.
struct LeafOutline {
    std::vector<double> x;
    std::vector<double> upper;
    std::vector<double> lower;

    std::size_t size() const { return x.size(); }
    double length() const { return x.empty() ? 0.0 : x.back() - x.front(); }

    // Closed polygon, counter-clockwise: base, lower margin to the tip,
    // upper margin back. Base and tip lie on the midrib axis (y = 0).
    std::vector<Vec2> polygon() const {
        std::vector<Vec2> poly;
        poly.reserve(2 * x.size());
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (i == 0 || i + 1 == x.size() || lower[i] > 0.0) poly.push_back({x[i], -lower[i]});
        }
        for (std::size_t i = x.size() - 1; i-- > 1;)
            if (upper[i] > 0.0) poly.push_back({x[i], upper[i]});
        return poly;
    }
};

inline double polygon_area(const std::vector<Vec2>& poly) {
    double a = 0.0;
    for (std::size_t i = 0, n = poly.size(); i < n; ++i) a += cross(poly[i], poly[(i + 1) % n]);
    return 0.5 * a;
}

inline bool point_in_polygon(Vec2 p, const std::vector<Vec2>& poly) {
    bool inside = false;
    for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
        const Vec2 a = poly[i], b = poly[j];
        if ((a.y > p.y) != (b.y > p.y) && p.x < (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x) inside = !inside;
    }
    return inside;
}

inline double distance_to_polygon(Vec2 p, const std::vector<Vec2>& poly) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0, n = poly.size(); i < n; ++i)
        best = std::min(best, distance_to_segment(p, poly[i], poly[(i + 1) % n]));
    return best;
}

namespace detail {

inline int orientation_sign(Vec2 a, Vec2 b, Vec2 c) {
    const double v = cross(b - a, c - a);
    const double scale = std::max({norm(b - a), norm(c - a), 1e-300});
    if (std::abs(v) <= 1e-14 * scale * scale) return 0;
    return v > 0 ? 1 : -1;
}

inline bool on_segment(Vec2 a, Vec2 b, Vec2 p) {
    return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= p.y &&
           p.y <= std::max(a.y, b.y);
}

inline bool segments_intersect(Vec2 p1, Vec2 p2, Vec2 q1, Vec2 q2) {
    const int d1 = orientation_sign(q1, q2, p1), d2 = orientation_sign(q1, q2, p2);
    const int d3 = orientation_sign(p1, p2, q1), d4 = orientation_sign(p1, p2, q2);
    if (d1 * d2 < 0 && d3 * d4 < 0) return true;
    if (d1 == 0 && on_segment(q1, q2, p1)) return true;
    if (d2 == 0 && on_segment(q1, q2, p2)) return true;
    if (d3 == 0 && on_segment(p1, p2, q1)) return true;
    if (d4 == 0 && on_segment(p1, p2, q2)) return true;
    return false;
}

} // namespace detail

// True when no two non-adjacent edges touch and no vertex repeats.
inline bool is_simple_polygon(const std::vector<Vec2>& poly) {
    const std::size_t n = poly.size();
    if (n < 3) return false;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            if (poly[i] == poly[j]) return false;
            const bool adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if (adjacent) continue;
            if (detail::segments_intersect(poly[i], poly[(i + 1) % n], poly[j], poly[(j + 1) % n])) return false;
        }
    return std::abs(polygon_area(poly)) > 0.0;
}

// ---------------------------------------------------------------------------
// Mesh

enum class TriangleTag : std::uint8_t { blade = 0, petiole = 1 };

struct LeafMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<std::uint32_t, 3>> triangles;
    std::vector<TriangleTag> tags; // parallel to triangles
    Species species = Species::beech;

    Vec3 corner(std::size_t tri, int k) const { return vertices[triangles[tri][k]]; }
};

inline double triangle_area_3d(Vec3 a, Vec3 b, Vec3 c) { return 0.5 * norm(cross(b - a, c - a)); }
inline double triangle_area_2d(Vec3 a, Vec3 b, Vec3 c) {
    return 0.5 * cross(Vec2{b.x - a.x, b.y - a.y}, Vec2{c.x - a.x, c.y - a.y});
}

inline constexpr double kMinTriangleArea = 1e-12;

inline void validate_mesh(const LeafMesh& mesh) {
    if (mesh.tags.size() != mesh.triangles.size()) throw InputError("mesh tag count mismatch");
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        for (auto idx : mesh.triangles[t])
            if (idx >= mesh.vertices.size()) throw InputError("mesh triangle index out of range");
        if (triangle_area_3d(mesh.corner(t, 0), mesh.corner(t, 1), mesh.corner(t, 2)) <= kMinTriangleArea)
            throw InputError("mesh contains a degenerate triangle");
        if (!(triangle_area_2d(mesh.corner(t, 0), mesh.corner(t, 1), mesh.corner(t, 2)) > 0.0))
            throw InputError("mesh triangle is not counter-clockwise in projection");
    }
}

// Sum of 3D triangle areas over the blade (petiole triangles excluded).
inline double surface_area(const LeafMesh& mesh) {
    double sum = 0.0;
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t)
        if (mesh.tags[t] == TriangleTag::blade) sum += triangle_area_3d(mesh.corner(t, 0), mesh.corner(t, 1), mesh.corner(t, 2));
    return sum;
}

namespace detail {
inline double projected_sum(const LeafMesh& mesh, bool include_petiole) {
    double sum = 0.0;
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t)
        if (include_petiole || mesh.tags[t] == TriangleTag::blade)
            sum += triangle_area_2d(mesh.corner(t, 0), mesh.corner(t, 1), mesh.corner(t, 2));
    return std::abs(sum);
}
} // namespace detail

// Area of the blade's projection onto the paper plane.
inline double projected_area(const LeafMesh& mesh) { return detail::projected_sum(mesh, false); }

// Projected area of everything the mask pass draws (blade and petiole).
inline double footprint_area(const LeafMesh& mesh) { return detail::projected_sum(mesh, true); }

inline Rect mesh_bounds(const LeafMesh& mesh) {
    Rect r = Rect::empty();
    for (const auto& v : mesh.vertices) r.expand({v.x, v.y});
    return r;
}

// Ear clipping for arbitrary simple polygons.
inline LeafMesh triangulate(const std::vector<Vec2>& outline) {
    if (!is_simple_polygon(outline)) throw InputError("triangulate requires a simple polygon");
    std::vector<Vec2> poly = outline;
    if (polygon_area(poly) < 0.0) std::reverse(poly.begin(), poly.end());

    LeafMesh mesh;
    mesh.vertices.reserve(poly.size());
    for (auto p : poly) mesh.vertices.push_back({p.x, p.y, 0.0});

    std::vector<std::uint32_t> ring(poly.size());
    for (std::uint32_t i = 0; i < ring.size(); ++i) ring[i] = i;

    auto remove_collinear = [&] {
        bool changed = true;
        while (changed && ring.size() > 3) {
            changed = false;
            for (std::size_t i = 0; i < ring.size() && ring.size() > 3; ++i) {
                const Vec2 a = poly[ring[(i + ring.size() - 1) % ring.size()]];
                const Vec2 b = poly[ring[i]];
                const Vec2 c = poly[ring[(i + 1) % ring.size()]];
                if (detail::orientation_sign(a, b, c) == 0) {
                    ring.erase(ring.begin() + static_cast<std::ptrdiff_t>(i));
                    changed = true;
                }
            }
        }
    };
    remove_collinear();

    auto is_ear = [&](std::size_t i) {
        const std::size_t n = ring.size();
        const Vec2 a = poly[ring[(i + n - 1) % n]], b = poly[ring[i]], c = poly[ring[(i + 1) % n]];
        if (detail::orientation_sign(a, b, c) <= 0) return false;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i || j == (i + 1) % n || j == (i + n - 1) % n) continue;
            const Vec2 p = poly[ring[j]];
            if (p == a || p == b || p == c) continue;
            if (detail::orientation_sign(a, b, p) >= 0 && detail::orientation_sign(b, c, p) >= 0 &&
                detail::orientation_sign(c, a, p) >= 0)
                return false;
        }
        return true;
    };

    while (ring.size() > 3) {
        bool clipped = false;
        for (std::size_t i = 0; i < ring.size(); ++i) {
            if (!is_ear(i)) continue;
            const std::size_t n = ring.size();
            mesh.triangles.push_back({ring[(i + n - 1) % n], ring[i], ring[(i + 1) % n]});
            ring.erase(ring.begin() + static_cast<std::ptrdiff_t>(i));
            clipped = true;
            remove_collinear();
            break;
        }
        if (!clipped) throw GenerationError("ear clipping failed to find an ear");
    }
    if (detail::orientation_sign(poly[ring[0]], poly[ring[1]], poly[ring[2]]) > 0)
        mesh.triangles.push_back({ring[0], ring[1], ring[2]});
    mesh.tags.assign(mesh.triangles.size(), TriangleTag::blade);
    return mesh;
}

// Structured mesh of a midrib outline: every station carries a column of
// vertices from the lower to the upper margin; stations with zero width
// collapse to a single vertex on the axis. Interior vertices make the
// surface displaceable.
inline LeafMesh triangulate_leaf(const LeafOutline& outline, int rows_per_side = 24) {
    const std::size_t n = outline.size();
    if (n < 3 || outline.upper.size() != n || outline.lower.size() != n)
        throw InputError("leaf outline needs at least three consistent stations");
    require(rows_per_side >= 1, "rows_per_side must be positive");
    for (std::size_t i = 1; i < n; ++i)
        if (!(outline.x[i] > outline.x[i - 1])) throw InputError("outline stations must increase along the midrib");

    LeafMesh mesh;
    const int columns = 2 * rows_per_side + 1;
    std::vector<std::vector<std::uint32_t>> ids(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double up = outline.upper[i], lo = outline.lower[i];
        if (up <= 0.0 && lo <= 0.0) {
            ids[i].assign(columns, static_cast<std::uint32_t>(mesh.vertices.size()));
            mesh.vertices.push_back({outline.x[i], 0.0, 0.0});
            continue;
        }
        if (up <= 0.0 || lo <= 0.0) throw GenerationError("outline pinches against the midrib");
        ids[i].resize(columns);
        for (int j = -rows_per_side; j <= rows_per_side; ++j) {
            const double frac = static_cast<double>(j) / rows_per_side;
            const double y = j < 0 ? frac * lo : frac * up;
            ids[i][j + rows_per_side] = static_cast<std::uint32_t>(mesh.vertices.size());
            mesh.vertices.push_back({outline.x[i], y, 0.0});
        }
    }
    auto add = [&](std::uint32_t a, std::uint32_t b, std::uint32_t c) {
        if (a == b || b == c || a == c) return;
        if (triangle_area_2d(mesh.vertices[a], mesh.vertices[b], mesh.vertices[c]) <= kMinTriangleArea) return;
        mesh.triangles.push_back({a, b, c});
    };
    for (std::size_t i = 0; i + 1 < n; ++i)
        for (int j = 0; j + 1 < columns; ++j) {
            const auto a = ids[i][j], b = ids[i + 1][j], c = ids[i + 1][j + 1], d = ids[i][j + 1];
            add(a, b, c);
            add(a, c, d);
        }
    mesh.tags.assign(mesh.triangles.size(), TriangleTag::blade);
    return mesh;
}

// Appends a straight petiole strip behind the base (x < 0). Tagged so it is
// drawn in the mask but excluded from the area labels.
inline void append_petiole(LeafMesh& mesh, double length_mm, double half_width_mm, int segments = 8) {
    if (length_mm <= 0.0 || half_width_mm <= 0.0) return;
    const auto first = static_cast<std::uint32_t>(mesh.vertices.size());
    for (int s = 0; s <= segments; ++s) {
        const double x = -length_mm * s / segments;
        mesh.vertices.push_back({x, -half_width_mm, 0.0});
        mesh.vertices.push_back({x, half_width_mm, 0.0});
    }
    for (int s = 0; s < segments; ++s) {
        const std::uint32_t a = first + 2 * s, b = a + 1, c = a + 3, d = a + 2;
        // x decreases with s, keep counter-clockwise winding
        mesh.triangles.push_back({d, b, c});
        mesh.triangles.push_back({d, a, b});
        mesh.tags.push_back(TriangleTag::petiole);
        mesh.tags.push_back(TriangleTag::petiole);
    }
}

// Vertices on edges used by exactly one triangle.
inline std::vector<bool> boundary_vertices(const LeafMesh& mesh) {
    std::vector<std::pair<std::uint64_t, int>> edges;
    edges.reserve(mesh.triangles.size() * 3);
    for (const auto& tri : mesh.triangles)
        for (int k = 0; k < 3; ++k) {
            std::uint64_t a = tri[k], b = tri[(k + 1) % 3];
            if (a > b) std::swap(a, b);
            edges.push_back({(a << 32) | b, 0});
        }
    std::sort(edges.begin(), edges.end());
    std::vector<bool> boundary(mesh.vertices.size(), false);
    for (std::size_t i = 0; i < edges.size();) {
        std::size_t j = i;
        while (j < edges.size() && edges[j].first == edges[i].first) ++j;
        if (j - i == 1) {
            boundary[edges[i].first >> 32] = true;
            boundary[edges[i].first & 0xFFFFFFFFu] = true;
        }
        i = j;
    }
    return boundary;
}

struct DisplacementParams {
    double amplitude_mm = 0.0;
    double voronoi_density = 0.08; // cells per mm
    NoiseSeed seed{};
    double boundary_damping = 1.0; // factor applied to boundary vertices
};

// Out-of-plane undulation: z = amplitude * voronoi(xy).
inline LeafMesh displace_vertices(const LeafMesh& mesh, const DisplacementParams& params) {
    if (!std::isfinite(params.amplitude_mm) || params.amplitude_mm < 0.0)
        throw InputError("displacement amplitude must be finite and non-negative");
    LeafMesh out = mesh;
    if (params.amplitude_mm == 0.0) return out;
    std::vector<bool> boundary;
    if (params.boundary_damping != 1.0) boundary = boundary_vertices(mesh);
    for (std::size_t i = 0; i < out.vertices.size(); ++i) {
        auto& v = out.vertices[i];
        double z = params.amplitude_mm * voronoi_noise({v.x, v.y}, params.voronoi_density, params.seed);
        if (!boundary.empty() && boundary[i]) z *= std::clamp(params.boundary_damping, 0.0, 1.0);
        v.z = z;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Outline construction

// Interior half-widths get uniform noise in [-amplitude, amplitude]; the
// closed endpoints are untouched and widths are clamped at zero.
inline OutlineCurve perturb_controls(const OutlineCurve& curve, double noise_amplitude_mm, NoiseSeed seed) {
    if (!(noise_amplitude_mm >= 0.0) || !std::isfinite(noise_amplitude_mm))
        throw InputError("perturbation amplitude must be finite and non-negative");
    curve.validate();
    OutlineCurve out = curve;
    if (noise_amplitude_mm == 0.0) return out;
    RandomStream rng(seed, "leaf.perturb");
    for (std::size_t i = 1; i + 1 < out.controls.size(); ++i) {
        auto& c = out.controls[i];
        c.half_width = std::max(0.0, c.half_width + rng.uniform(-noise_amplitude_mm, noise_amplitude_mm));
    }
    return out;
}

// Samples n_samples + 1 uniformly spaced stations along the midrib and
// mirrors the half-width profile.
inline LeafOutline sample_outline(const OutlineCurve& curve, int n_samples) {
    if (n_samples < 8) throw InputError("sample_outline needs at least 8 samples");
    curve.validate();
    LeafOutline out;
    out.x.resize(n_samples + 1);
    out.upper.resize(n_samples + 1);
    for (int i = 0; i <= n_samples; ++i) {
        const double t = static_cast<double>(i) / n_samples;
        out.x[i] = t * curve.midrib_length_mm;
        out.upper[i] = (i == 0 || i == n_samples) ? 0.0 : curve.half_width(t);
        if (i != 0 && i != n_samples && !(out.upper[i] > 0.0))
            throw GenerationError("outline pinches to zero width (self-touching polygon)");
    }
    out.lower = out.upper;
    return out;
}

// Circle of the given radius as a midrib outline (x from 0 to 2r); stations
// are spaced uniformly in arc angle so the polygon is a regular 2n-gon.
inline LeafOutline disc_outline(double radius_mm, int n_stations) {
    require(radius_mm > 0.0 && n_stations >= 8, "disc outline needs positive radius and >= 8 stations");
    LeafOutline out;
    for (int i = 0; i <= n_stations; ++i) {
        const double theta = pi * i / n_stations;
        out.x.push_back(radius_mm * (1.0 - std::cos(theta)));
        out.upper.push_back((i == 0 || i == n_stations) ? 0.0 : radius_mm * std::sin(theta));
    }
    out.lower = out.upper;
    return out;
}

// Noise-modulated inward erosion of both margins by at most erosion_mm.
inline LeafOutline erode_outline(const LeafOutline& outline, double erosion_mm, NoiseSeed seed,
                                 double frequency_per_mm = 0.6) {
    require(erosion_mm >= 0.0, "edge erosion must be non-negative");
    LeafOutline out = outline;
    if (erosion_mm == 0.0) return out;
    const NoiseSeed su = seed.child("erode.upper"), sl = seed.child("erode.lower");
    for (std::size_t i = 1; i + 1 < out.size(); ++i) {
        const double x = out.x[i] * frequency_per_mm;
        const double eu = erosion_mm * std::clamp(gradient_noise({x, 0.5}, su) * 0.5 + 0.5, 0.0, 1.0);
        const double el = erosion_mm * std::clamp(gradient_noise({x, 0.5}, sl) * 0.5 + 0.5, 0.0, 1.0);
        out.upper[i] = std::max(out.upper[i] - eu, 0.35 * out.upper[i]);
        out.lower[i] = std::max(out.lower[i] - el, 0.35 * out.lower[i]);
    }
    return out;
}

namespace detail {

// Catmull-Rom style tangents, one-sided at the ends.
inline void assign_smooth_tangents(OutlineCurve& c, double base_boost, double tip_boost) {
    auto& k = c.controls;
    const std::size_t n = k.size();
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double m = (k[i + 1].half_width - k[i - 1].half_width) / (k[i + 1].t - k[i - 1].t);
        k[i].in_tangent = k[i].out_tangent = m;
    }
    k[0].out_tangent = k[0].in_tangent = base_boost * (k[1].half_width - k[0].half_width) / (k[1].t - k[0].t);
    k[n - 1].in_tangent = k[n - 1].out_tangent =
        tip_boost * (k[n - 1].half_width - k[n - 2].half_width) / (k[n - 1].t - k[n - 2].t);
}

} // namespace detail

// Species preset curves with seeded variation of size and proportions.
// Beech: ovate, widest in the lower half. Oak: obovate with rounded lobes.
inline OutlineCurve preset_outline(Species species, NoiseSeed seed) {
    RandomStream rng(seed, "leaf.preset");
    OutlineCurve c;
    if (species == Species::beech) {
        c.midrib_length_mm = rng.uniform(55.0, 90.0);
        const double hw = c.midrib_length_mm * rng.uniform(0.28, 0.36);
        const double peak = rng.uniform(0.36, 0.5);
        c.controls = {
            {0.0, 0.0, 0, 0},
            {0.10, hw * rng.uniform(0.55, 0.7), 0, 0},
            {peak, hw, 0, 0},
            {0.5 * (peak + 1.0), hw * rng.uniform(0.72, 0.82), 0, 0},
            {0.9, hw * rng.uniform(0.3, 0.4), 0, 0},
            {1.0, 0.0, 0, 0},
        };
        detail::assign_smooth_tangents(c, 1.6, 1.2);
        c.controls[2].in_tangent = c.controls[2].out_tangent = 0.0;
        return c;
    }
    c.midrib_length_mm = rng.uniform(65.0, 105.0);
    const double hw = c.midrib_length_mm * rng.uniform(0.26, 0.33);
    const int lobes = static_cast<int>(rng.uniform_int(4, 6));
    const double depth = rng.uniform(0.42, 0.55);
    c.controls.push_back({0.0, 0.0, 0, 0});
    const double start = 0.08, end = 0.9;
    const double step = (end - start) / lobes;
    for (int l = 0; l < lobes; ++l) {
        const double t_sinus = start + step * l;
        const double t_lobe = t_sinus + step * rng.uniform(0.45, 0.6);
        // obovate envelope peaking around t = 0.65
        auto envelope = [&](double t) { return hw * (0.45 + 0.55 * std::sin(pi * std::pow(t, 1.3))); };
        const double lobe_w = envelope(t_lobe);
        const double sinus_w = lobe_w * (1.0 - depth) * (l == 0 ? 1.0 : 1.0);
        if (l == 0)
            c.controls.push_back({t_sinus, 0.55 * envelope(t_sinus), 0, 0});
        else
            c.controls.push_back({t_sinus, sinus_w, 0, 0});
        c.controls.push_back({t_lobe, lobe_w, 0, 0});
    }
    c.controls.push_back({0.95, hw * 0.28, 0, 0});
    c.controls.push_back({1.0, 0.0, 0, 0});
    detail::assign_smooth_tangents(c, 1.5, 1.2);
    // flat extremes at sinuses and lobe tips keep the lobes distinct
    for (std::size_t i = 1; i + 2 < c.controls.size(); ++i) c.controls[i].in_tangent = c.controls[i].out_tangent = 0.0;
    return c;
}

inline std::string to_obj(const LeafMesh& mesh) {
    std::ostringstream os;
    os.precision(9);
    os << "# leafsynth mesh (" << to_string(mesh.species) << ")\n";
    for (const auto& v : mesh.vertices) os << "v " << v.x << ' ' << v.y << ' ' << v.z << '\n';
    for (const auto& t : mesh.triangles) os << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
    return os.str();
}

} // namespace leafsynth
