#include <gtest/gtest.h>

#include <cmath>

#include "leafsynth/leaf_shape.hpp"
#include "leafsynth/leaf_texture.hpp"
#include "leafsynth/venation.hpp"

using namespace leafsynth;

namespace {

double shoelace(const std::vector<Vec2>& p) {
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const Vec2 a = p[i], b = p[(i + 1) % p.size()];
        s += a.x * b.y - b.x * a.y;
    }
    return 0.5 * std::abs(s);
}

// Star-shaped polygon around the origin with random radii; always simple.
std::vector<Vec2> random_star(RandomStream& rng, int n) {
    std::vector<double> angles;
    for (int i = 0; i < n; ++i) angles.push_back(rng.uniform(0.0, 2.0 * pi));
    std::sort(angles.begin(), angles.end());
    std::vector<Vec2> poly;
    for (double a : angles) poly.push_back(direction(a) * rng.uniform(3.0, 30.0));
    return poly;
}

Vec3 rotate3(Vec3 v, double yaw, double pitch, double roll) {
    const double cy = std::cos(yaw), sy = std::sin(yaw), cp = std::cos(pitch), sp = std::sin(pitch);
    const double cr = std::cos(roll), sr = std::sin(roll);
    v = {cy * v.x - sy * v.y, sy * v.x + cy * v.y, v.z};
    v = {cp * v.x + sp * v.z, v.y, -sp * v.x + cp * v.z};
    return {v.x, cr * v.y - sr * v.z, sr * v.y + cr * v.z};
}

OutlineCurve lens_curve(double length, double hw) {
    OutlineCurve c;
    c.midrib_length_mm = length;
    c.controls = {{0.0, 0.0, 0, 0}, {0.5, hw, 0, 0}, {1.0, 0.0, 0, 0}};
    detail::assign_smooth_tangents(c, 1.0, 1.0);
    return c;
}

LeafMesh displaced_leaf(std::uint64_t s, double amplitude) {
    const auto curve = preset_outline(s % 2 ? Species::oak : Species::beech, NoiseSeed{s});
    LeafMesh mesh = triangulate_leaf(sample_outline(curve, 48), 6);
    DisplacementParams d;
    d.amplitude_mm = amplitude;
    d.seed = NoiseSeed{s * 31 + 7};
    return displace_vertices(mesh, d);
}

} // namespace

// ---------------------------------------------------------------------------
// Areas

TEST(LeafMesh, TriangulateAnalyticShapes) {
    const auto square = triangulate({{0, 0}, {1, 0}, {1, 1}, {0, 1}});
    EXPECT_NEAR(surface_area(square), 1.0, 1e-12);
    const auto tri = triangulate({{0, 0}, {10, 0}, {0, 10}});
    EXPECT_GE(tri.triangles.size(), 1u);
    EXPECT_NEAR(surface_area(tri), 50.0, 1e-12);
    // clockwise input is accepted and re-oriented
    const auto cw = triangulate({{0, 1}, {1, 1}, {1, 0}, {0, 0}});
    EXPECT_NEAR(projected_area(cw), 1.0, 1e-12);
    EXPECT_NO_THROW(validate_mesh(cw));
}

TEST(LeafMesh, TriangulateMatchesShoelace) {
    RandomStream rng(NoiseSeed{101}, "test");
    for (int i = 0; i < 200; ++i) {
        const auto poly = random_star(rng, static_cast<int>(rng.uniform_int(3, 60)));
        if (!is_simple_polygon(poly)) continue;
        const LeafMesh m = triangulate(poly);
        validate_mesh(m);
        const double ref = shoelace(poly);
        ASSERT_NEAR(surface_area(m), ref, 1e-6 * ref) << "polygon " << i;
    }
}

TEST(LeafMesh, NonSimplePolygonRejected) {
    EXPECT_THROW(triangulate({{0, 0}, {1, 1}, {1, 0}, {0, 1}}), InputError);
}

TEST(LeafMesh, StructuredMeshMatchesOutlineArea) {
    for (std::uint64_t s = 0; s < 40; ++s) {
        const auto outline = sample_outline(preset_outline(s % 2 ? Species::oak : Species::beech, NoiseSeed{s}), 96);
        const LeafMesh m = triangulate_leaf(outline, 8);
        validate_mesh(m);
        const double ref = shoelace(outline.polygon());
        ASSERT_NEAR(projected_area(m), ref, 1e-6 * ref);
        ASSERT_EQ(surface_area(m), projected_area(m));
    }
}

TEST(LeafMesh, SingleTriangleSurface) {
    LeafMesh m;
    m.vertices = {{0, 0, 0}, {10, 0, 0}, {0, 10, 0}};
    m.triangles = {{0, 1, 2}};
    m.tags = {TriangleTag::blade};
    EXPECT_DOUBLE_EQ(surface_area(m), 50.0);
    EXPECT_DOUBLE_EQ(projected_area(m), 50.0);
}

TEST(LeafMesh, SurfaceAreaInvariantUnderRotation) {
    RandomStream rng(NoiseSeed{102}, "test");
    for (std::uint64_t s = 0; s < 50; ++s) {
        LeafMesh m = displaced_leaf(s, 3.0);
        const double before = surface_area(m);
        const double yaw = rng.uniform(0, 2 * pi), pitch = rng.uniform(0, 2 * pi), roll = rng.uniform(0, 2 * pi);
        for (auto& v : m.vertices) v = rotate3(v, yaw, pitch, roll);
        ASSERT_NEAR(surface_area(m), before, 1e-9 * before);
    }
}

TEST(LeafMesh, ProjectionNeverExceedsSurface) {
    RandomStream rng(NoiseSeed{103}, "test");
    // per-triangle inequality on random 3D triangles
    for (int i = 0; i < 10000; ++i) {
        const Vec3 a{rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5)};
        const Vec3 b{rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5)};
        const Vec3 c{rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5)};
        ASSERT_LE(std::abs(triangle_area_2d(a, b, c)), triangle_area_3d(a, b, c) * (1 + 1e-12));
    }
    // and on displaced leaves
    for (std::uint64_t s = 0; s < 100; ++s) {
        const LeafMesh flat = displaced_leaf(s, 0.0);
        const LeafMesh bumpy = displaced_leaf(s, rng.uniform(0.1, 4.0));
        ASSERT_LE(projected_area(bumpy), surface_area(bumpy));
        ASSERT_GE(surface_area(bumpy), surface_area(flat));
        ASSERT_DOUBLE_EQ(projected_area(bumpy), projected_area(flat));
    }
}

TEST(LeafMesh, ZDisplacementPreservesProjection) {
    LeafMesh sq = triangulate({{0, 0}, {1, 0}, {1, 1}, {0, 1}});
    for (auto& v : sq.vertices) v.z = 0.3 * v.x + 0.1 * v.y * v.y;
    EXPECT_NEAR(projected_area(sq), 1.0, 1e-12);
    EXPECT_GT(surface_area(sq), 1.0);
}

TEST(LeafMesh, DisplacementBoundsAndConnectivity) {
    const LeafMesh flat = displaced_leaf(3, 0.0);
    DisplacementParams none;
    EXPECT_EQ(displace_vertices(flat, none).vertices.size(), flat.vertices.size());
    for (const auto& v : displace_vertices(flat, none).vertices) EXPECT_EQ(v.z, 0.0);
    for (double amp : {0.5, 2.0, 5.0}) {
        DisplacementParams d;
        d.amplitude_mm = amp;
        d.seed = NoiseSeed{9};
        const LeafMesh m = displace_vertices(flat, d);
        EXPECT_EQ(m.triangles, flat.triangles);
        for (const auto& v : m.vertices) ASSERT_LE(std::abs(v.z), amp);
    }
    DisplacementParams bad;
    bad.amplitude_mm = -1.0;
    EXPECT_THROW(displace_vertices(flat, bad), InputError);
}

TEST(LeafMesh, PetioleExcludedFromLabels) {
    LeafMesh m = triangulate_leaf(sample_outline(lens_curve(60, 15), 64), 6);
    const double blade = projected_area(m);
    append_petiole(m, 8.0, 0.6);
    validate_mesh(m);
    EXPECT_DOUBLE_EQ(projected_area(m), blade);
    EXPECT_NEAR(footprint_area(m) - blade, 2 * 0.6 * 8.0, 1e-9);
}

TEST(LeafMesh, ValidateRejectsBadTriangles) {
    LeafMesh m;
    m.vertices = {{0, 0, 0}, {10, 0, 0}, {0, 10, 0}};
    m.triangles = {{0, 2, 1}};
    m.tags = {TriangleTag::blade};
    EXPECT_THROW(validate_mesh(m), InputError);
    m.triangles = {{0, 1, 5}};
    EXPECT_THROW(validate_mesh(m), InputError);
    m.triangles = {{0, 1, 1}};
    EXPECT_THROW(validate_mesh(m), InputError);
}

TEST(LeafMesh, DiscAreaOracle) {
    const double r = 50.0;
    const LeafMesh m = triangulate_leaf(disc_outline(r, 512), 24);
    validate_mesh(m);
    EXPECT_NEAR(surface_area(m), pi * r * r, 0.005 * pi * r * r);
}

// ---------------------------------------------------------------------------
// Outline

TEST(Outline, PerturbationBounds) {
    const auto base = preset_outline(Species::beech, NoiseSeed{5});
    const auto same = perturb_controls(base, 0.0, NoiseSeed{1});
    for (std::size_t i = 0; i < base.controls.size(); ++i) EXPECT_EQ(same.controls[i].half_width, base.controls[i].half_width);
    const double amp = 2.5;
    for (std::uint64_t s = 0; s < 1000; ++s) {
        const auto p = perturb_controls(base, amp, NoiseSeed{s});
        ASSERT_EQ(p.controls.front().half_width, 0.0);
        ASSERT_EQ(p.controls.back().half_width, 0.0);
        for (std::size_t i = 0; i < p.controls.size(); ++i) {
            ASSERT_LE(std::abs(p.controls[i].half_width - base.controls[i].half_width), amp);
            ASSERT_GE(p.controls[i].half_width, 0.0);
        }
    }
    EXPECT_THROW(perturb_controls(base, -0.1, {}), InputError);
}

TEST(Outline, SampleSymmetricAndClosed) {
    const auto o = sample_outline(preset_outline(Species::oak, NoiseSeed{8}), 64);
    const auto poly = o.polygon();
    EXPECT_EQ(poly.front().y, 0.0);
    EXPECT_EQ(o.upper.front(), 0.0);
    EXPECT_EQ(o.upper.back(), 0.0);
    for (std::size_t i = 0; i < o.size(); ++i) EXPECT_EQ(o.upper[i], o.lower[i]);
    EXPECT_TRUE(is_simple_polygon(poly));
    // the tip is the vertex farthest along the midrib, on the axis
    const auto tip = std::max_element(poly.begin(), poly.end(), [](Vec2 a, Vec2 b) { return a.x < b.x; });
    EXPECT_EQ(tip->y, 0.0);
    EXPECT_THROW(sample_outline(preset_outline(Species::oak, NoiseSeed{8}), 7), InputError);
}

TEST(Outline, PolygonAreaConvergesToIntegral) {
    const OutlineCurve c = lens_curve(80.0, 20.0);
    // high-resolution Simpson integral of 2 * half_width over the midrib
    const int n = 200000;
    double integral = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        integral += w * c.half_width(double(i) / n);
    }
    integral *= 2.0 * c.midrib_length_mm / (3.0 * n);
    double previous = std::numeric_limits<double>::infinity();
    for (int samples : {16, 32, 64, 128, 256, 512}) {
        const double err = std::abs(shoelace(sample_outline(c, samples).polygon()) - integral);
        EXPECT_LT(err, previous);
        previous = err;
    }
    EXPECT_LT(previous / integral, 1e-4);
}

TEST(Outline, HermiteInterpolatesKnots) {
    const auto c = preset_outline(Species::beech, NoiseSeed{4});
    for (const auto& k : c.controls) EXPECT_NEAR(c.half_width(k.t), k.half_width, 1e-12);
}

TEST(Outline, BeechWidestNearTheMiddle) {
    for (std::uint64_t s = 0; s < 100; ++s) {
        const auto c = preset_outline(Species::beech, NoiseSeed{s});
        double best_t = 0.0, best = -1.0;
        for (int i = 0; i <= 1000; ++i) {
            const double t = i / 1000.0;
            if (c.half_width(t) > best) {
                best = c.half_width(t);
                best_t = t;
            }
        }
        ASSERT_GE(best_t, 0.3) << "seed " << s;
        ASSERT_LE(best_t, 0.6) << "seed " << s;
    }
}

TEST(Outline, OakIsLobed) {
    for (std::uint64_t s = 0; s < 100; ++s) {
        const auto c = preset_outline(Species::oak, NoiseSeed{s});
        int maxima = 0;
        double prev2 = c.half_width(0.0), prev = c.half_width(0.001);
        for (int i = 2; i <= 1000; ++i) {
            const double cur = c.half_width(i / 1000.0);
            if (prev > prev2 && prev > cur) ++maxima;
            prev2 = prev;
            prev = cur;
        }
        ASSERT_GE(maxima, 3) << "seed " << s;
    }
}

TEST(Outline, ErosionStaysInside) {
    const auto o = sample_outline(preset_outline(Species::beech, NoiseSeed{2}), 96);
    const auto e = erode_outline(o, 1.2, NoiseSeed{3});
    for (std::size_t i = 0; i < o.size(); ++i) {
        ASSERT_LE(e.upper[i], o.upper[i]);
        ASSERT_GE(e.upper[i], o.upper[i] - 1.2 - 1e-12);
        ASSERT_LE(e.lower[i], o.lower[i]);
    }
    EXPECT_TRUE(is_simple_polygon(e.polygon()));
}

// ---------------------------------------------------------------------------
// Venation

TEST(Venation, SegmentCountOracle) {
    const Rect bounds{{0, -20}, {80, 20}};
    for (std::uint64_t s = 0; s < 50; ++s) {
        VenationParams p;
        RandomStream rng(NoiseSeed{s}, "params");
        p.branch_levels = static_cast<int>(rng.uniform_int(1, 4));
        p.branches_per_level = static_cast<int>(rng.uniform_int(1, 3));
        p.midrib_stations = static_cast<int>(rng.uniform_int(1, 9));
        std::size_t expected = 1, level = static_cast<std::size_t>(p.midrib_stations);
        for (int l = 1; l < p.branch_levels; ++l) {
            level *= static_cast<std::size_t>(p.branches_per_level);
            expected += level;
        }
        const auto sk = trace_veins(p, bounds, NoiseSeed{s});
        ASSERT_EQ(sk.segments.size(), expected);
        ASSERT_EQ(expected_segment_count(p), expected);
    }
}

TEST(Venation, SingleLevelIsMidribOnly) {
    VenationParams p;
    p.branch_levels = 1;
    const auto sk = trace_veins(p, Rect{{0, -10}, {50, 10}}, NoiseSeed{1});
    ASSERT_EQ(sk.segments.size(), 1u);
    EXPECT_EQ(sk.segments[0].level, 0);
}

TEST(Venation, StraightWithoutJitter) {
    VenationParams p;
    p.step_sigma = 0.0;
    p.angle_jitter_deg = 0.0;
    p.branch_levels = 2;
    const auto sk = trace_veins(p, Rect{{0, -25}, {100, 25}}, NoiseSeed{3});
    const auto& mid = sk.segments[0].path.points;
    for (const auto& q : mid) EXPECT_NEAR(q.y, 0.0, 1e-12);
    EXPECT_NEAR(mid.front().x, 0.0, 1e-12);
    EXPECT_GT(mid.back().x, 99.0);
    for (std::size_t i = 1; i < sk.segments.size(); ++i) {
        const auto& pts = sk.segments[i].path.points;
        ASSERT_GE(pts.size(), 2u);
        const Vec2 d = pts.back() - pts.front();
        EXPECT_NEAR(std::abs(std::atan2(d.y, d.x)) * 180.0 / pi, p.branch_angle_deg, 1e-9);
        for (std::size_t k = 1; k + 1 < pts.size(); ++k)
            EXPECT_NEAR(distance_to_segment(pts[k], pts.front(), pts.back()), 0.0, 1e-9);
    }
}

TEST(Venation, ThicknessDecreasesWithLevel) {
    VenationParams p;
    for (int l = 0; l < 5; ++l) EXPECT_LT(p.thickness(l + 1), p.thickness(l));
    const auto sk = trace_veins(p, Rect{{0, -20}, {80, 20}}, NoiseSeed{5});
    for (const auto& s : sk.segments) EXPECT_DOUBLE_EQ(s.thickness, p.thickness(s.level));
}

TEST(Venation, DeterministicAndInsideBounds) {
    VenationParams p;
    p.step_sigma = 0.4;
    const Rect bounds{{0, -15}, {70, 15}};
    for (std::uint64_t s = 0; s < 20; ++s) {
        const auto a = trace_veins(p, bounds, NoiseSeed{s});
        const auto b = trace_veins(p, bounds, NoiseSeed{s});
        ASSERT_EQ(a.segments.size(), b.segments.size());
        for (std::size_t i = 0; i < a.segments.size(); ++i) {
            const auto& pa = a.segments[i].path.points;
            const auto& pb = b.segments[i].path.points;
            ASSERT_EQ(pa.size(), pb.size());
            for (std::size_t k = 0; k < pa.size(); ++k) {
                ASSERT_EQ(pa[k].x, pb[k].x);
                ASSERT_EQ(pa[k].y, pb[k].y);
                ASSERT_TRUE(bounds.contains(pa[k]));
            }
        }
    }
}

TEST(Venation, EmptySkeletonIsFlat) {
    const auto h = rasterize_height(VeinSkeleton{}, 16, 16);
    for (float v : h.grid) EXPECT_EQ(v, 0.0f);
}

TEST(Venation, HorizontalCapsuleBruteForce) {
    VeinSkeleton sk;
    VeinSegment seg;
    seg.thickness = 3.0;
    seg.path.points = {{8.0, 16.0}, {24.0, 16.0}};
    sk.segments.push_back(seg);
    const auto h = rasterize_height(sk, 32, 32);
    const double reach = 0.5 * seg.thickness + 0.5;
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x) {
            const double d = distance_to_segment({x + 0.5, y + 0.5}, {8, 16}, {24, 16});
            ASSERT_EQ(h.grid(x, y) > 0.0f, d < reach) << x << "," << y;
            ASSERT_GE(h.grid(x, y), 0.0f);
            ASSERT_LE(h.grid(x, y), 1.0f);
        }
    int band = 0;
    for (int y = 0; y < 32; ++y) band += h.grid(16, y) > 0.0f;
    EXPECT_NEAR(band, 3, 1);
}

TEST(Venation, HeightValuesBounded) {
    VenationParams p;
    p.base_thickness = 4.0;
    for (std::uint64_t s = 0; s < 10; ++s) {
        const auto sk = trace_veins(p, Rect{{0, -30}, {120, 30}}, NoiseSeed{s});
        const auto h = rasterize_height(sk, GridFrame{{-2, -32}, 0.5, 250, 130});
        for (float v : h.grid) ASSERT_TRUE(v >= 0.0f && v <= 1.0f);
    }
}

TEST(Normals, ConstantAndRamp) {
    const FloatImage flat(12, 12, 0.4f);
    for (const auto& n : height_to_normals(flat, 3.0)) {
        EXPECT_EQ(n.x, 0.0);
        EXPECT_EQ(n.y, 0.0);
        EXPECT_EQ(n.z, 1.0);
    }
    FloatImage ramp(20, 10);
    for (int y = 0; y < 10; ++y)
        for (int x = 0; x < 20; ++x) ramp(x, y) = static_cast<float>(x) / 20.0f;
    const auto n = height_to_normals(ramp, 2.0);
    for (const auto& v : n) {
        EXPECT_LT(v.x, 0.0);
        EXPECT_NEAR(v.x, n(0, 0).x, 1e-6);
        EXPECT_NEAR(v.y, 0.0, 1e-12);
    }
    EXPECT_THROW(height_to_normals(flat, 0.0), InputError);
}

TEST(Normals, GaussianBumpGradient) {
    const int size = 96;
    const double s = 10.0, c = size / 2.0, z = 4.0;
    FloatImage h(size, size);
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
            const double dx = x - c, dy = y - c;
            h(x, y) = static_cast<float>(std::exp(-(dx * dx + dy * dy) / (2 * s * s)));
        }
    const auto n = height_to_normals(h, z);
    for (int y = 4; y < size - 4; ++y)
        for (int x = 4; x < size - 4; ++x) {
            const double dx = x - c, dy = y - c;
            const double g = std::exp(-(dx * dx + dy * dy) / (2 * s * s));
            const double gx = -dx / (s * s) * g, gy = -dy / (s * s) * g;
            const double mag = std::hypot(gx, gy);
            if (mag < 0.01) continue;
            const Vec3 v = n(x, y);
            const double ex = -v.x / (z * v.z), ey = -v.y / (z * v.z);
            ASSERT_NEAR(std::hypot(ex - gx, ey - gy), 0.0, 0.02 * mag) << x << "," << y;
        }
}

TEST(Normals, UnitLength) {
    RandomStream rng(NoiseSeed{104}, "test");
    FloatImage h(100, 100);
    for (auto& v : h) v = static_cast<float>(rng.uniform());
    const auto n = height_to_normals(h, rng.uniform(0.5, 8.0));
    for (const auto& v : n) ASSERT_NEAR(norm(v), 1.0, 1e-6);
}

// ---------------------------------------------------------------------------
// Texture

TEST(Texture, BlendEndpoints) {
    LeafTextureParams p;
    EXPECT_EQ(blend_base_factor(0.0, p), p.color_a);
    EXPECT_EQ(blend_base_factor(1.0, p), p.color_b);
    p.color_b = p.color_a;
    RandomStream rng(NoiseSeed{1}, "test");
    for (int i = 0; i < 100; ++i) {
        const Color c = blend_base({rng.uniform(), rng.uniform()}, p);
        EXPECT_NEAR(c.r, p.color_a.r, 1e-15);
        EXPECT_NEAR(c.g, p.color_a.g, 1e-15);
    }
    EXPECT_THROW(blend_base({1.5, 0.0}, p), InputError);
}

TEST(Texture, SpeciesPalettesDiffer) {
    const auto b = texture_preset(Species::beech), o = texture_preset(Species::oak);
    EXPECT_GT(luma(b.color_a), luma(o.color_a));
    EXPECT_GT(luma(b.color_b), luma(o.color_b));
}

namespace {

struct TexturedLeaf {
    LeafMesh mesh;
    std::vector<Vec2> blade;
    GridFrame frame;
};

TexturedLeaf make_textured(std::uint64_t s, double texel = 0.25) {
    TexturedLeaf t;
    const auto outline = sample_outline(preset_outline(Species::beech, NoiseSeed{s}), 96);
    t.blade = outline.polygon();
    t.mesh = triangulate_leaf(outline, 10);
    t.frame = texture_frame_for(t.mesh, texel);
    return t;
}

} // namespace

TEST(Texture, AlphaMatchesCoverageWithoutHoles) {
    const auto t = make_textured(1);
    LeafTextureParams p;
    const HeightMap hm{FloatImage(t.frame.width, t.frame.height, 0.0f), t.frame};
    const auto surf = compose_surface(t.mesh, hm, p);
    EXPECT_TRUE(surf.alpha == rasterize_coverage(t.mesh, t.frame));
}

TEST(Texture, InvisibleVeinsGivePureBlend) {
    const auto t = make_textured(2, 0.5);
    LeafTextureParams p;
    p.vein_opacity = 0.0;
    p.grain = 0.0;
    VenationParams vp;
    const auto sk = trace_veins(vp, Rect{{0, -20}, {60, 20}}, NoiseSeed{1});
    const auto surf = compose_surface(t.mesh, rasterize_height(sk, t.frame), p);
    const Rect b = mesh_bounds(t.mesh);
    for (int y = 0; y < t.frame.height; ++y)
        for (int x = 0; x < t.frame.width; ++x) {
            const Vec2 q = t.frame.to_units({x + 0.5, y + 0.5});
            const Vec2 uv{std::clamp((q.x - b.min.x) / b.width(), 0.0, 1.0),
                          std::clamp((q.y - b.min.y) / b.height(), 0.0, 1.0)};
            ASSERT_EQ(surf.albedo(x, y), to_rgb8(blend_base(uv, p)));
        }
}

TEST(Texture, AlphaZeroOutsideOutline) {
    for (std::uint64_t s = 0; s < 5; ++s) {
        const auto t = make_textured(s);
        const auto alpha = rasterize_coverage(t.mesh, t.frame);
        const double half_diag = 0.5 * std::sqrt(2.0) * t.frame.units_per_pixel;
        int checked = 0;
        for (int y = 0; y < t.frame.height; ++y)
            for (int x = 0; x < t.frame.width; ++x) {
                const Vec2 q = t.frame.to_units({x + 0.5, y + 0.5});
                if (point_in_polygon(q, t.blade) || distance_to_polygon(q, t.blade) <= half_diag) continue;
                ASSERT_EQ(alpha(x, y), 0.0f);
                ++checked;
            }
        EXPECT_GT(checked, 10000);
    }
}

TEST(Texture, HolesAreTransparent) {
    const auto t = make_textured(7);
    LeafTextureParams p;
    p.hole_density = 0.5;
    p.seed = NoiseSeed{3};
    const auto holes = sample_holes(t.blade, p);
    ASSERT_FALSE(holes.empty());
    const LeafMesh carved = punch_holes(t.mesh, holes);
    EXPECT_LT(surface_area(carved), surface_area(t.mesh));
    const auto alpha = rasterize_coverage(carved, t.frame);
    const double half_diag = 0.5 * std::sqrt(2.0) * t.frame.units_per_pixel;
    for (const auto& d : holes)
        for (int y = 0; y < t.frame.height; ++y)
            for (int x = 0; x < t.frame.width; ++x) {
                const Vec2 q = t.frame.to_units({x + 0.5, y + 0.5});
                if (norm(q - d.centre) + half_diag < d.radius) ASSERT_EQ(alpha(x, y), 0.0f);
            }
}

TEST(Texture, HoleCountIsPoisson) {
    const auto t = make_textured(11);
    const double area_cm2 = shoelace(t.blade) / 100.0;
    LeafTextureParams p;
    p.hole_density = 0.3;
    const int seeds = 100;
    double total = 0.0;
    for (int s = 0; s < seeds; ++s) {
        p.seed = NoiseSeed{std::uint64_t(s) + 1000};
        total += static_cast<double>(sample_holes(t.blade, p).size());
    }
    const double mean = p.hole_density * area_cm2;
    EXPECT_NEAR(total / seeds, mean, 3.0 * std::sqrt(mean / seeds));
}

TEST(Texture, ShadeExamples) {
    LeafSurface s;
    s.albedo = RasterImage(4, 4, Rgb8{120, 180, 60});
    s.normals = NormalMap(4, 4, Vec3{0, 0, 1});
    s.alpha = FloatImage(4, 4, 1.0f);
    EXPECT_TRUE(shade(s, {0, 0, 1}, 0.0) == s.albedo);
    for (const auto& p : shade(s, {1, 0, 0}, 0.0)) EXPECT_EQ(p, (Rgb8{0, 0, 0}));
    s.normals(1, 1) = normalized({0.5, -0.3, 0.8});
    EXPECT_TRUE(shade(s, normalized({0.2, 0.7, 0.3}), 1.0) == s.albedo);
    EXPECT_THROW(shade(s, {0, 0, 2}, 0.5), InputError);
}

TEST(Texture, ShadingMonotoneInAmbient) {
    RandomStream rng(NoiseSeed{105}, "test");
    for (int i = 0; i < 10000; ++i) {
        const Vec3 n = normalized({rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(0.05, 1)});
        const Vec3 l = normalized({rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)});
        const double a = rng.uniform(), b = rng.uniform();
        const double lo = std::min(a, b), hi = std::max(a, b);
        ASSERT_LE(lambert(n, l, lo), lambert(n, l, hi) + 1e-15);
        ASSERT_GE(lambert(n, l, lo), 0.0);
        ASSERT_LE(lambert(n, l, hi), 1.0 + 1e-15);
    }
}
