#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "leafsynth/annotate.hpp"
#include "leafsynth/config.hpp"
#include "leafsynth/edges.hpp"
#include "leafsynth/filter_metrics.hpp"
#include "leafsynth/inpaint_client.hpp"
#include "leafsynth/leaf_shape.hpp"
#include "leafsynth/leaf_texture.hpp"
#include "leafsynth/paper_texture.hpp"
#include "leafsynth/png_io.hpp"
#include "leafsynth/scene_render.hpp"
#include "leafsynth/venation.hpp"

namespace leafsynth {

namespace fs = std::filesystem;

inline constexpr int kManifestSchemaVersion = 1;
inline constexpr std::string_view kToolVersion = "leafsynth 0.1.0";

using Logger = std::function<void(const std::string&)>;

// ---------------------------------------------------------------------------
// Seeds and sampling

inline NoiseSeed derive_seed(std::uint64_t master_seed, std::uint64_t leaf_index, std::string_view stage_tag) {
    return NoiseSeed{mix(master_seed, splitmix64(leaf_index), tag_hash(stage_tag))};
}

// Categorical draw over the (name-ordered) species mix.
inline Species sample_species(const std::map<std::string, double>& mix, NoiseSeed seed) {
    if (mix.empty()) throw InputError("species mix is empty");
    double total = 0.0;
    for (const auto& [name, p] : mix) total += p;
    if (!(total > 0.0)) throw InputError("species mix has no mass");
    RandomStream rng(seed, "species");
    const double u = rng.uniform() * total;
    double acc = 0.0;
    for (const auto& [name, p] : mix) {
        acc += p;
        if (u < acc) return parse_species(name);
    }
    return parse_species(std::prev(mix.end())->first);
}

inline double sample(RandomStream& rng, const Range& r) { return r.min == r.max ? r.min : rng.uniform(r.min, r.max); }

// ---------------------------------------------------------------------------
// One leaf

struct LeafArtifacts {
    Species species = Species::beech;
    NoiseSeed seed{};
    LeafMesh mesh;     // carved blade + petiole
    LeafSurface surface;
    bool flat = false;
};

inline double texel_size_mm(const GenerationConfig& cfg) {
    return 0.5 * cfg.render.camera_extent_mm * cfg.render.gamma.min / cfg.render.resolution;
}

inline LeafArtifacts build_leaf(const GenerationConfig& cfg, Species species, NoiseSeed seed) {
    RandomStream rng(seed, "leaf.choices");
    LeafArtifacts leaf;
    leaf.species = species;
    leaf.seed = seed;

    const OutlineCurve curve =
        perturb_controls(preset_outline(species, seed.child("preset")), cfg.leaf.perturb_amplitude_mm, seed.child("perturb"));
    LeafOutline outline = sample_outline(curve, cfg.leaf.outline_stations);
    if (rng.bernoulli(cfg.leaf.erosion_probability))
        outline = erode_outline(outline, sample(rng, cfg.leaf.erosion_mm), seed.child("erode"));
    const std::vector<Vec2> blade = outline.polygon();

    LeafMesh mesh = triangulate_leaf(outline, cfg.leaf.rows_per_side);
    mesh.species = species;
    leaf.flat = rng.bernoulli(cfg.leaf.flat_probability);
    if (!leaf.flat) {
        DisplacementParams d;
        d.amplitude_mm = sample(rng, cfg.leaf.displacement_mm);
        d.voronoi_density = cfg.leaf.displacement_density;
        d.seed = seed.child("displace");
        mesh = displace_vertices(mesh, d);
    }

    LeafTextureParams tex = texture_preset(species);
    tex.seed = seed.child("texture");
    tex.hole_density = rng.bernoulli(cfg.leaf.hole_probability) ? sample(rng, cfg.leaf.hole_density) : 0.0;
    tex.spot_density = rng.bernoulli(cfg.leaf.spot_probability) ? sample(rng, cfg.leaf.spot_density) : 0.0;
    mesh = punch_holes(mesh, sample_holes(blade, tex));
    append_petiole(mesh, sample(rng, cfg.leaf.petiole_length_mm), cfg.leaf.petiole_half_width_mm);
    validate_mesh(mesh);

    double half = 0.0;
    for (std::size_t i = 0; i < outline.size(); ++i) half = std::max({half, outline.upper[i], outline.lower[i]});
    VenationParams vp;
    vp.branch_levels = cfg.venation.branch_levels;
    vp.branches_per_level = cfg.venation.branches_per_level;
    vp.midrib_stations = static_cast<int>(std::lround(sample(rng, cfg.venation.midrib_stations)));
    vp.branch_angle_deg = sample(rng, cfg.venation.branch_angle_deg);
    vp.step_sigma = cfg.venation.step_sigma;
    vp.base_thickness = cfg.venation.base_thickness_mm;
    vp.thickness_decay = cfg.venation.thickness_decay;
    const Rect bounds{{outline.x.front(), -half}, {outline.x.back(), half}};
    const VeinSkeleton veins =
        trace_veins(vp, bounds, seed.child("venation"), [&blade](Vec2 p) { return point_in_polygon(p, blade); });

    const GridFrame frame = texture_frame_for(mesh, texel_size_mm(cfg));
    const HeightMap height = rasterize_height(veins, frame);
    leaf.surface = compose_surface(mesh, height, tex, sample_spots(blade, tex));
    leaf.mesh = std::move(mesh);
    return leaf;
}

// Random gamma, rotation and translation such that the whole texture frame
// lies inside the framed region.
inline SceneParams place_leaf(const LeafSurface& surface, const GenerationConfig& cfg, NoiseSeed seed,
                              int attempts = 64) {
    RandomStream rng(seed, "placement");
    SceneParams scene;
    scene.width = scene.height = cfg.render.resolution;
    scene.camera_extent_mm = cfg.render.camera_extent_mm;
    const GridFrame& f = surface.frame;
    const std::array<Vec2, 4> corners{f.to_units({0, 0}), f.to_units({double(f.width), 0}),
                                      f.to_units({0, double(f.height)}),
                                      f.to_units({double(f.width), double(f.height)})};
    for (int a = 0; a < attempts; ++a) {
        scene.gamma = sample(rng, cfg.render.gamma);
        const double theta = rng.uniform(0.0, 2.0 * pi);
        Rect box = Rect::empty();
        for (const Vec2 c : corners) box.expand(rotate(c, theta));
        const Vec2 ext = scene.world_extent();
        const double slack_x = ext.x - box.width(), slack_y = ext.y - box.height();
        if (slack_x < 0.0 || slack_y < 0.0) continue;
        scene.leaf_pose.rotation = theta;
        scene.leaf_pose.translation = {-box.min.x + rng.uniform(0.0, slack_x), -box.min.y + rng.uniform(0.0, slack_y)};
        return scene;
    }
    throw PlacementError("leaf does not fit the framed region within the gamma range");
}

inline PaperSheet make_paper(const GenerationConfig& cfg, const SceneParams& scene, NoiseSeed seed) {
    RandomStream rng(seed, "paper.choices");
    const auto& pc = cfg.paper;
    auto stripes = [&] {
        StripeParams s;
        s.frequency = 2.0 * pi / pc.grid_spacing_mm;
        s.amplitude = sample(rng, pc.stripe_amplitude);
        s.baseline = 1.0 - s.amplitude;
        s.phase = rng.uniform(0.0, 2.0 * pi);
        return s;
    };
    const StripeParams sx = stripes(), sy = stripes();
    PaperAppearance a;
    a.hue_shift_deg = sample(rng, pc.hue_shift_deg);
    a.contrast = sample(rng, pc.contrast);
    a.brightness = sample(rng, pc.brightness);
    a.saturation = sample(rng, pc.saturation);
    NoiseBlendWeights w{rng.uniform(), rng.uniform(), rng.uniform()};
    const double total = w.gradient + w.voronoi + w.value;
    a.blend_weights = {w.gradient / total, w.voronoi / total, w.value / total};
    a.noise_strength = sample(rng, pc.noise_strength);
    a.base_color = {rng.uniform(0.93, 0.99), rng.uniform(0.91, 0.97), rng.uniform(0.82, 0.92)};
    a.blur_sigma_px = rng.bernoulli(pc.blur_probability) ? sample(rng, pc.blur_sigma_px) : 0.0;
    const Vec2 ext = scene.world_extent();
    return render_paper(sx, sy, a, ext.x, ext.y, 1.0 / scene.mm_per_pixel(), seed.child("paper"));
}

inline PassSampling pass_sampling(const GenerationConfig& cfg) {
    PassSampling p;
    p.shadow_strength_min = cfg.render.shadow_strength.min;
    p.shadow_strength_max = cfg.render.shadow_strength.max;
    p.shadow_offset_max_mm = cfg.render.shadow_offset_max_mm;
    p.shadow_size_min_mm = cfg.render.shadow_size_mm.min;
    p.shadow_size_max_mm = cfg.render.shadow_size_mm.max;
    p.light_elevation_min_deg = cfg.render.light_elevation_deg.min;
    p.light_elevation_max_deg = cfg.render.light_elevation_deg.max;
    p.ambient_min = cfg.render.ambient.min;
    p.ambient_max = cfg.render.ambient.max;
    return p;
}

inline CannyParams edge_params(const GenerationConfig& cfg) { return {cfg.edges.sigma, cfg.edges.low, cfg.edges.high}; }

struct Datapoint {
    Annotation annotation;
    RasterImage image;
    BinaryMask mask;
    BinaryMask edges;
};

struct LeafResult {
    std::vector<Datapoint> datapoints;
    LeafArtifacts leaf;
    int attempts = 1;
};

inline std::string image_rel(const std::string& id) { return "images/" + id + ".png"; }
inline std::string mask_rel(const std::string& id) { return "masks/" + id + ".png"; }
inline std::string edge_rel(const std::string& id) { return "edges/" + id + ".png"; }
inline std::string inpainted_rel(const std::string& id) { return "inpainted/" + id + ".png"; }

inline constexpr int kMaxLeafAttempts = 8;

// Renders all passes of one leaf. Generation, placement and annotation
// failures resample the leaf from a fresh attempt seed.
inline LeafResult generate_leaf(const GenerationConfig& cfg, std::size_t leaf_index) {
    const Species species = sample_species(cfg.species_mix, derive_seed(cfg.master_seed, leaf_index, "species"));
    const NoiseSeed base = derive_seed(cfg.master_seed, leaf_index, "leaf");
    std::string last_error;
    for (int attempt = 0; attempt < kMaxLeafAttempts; ++attempt) {
        const NoiseSeed seed = attempt == 0 ? base : base.child("attempt", static_cast<std::uint64_t>(attempt));
        try {
            LeafResult r;
            r.attempts = attempt + 1;
            r.leaf = build_leaf(cfg, species, seed);
            SceneParams scene = place_leaf(r.leaf.surface, cfg, seed.child("place"));
            const BinaryMask mask = render_mask(r.leaf.surface, scene);
            RandomStream rng(seed, "distractor.count");
            const int n_distractors = static_cast<int>(rng.uniform_int(0, cfg.render.max_distractors));
            scene.distractors = place_distractors(mask, scene, n_distractors, seed.child("distractors"));
            const PaperSheet paper = make_paper(cfg, scene, seed.child("paper"));
            auto passes = render_passes(r.leaf.surface, paper, scene, seed.child("passes"), pass_sampling(cfg),
                                        cfg.passes_per_leaf);
            const EdgeMode mode = parse_edge_mode(cfg.edges.mode);
            for (auto& dp : passes) {
                Datapoint d;
                d.annotation = annotate_datapoint(dp, r.leaf.mesh);
                d.annotation.id = datapoint_id(leaf_index, dp.pass_index);
                d.annotation.seed = seed.value;
                d.annotation.image_path = image_rel(d.annotation.id);
                d.annotation.mask_path = mask_rel(d.annotation.id);
                d.annotation.edge_path = edge_rel(d.annotation.id);
                d.edges = conditioning_edges(dp.image, dp.mask, mode, edge_params(cfg));
                d.image = std::move(dp.image);
                d.mask = std::move(dp.mask);
                r.datapoints.push_back(std::move(d));
            }
            return r;
        } catch (const GenerationError& e) {
            last_error = e.what();
        } catch (const PlacementError& e) {
            last_error = e.what();
        } catch (const AnnotationError& e) {
            last_error = e.what();
        }
    }
    throw GenerationError("leaf " + std::to_string(leaf_index) + " failed after " + std::to_string(kMaxLeafAttempts) +
                          " attempts: " + last_error);
}

// ---------------------------------------------------------------------------
// Manifest

struct ManifestHeader {
    int schema_version = kManifestSchemaVersion;
    std::string config_hash;
    std::string created_at;
    std::string tool_version{kToolVersion};
    std::string stage = "generate";
};

inline void to_json(nlohmann::json& j, const ManifestHeader& h) {
    j = {{"schema_version", h.schema_version},
         {"config_hash", h.config_hash},
         {"created_at", h.created_at},
         {"tool_version", h.tool_version},
         {"stage", h.stage}};
}

inline void from_json(const nlohmann::json& j, ManifestHeader& h) {
    h.schema_version = j.at("schema_version").get<int>();
    h.config_hash = j.at("config_hash").get<std::string>();
    h.created_at = j.value("created_at", std::string{});
    h.tool_version = j.value("tool_version", std::string{});
    h.stage = j.value("stage", std::string("generate"));
}

struct DatasetManifest {
    ManifestHeader header;
    std::vector<Annotation> entries;

    bool operator==(const DatasetManifest& o) const {
        return header.schema_version == o.header.schema_version && header.config_hash == o.header.config_hash &&
               header.created_at == o.header.created_at && header.tool_version == o.header.tool_version &&
               header.stage == o.header.stage && entries == o.entries;
    }
};

inline std::string utc_timestamp() {
    const std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline std::string serialize_manifest(const DatasetManifest& m) {
    std::string out = nlohmann::json(m.header).dump() + "\n";
    for (const auto& e : m.entries) out += nlohmann::json(e).dump() + "\n";
    return out;
}

inline DatasetManifest parse_manifest(std::string_view text) {
    DatasetManifest m;
    bool have_header = false;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const std::size_t end = std::min(text.find('\n', pos), text.size());
        const std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (line.empty()) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            if (!have_header) {
                if (!j.contains("schema_version")) throw IoError("manifest line 1 is not a header");
                m.header = j.get<ManifestHeader>();
                have_header = true;
            } else {
                m.entries.push_back(j.get<Annotation>());
            }
        } catch (const nlohmann::json::exception& e) {
            throw IoError("manifest line " + std::to_string(line_no) + ": " + e.what());
        } catch (const InputError& e) {
            throw IoError("manifest line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    if (!have_header) throw IoError("manifest is empty");
    if (m.header.schema_version != kManifestSchemaVersion)
        throw IoError("unsupported manifest schema_version " + std::to_string(m.header.schema_version));
    return m;
}

inline std::string read_text(const fs::path& path) {
    const auto bytes = detail::read_file(path);
    return std::string(bytes.begin(), bytes.end());
}

inline DatasetManifest read_manifest(const fs::path& path) { return parse_manifest(read_text(path)); }

inline void write_manifest(const fs::path& path, const DatasetManifest& m) { write_file_atomic(path, serialize_manifest(m)); }

// Leaf index and pass parsed back from "000123_2".
inline std::pair<std::size_t, int> parse_datapoint_id(const std::string& id) {
    const auto us = id.find('_');
    if (us == std::string::npos || us == 0 || us + 1 >= id.size()) throw InputError("malformed datapoint id '" + id + "'");
    try {
        return {static_cast<std::size_t>(std::stoull(id.substr(0, us))), std::stoi(id.substr(us + 1))};
    } catch (const std::exception&) {
        throw InputError("malformed datapoint id '" + id + "'");
    }
}

// ---------------------------------------------------------------------------
// Generation driver

struct DatasetPaths {
    fs::path root;
    fs::path manifest() const { return root / "manifest.jsonl"; }
    fs::path partial() const { return root / "manifest.partial.jsonl"; }
    fs::path inpainted_manifest() const { return root / "manifest.inpainted.jsonl"; }
    fs::path filtered_manifest() const { return root / "manifest.filtered.jsonl"; }
    fs::path rejected_manifest() const { return root / "manifest.rejected.jsonl"; }
    fs::path config_snapshot() const { return root / "config.effective.json"; }
    fs::path errors() const { return root / "errors.jsonl"; }
    fs::path report_dir() const { return root / "report"; }
};

inline void ensure_layout(const fs::path& root) {
    std::error_code ec;
    for (const char* sub : {"images", "masks", "edges", "inpainted", "report"}) {
        fs::create_directories(root / sub, ec);
        if (ec) throw IoError("cannot create " + (root / sub).string() + ": " + ec.message());
    }
}

struct GenerateOptions {
    Logger log = [](const std::string&) {};
    // Stops after this many leaves have been written (simulated interrupt).
    std::optional<std::size_t> stop_after_leaves;
};

struct GenerateSummary {
    DatasetManifest manifest;
    std::size_t leaves_generated = 0;
    std::size_t leaves_resumed = 0;
    std::size_t leaves_failed = 0;
    bool complete = false;
};

namespace detail {

inline bool datapoint_files_exist(const fs::path& root, const Annotation& a) {
    return fs::exists(root / a.image_path) && fs::exists(root / a.mask_path) &&
           (a.edge_path.empty() || fs::exists(root / a.edge_path));
}

// Entries of fully written leaves from an earlier partial run.
inline std::map<std::size_t, std::vector<Annotation>> load_resumable(const DatasetPaths& paths,
                                                                     const std::string& hash, int passes) {
    std::map<std::size_t, std::vector<Annotation>> by_leaf;
    if (!fs::exists(paths.partial())) return by_leaf;
    const std::string text = read_text(paths.partial());
    std::size_t pos = 0;
    bool header = true;
    while (pos < text.size()) {
        const std::size_t end = text.find('\n', pos);
        if (end == std::string::npos) break; // torn final line
        const std::string line = text.substr(pos, end - pos);
        pos = end + 1;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception&) {
            continue;
        }
        if (header) {
            header = false;
            if (j.value("config_hash", std::string{}) != hash)
                throw ConfigError("output directory holds a partial run with a different configuration");
            continue;
        }
        try {
            Annotation a = j.get<Annotation>();
            by_leaf[parse_datapoint_id(a.id).first].push_back(std::move(a));
        } catch (const std::exception&) {
        }
    }
    for (auto it = by_leaf.begin(); it != by_leaf.end();) {
        bool ok = static_cast<int>(it->second.size()) == passes;
        for (const auto& a : it->second) ok = ok && datapoint_files_exist(paths.root, a);
        it = ok ? std::next(it) : by_leaf.erase(it);
    }
    return by_leaf;
}

inline void append_line(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::app | std::ios::binary);
    out << text;
    out.flush();
    if (!out) throw IoError("cannot append to " + path.string());
}

} // namespace detail

inline void write_datapoint(const fs::path& root, const Datapoint& d) {
    write_png(root / d.annotation.image_path, d.image);
    write_png(root / d.annotation.mask_path, d.mask);
    write_png(root / d.annotation.edge_path, d.edges);
}

// Generates n_leaves x passes_per_leaf datapoints into cfg.output_dir.
// Leaves already present in manifest.partial.jsonl (with their files) are
// skipped, so an interrupted run resumes where it stopped.
inline GenerateSummary generate(const GenerationConfig& cfg, const GenerateOptions& opts = {}) {
    cfg.validate();
    const DatasetPaths paths{cfg.output_dir};
    ensure_layout(paths.root);
    const std::string hash = config_hash(cfg);
    write_file_atomic(paths.config_snapshot(), config_to_json(cfg).dump(2) + "\n");

    GenerateSummary summary;
    auto done = detail::load_resumable(paths, hash, cfg.passes_per_leaf);
    summary.leaves_resumed = done.size();
    {
        DatasetManifest partial;
        partial.header.config_hash = hash;
        partial.header.created_at = utc_timestamp();
        for (const auto& [leaf, entries] : done)
            partial.entries.insert(partial.entries.end(), entries.begin(), entries.end());
        write_manifest(paths.partial(), partial);
    }
    if (done.empty() && fs::exists(paths.errors())) fs::remove(paths.errors());
    if (summary.leaves_resumed > 0) opts.log("resuming: " + std::to_string(summary.leaves_resumed) + " leaves already written");

    std::vector<std::size_t> todo;
    for (std::size_t i = 0; i < static_cast<std::size_t>(cfg.n_leaves); ++i)
        if (!done.count(i)) todo.push_back(i);

    std::mutex mu;
    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> written{0};
    std::atomic<bool> stop{false};
    auto worker = [&] {
        while (!stop) {
            const std::size_t k = next++;
            if (k >= todo.size()) return;
            const std::size_t leaf = todo[k];
            try {
                LeafResult r = generate_leaf(cfg, leaf);
                for (const auto& d : r.datapoints) write_datapoint(paths.root, d);
                std::string lines;
                std::vector<Annotation> entries;
                for (const auto& d : r.datapoints) {
                    lines += nlohmann::json(d.annotation).dump() + "\n";
                    entries.push_back(d.annotation);
                }
                std::lock_guard lock(mu);
                if (stop) return;
                detail::append_line(paths.partial(), lines);
                done[leaf] = std::move(entries);
                ++summary.leaves_generated;
                const std::size_t w = ++written;
                if (w % 25 == 0) opts.log("generated " + std::to_string(w) + "/" + std::to_string(todo.size()) + " leaves");
                if (opts.stop_after_leaves && w >= *opts.stop_after_leaves) stop = true;
            } catch (const Error& e) {
                std::lock_guard lock(mu);
                ++summary.leaves_failed;
                nlohmann::json err{{"leaf_index", leaf}, {"category", e.category()}, {"message", e.what()}};
                detail::append_line(paths.errors(), err.dump() + "\n");
                opts.log("leaf " + std::to_string(leaf) + " failed: " + e.what());
            }
        }
    };
    const int jobs = std::max(1, std::min<int>(cfg.jobs, static_cast<int>(std::max<std::size_t>(todo.size(), 1))));
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    DatasetManifest m;
    m.header.config_hash = hash;
    m.header.created_at = utc_timestamp();
    for (const auto& [leaf, entries] : done) m.entries.insert(m.entries.end(), entries.begin(), entries.end());
    std::sort(m.entries.begin(), m.entries.end(), [](const Annotation& a, const Annotation& b) {
        return parse_datapoint_id(a.id) < parse_datapoint_id(b.id);
    });
    summary.complete = !stop && done.size() == static_cast<std::size_t>(cfg.n_leaves);
    if (summary.complete) {
        write_manifest(paths.manifest(), m);
        fs::remove(paths.partial());
    }
    summary.manifest = std::move(m);
    return summary;
}

// ---------------------------------------------------------------------------
// Inpainting stage

struct InpaintStageSummary {
    DatasetManifest manifest;
    std::size_t inpainted = 0;
    std::size_t failed = 0;
};

inline InpaintRequest make_request(const fs::path& root, const Annotation& a, const InpaintConfig& ic) {
    InpaintRequest req;
    req.image = read_png_rgb(root / a.image_path);
    req.region_mask = read_png_mask(root / a.mask_path);
    req.edge_condition = a.edge_path.empty() ? BinaryMask(req.image.width(), req.image.height(), 0)
                                             : read_png_mask(root / a.edge_path);
    req.prompt = prompt_for(a.species, ic.prompt_template);
    req.request_seed = mix(a.seed, static_cast<std::uint64_t>(a.pass_index));
    req.timeout = std::chrono::milliseconds(ic.timeout_ms);
    req.steps = ic.steps;
    req.guidance = ic.guidance;
    return req;
}

// Inpaints every entry, restores the procedural background from the
// pre-inpainting composite and writes inpainted/<id>.png. Area labels are
// never touched; failed entries keep provenance "rendered".
inline InpaintStageSummary run_inpaint_stage(const DatasetManifest& manifest, const fs::path& root,
                                             InpaintClient& client, const InpaintConfig& ic, int concurrency,
                                             const Logger& log = [](const std::string&) {}) {
    InpaintStageSummary s;
    s.manifest = manifest;
    s.manifest.header.stage = "inpaint";
    s.manifest.header.created_at = utc_timestamp();
    std::error_code ec;
    fs::create_directories(root / "inpainted", ec);
    std::mutex mu;
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next++;
            if (i >= s.manifest.entries.size()) return;
            const Annotation& a = manifest.entries[i];
            try {
                const InpaintRequest req = make_request(root, a, ic);
                const InpaintResponse resp = client.inpaint(req);
                const RasterImage out = replace_background(resp.image, req.region_mask, req.image);
                const std::string rel = inpainted_rel(a.id);
                write_png(root / rel, out);
                std::lock_guard lock(mu);
                s.manifest.entries[i].inpainted_path = rel;
                s.manifest.entries[i].provenance = Provenance::inpainted;
                ++s.inpainted;
            } catch (const Error& e) {
                std::lock_guard lock(mu);
                ++s.failed;
                log("inpaint " + a.id + " failed (" + e.category() + "): " + e.what());
            }
        }
    };
    const int n = std::max(1, concurrency);
    std::vector<std::thread> pool;
    for (int j = 0; j < n; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    return s;
}

// ---------------------------------------------------------------------------
// Filtering stage

// Returns the predicted mask for an entry, or nullopt when unavailable.
using PredictionSource = std::function<std::optional<BinaryMask>(const Annotation&)>;

inline fs::path appearance_path(const fs::path& root, const Annotation& a) {
    return root / (a.inpainted_path.empty() ? a.image_path : a.inpainted_path);
}

inline PredictionSource baseline_predictions(const fs::path& root, BaselineSegmentParams params = {}) {
    return [root, params](const Annotation& a) -> std::optional<BinaryMask> {
        const fs::path p = appearance_path(root, a);
        if (!fs::exists(p)) return std::nullopt;
        return baseline_segment(read_png_rgb(p), params);
    };
}

// Sidecar masks named <id>.png from any external segmenter.
inline PredictionSource sidecar_predictions(const fs::path& dir) {
    return [dir](const Annotation& a) -> std::optional<BinaryMask> {
        const fs::path p = dir / (a.id + ".png");
        if (!fs::exists(p)) return std::nullopt;
        return read_png_mask(p);
    };
}

struct FilterEntry {
    std::string id;
    std::optional<double> deviation;
    bool kept = false;
    std::string reason; // set for unscored entries
};

struct FilterResult {
    DatasetManifest kept;
    DatasetManifest rejected;
    std::vector<FilterEntry> entries;
    std::vector<std::string> unscored;
    nlohmann::json report;
};

// Linear interpolation between closest ranks.
inline double percentile(std::vector<double> v, double q) {
    if (v.empty()) throw InputError("percentile of an empty sample");
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (v[hi] - v[lo]) * (pos - static_cast<double>(lo));
}

// Truth mask boundary in green and predicted boundary in red over the image.
inline RasterImage overlay(const RasterImage& image, const BinaryMask& truth, const BinaryMask& predicted) {
    RasterImage out = image;
    const BinaryMask tb = inner_boundary(truth), pb = inner_boundary(predicted);
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (pb[i]) out[i] = {230, 30, 30};
        if (tb[i]) out[i] = {30, 210, 60};
    }
    return out;
}

inline FilterResult filter_dataset(const DatasetManifest& manifest, const fs::path& root, const PredictionSource& predict,
                                   double threshold, DeviationMetric metric = DeviationMetric::symmetric_difference,
                                   std::optional<fs::path> gallery_dir = std::nullopt) {
    if (!(threshold >= 0.0)) throw InputError("filter threshold must be non-negative");
    FilterResult r;
    r.kept.header = r.rejected.header = manifest.header;
    r.kept.header.stage = "filter";
    r.rejected.header.stage = "filter_rejected";
    r.entries.resize(manifest.entries.size());
    std::vector<std::optional<BinaryMask>> predictions(manifest.entries.size());

    for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
        const Annotation& a = manifest.entries[i];
        FilterEntry& fe = r.entries[i];
        fe.id = a.id;
        std::optional<BinaryMask> pred;
        try {
            pred = predict(a);
        } catch (const Error& e) {
            fe.reason = std::string("prediction failed: ") + e.what();
        }
        if (!pred) {
            if (fe.reason.empty()) fe.reason = "missing prediction";
            r.unscored.push_back(a.id);
            continue;
        }
        const BinaryMask truth = read_png_mask(root / a.mask_path);
        if (!pred->same_shape(truth)) {
            fe.reason = "prediction resolution differs from the mask";
            r.unscored.push_back(a.id);
            continue;
        }
        const FilterDecision d = decide(deviation_by(metric, *pred, truth), threshold);
        fe.deviation = d.deviation;
        fe.kept = d.kept;
        Annotation out = a;
        if (d.kept) {
            if (out.provenance == Provenance::inpainted) out.provenance = Provenance::inpainted_filtered;
            r.kept.entries.push_back(out);
        } else {
            r.rejected.entries.push_back(out);
            if (gallery_dir) {
                std::error_code ec;
                fs::create_directories(*gallery_dir, ec);
                write_png(*gallery_dir / (a.id + "_overlay.png"), overlay(read_png_rgb(appearance_path(root, a)), truth, *pred));
            }
        }
    }

    std::vector<double> devs;
    nlohmann::json per_entry = nlohmann::json::array();
    for (const auto& fe : r.entries) {
        if (fe.deviation) {
            devs.push_back(*fe.deviation);
            per_entry.push_back({{"id", fe.id}, {"deviation", *fe.deviation}, {"kept", fe.kept}});
        } else {
            per_entry.push_back({{"id", fe.id}, {"status", "unscored"}, {"reason", fe.reason}});
        }
    }
    const std::size_t scored = devs.size();
    nlohmann::json stats = nullptr;
    if (scored > 0) {
        double sum = 0.0;
        for (double d : devs) sum += d;
        stats = {{"mean", sum / static_cast<double>(scored)},
                 {"p50", percentile(devs, 0.5)},
                 {"p90", percentile(devs, 0.9)},
                 {"p95", percentile(devs, 0.95)},
                 {"max", *std::max_element(devs.begin(), devs.end())}};
    }
    r.report = {{"threshold", threshold},
                {"metric", std::string(to_string(metric))},
                {"n_input", manifest.entries.size()},
                {"n_scored", scored},
                {"n_kept", r.kept.entries.size()},
                {"n_rejected", r.rejected.entries.size()},
                {"n_unscored", r.unscored.size()},
                {"rejection_rate", scored ? static_cast<double>(r.rejected.entries.size()) / static_cast<double>(scored) : 0.0},
                {"deviation", stats},
                {"entries", per_entry}};
    return r;
}

// Runs the filter and writes the kept/rejected manifests and the report.
inline FilterResult run_filter_stage(const DatasetManifest& manifest, const fs::path& root,
                                     const PredictionSource& predict, double threshold,
                                     DeviationMetric metric = DeviationMetric::symmetric_difference,
                                     bool gallery = true) {
    const DatasetPaths paths{root};
    std::error_code ec;
    fs::create_directories(paths.report_dir(), ec);
    std::optional<fs::path> gdir;
    if (gallery) gdir = paths.report_dir() / "gallery";
    FilterResult r = filter_dataset(manifest, root, predict, threshold, metric, gdir);
    write_manifest(paths.filtered_manifest(), r.kept);
    write_manifest(paths.rejected_manifest(), r.rejected);
    write_file_atomic(paths.report_dir() / "filter_report.json", r.report.dump(2) + "\n");
    return r;
}

// ---------------------------------------------------------------------------
// Validation and statistics

struct ValidationOptions {
    bool check_files = true;
    std::optional<int> expected_entries;
    std::optional<std::string> expected_hash;
};

// Re-checks manifest invariants; returns one message per violation.
inline std::vector<std::string> validate_manifest(const DatasetManifest& m, const fs::path& root,
                                                  const ValidationOptions& opts = {}) {
    std::vector<std::string> v;
    if (opts.expected_hash && m.header.config_hash != *opts.expected_hash)
        v.push_back("config_hash does not match the config snapshot");
    if (opts.expected_entries && static_cast<int>(m.entries.size()) != *opts.expected_entries)
        v.push_back("expected " + std::to_string(*opts.expected_entries) + " entries, found " + std::to_string(m.entries.size()));
    std::set<std::string> ids;
    for (const auto& a : m.entries) {
        const std::string& id = a.id;
        if (!ids.insert(id).second) v.push_back(id + ": duplicate id");
        try {
            if (parse_datapoint_id(id).second != a.pass_index) v.push_back(id + ": pass index disagrees with id");
        } catch (const InputError& e) {
            v.push_back(e.what());
        }
        if (!(a.mm_per_pixel > 0.0) || !(a.gamma > 0.0)) v.push_back(id + ": non-positive gamma or mm_per_pixel");
        if (!(a.projected_area_mm2 > 0.0)) v.push_back(id + ": non-positive projected area");
        if (a.surface_area_mm2 < a.projected_area_mm2 * (1.0 - 1e-9))
            v.push_back(id + ": surface area below projected area");
        if (a.mask_pixel_count == 0 || a.mask_area_error() > kMaskAreaTolerance)
            v.push_back(id + ": mask area deviates from geometry beyond tolerance");
        if (a.provenance != Provenance::rendered && a.inpainted_path.empty())
            v.push_back(id + ": inpainted provenance without an inpainted image");
        if (!opts.check_files) continue;
        auto check_png = [&](const std::string& rel, bool mask) {
            if (rel.empty()) return;
            const fs::path p = root / rel;
            if (!fs::exists(p)) {
                v.push_back(id + ": missing file " + rel);
                return;
            }
            try {
                if (mask) {
                    const BinaryMask b = read_png_mask(p);
                    if (b.width() != a.width || b.height() != a.height) v.push_back(id + ": wrong resolution " + rel);
                    if (rel == a.mask_path && count_foreground(b) != a.mask_pixel_count)
                        v.push_back(id + ": mask pixel count disagrees with the annotation");
                } else {
                    const RasterImage img = read_png_rgb(p);
                    if (img.width() != a.width || img.height() != a.height) v.push_back(id + ": wrong resolution " + rel);
                }
            } catch (const Error& e) {
                v.push_back(id + ": undecodable " + rel + " (" + e.what() + ")");
            }
        };
        check_png(a.image_path, false);
        check_png(a.mask_path, true);
        check_png(a.edge_path, true);
        check_png(a.inpainted_path, false);
        if (a.edge_path.empty()) v.push_back(id + ": no edge map");
    }
    return v;
}

inline nlohmann::json dataset_stats(const DatasetManifest& m, double bin_mm2 = 500.0) {
    std::map<std::string, std::size_t> species, provenance;
    std::map<int, std::size_t> hist;
    double sum_area = 0.0, gmin = 0.0, gmax = 0.0;
    for (std::size_t i = 0; i < m.entries.size(); ++i) {
        const auto& a = m.entries[i];
        ++species[std::string(to_string(a.species))];
        ++provenance[std::string(to_string(a.provenance))];
        ++hist[static_cast<int>(a.surface_area_mm2 / bin_mm2)];
        sum_area += a.surface_area_mm2;
        gmin = i == 0 ? a.gamma : std::min(gmin, a.gamma);
        gmax = i == 0 ? a.gamma : std::max(gmax, a.gamma);
    }
    nlohmann::json h = nlohmann::json::array();
    for (const auto& [bin, n] : hist) h.push_back({{"from_mm2", bin * bin_mm2}, {"to_mm2", (bin + 1) * bin_mm2}, {"count", n}});
    return {{"n_entries", m.entries.size()},
            {"config_hash", m.header.config_hash},
            {"species", species},
            {"provenance", provenance},
            {"surface_area_histogram", h},
            {"mean_surface_area_mm2", m.entries.empty() ? 0.0 : sum_area / static_cast<double>(m.entries.size())},
            {"gamma_range", {gmin, gmax}}};
}

// Contact sheet of the first n datapoints: image with mask outline.
inline RasterImage contact_sheet(const DatasetManifest& m, const fs::path& root, int n, int thumb = 128, int columns = 4) {
    n = std::min<int>(n, static_cast<int>(m.entries.size()));
    if (n <= 0) throw InputError("nothing to preview");
    const int cols = std::min(columns, n), rows = (n + cols - 1) / cols;
    RasterImage sheet(cols * thumb, rows * thumb, Rgb8{255, 255, 255});
    for (int k = 0; k < n; ++k) {
        const auto& a = m.entries[k];
        const RasterImage img = read_png_rgb(appearance_path(root, a));
        const BinaryMask mask = read_png_mask(root / a.mask_path);
        const RasterImage ov = overlay(img, mask, BinaryMask(mask.width(), mask.height(), 0));
        const int ox = (k % cols) * thumb, oy = (k / cols) * thumb;
        for (int y = 0; y < thumb; ++y)
            for (int x = 0; x < thumb; ++x) {
                const int sx = x * ov.width() / thumb, sy = y * ov.height() / thumb;
                sheet(ox + x, oy + y) = ov(sx, sy);
            }
    }
    return sheet;
}

} // namespace leafsynth
