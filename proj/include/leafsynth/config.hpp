#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include <nlohmann/json.hpp>

#include "leafsynth/edges.hpp"
#include "leafsynth/error.hpp"
#include "leafsynth/filter_metrics.hpp"
#include "leafsynth/leaf_shape.hpp"

namespace leafsynth {

struct Range {
    double min = 0.0;
    double max = 0.0;
    bool valid() const { return std::isfinite(min) && std::isfinite(max) && min <= max; }
};

inline void to_json(nlohmann::json& j, const Range& r) { j = nlohmann::json::array({r.min, r.max}); }
inline void from_json(const nlohmann::json& j, Range& r) {
    if (!j.is_array() || j.size() != 2) throw ConfigError("range must be a two-element array [min, max]");
    r.min = j[0].get<double>();
    r.max = j[1].get<double>();
}

struct LeafConfig {
    double perturb_amplitude_mm = 1.5;
    int outline_stations = 96;
    int rows_per_side = 14;
    double flat_probability = 0.25;
    Range displacement_mm{0.5, 3.0};
    double displacement_density = 0.06; // Voronoi cells per mm
    double erosion_probability = 0.35;
    Range erosion_mm{0.3, 1.2};
    double hole_probability = 0.3;
    Range hole_density{0.05, 0.25}; // per cm^2
    double spot_probability = 0.3;
    Range spot_density{0.1, 0.5};
    Range petiole_length_mm{4.0, 12.0};
    double petiole_half_width_mm = 0.6;
};

struct VenationConfig {
    int branch_levels = 3;
    int branches_per_level = 2;
    Range midrib_stations{6, 9};
    Range branch_angle_deg{40.0, 60.0};
    double step_sigma = 0.06;
    double base_thickness_mm = 0.9;
    double thickness_decay = 0.55;
};

struct PaperConfig {
    double grid_spacing_mm = 1.0;
    Range stripe_amplitude{0.18, 0.3};
    Range hue_shift_deg{-15.0, 15.0};
    Range contrast{0.85, 1.15};
    Range brightness{-0.06, 0.04};
    Range saturation{0.7, 1.2};
    Range noise_strength{0.03, 0.15};
    double blur_probability = 0.3;
    Range blur_sigma_px{0.3, 0.8};
};

struct RenderConfig {
    int resolution = 512;
    double camera_extent_mm = 120.0;
    Range gamma{1.0, 1.6};
    int max_distractors = 2;
    Range shadow_strength{0.15, 0.5};
    double shadow_offset_max_mm = 2.0;
    Range shadow_size_mm{0.4, 2.0};
    Range ambient{0.35, 0.6};
    Range light_elevation_deg{45.0, 85.0};
};

struct EdgeConfig {
    std::string mode = "combined";
    double sigma = 1.4;
    double low = 40.0;
    double high = 100.0;
};

struct InpaintConfig {
    std::string endpoint = "mock:identity";
    int timeout_ms = 30000;
    int retries = 3;
    int backoff_ms = 200;
    int max_in_flight = 4;
    int steps = 30;
    double guidance = 7.5;
    std::string prompt_template = "{species} leaf on millimeter paper";
};

struct FilterConfig {
    double threshold = kDefaultFilterThreshold;
    std::string metric = "symmetric_difference";
    std::string predictions = "baseline"; // or a directory of <id>.png masks
    bool gallery = true;
};

struct GenerationConfig {
    int n_leaves = 25;
    int passes_per_leaf = 4;
    std::uint64_t master_seed = 1;
    std::map<std::string, double> species_mix{{"beech", 0.5}, {"oak", 0.5}};
    std::string output_dir = "out";
    int jobs = 1;
    LeafConfig leaf;
    VenationConfig venation;
    PaperConfig paper;
    RenderConfig render;
    EdgeConfig edges;
    InpaintConfig inpaint;
    FilterConfig filter;

    void validate() const;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(LeafConfig, perturb_amplitude_mm, outline_stations, rows_per_side,
                                   flat_probability, displacement_mm, displacement_density, erosion_probability,
                                   erosion_mm, hole_probability, hole_density, spot_probability, spot_density,
                                   petiole_length_mm, petiole_half_width_mm)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(VenationConfig, branch_levels, branches_per_level, midrib_stations,
                                   branch_angle_deg, step_sigma, base_thickness_mm, thickness_decay)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(PaperConfig, grid_spacing_mm, stripe_amplitude, hue_shift_deg, contrast,
                                   brightness, saturation, noise_strength, blur_probability, blur_sigma_px)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(RenderConfig, resolution, camera_extent_mm, gamma, max_distractors,
                                   shadow_strength, shadow_offset_max_mm, shadow_size_mm, ambient,
                                   light_elevation_deg)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(EdgeConfig, mode, sigma, low, high)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(InpaintConfig, endpoint, timeout_ms, retries, backoff_ms, max_in_flight, steps,
                                   guidance, prompt_template)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(FilterConfig, threshold, metric, predictions, gallery)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(GenerationConfig, n_leaves, passes_per_leaf, master_seed, species_mix,
                                   output_dir, jobs, leaf, venation, paper, render, edges, inpaint, filter)

inline void GenerationConfig::validate() const {
    auto check = [](bool ok, const std::string& what) {
        if (!ok) throw ConfigError(what);
    };
    auto prob = [&](double p, const char* name) { check(p >= 0.0 && p <= 1.0, std::string(name) + " must be in [0, 1]"); };
    auto range = [&](const Range& r, const char* name, double lo) {
        check(r.valid() && r.min >= lo, std::string(name) + " must be a valid range with min >= " + std::to_string(lo));
    };
    check(n_leaves > 0, "n_leaves must be positive");
    check(passes_per_leaf > 0, "passes_per_leaf must be positive");
    check(jobs > 0, "jobs must be positive");
    check(!species_mix.empty(), "species_mix must not be empty");
    double total = 0.0;
    for (const auto& [name, p] : species_mix) {
        try {
            parse_species(name);
        } catch (const InputError&) {
            throw ConfigError("species_mix names unknown species '" + name + "'");
        }
        check(p >= 0.0, "species_mix proportions must be non-negative");
        total += p;
    }
    check(std::abs(total - 1.0) <= 1e-9, "species_mix proportions must sum to 1");

    check(leaf.perturb_amplitude_mm >= 0.0, "leaf.perturb_amplitude_mm must be non-negative");
    check(leaf.outline_stations >= 8 && leaf.rows_per_side >= 1, "leaf.outline_stations >= 8 and rows_per_side >= 1");
    prob(leaf.flat_probability, "leaf.flat_probability");
    prob(leaf.erosion_probability, "leaf.erosion_probability");
    prob(leaf.hole_probability, "leaf.hole_probability");
    prob(leaf.spot_probability, "leaf.spot_probability");
    range(leaf.displacement_mm, "leaf.displacement_mm", 0.0);
    range(leaf.erosion_mm, "leaf.erosion_mm", 0.0);
    range(leaf.hole_density, "leaf.hole_density", 0.0);
    range(leaf.spot_density, "leaf.spot_density", 0.0);
    range(leaf.petiole_length_mm, "leaf.petiole_length_mm", 0.0);
    check(leaf.displacement_density > 0.0 && leaf.petiole_half_width_mm >= 0.0, "leaf displacement density / petiole width invalid");

    check(venation.branch_levels >= 1 && venation.branches_per_level >= 1, "venation levels and branches must be >= 1");
    range(venation.midrib_stations, "venation.midrib_stations", 1.0);
    range(venation.branch_angle_deg, "venation.branch_angle_deg", 1.0);
    check(venation.branch_angle_deg.max < 90.0, "venation.branch_angle_deg must stay below 90");
    check(venation.step_sigma >= 0.0 && venation.base_thickness_mm > 0.0 && venation.thickness_decay > 0.0 &&
              venation.thickness_decay <= 1.0,
          "venation thickness parameters invalid");

    check(paper.grid_spacing_mm > 0.0, "paper.grid_spacing_mm must be positive");
    range(paper.stripe_amplitude, "paper.stripe_amplitude", 0.0);
    check(paper.stripe_amplitude.max <= 0.5, "paper.stripe_amplitude must be <= 0.5");
    range(paper.hue_shift_deg, "paper.hue_shift_deg", -180.0);
    range(paper.contrast, "paper.contrast", 1e-6);
    range(paper.brightness, "paper.brightness", -1.0);
    range(paper.saturation, "paper.saturation", 0.0);
    range(paper.noise_strength, "paper.noise_strength", 0.0);
    check(paper.noise_strength.max <= 1.0, "paper.noise_strength must be <= 1");
    prob(paper.blur_probability, "paper.blur_probability");
    range(paper.blur_sigma_px, "paper.blur_sigma_px", 0.0);

    check(render.resolution >= 32, "render.resolution must be at least 32");
    check(render.camera_extent_mm > 0.0, "render.camera_extent_mm must be positive");
    range(render.gamma, "render.gamma", 1e-6);
    check(render.max_distractors >= 0, "render.max_distractors must be non-negative");
    range(render.shadow_strength, "render.shadow_strength", 0.0);
    check(render.shadow_strength.max <= 1.0, "render.shadow_strength must be <= 1");
    check(render.shadow_offset_max_mm >= 0.0, "render.shadow_offset_max_mm must be non-negative");
    range(render.shadow_size_mm, "render.shadow_size_mm", 0.0);
    range(render.ambient, "render.ambient", 0.0);
    check(render.ambient.max <= 1.0, "render.ambient must be <= 1");
    range(render.light_elevation_deg, "render.light_elevation_deg", 0.0);
    check(render.light_elevation_deg.max <= 90.0, "render.light_elevation_deg must be <= 90");

    try {
        parse_edge_mode(edges.mode);
        CannyParams{edges.sigma, edges.low, edges.high}.validate();
        parse_deviation_metric(filter.metric);
    } catch (const InputError& e) {
        throw ConfigError(e.what());
    }
    check(inpaint.timeout_ms > 0 && inpaint.retries >= 0 && inpaint.backoff_ms >= 0 && inpaint.max_in_flight >= 1,
          "inpaint timeout/retries/backoff/max_in_flight invalid");
    check(!inpaint.prompt_template.empty(), "inpaint.prompt_template must not be empty");
    check(filter.threshold >= 0.0, "filter.threshold must be non-negative");
}

namespace detail {

// Rejects keys in `patch` that do not exist in `base` (maps excepted).
inline void check_known_keys(const nlohmann::json& base, const nlohmann::json& patch, const std::string& prefix) {
    if (!patch.is_object()) return;
    for (const auto& [key, value] : patch.items()) {
        const std::string path = prefix.empty() ? key : prefix + "." + key;
        if (!base.contains(key)) throw ConfigError("unknown config key '" + path + "'");
        if (path == "species_mix") continue;
        if (base[key].is_object()) check_known_keys(base[key], value, path);
    }
}

inline GenerationConfig config_from_json(const nlohmann::json& j) {
    try {
        GenerationConfig c = j.get<GenerationConfig>();
        c.validate();
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config does not match the schema: ") + e.what());
    }
}

} // namespace detail

inline nlohmann::json config_to_json(const GenerationConfig& c) { return c; }

// Defaults, then `patch` merged on top; unknown keys are errors.
inline GenerationConfig merge_config(const GenerationConfig& base, const nlohmann::json& patch) {
    if (!patch.is_object()) throw ConfigError("config document must be a JSON object");
    nlohmann::json j = config_to_json(base);
    detail::check_known_keys(j, patch, "");
    if (patch.contains("species_mix")) j["species_mix"] = nlohmann::json::object();
    j.merge_patch(patch);
    return detail::config_from_json(j);
}

inline GenerationConfig load_config(const std::filesystem::path& path, const GenerationConfig& base = {}) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in, nullptr, true, true);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("cannot parse config " + path.string() + ": " + e.what());
    }
    return merge_config(base, j);
}

// "a.b.c=value"; the value is parsed as JSON, falling back to a string.
inline GenerationConfig apply_override(const GenerationConfig& base, std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos || eq == 0) throw ConfigError("override must look like key.path=value");
    const std::string key(assignment.substr(0, eq));
    const std::string text(assignment.substr(eq + 1));
    nlohmann::json value;
    try {
        value = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception&) {
        value = text;
    }
    nlohmann::json j = config_to_json(base);
    nlohmann::json* node = &j;
    std::stringstream ss(key);
    std::string part;
    std::vector<std::string> parts;
    while (std::getline(ss, part, '.')) parts.push_back(part);
    for (std::size_t i = 0; i < parts.size(); ++i) {
        const bool is_mix = i == 1 && parts[0] == "species_mix";
        if (!node->is_object() || (!node->contains(parts[i]) && !is_mix))
            throw ConfigError("override references unknown config key '" + key + "'");
        node = &(*node)[parts[i]];
    }
    *node = value;
    return detail::config_from_json(j);
}

// Parses "beech=0.5,oak=0.5".
inline std::map<std::string, double> parse_species_mix(std::string_view text) {
    std::map<std::string, double> mix;
    std::stringstream ss{std::string(text)};
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw ConfigError("species mix entries must look like name=proportion");
        try {
            mix[item.substr(0, eq)] = std::stod(item.substr(eq + 1));
        } catch (const std::exception&) {
            throw ConfigError("bad proportion in species mix entry '" + item + "'");
        }
    }
    return mix;
}

inline std::string sha256_hex(std::string_view data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw IoError("sha256 computation failed");
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 15]);
    }
    return out;
}

// Hash over every setting that affects the generated data; output_dir,
// jobs and the later-stage sections are excluded.
inline std::string config_hash(const GenerationConfig& c) {
    nlohmann::json j = config_to_json(c);
    for (const char* key : {"output_dir", "jobs", "inpaint", "filter"}) j.erase(key);
    return "sha256:" + sha256_hex(j.dump());
}

} // namespace leafsynth
