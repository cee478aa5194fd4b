#pragma once

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "leafsynth/config.hpp"
#include "leafsynth/dataset.hpp"
#include "leafsynth/inpaint_http.hpp"

namespace leafsynth {

// Stable process exit codes.
enum ExitCode : int {
    kExitOk = 0,
    kExitFailure = 1,
    kExitUsage = 2,
    kExitConfig = 3,
    kExitViolations = 4,
};

struct CliOptions {
    std::string config_path;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<int> n_leaves;
    std::optional<int> passes;
    std::optional<int> resolution;
    std::optional<double> gamma_min;
    std::optional<double> gamma_max;
    std::optional<std::string> endpoint;
    std::optional<int> jobs;
    std::optional<double> threshold;
    std::optional<std::string> deviation_metric;
    std::optional<std::string> species_mix;
    std::optional<std::string> edge_mode;
    std::optional<std::string> predictions;
    std::string manifest;
    std::vector<std::string> overrides;
    int preview_count = 8;
    bool quiet = false;
};

namespace detail {

inline void add_common(CLI::App* cmd, CliOptions& o) {
    cmd->add_option("--config", o.config_path, "JSON config file");
    cmd->add_option("--out", o.out, "dataset directory");
    cmd->add_option("--set", o.overrides, "dotted config override key.path=value (repeatable)");
    cmd->add_option("--seed", o.seed, "master seed");
    cmd->add_option("--n-leaves", o.n_leaves, "number of leaves");
    cmd->add_option("--passes", o.passes, "rendering passes per leaf");
    cmd->add_option("--resolution", o.resolution, "image width and height in pixels");
    cmd->add_option("--gamma-min", o.gamma_min, "lower background scale factor");
    cmd->add_option("--gamma-max", o.gamma_max, "upper background scale factor");
    cmd->add_option("--endpoint", o.endpoint, "inpainting service URL or mock:identity / mock:perturb");
    cmd->add_option("--jobs", o.jobs, "worker threads / in-flight requests");
    cmd->add_option("--threshold", o.threshold, "filter deviation threshold");
    cmd->add_option("--deviation-metric", o.deviation_metric, "symmetric_difference | pixel_count | iou");
    cmd->add_option("--species-mix", o.species_mix, "e.g. beech=0.5,oak=0.5");
    cmd->add_flag("-q,--quiet", o.quiet, "suppress progress logging");
}

// Base config: the dataset's snapshot if present, else defaults; then the
// config file, flags and --set overrides in that order.
inline GenerationConfig resolve_config(const CliOptions& o, bool from_snapshot) {
    GenerationConfig c;
    if (from_snapshot && !o.out.empty()) {
        const fs::path snap = DatasetPaths{o.out}.config_snapshot();
        if (fs::exists(snap)) c = load_config(snap);
    }
    if (!o.config_path.empty()) c = load_config(o.config_path, c);
    if (!o.out.empty()) c.output_dir = o.out;
    if (o.seed) c.master_seed = *o.seed;
    if (o.n_leaves) c.n_leaves = *o.n_leaves;
    if (o.passes) c.passes_per_leaf = *o.passes;
    if (o.resolution) c.render.resolution = *o.resolution;
    if (o.gamma_min) c.render.gamma.min = *o.gamma_min;
    if (o.gamma_max) c.render.gamma.max = *o.gamma_max;
    if (o.endpoint) c.inpaint.endpoint = *o.endpoint;
    if (o.jobs) {
        c.jobs = *o.jobs;
        c.inpaint.max_in_flight = *o.jobs;
    }
    if (o.threshold) c.filter.threshold = *o.threshold;
    if (o.deviation_metric) c.filter.metric = *o.deviation_metric;
    if (o.species_mix) c.species_mix = parse_species_mix(*o.species_mix);
    if (o.edge_mode) c.edges.mode = *o.edge_mode;
    if (o.predictions) c.filter.predictions = *o.predictions;
    for (const auto& s : o.overrides) c = apply_override(c, s);
    try {
        c.validate();
    } catch (const InputError& e) {
        throw ConfigError(e.what());
    }
    return c;
}

inline DatasetManifest load_stage_manifest(const CliOptions& o, const fs::path& fallback) {
    const fs::path p = o.manifest.empty() ? fallback : fs::path(o.manifest);
    if (!fs::exists(p)) throw IoError("manifest not found: " + p.string());
    return read_manifest(p);
}

inline int cmd_generate(const CliOptions& o, std::ostream& err) {
    const GenerationConfig cfg = resolve_config(o, false);
    Logger log = [&](const std::string& m) {
        if (!o.quiet) err << "[generate] " << m << '\n';
    };
    log("writing " + std::to_string(cfg.n_leaves * cfg.passes_per_leaf) + " datapoints to " + cfg.output_dir);
    const GenerateSummary s = generate(cfg, {log, std::nullopt});
    log("done: " + std::to_string(s.manifest.entries.size()) + " datapoints, " + std::to_string(s.leaves_failed) +
        " failed leaves");
    return s.complete && s.leaves_failed == 0 ? kExitOk : kExitFailure;
}

inline int cmd_edges(const CliOptions& o, std::ostream& err) {
    const GenerationConfig cfg = resolve_config(o, true);
    const DatasetPaths paths{cfg.output_dir};
    DatasetManifest m = load_stage_manifest(o, paths.manifest());
    const EdgeMode mode = parse_edge_mode(cfg.edges.mode);
    for (auto& a : m.entries) {
        const RasterImage img = read_png_rgb(paths.root / a.image_path);
        const BinaryMask mask = read_png_mask(paths.root / a.mask_path);
        if (a.edge_path.empty()) a.edge_path = edge_rel(a.id);
        write_png(paths.root / a.edge_path, conditioning_edges(img, mask, mode, edge_params(cfg)));
    }
    write_manifest(o.manifest.empty() ? paths.manifest() : fs::path(o.manifest), m);
    if (!o.quiet) err << "[edges] recomputed " << m.entries.size() << " edge maps (" << cfg.edges.mode << ")\n";
    return kExitOk;
}

inline int cmd_inpaint(const CliOptions& o, std::ostream& err) {
    const GenerationConfig cfg = resolve_config(o, true);
    const DatasetPaths paths{cfg.output_dir};
    const DatasetManifest m = load_stage_manifest(o, paths.manifest());
    RetryPolicy policy;
    policy.max_retries = cfg.inpaint.retries;
    policy.initial_backoff = std::chrono::milliseconds(cfg.inpaint.backoff_ms);
    InpaintClient client(make_backend(cfg.inpaint.endpoint), policy, cfg.inpaint.max_in_flight);
    Logger log = [&](const std::string& s) {
        if (!o.quiet) err << "[inpaint] " << s << '\n';
    };
    const auto s = run_inpaint_stage(m, paths.root, client, cfg.inpaint, cfg.inpaint.max_in_flight, log);
    write_manifest(paths.inpainted_manifest(), s.manifest);
    log(std::to_string(s.inpainted) + " inpainted, " + std::to_string(s.failed) + " failed (kept as rendered)");
    return kExitOk;
}

inline int cmd_filter(const CliOptions& o, std::ostream& err) {
    const GenerationConfig cfg = resolve_config(o, true);
    const DatasetPaths paths{cfg.output_dir};
    const fs::path input = fs::exists(paths.inpainted_manifest()) ? paths.inpainted_manifest() : paths.manifest();
    const DatasetManifest m = load_stage_manifest(o, input);
    const PredictionSource source = cfg.filter.predictions == "baseline" ? baseline_predictions(paths.root)
                                                                        : sidecar_predictions(cfg.filter.predictions);
    const auto r = run_filter_stage(m, paths.root, source, cfg.filter.threshold, parse_deviation_metric(cfg.filter.metric),
                                    cfg.filter.gallery);
    if (!o.quiet)
        err << "[filter] threshold " << cfg.filter.threshold << ": kept " << r.kept.entries.size() << ", rejected "
            << r.rejected.entries.size() << ", unscored " << r.unscored.size() << '\n';
    return kExitOk;
}

inline int cmd_stats(const CliOptions& o, std::ostream& out) {
    const DatasetPaths paths{o.out.empty() ? fs::path("out") : fs::path(o.out)};
    const DatasetManifest m = load_stage_manifest(o, paths.manifest());
    out << dataset_stats(m).dump(2) << '\n';
    return kExitOk;
}

inline int cmd_validate(const CliOptions& o, std::ostream& out) {
    const DatasetPaths paths{o.out.empty() ? fs::path("out") : fs::path(o.out)};
    const DatasetManifest m = load_stage_manifest(o, paths.manifest());
    ValidationOptions vo;
    if (fs::exists(paths.config_snapshot())) {
        const GenerationConfig cfg = load_config(paths.config_snapshot());
        vo.expected_hash = config_hash(cfg);
        if (o.manifest.empty()) vo.expected_entries = cfg.n_leaves * cfg.passes_per_leaf;
    }
    const auto violations = validate_manifest(m, paths.root, vo);
    out << nlohmann::json{{"n_entries", m.entries.size()},
                          {"n_violations", violations.size()},
                          {"violations", violations}}
               .dump(2)
        << '\n';
    return violations.empty() ? kExitOk : kExitViolations;
}

inline int cmd_preview(const CliOptions& o, std::ostream& err) {
    const DatasetPaths paths{o.out.empty() ? fs::path("out") : fs::path(o.out)};
    const DatasetManifest m = load_stage_manifest(o, paths.manifest());
    const fs::path dest = paths.report_dir() / "preview.png";
    fs::create_directories(paths.report_dir());
    write_png(dest, contact_sheet(m, paths.root, o.preview_count));
    if (!o.quiet) err << "[preview] wrote " << dest.string() << '\n';
    return kExitOk;
}

} // namespace detail

inline int run_cli(int argc, char** argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Synthetic leaf dataset generator"};
    app.require_subcommand(1);
    CliOptions o;
    auto* gen = app.add_subcommand("generate", "procedurally generate datapoints");
    auto* edges = app.add_subcommand("edges", "recompute conditioning edge maps");
    auto* inpaint = app.add_subcommand("inpaint", "inpaint datapoints through a service");
    auto* filter = app.add_subcommand("filter", "annotation-consistency filter");
    auto* stats = app.add_subcommand("stats", "print dataset summary JSON");
    auto* validate = app.add_subcommand("validate", "check manifest invariants");
    auto* preview = app.add_subcommand("preview", "render a contact sheet");
    for (auto* cmd : {gen, edges, inpaint, filter, stats, validate, preview}) {
        detail::add_common(cmd, o);
        cmd->add_option("--manifest", o.manifest, "manifest to read (defaults per command)");
    }
    edges->add_option("--mode", o.edge_mode, "mask | image | combined");
    filter->add_option("--predictions", o.predictions, "baseline or a directory of <id>.png masks");
    preview->add_option("-n,--count", o.preview_count, "number of datapoints");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, err, err);
        return kExitUsage;
    }

    auto report = [&](const std::string& category, const std::string& message) {
        err << nlohmann::json{{"error", category}, {"message", message}}.dump() << '\n';
    };
    try {
        if (*gen) return detail::cmd_generate(o, err);
        if (*edges) return detail::cmd_edges(o, err);
        if (*inpaint) return detail::cmd_inpaint(o, err);
        if (*filter) return detail::cmd_filter(o, err);
        if (*stats) return detail::cmd_stats(o, out);
        if (*validate) return detail::cmd_validate(o, out);
        if (*preview) return detail::cmd_preview(o, err);
    } catch (const ConfigError& e) {
        report(e.category(), e.what());
        return kExitConfig;
    } catch (const Error& e) {
        report(e.category(), e.what());
        return kExitFailure;
    } catch (const std::exception& e) {
        report("internal_error", e.what());
        return kExitFailure;
    }
    return kExitUsage;
}

} // namespace leafsynth
