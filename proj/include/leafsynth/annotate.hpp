#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>

#include "leafsynth/leaf_shape.hpp"
#include "leafsynth/scene_render.hpp"

namespace leafsynth {

enum class Provenance { rendered, inpainted, inpainted_filtered };

inline std::string_view to_string(Provenance p) {
    switch (p) {
    case Provenance::rendered: return "rendered";
    case Provenance::inpainted: return "inpainted";
    case Provenance::inpainted_filtered: return "inpainted_filtered";
    }
    return "rendered";
}

inline Provenance parse_provenance(std::string_view s) {
    if (s == "rendered") return Provenance::rendered;
    if (s == "inpainted") return Provenance::inpainted;
    if (s == "inpainted_filtered") return Provenance::inpainted_filtered;
    throw InputError("unknown provenance '" + std::string(s) + "'");
}

// Relative tolerance of the mask-versus-geometry area cross-check.
inline constexpr double kMaskAreaTolerance = 0.02;

struct Annotation {
    std::string id;
    Species species = Species::beech;
    std::uint64_t seed = 0;
    double gamma = 1.0;
    double mm_per_pixel = 0.0;
    double surface_area_mm2 = 0.0;   // labeled area: 3D blade surface
    double projected_area_mm2 = 0.0; // blade projection
    double petiole_area_mm2 = 0.0;   // drawn in the mask, never labeled
    std::size_t mask_pixel_count = 0;
    int width = 0;
    int height = 0;
    std::string image_path;
    std::string mask_path;
    std::string edge_path;
    std::string inpainted_path; // set by the inpainting stage
    int pass_index = 0;
    Provenance provenance = Provenance::rendered;

    // Area the mask is expected to witness.
    double mask_reference_area_mm2() const { return projected_area_mm2 + petiole_area_mm2; }
    double mask_area_mm2() const { return static_cast<double>(mask_pixel_count) * mm_per_pixel * mm_per_pixel; }
    double mask_area_error() const {
        return std::abs(mask_area_mm2() - mask_reference_area_mm2()) / mask_reference_area_mm2();
    }

    bool operator==(const Annotation&) const = default;
};

inline std::string datapoint_id(std::size_t leaf_index, int pass_index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%06zu_%d", leaf_index, pass_index);
    return buf;
}

inline double relative_error(double predicted, double truth) {
    if (!(truth > 0.0)) throw InputError("relative_error needs a positive truth value");
    return std::abs(predicted - truth) / truth;
}

// Fills the record from the datapoint and the carved leaf mesh and
// cross-checks mask pixels against the projected geometry.
inline Annotation annotate_datapoint(const RenderedDatapoint& dp, const LeafMesh& mesh) {
    if (!dp.image.same_shape(dp.mask)) throw AnnotationError("image and mask resolution differ");
    Annotation a;
    a.species = mesh.species;
    a.gamma = dp.scene.gamma;
    a.mm_per_pixel = dp.scene.mm_per_pixel();
    a.surface_area_mm2 = surface_area(mesh);
    a.projected_area_mm2 = projected_area(mesh);
    a.petiole_area_mm2 = footprint_area(mesh) - a.projected_area_mm2;
    a.mask_pixel_count = count_foreground(dp.mask);
    a.width = dp.image.width();
    a.height = dp.image.height();
    a.pass_index = dp.pass_index;
    if (a.mask_pixel_count == 0) throw AnnotationError("empty mask");
    if (!(a.projected_area_mm2 > 0.0)) throw AnnotationError("leaf has no projected area");
    if (a.mask_area_error() > kMaskAreaTolerance)
        throw AnnotationError("mask area deviates from geometry by " + std::to_string(100.0 * a.mask_area_error()) + "%");
    return a;
}

inline void to_json(nlohmann::json& j, const Annotation& a) {
    j = nlohmann::json{{"id", a.id},
                       {"species", std::string(to_string(a.species))},
                       {"seed", a.seed},
                       {"gamma", a.gamma},
                       {"mm_per_pixel", a.mm_per_pixel},
                       {"surface_area_mm2", a.surface_area_mm2},
                       {"projected_area_mm2", a.projected_area_mm2},
                       {"petiole_area_mm2", a.petiole_area_mm2},
                       {"mask_pixel_count", a.mask_pixel_count},
                       {"width", a.width},
                       {"height", a.height},
                       {"image_path", a.image_path},
                       {"mask_path", a.mask_path},
                       {"edge_path", a.edge_path},
                       {"inpainted_path", a.inpainted_path},
                       {"pass_index", a.pass_index},
                       {"provenance", std::string(to_string(a.provenance))}};
}

inline void from_json(const nlohmann::json& j, Annotation& a) {
    a.id = j.at("id").get<std::string>();
    a.species = parse_species(j.at("species").get<std::string>());
    a.seed = j.at("seed").get<std::uint64_t>();
    a.gamma = j.at("gamma").get<double>();
    a.mm_per_pixel = j.at("mm_per_pixel").get<double>();
    a.surface_area_mm2 = j.at("surface_area_mm2").get<double>();
    a.projected_area_mm2 = j.at("projected_area_mm2").get<double>();
    a.petiole_area_mm2 = j.value("petiole_area_mm2", 0.0);
    a.mask_pixel_count = j.at("mask_pixel_count").get<std::size_t>();
    a.width = j.at("width").get<int>();
    a.height = j.at("height").get<int>();
    a.image_path = j.at("image_path").get<std::string>();
    a.mask_path = j.at("mask_path").get<std::string>();
    a.edge_path = j.value("edge_path", std::string{});
    a.inpainted_path = j.value("inpainted_path", std::string{});
    a.pass_index = j.at("pass_index").get<int>();
    a.provenance = parse_provenance(j.at("provenance").get<std::string>());
}

} // namespace leafsynth
