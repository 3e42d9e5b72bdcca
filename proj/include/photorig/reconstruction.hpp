#pragma once

#include <map>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "photorig/boundary.hpp"
#include "photorig/labeling.hpp"
#include "photorig/mesh.hpp"
#include "photorig/template_body.hpp"
#include "photorig/texturing.hpp"

namespace photorig {

enum class DepthMode {
    integrate, ///< integrate the warped normal map
    warp       ///< baseline: warped template depth
};

std::string_view to_string(DepthMode mode);
DepthMode depth_mode_from_string(std::string_view name);

struct ReconstructParams {
    std::size_t boundary_samples = 512;
    std::size_t body_boundary_samples = 1024; ///< region boundary used for occlusion completion
    int kappa = 32;
    double nz_floor = 0.05;
    DepthMode depth_mode = DepthMode::integrate;
    InitialLabelOptions initial;
    OcclusionOptions occlusion;
    RefineOptions refine;
    std::size_t min_part_pixels = 16; ///< smaller arm regions are not meshed separately
    double arm_depth_offset = 0.0;    ///< world units towards the camera for occluding arm surfaces
    int smooth_iterations = 3;
    double smooth_step = 0.5;
    int smooth_rings = 2;
    BackMode back_mode = BackMode::mirror;
    InpaintGuide inpaint;
    int seam_band = 8;
    /// Also complete region B where it borders an arm label, not only inside
    /// the occlusion mask.
    bool complete_arm_junctions = true;

    nlohmann::json to_json() const;
    /// Unknown keys are rejected with InputError.
    static ReconstructParams from_json(const nlohmann::json& j, ReconstructParams defaults);
    static ReconstructParams from_json(const nlohmann::json& j) { return from_json(j, ReconstructParams{}); }
};

struct ReconstructInputs {
    RasterMap silhouette;
    RasterMap image; ///< RGB; empty paints the subject grey
    TemplateRenderSet templ;
};

/// One closed surface: the whole body, or region B and each arm when the
/// arms occlude the body.
struct Surface {
    std::string group;
    RasterMap mask;    ///< front frame
    RasterMap visible; ///< pixels of `mask` seen in the photo
    ClosedMesh mesh;
    std::vector<int> labels;
    RasterMap front_labels; ///< warped template labels on `mask`
    double mean_thickness = 0.0;
};

struct Reconstruction {
    RiggedMesh mesh;
    std::vector<Surface> surfaces;
    Atlas atlas;
    RasterMap initial_labels;
    RasterMap labels;
    RasterMap occlusion;
    std::optional<BoundaryPolygon> completed_body;
    double iou = 0.0;
    double mean_thickness = 0.0;
    nlohmann::json report;
    std::map<std::string, RasterMap> intermediates;
};

/// One front/back tile row per surface, in order. Front colours come from
/// `image` on each surface's visible pixels.
Atlas texture_atlas(const std::vector<Surface>& surfaces, const RasterMap& image, BackMode mode,
                    const InpaintGuide& guide, int seam_band, Diagnostics* diag = nullptr);

/// Silhouette to textured, rigged mesh. Bad inputs raise InputError; any
/// other failure is rethrown as a StageError naming the stage.
Reconstruction reconstruct(const ReconstructInputs& inputs, const ReconstructParams& params = {},
                           Diagnostics* diag = nullptr);

} // namespace photorig
