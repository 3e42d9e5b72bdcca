#include "photorig/reconstruction.hpp"

#include <chrono>
#include <cmath>

#include <spdlog/spdlog.h>

#include "photorig/boundary.hpp"
#include "photorig/mask_ops.hpp"
#include "photorig/normal_integration.hpp"
#include "photorig/occlusion_completion.hpp"
#include "photorig/warpfield.hpp"

namespace photorig {

using nlohmann::json;

std::string_view to_string(DepthMode mode) { return mode == DepthMode::integrate ? "integrate" : "warp"; }

DepthMode depth_mode_from_string(std::string_view name) {
    if (name == "integrate")
        return DepthMode::integrate;
    if (name == "warp")
        return DepthMode::warp;
    throw InputError("unknown depth mode '" + std::string(name) + "'");
}

json ReconstructParams::to_json() const {
    return {
        {"boundary_samples", boundary_samples},
        {"body_boundary_samples", body_boundary_samples},
        {"kappa", kappa},
        {"nz_floor", nz_floor},
        {"depth_mode", std::string(photorig::to_string(depth_mode))},
        {"initial_gamma", initial.gamma},
        {"occlusion_tau_fraction", occlusion.tau_fraction},
        {"occlusion_dilation", occlusion.dilation},
        {"occlusion_surface_snap", occlusion.surface_snap},
        {"occlusion_part_samples", occlusion.part_samples},
        {"refine_gamma", refine.gamma},
        {"gmm_components", refine.components},
        {"em_iterations", refine.em_iterations},
        {"refine_iterations", refine.outer_iterations},
        {"seed", refine.seed},
        {"min_part_pixels", min_part_pixels},
        {"arm_depth_offset", arm_depth_offset},
        {"smooth_iterations", smooth_iterations},
        {"smooth_step", smooth_step},
        {"smooth_rings", smooth_rings},
        {"back_mode", std::string(photorig::to_string(back_mode))},
        {"inpaint_patch", inpaint.patch},
        {"inpaint_coherence", inpaint.coherence},
        {"seam_band", seam_band},
        {"complete_arm_junctions", complete_arm_junctions},
    };
}

ReconstructParams ReconstructParams::from_json(const json& j, ReconstructParams p) {
    if (!j.is_object())
        throw InputError("parameters must be a JSON object");
    try {
        for (const auto& [key, v] : j.items()) {
            if (key == "boundary_samples")
                p.boundary_samples = v.get<std::size_t>();
            else if (key == "body_boundary_samples")
                p.body_boundary_samples = v.get<std::size_t>();
            else if (key == "kappa")
                p.kappa = p.occlusion.kappa = v.get<int>();
            else if (key == "nz_floor")
                p.nz_floor = v.get<double>();
            else if (key == "depth_mode")
                p.depth_mode = depth_mode_from_string(v.get<std::string>());
            else if (key == "initial_gamma")
                p.initial.gamma = v.get<double>();
            else if (key == "occlusion_tau_fraction")
                p.occlusion.tau_fraction = v.get<double>();
            else if (key == "occlusion_dilation")
                p.occlusion.dilation = v.get<double>();
            else if (key == "occlusion_surface_snap")
                p.occlusion.surface_snap = v.get<double>();
            else if (key == "occlusion_part_samples")
                p.occlusion.part_samples = v.get<std::size_t>();
            else if (key == "refine_gamma")
                p.refine.gamma = v.get<double>();
            else if (key == "gmm_components")
                p.refine.components = v.get<int>();
            else if (key == "em_iterations")
                p.refine.em_iterations = v.get<int>();
            else if (key == "refine_iterations")
                p.refine.outer_iterations = v.get<int>();
            else if (key == "seed")
                p.refine.seed = v.get<std::uint64_t>();
            else if (key == "min_part_pixels")
                p.min_part_pixels = v.get<std::size_t>();
            else if (key == "arm_depth_offset")
                p.arm_depth_offset = v.get<double>();
            else if (key == "smooth_iterations")
                p.smooth_iterations = v.get<int>();
            else if (key == "smooth_step")
                p.smooth_step = v.get<double>();
            else if (key == "smooth_rings")
                p.smooth_rings = v.get<int>();
            else if (key == "back_mode")
                p.back_mode = back_mode_from_string(v.get<std::string>());
            else if (key == "inpaint_patch")
                p.inpaint.patch = v.get<int>();
            else if (key == "inpaint_coherence")
                p.inpaint.coherence = v.get<bool>();
            else if (key == "seam_band")
                p.seam_band = v.get<int>();
            else if (key == "complete_arm_junctions")
                p.complete_arm_junctions = v.get<bool>();
            else
                throw InputError("unknown parameter '" + key + "'");
        }
    } catch (const json::exception& e) {
        throw InputError(std::string("bad parameter value: ") + e.what());
    }
    if (p.boundary_samples < 3 || p.body_boundary_samples < 3)
        throw InputError("boundary sample counts must be at least 3");
    if (p.kappa < 1)
        throw InputError("kappa must be positive");
    if (p.smooth_step < 0 || p.smooth_step > 1)
        throw InputError("smooth_step must lie in [0, 1]");
    if (p.seam_band < 1)
        throw InputError("seam_band must be at least 1");
    return p;
}

namespace {

class StageClock {
public:
    explicit StageClock(json& timings) : timings_(timings) {}

    template <class F>
    auto run(const std::string& name, F&& f) {
        const auto t0 = std::chrono::steady_clock::now();
        auto record = [&] {
            const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            timings_[name] = timings_.value(name, 0.0) + dt;
        };
        try {
            if constexpr (std::is_void_v<decltype(f())>) {
                f();
                record();
            } else {
                auto r = f();
                record();
                return r;
            }
        } catch (const StageError&) {
            throw;
        } catch (const InputError& e) {
            throw InputError(name + ": " + e.what());
        } catch (const std::exception& e) {
            throw StageError(name, e.what());
        }
    }

private:
    json& timings_;
};

// Fills enclosed holes and keeps the largest 4-connected component.
RasterMap solid_region(const RasterMap& mask, const std::string& what, Diagnostics* diag) {
    std::size_t components = 0;
    RasterMap out = fill_enclosed_background(largest_component(mask, &components));
    if (components > 1)
        warn(diag, what + ": " + std::to_string(components) + " components; meshing the largest");
    return out;
}

// Pixels of region B next to an arm label, grown by `radius`. There the body
// outline runs behind the arm even though the two surfaces touch.
RasterMap arm_junction(const RasterMap& region, const RasterMap& labels, double radius) {
    std::vector<int> arm_ids = group_parts("left_arm");
    for (int id : group_parts("right_arm"))
        arm_ids.push_back(id);
    const RasterMap arms = select_labels(labels, arm_ids);
    RasterMap out(region.width(), region.height(), 1, Semantic::mask);
    for (int y = 0; y < region.height(); ++y)
        for (int x = 0; x < region.width(); ++x) {
            if (!region.is_set(x, y))
                continue;
            constexpr int dx[4] = {1, -1, 0, 0}, dy[4] = {0, 0, 1, -1};
            for (int k = 0; k < 4; ++k)
                if (arms.contains(x + dx[k], y + dy[k]) && arms.is_set(x + dx[k], y + dy[k]))
                    out.at(x, y) = 1.0;
        }
    return dilate(out, radius);
}

struct SideMaps {
    RasterMap depth;
    RasterMap skinning;
    RasterMap labels;
    RasterMap normals;
    double match_cost = 0.0;
    double integration_energy = 0.0;
    std::size_t invalid = 0;
};

SideMaps side_maps(const RasterMap& mask, const TemplateRender& tpl, const ReconstructParams& p, Diagnostics* diag) {
    BoundaryPolygon in_poly = extract_boundary(mask, diag);
    BoundaryPolygon t_poly = extract_boundary(tpl.silhouette, diag);
    in_poly = resample_boundary(in_poly, std::min(p.boundary_samples, in_poly.size()));
    t_poly = resample_boundary(t_poly, std::min(p.boundary_samples, t_poly.size()));
    const auto corr = match_boundaries(in_poly, t_poly, {.kappa = p.kappa});
    const WarpField field = build_warp(in_poly, t_poly, corr, mask);

    SideMaps s;
    s.match_cost = corr.total_cost;
    s.invalid = field.invalid_count();
    auto warp = [&](const RasterMap& source) {
        const WarpedMap w = warp_map(field, source, tpl.silhouette);
        return fill_holes(w.map, w.valid, mask, nullptr, diag);
    };
    s.normals = warp(tpl.normal);
    s.skinning = warp(tpl.skinning);
    s.labels = warp(tpl.label);
    const RasterMap template_depth = warp(tpl.depth);

    if (p.depth_mode == DepthMode::warp) {
        s.depth = template_depth;
        return s;
    }
    // The integrator works on height towards the viewer, i.e. negated depth.
    IntegrationProblem problem;
    problem.normals = s.normals;
    problem.domain = mask;
    problem.boundary_depth = RasterMap(mask.width(), mask.height(), 1, Semantic::depth);
    double boundary_sum = 0.0;
    std::size_t boundary_count = 0;
    for (int y = 0; y < mask.height(); ++y)
        for (int x = 0; x < mask.width(); ++x)
            if (mask.is_set(x, y)) {
                problem.boundary_depth.at(x, y) = -template_depth.at(x, y);
                if (is_boundary_pixel(mask, x, y)) {
                    boundary_sum += template_depth.at(x, y);
                    ++boundary_count;
                }
            }
    problem.nz_floor = p.nz_floor;
    problem.pixel_size = boundary_sum / double(std::max<std::size_t>(1, boundary_count)) / tpl.camera.intrinsics().fx;
    IntegrationReport report;
    RasterMap height = integrate(problem, &report);
    s.integration_energy = report.energy;
    s.depth = RasterMap(mask.width(), mask.height(), 1, Semantic::depth);
    for (int y = 0; y < mask.height(); ++y)
        for (int x = 0; x < mask.width(); ++x)
            if (mask.is_set(x, y))
                s.depth.at(x, y) = -height.at(x, y);
    return s;
}

void normalise_weights(std::vector<double>& weights, int joints) {
    const std::size_t b = std::size_t(joints);
    for (std::size_t v = 0; v * b < weights.size(); ++v) {
        double sum = 0.0;
        for (std::size_t k = 0; k < b; ++k) {
            double& w = weights[v * b + k];
            w = std::max(0.0, w);
            sum += w;
        }
        if (sum <= 0.0)
            throw GeometryError("vertex without skinning weight");
        for (std::size_t k = 0; k < b; ++k)
            weights[v * b + k] /= sum;
    }
}

struct SurfaceJob {
    std::string group;
    RasterMap mask;
    RasterMap visible;
    const TemplateRender* front;
    const TemplateRender* back;
    double depth_offset = 0.0;
};

Surface build_surface(const SurfaceJob& job, const ReconstructParams& p, StageClock& clock, json& energies,
                      std::map<std::string, RasterMap>& intermediates, Diagnostics* diag) {
    Surface s;
    s.group = job.group;
    s.mask = job.mask;
    s.visible = job.visible;
    const std::string tag = job.group + "_";
    const RasterMap back_mask = job.mask.mirrored();

    SideMaps front = clock.run("warp_and_integrate", [&] { return side_maps(job.mask, *job.front, p, diag); });
    SideMaps back = clock.run("warp_and_integrate", [&] { return side_maps(back_mask, *job.back, p, diag); });
    energies[tag + "match_front"] = front.match_cost;
    energies[tag + "match_back"] = back.match_cost;
    if (p.depth_mode == DepthMode::integrate) {
        energies[tag + "integration_front"] = front.integration_energy;
        energies[tag + "integration_back"] = back.integration_energy;
    }
    intermediates[tag + "front_depth"] = front.depth;
    intermediates[tag + "back_depth"] = back.depth;
    intermediates[tag + "front_normal"] = front.normals;
    intermediates[tag + "back_normal"] = back.normals;
    intermediates[tag + "front_labels"] = front.labels;
    s.front_labels = front.labels;

    clock.run("mesh", [&] {
        const Camera& fcam = job.front->camera;
        const Camera& bcam = job.back->camera;
        OpenMesh fm = mesh_from_depth(front.depth, front.skinning, job.mask, Orientation::front, fcam);
        OpenMesh bm = mesh_from_depth(back.depth, back.skinning, back_mask, Orientation::back, bcam);
        if (job.depth_offset != 0.0)
            for (OpenMesh* m : {&fm, &bm})
                for (Vec3& v : m->vertices)
                    v -= job.depth_offset * fcam.ray_direction(fcam.project(v));

        double thickness = 0.0;
        std::size_t pairs = 0;
        for (std::size_t v = 0; v < fm.vertices.size(); ++v) {
            const int b = bm.pixel_to_vertex[bm.mask.index(fm.pixels[v].x(), fm.pixels[v].y())];
            if (b >= 0) {
                thickness += (fm.vertices[v] - bm.vertices[std::size_t(b)]).norm();
                ++pairs;
            }
        }
        s.mean_thickness = pairs ? thickness / double(pairs) : 0.0;

        StitchReport rep;
        s.mesh = stitch(fm, bm, &rep);
        normalise_weights(s.mesh.weights, s.mesh.joints);

        // Labels follow the side each vertex was built from.
        s.labels.resize(s.mesh.vertices.size());
        for (std::size_t v = 0; v < s.mesh.vertices.size(); ++v) {
            const Vec2i px = s.mesh.pixels[v];
            s.labels[v] = s.mesh.sides[v] == SurfaceSide::back
                              ? back.labels.label_at(back_mask.width() - 1 - px.x(), px.y())
                              : front.labels.label_at(px.x(), px.y());
        }
        if (rep.dropped_unreferenced > 0)
            warn(diag, job.group + ": " + std::to_string(rep.dropped_unreferenced) +
                           " pixels belong to no 2x2 block and were dropped");
        energies[tag + "seam_gap"] = rep.max_seam_gap;
    });

    clock.run("smooth", [&] {
        if (p.smooth_iterations <= 0 || p.smooth_step == 0.0)
            return;
        const auto movable = seam_neighbourhood(s.mesh, p.smooth_rings);
        // Moving along viewing rays leaves both silhouettes untouched.
        std::vector<Vec3> dirs(s.mesh.vertices.size());
        for (std::size_t v = 0; v < dirs.size(); ++v) {
            const Camera& cam = s.mesh.sides[v] == SurfaceSide::back ? s.mesh.back_camera : s.mesh.front_camera;
            dirs[v] = (s.mesh.vertices[v] - cam.center()).normalized();
        }
        const double before = signed_volume(s.mesh.vertices, s.mesh.triangles);
        s.mesh.vertices = laplacian_smooth(s.mesh.vertices, s.mesh.triangles,
                                           {p.smooth_iterations, p.smooth_step, &movable, &dirs});
        const double after = signed_volume(s.mesh.vertices, s.mesh.triangles);
        energies[tag + "smoothing_volume_change"] = before != 0.0 ? std::abs(after - before) / std::abs(before) : 0.0;
    });
    return s;
}

} // namespace

Atlas texture_atlas(const std::vector<Surface>& surfaces, const RasterMap& image, BackMode mode,
                    const InpaintGuide& guide, int seam_band, Diagnostics* diag) {
    std::vector<BlendedTiles> tiles;
    for (const Surface& s : surfaces) {
        const FrontTile front = project_front(image, s.visible, s.mask, diag);
        RasterMap labels = s.front_labels;
        for (int y = 0; y < labels.height(); ++y)
            for (int x = 0; x < labels.width(); ++x)
                if (!s.mask.is_set(x, y))
                    labels.at(x, y) = kBackground;
        const RasterMap back = synthesize_back(front.color, labels, mode, guide, nullptr, diag);
        tiles.push_back(blend_seam(front.color, back, s.mask, seam_band));
    }
    return compose_atlas(tiles);
}

Reconstruction reconstruct(const ReconstructInputs& in, const ReconstructParams& p, Diagnostics* diag) {
    Diagnostics local;
    Diagnostics* d = diag ? diag : &local;
    Reconstruction r;
    json timings = json::object(), energies = json::object();
    StageClock clock(timings);
    const auto& templ = in.templ;
    const Camera& cam = templ.front.camera;
    const int w = cam.width(), h = cam.height();

    RasterMap silhouette = clock.run("input", [&] {
        if (in.silhouette.semantic() != Semantic::mask)
            throw InputError("silhouette must be a mask");
        if (in.silhouette.width() != w || in.silhouette.height() != h)
            throw InputError("silhouette is " + std::to_string(in.silhouette.width()) + "x" +
                             std::to_string(in.silhouette.height()) + " but the template renders " +
                             std::to_string(w) + "x" + std::to_string(h));
        if (in.silhouette.count_set() < 3)
            throw GeometryError("silhouette is empty");
        if (!in.image.empty() && (in.image.width() != w || in.image.height() != h || in.image.channels() < 3))
            throw InputError("colour image must be RGB and match the silhouette size");
        return solid_region(in.silhouette, "silhouette", d);
    });
    const RasterMap image = in.image.empty() ? RasterMap(w, h, 3, Semantic::color, 0.5) : in.image;

    // Labels and occlusion.
    r.initial_labels = clock.run("labels", [&] { return initial_labels(silhouette, templ.front.label, p.initial); });
    r.occlusion = clock.run("occlusion", [&] {
        return detect_occlusion_mask(r.initial_labels,
                                     {templ.front.label, templ.front.depth, cam, templ.bounding_diameter}, p.occlusion,
                                     d);
    });
    r.labels = r.initial_labels;
    r.intermediates["initial_labels"] = r.initial_labels;
    r.intermediates["occlusion"] = r.occlusion;
    const std::size_t occluded = r.occlusion.count_set();

    std::vector<SurfaceJob> jobs;
    if (occluded == 0) {
        jobs.push_back({"body", silhouette, silhouette, &templ.front, &templ.back});
    } else {
        RefineReport refine_report;
        r.labels = clock.run("refine_labels",
                             [&] { return refine_labels(r.initial_labels, image, r.occlusion, p.refine, &refine_report); });
        r.intermediates["labels"] = r.labels;
        for (std::size_t i = 0; i < refine_report.energies.size(); ++i)
            energies["refine_" + std::to_string(i)] = refine_report.energies[i];

        const RasterMap visible_body = select_labels(r.labels, {id(Part::head), id(Part::torso), id(Part::left_leg),
                                                                id(Part::right_leg)});
        r.completed_body = clock.run("complete_body", [&] {
            const RasterMap region = solid_region(visible_body, "region B", d);
            BoundaryPolygon poly = extract_boundary(region, d);
            poly = resample_boundary(poly, std::min(p.body_boundary_samples, poly.size()));
            BoundaryPolygon t_poly = extract_boundary(templ.groups.at("body").first.silhouette, d);
            t_poly = resample_boundary(t_poly, std::min(p.body_boundary_samples, t_poly.size()));
            const RasterMap hidden =
                p.complete_arm_junctions ? mask_or(r.occlusion, arm_junction(region, r.labels, 2.0)) : r.occlusion;
            r.intermediates["completion_mask"] = hidden;
            const RegionBoundary rb = find_occluded_runs(poly, hidden);
            ReplaceReport rep;
            auto completed = replace_occluded_runs(rb, t_poly, MatchOptions{.kappa = p.kappa}, d, &rep);
            energies["occluded_runs"] = rb.runs.size();
            energies["occluded_runs_replaced"] = rep.replaced;
            return completed;
        });
        RasterMap body_mask = rasterize_polygon(*r.completed_body, w, h);
        body_mask = solid_region(mask_or(body_mask, mask_and(visible_body, silhouette)), "completed region B", d);
        r.intermediates["completed_body"] = body_mask;
        jobs.push_back({"body", body_mask, mask_and(visible_body, body_mask), &templ.groups.at("body").first,
                        &templ.groups.at("body").second});
        for (const char* group : {"left_arm", "right_arm"}) {
            const RasterMap arm = select_labels(r.labels, group_parts(group));
            if (arm.count_set() < p.min_part_pixels) {
                if (arm.count_set() > 0)
                    warn(d, std::string(group) + ": too few pixels for a separate surface; left out");
                continue;
            }
            const RasterMap mask = solid_region(arm, group, d);
            jobs.push_back({group, mask, mask, &templ.groups.at(group).first, &templ.groups.at(group).second,
                            p.arm_depth_offset});
        }
    }

    for (const SurfaceJob& job : jobs)
        r.surfaces.push_back(build_surface(job, p, clock, energies, r.intermediates, d));

    clock.run("texture", [&] { r.atlas = texture_atlas(r.surfaces, image, p.back_mode, p.inpaint, p.seam_band, d); });
    for (const Surface& s : r.surfaces)
        r.intermediates[s.group + "_visible"] = s.visible;

    clock.run("rig", [&] {
        RiggedMesh& m = r.mesh;
        m.skeleton = templ.skeleton;
        const int joints = int(templ.skeleton.size());
        for (std::size_t si = 0; si < r.surfaces.size(); ++si) {
            const Surface& s = r.surfaces[si];
            if (s.mesh.joints != joints)
                throw GeometryError("skinning channels do not match the skeleton");
            const int offset = int(m.vertices.size());
            m.vertices.insert(m.vertices.end(), s.mesh.vertices.begin(), s.mesh.vertices.end());
            m.weights.insert(m.weights.end(), s.mesh.weights.begin(), s.mesh.weights.end());
            m.labels.insert(m.labels.end(), s.labels.begin(), s.labels.end());
            m.sides.insert(m.sides.end(), s.mesh.sides.begin(), s.mesh.sides.end());
            m.groups.insert(m.groups.end(), s.mesh.vertices.size(), int(si));
            for (std::size_t t = 0; t < s.mesh.triangles.size(); ++t) {
                const Triangle& tri = s.mesh.triangles[t];
                const bool back = s.mesh.triangle_sides[t] == SurfaceSide::back;
                std::array<Vec2, 3> uv;
                for (int k = 0; k < 3; ++k) {
                    const std::size_t v = std::size_t(tri[std::size_t(k)]);
                    Vec2 px;
                    if (!back)
                        px = s.mesh.front_camera.project(s.mesh.vertices[v]);
                    else if (s.mesh.sides[v] == SurfaceSide::seam)
                        px = Vec2(w - 1 - s.mesh.pixels[v].x(), s.mesh.pixels[v].y());
                    else
                        px = s.mesh.back_camera.project(s.mesh.vertices[v]);
                    uv[std::size_t(k)] = r.atlas.uv(int(si), back, px);
                }
                m.triangles.push_back({tri[0] + offset, tri[1] + offset, tri[2] + offset});
                m.corner_uvs.push_back(uv);
            }
        }
        m.texture = r.atlas.image;
        m.validate(true);
    });

    clock.run("evaluate", [&] {
        std::vector<Triangle> front_half;
        std::size_t t = 0;
        for (const Surface& s : r.surfaces)
            for (std::size_t i = 0; i < s.mesh.triangles.size(); ++i, ++t)
                if (s.mesh.triangle_sides[i] != SurfaceSide::back)
                    front_half.push_back(r.mesh.triangles[t]);
        const RasterMap rendered = rasterize_silhouette(r.mesh.vertices, front_half, cam);
        r.intermediates["rendered_silhouette"] = rendered;
        r.iou = intersection_over_union(rendered, silhouette);
        double thick = 0.0;
        for (const Surface& s : r.surfaces)
            thick += s.mean_thickness;
        r.mean_thickness = r.surfaces.empty() ? 0.0 : thick / double(r.surfaces.size());
    });

    json surfaces = json::array();
    for (const Surface& s : r.surfaces)
        surfaces.push_back({{"group", s.group},
                            {"pixels", s.mask.count_set()},
                            {"vertices", s.mesh.vertices.size()},
                            {"triangles", s.mesh.triangles.size()},
                            {"mean_thickness", s.mean_thickness},
                            {"closed", is_closed(s.mesh.triangles)}});
    r.report = {
        {"image_size", {w, h}},
        {"depth_mode", std::string(to_string(p.depth_mode))},
        {"iou", r.iou},
        {"occlusion_pixels", occluded},
        {"mean_thickness", r.mean_thickness},
        {"vertices", r.mesh.vertices.size()},
        {"triangles", r.mesh.triangles.size()},
        {"closed", is_closed(r.mesh.triangles)},
        {"surfaces", surfaces},
        {"timings", timings},
        {"energies", energies},
        {"warnings", d->warnings},
        {"parameters", p.to_json()},
    };
    spdlog::info("reconstruction: IoU {:.4f}, {} vertices, {} occlusion pixels", r.iou, r.mesh.vertices.size(),
                 occluded);
    return r;
}

} // namespace photorig
