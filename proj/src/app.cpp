#include "photorig/app.hpp"

#include <fstream>

#include <spdlog/spdlog.h>

#include "photorig/export.hpp"
#include "photorig/template_body.hpp"

namespace photorig::app {

using nlohmann::json;

namespace {

json read_json(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw InputError("cannot read " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw InputError(path.string() + ": " + e.what());
    }
}

void write_json(const json& j, const fs::path& path, int indent = 2) {
    if (path.has_parent_path())
        fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw InputError("cannot write " + path.string());
    out << j.dump(indent) << '\n';
}

fs::path resolve(const fs::path& base, const std::string& p) {
    const fs::path path(p);
    return path.is_absolute() ? path : base / path;
}

std::optional<fs::path> optional_path(const json& obj, const char* key, const fs::path& base) {
    if (!obj.contains(key) || obj[key].is_null())
        return std::nullopt;
    return resolve(base, obj[key].get<std::string>());
}

void reject_unknown(const json& obj, std::initializer_list<const char*> keys, const std::string& where) {
    for (const auto& [k, v] : obj.items())
        if (std::none_of(keys.begin(), keys.end(), [&](const char* known) { return k == known; }))
            throw InputError("unknown key '" + k + "' in " + where);
}

TemplateBody load_body(const std::optional<fs::path>& path) {
    if (!path)
        return TemplateBody::default_body();
    TemplateBody body = TemplateBody::from_json(read_json(*path));
    body.validate();
    return body;
}

Pose load_pose(const std::optional<fs::path>& path, const Skeleton& skeleton) {
    if (!path)
        return Pose::rest(skeleton.size());
    return pose_from_json(read_json(*path), skeleton);
}

std::string surface_file(std::size_t index, const std::string& group, const char* what) {
    return "surfaces/" + std::to_string(index) + "_" + group + "_" + what + ".fmap";
}

json manifest_for(const GltfFiles& files, bool has_photo) {
    json artifacts = {{"gltf", files.gltf.filename().string()},
                      {"bin", files.bin.filename().string()},
                      {"mesh_json", kMeshJson},
                      {"skeleton", kSkeletonJson},
                      {"report", kReportJson}};
    if (files.texture)
        artifacts["texture"] = files.texture->filename().string();
    if (has_photo)
        artifacts["photo"] = "photo.png";
    return {{"format", "photorig-export"},
            {"version", 1},
            {"artifacts", artifacts},
            {"pose_endpoint", "/pose"},
            {"posted_pose", kPostedPose}};
}

} // namespace

ReconstructConfig ReconstructConfig::from_json(const json& j, const fs::path& base) {
    if (!j.is_object())
        throw InputError("config must be a JSON object");
    reject_unknown(j, {"input", "template", "parameters", "output"}, "config");
    ReconstructConfig c;
    try {
        const json& input = j.at("input");
        reject_unknown(input, {"mask", "image"}, "input");
        c.mask = resolve(base, input.at("mask").get<std::string>());
        c.image = optional_path(input, "image", base);
        if (j.contains("template")) {
            const json& t = j["template"];
            reject_unknown(t, {"renders", "body", "pose"}, "template");
            c.renders = optional_path(t, "renders", base);
            c.body = optional_path(t, "body", base);
            c.pose = optional_path(t, "pose", base);
            if (c.renders && (c.body || c.pose))
                throw InputError("template: give either renders or body/pose, not both");
        }
        if (j.contains("parameters"))
            c.params = ReconstructParams::from_json(j["parameters"]);
        if (j.contains("output"))
            c.output = resolve(base, j["output"].get<std::string>());
    } catch (const json::exception& e) {
        throw InputError(std::string("config: ") + e.what());
    }
    return c;
}

json ReconstructConfig::to_json() const {
    json t = json::object();
    if (renders)
        t["renders"] = renders->string();
    if (body)
        t["body"] = body->string();
    if (pose)
        t["pose"] = pose->string();
    json input = {{"mask", mask.string()}};
    if (image)
        input["image"] = image->string();
    return {{"input", input}, {"template", t}, {"parameters", params.to_json()}, {"output", output.string()}};
}

ReconstructConfig load_config(const fs::path& file) {
    return ReconstructConfig::from_json(read_json(file), fs::absolute(file).parent_path());
}

RasterMap load_mask(const fs::path& path) {
    RasterMap m = read_raster(path, Semantic::mask);
    if (m.semantic() != Semantic::mask || m.channels() != 1)
        throw InputError(path.string() + " is not a mask");
    return m;
}

json run_reconstruct(const ReconstructConfig& c, bool keep_intermediates) {
    ReconstructInputs in;
    in.silhouette = load_mask(c.mask);
    if (c.image)
        in.image = read_raster(*c.image, Semantic::color);
    if (c.renders) {
        in.templ = read_render_set(*c.renders);
    } else {
        if (in.silhouette.width() != in.silhouette.height())
            throw InputError("rendering the template internally needs a square mask; pass template.renders instead");
        const TemplateBody body = load_body(c.body);
        const Pose pose = load_pose(c.pose, body.skeleton);
        in.templ = render_set(body, pose, default_camera(in.silhouette.width()));
    }

    Diagnostics diag;
    Reconstruction r = reconstruct(in, c.params, &diag);

    const fs::path& out = c.output;
    fs::create_directories(out / "surfaces");
    const GltfFiles files = write_gltf(r.mesh, out, {std::nullopt, kMeshName});
    write_mesh_json(r.mesh, out / kMeshJson);
    write_json(r.mesh.skeleton.to_json(), out / kSkeletonJson);
    if (!in.image.empty())
        write_png(in.image, out / "photo.png");

    // What `texture` needs to redo the atlas.
    json surfaces = json::array();
    for (std::size_t i = 0; i < r.surfaces.size(); ++i) {
        const Surface& s = r.surfaces[i];
        write_fmap(s.mask, out / surface_file(i, s.group, "mask"));
        write_fmap(s.visible, out / surface_file(i, s.group, "visible"));
        write_fmap(s.front_labels, out / surface_file(i, s.group, "labels"));
        surfaces.push_back({{"group", s.group},
                            {"mask", surface_file(i, s.group, "mask")},
                            {"visible", surface_file(i, s.group, "visible")},
                            {"labels", surface_file(i, s.group, "labels")}});
    }
    write_json({{"surfaces", surfaces},
                {"back_mode", std::string(to_string(c.params.back_mode))},
                {"seam_band", c.params.seam_band},
                {"inpaint_patch", c.params.inpaint.patch},
                {"inpaint_coherence", c.params.inpaint.coherence}},
               out / "surfaces" / "surfaces.json");

    if (keep_intermediates) {
        fs::create_directories(out / "intermediates");
        for (const auto& [name, map] : r.intermediates) {
            write_fmap(map, out / "intermediates" / (name + ".fmap"));
            if (map.semantic() == Semantic::mask || map.semantic() == Semantic::color)
                write_png(map, out / "intermediates" / (name + ".png"));
        }
        if (r.completed_body) {
            json pts = json::array();
            for (const Vec2& p : r.completed_body->points())
                pts.push_back({p.x(), p.y()});
            write_json(pts, out / "intermediates" / "completed_body.json", -1);
        }
    }

    json report = r.report;
    report["config"] = c.to_json();
    write_json(report, out / kReportJson);
    write_json(manifest_for(files, !in.image.empty()), out / kManifest);
    return report;
}

void run_template_render(const std::optional<fs::path>& body_path, const std::optional<fs::path>& pose_path, int size,
                         const fs::path& out) {
    if (size < 16)
        throw InputError("render size must be at least 16 pixels");
    const TemplateBody body = load_body(body_path);
    const Pose pose = load_pose(pose_path, body.skeleton);
    write_render_set(render_set(body, pose, default_camera(size)), out);
    write_json(body.to_json(), out / "body.json");
}

void run_fixture_make(const std::string& name, std::optional<int> size, const fs::path& out) {
    const int px = size.value_or(default_fixture_size(name));
    if (px < 16)
        throw InputError("fixture size must be at least 16 pixels");
    const TemplateBody body = TemplateBody::default_body();
    const Camera cam = default_camera(px);
    const Fixture f = make_fixture(name, body, cam);
    fs::create_directories(out / "truth");
    write_png(f.silhouette, out / "silhouette.png");
    write_png(f.image, out / "photo.png");
    write_json(pose_to_json(f.pose, body.skeleton), out / "pose.json");
    write_render_set(render_set(body, f.pose, cam), out / "renders");
    write_json(pose_to_json(f.truth.pose, body.skeleton), out / "truth" / "pose.json");
    write_fmap(f.truth.depth, out / "truth" / "depth.fmap");
    write_fmap(f.truth.labels, out / "truth" / "labels.fmap");
    write_png(f.truth.body_silhouette, out / "truth" / "body_silhouette.png");
    write_png(f.truth.occlusion_contour, out / "truth" / "occlusion_contour.png");
    write_json({{"input", {{"mask", "silhouette.png"}, {"image", "photo.png"}}},
                {"template", {{"renders", "renders"}}},
                {"parameters", json::object()},
                {"output", "out"}},
               out / "config.json");
    spdlog::info("fixture {} written to {} ({} px)", name, out.string(), px);
}

std::size_t run_animate(const AnimateRequest& req) {
    if (req.clip.has_value() == req.pose.has_value())
        throw InputError("animate needs exactly one of a clip or a pose");
    RiggedMesh mesh = read_mesh_json(req.mesh);
    Clip clip;
    if (req.clip)
        clip = clip_from_json(read_json(*req.clip), mesh.skeleton);
    else
        clip.frames.push_back(pose_from_json(read_json(*req.pose), mesh.skeleton));
    if (clip.frames.empty())
        throw InputError("clip has no frames");

    fs::create_directories(req.out);
    if (req.format == AnimateFormat::frames) {
        for (std::size_t f = 0; f < clip.frames.size(); ++f) {
            char name[32];
            std::snprintf(name, sizeof name, "frame_%05zu.json", f);
            write_frame_json(lbs_pose(mesh, clip.frames[f]), mesh.triangles, int(f), req.out / name);
        }
        write_json({{"fps", clip.fps}, {"frames", clip.frames.size()}}, req.out / "frames.json");
    } else {
        if (req.texture)
            mesh.texture = read_raster(*req.texture, Semantic::color);
        write_gltf(mesh, req.out, {clip, "animated"});
    }
    return clip.frames.size();
}

void run_texture(const TextureRequest& req) {
    const fs::path& dir = req.export_dir;
    const json meta = read_json(dir / "surfaces" / "surfaces.json");
    RiggedMesh mesh = read_mesh_json(dir / kMeshJson);
    RasterMap image;
    if (req.image)
        image = read_raster(*req.image, Semantic::color);
    else if (fs::exists(dir / "photo.png"))
        image = read_raster(dir / "photo.png", Semantic::color);

    std::optional<RasterMap> edited;
    if (req.labels) {
        edited = read_raster(*req.labels, Semantic::label);
        if (edited->semantic() != Semantic::label)
            throw InputError(req.labels->string() + " is not a label map");
    }

    std::vector<Surface> surfaces;
    try {
        for (const auto& s : meta.at("surfaces")) {
            Surface surface;
            surface.group = s.at("group").get<std::string>();
            surface.mask = read_fmap(dir / s.at("mask").get<std::string>());
            surface.visible = read_fmap(dir / s.at("visible").get<std::string>());
            surface.front_labels = edited ? *edited : read_fmap(dir / s.at("labels").get<std::string>());
            surfaces.push_back(std::move(surface));
        }
    } catch (const json::exception& e) {
        throw InputError(std::string("surfaces.json: ") + e.what());
    }
    if (surfaces.empty())
        throw InputError("export has no surfaces");
    const int w = surfaces.front().mask.width(), h = surfaces.front().mask.height();
    if (image.empty())
        image = RasterMap(w, h, 3, Semantic::color, 0.5);
    if (image.width() != w || image.height() != h)
        throw InputError("image size does not match the reconstruction");
    if (edited && (edited->width() != w || edited->height() != h))
        throw InputError("label map size does not match the reconstruction");

    InpaintGuide guide;
    guide.patch = meta.value("inpaint_patch", guide.patch);
    guide.coherence = meta.value("inpaint_coherence", guide.coherence);
    const BackMode mode = req.back_mode.value_or(back_mode_from_string(meta.value("back_mode", "mirror")));
    Diagnostics diag;
    const Atlas atlas = texture_atlas(surfaces, image, mode, guide, meta.value("seam_band", 8), &diag);

    mesh.texture = atlas.image;
    fs::create_directories(req.out);
    const GltfFiles files = write_gltf(mesh, req.out, {std::nullopt, kMeshName});
    if (fs::absolute(req.out) != fs::absolute(dir)) {
        write_mesh_json(mesh, req.out / kMeshJson);
        write_json(mesh.skeleton.to_json(), req.out / kSkeletonJson);
        write_json({{"texture", {{"back_mode", std::string(to_string(mode))}, {"warnings", diag.warnings}}}},
                   req.out / kReportJson);
        write_json(manifest_for(files, false), req.out / kManifest);
    }
}

} // namespace photorig::app
