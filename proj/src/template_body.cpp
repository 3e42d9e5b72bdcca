#include "photorig/template_body.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "photorig/mask_ops.hpp"
#include "photorig/parts.hpp"
#include "photorig/warpfield.hpp"

namespace photorig {

namespace {

using json = nlohmann::json;

json vec_json(const Vec3& v) { return {v.x(), v.y(), v.z()}; }
Vec3 vec_from(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()}; }

struct JointSpec {
    const char* name;
    const char* parent;
    Vec3 position;
};

// Hit of a ray with one posed primitive.
struct Hit {
    double t = std::numeric_limits<double>::infinity();
    Vec3 normal = Vec3::Zero();
    double axial = 0.0; ///< distance along the capsule axis from a, clamped to [0, length]
};

struct PosedPrimitive {
    const Primitive* source;
    Vec3 a, b;
    double radius;
    Vec3 center;
    Eigen::Matrix3d rotation;
    Vec3 radii;
};

double sphere_entry(const Vec3& o, const Vec3& d, const Vec3& c, double r) {
    const Vec3 oc = o - c;
    const double b = oc.dot(d);
    const double h = b * b - (oc.squaredNorm() - r * r);
    if (h < 0)
        return -1.0;
    return -b - std::sqrt(h);
}

// Entry point of the ray into the union of a cylinder and its two end spheres.
Hit intersect_capsule(const PosedPrimitive& p, const Vec3& o, const Vec3& d) {
    Hit best;
    const Vec3 ba = p.b - p.a;
    const double baba = ba.squaredNorm();
    const double len = std::sqrt(baba);
    const double r = p.radius;
    if (baba > 1e-18) {
        const Vec3 oa = o - p.a;
        const double bard = ba.dot(d), baoa = ba.dot(oa), rdoa = d.dot(oa), oaoa = oa.squaredNorm();
        const double A = baba - bard * bard;
        const double B = baba * rdoa - baoa * bard;
        const double C = baba * oaoa - baoa * baoa - r * r * baba;
        const double h = B * B - A * C;
        if (A > 1e-18 && h >= 0) {
            const double t = (-B - std::sqrt(h)) / A;
            const double y = baoa + t * bard;
            if (t > 0 && y > 0 && y < baba) {
                const Vec3 hit = o + t * d;
                best.t = t;
                best.normal = (hit - (p.a + ba * (y / baba))) / r;
                best.axial = y / len;
            }
        }
    }
    for (int end = 0; end < 2; ++end) {
        const Vec3& c = end == 0 ? p.a : p.b;
        const double t = sphere_entry(o, d, c, r);
        if (t > 0 && t < best.t) {
            best.t = t;
            best.normal = (o + t * d - c) / r;
            best.axial = end == 0 ? 0.0 : len;
        }
    }
    return best;
}

Hit intersect_ellipsoid(const PosedPrimitive& p, const Vec3& o, const Vec3& d) {
    Hit best;
    const Vec3 lo = (p.rotation.transpose() * (o - p.center)).cwiseQuotient(p.radii);
    const Vec3 ld = (p.rotation.transpose() * d).cwiseQuotient(p.radii);
    const double a = ld.squaredNorm(), b = lo.dot(ld), c = lo.squaredNorm() - 1.0;
    const double h = b * b - a * c;
    if (h < 0)
        return best;
    const double t = (-b - std::sqrt(h)) / a;
    if (t <= 0)
        return best;
    const Vec3 local = lo + t * ld;
    best.t = t;
    best.normal = (p.rotation * local.cwiseQuotient(p.radii)).normalized();
    return best;
}

std::vector<PosedPrimitive> pose_primitives(const TemplateBody& body, const Pose& pose) {
    const auto m = skinning_matrices(body.skeleton, pose);
    std::vector<PosedPrimitive> out;
    for (const Primitive& pr : body.primitives) {
        const auto& t = m[std::size_t(pr.joint)];
        out.push_back({&pr, t * pr.a, t * pr.b, pr.radius, t * pr.center, t.linear(), pr.radii});
    }
    return out;
}

void skin_weights(const PosedPrimitive& p, const Hit& hit, std::span<double> w) {
    const Primitive& pr = *p.source;
    double start = 0.0, end = 0.0;
    if (pr.kind == PrimitiveKind::capsule) {
        const double band = 1.5 * pr.radius;
        const double len = (p.b - p.a).norm();
        if (pr.blend_start >= 0)
            start = 0.5 * std::max(0.0, 1.0 - hit.axial / band);
        if (pr.blend_end >= 0)
            end = 0.5 * std::max(0.0, 1.0 - (len - hit.axial) / band);
    }
    w[std::size_t(pr.joint)] += 1.0 - start - end;
    if (start > 0)
        w[std::size_t(pr.blend_start)] += start;
    if (end > 0)
        w[std::size_t(pr.blend_end)] += end;
}

Primitive capsule(int part, int joint, Vec3 a, Vec3 b, double r, int blend_start = -1, int blend_end = -1) {
    Primitive p;
    p.kind = PrimitiveKind::capsule;
    p.part = part;
    p.joint = joint;
    p.a = a;
    p.b = b;
    p.radius = r;
    p.blend_start = blend_start;
    p.blend_end = blend_end;
    return p;
}

Primitive ellipsoid(int part, int joint, Vec3 c, Vec3 radii) {
    Primitive p;
    p.kind = PrimitiveKind::ellipsoid;
    p.part = part;
    p.joint = joint;
    p.center = c;
    p.radii = radii;
    return p;
}

} // namespace

std::string_view to_string(View v) { return v == View::front ? "front" : "back"; }

TemplateBody TemplateBody::default_body() {
    static const JointSpec specs[] = {
        {"root", nullptr, {0, 0.95, 0}},
        {"spine1", "root", {0, 1.10, 0}},
        {"spine2", "spine1", {0, 1.30, 0}},
        {"neck", "spine2", {0, 1.50, 0}},
        {"head", "neck", {0, 1.60, 0}},
        {"left_clavicle", "spine2", {0.03, 1.42, 0}},
        {"left_shoulder", "left_clavicle", {0.19, 1.42, 0}},
        {"left_elbow", "left_shoulder", {0.47, 1.42, 0}},
        {"left_wrist", "left_elbow", {0.72, 1.42, 0}},
        {"right_clavicle", "spine2", {-0.03, 1.42, 0}},
        {"right_shoulder", "right_clavicle", {-0.19, 1.42, 0}},
        {"right_elbow", "right_shoulder", {-0.47, 1.42, 0}},
        {"right_wrist", "right_elbow", {-0.72, 1.42, 0}},
        {"left_hip", "root", {0.10, 0.92, 0}},
        {"left_knee", "left_hip", {0.10, 0.50, 0}},
        {"left_ankle", "left_knee", {0.10, 0.09, 0}},
        {"right_hip", "root", {-0.10, 0.92, 0}},
        {"right_knee", "right_hip", {-0.10, 0.50, 0}},
        {"right_ankle", "right_knee", {-0.10, 0.09, 0}},
    };
    std::vector<Joint> joints;
    std::map<std::string, std::pair<int, Vec3>> index;
    for (const auto& s : specs) {
        Joint j;
        j.name = s.name;
        if (s.parent) {
            const auto& [pi, pp] = index.at(s.parent);
            j.parent = pi;
            j.translation = s.position - pp;
        } else {
            j.translation = s.position;
        }
        index[s.name] = {int(joints.size()), s.position};
        joints.push_back(std::move(j));
    }
    TemplateBody body;
    body.skeleton = Skeleton(std::move(joints));
    auto J = [&](const char* n) { return index.at(n).first; };
    auto P = [&](const char* n) { return index.at(n).second; };

    auto& prims = body.primitives;
    prims.push_back(capsule(id(Part::head), J("head"), {0, 1.66, 0}, {0, 1.72, 0}, 0.10));
    prims.push_back(capsule(id(Part::head), J("neck"), P("neck") + Vec3(0, -0.02, 0), P("head"), 0.055, J("spine2"), J("head")));
    prims.push_back(ellipsoid(id(Part::torso), J("spine2"), {0, 1.30, 0}, {0.165, 0.21, 0.11}));
    prims.push_back(ellipsoid(id(Part::torso), J("spine1"), {0, 1.10, 0}, {0.145, 0.16, 0.10}));
    prims.push_back(ellipsoid(id(Part::torso), J("root"), {0, 0.95, 0}, {0.16, 0.12, 0.105}));
    for (const std::string side : {"left", "right"}) {
        const bool left = side == "left";
        const auto n = [&](const char* j) { return side + "_" + j; };
        const int upper = id(left ? Part::left_upper_arm : Part::right_upper_arm);
        const int lower = id(left ? Part::left_lower_arm : Part::right_lower_arm);
        const int hand = id(left ? Part::left_hand : Part::right_hand);
        const int leg = id(left ? Part::left_leg : Part::right_leg);
        const double sx = left ? 1.0 : -1.0;
        const auto j = [&](const char* name) { return J(n(name).c_str()); };
        const auto p = [&](const char* name) { return P(n(name).c_str()); };
        prims.push_back(capsule(id(Part::torso), j("clavicle"), p("clavicle"), p("shoulder"), 0.06, -1, j("shoulder")));
        prims.push_back(capsule(upper, j("shoulder"), p("shoulder"), p("elbow"), 0.05, j("clavicle"), j("elbow")));
        prims.push_back(capsule(lower, j("elbow"), p("elbow"), p("wrist"), 0.04, j("shoulder"), j("wrist")));
        prims.push_back(capsule(hand, j("wrist"), p("wrist"), p("wrist") + Vec3(sx * 0.08, 0, 0), 0.045, j("elbow")));
        prims.push_back(capsule(leg, j("hip"), p("hip"), p("knee"), 0.075, J("root"), j("knee")));
        prims.push_back(capsule(leg, j("knee"), p("knee"), p("ankle"), 0.055, j("hip"), j("ankle")));
        prims.push_back(capsule(leg, j("ankle"), p("ankle") + Vec3(0, -0.03, 0), p("ankle") + Vec3(0, -0.04, 0.12), 0.04,
                                j("knee")));
    }
    body.validate();
    return body;
}

void TemplateBody::validate() const {
    std::vector<int> seen(kPartCount, 0);
    for (const Primitive& p : primitives) {
        if (p.part < 0 || p.part >= kPartCount)
            throw InputError("template primitive has an invalid part label");
        if (p.joint < 0 || p.joint >= int(skeleton.size()))
            throw InputError("template primitive references an unknown joint");
        for (int j : {p.blend_start, p.blend_end})
            if (j < -1 || j >= int(skeleton.size()))
                throw InputError("template primitive blends with an unknown joint");
        if (p.kind == PrimitiveKind::capsule && !(p.radius > 0))
            throw InputError("capsule radius must be positive");
        if (p.kind == PrimitiveKind::ellipsoid && !(p.radii.minCoeff() > 0))
            throw InputError("ellipsoid radii must be positive");
        ++seen[std::size_t(p.part)];
    }
    for (int l = 0; l < kPartCount; ++l)
        if (!seen[std::size_t(l)])
            throw InputError("template has no primitive for part " + std::string(part_name(l)));
    if (!(scale > 0))
        throw InputError("template scale must be positive");
}

json TemplateBody::to_json() const {
    json prims = json::array();
    for (const Primitive& p : primitives) {
        json e{{"part", std::string(part_name(p.part))}, {"joint", skeleton[std::size_t(p.joint)].name}};
        if (p.kind == PrimitiveKind::capsule) {
            e["type"] = "capsule";
            e["a"] = vec_json(p.a);
            e["b"] = vec_json(p.b);
            e["radius"] = p.radius;
        } else {
            e["type"] = "ellipsoid";
            e["center"] = vec_json(p.center);
            e["radii"] = vec_json(p.radii);
        }
        if (p.blend_start >= 0)
            e["blend_start"] = skeleton[std::size_t(p.blend_start)].name;
        if (p.blend_end >= 0)
            e["blend_end"] = skeleton[std::size_t(p.blend_end)].name;
        prims.push_back(std::move(e));
    }
    return {{"scale", scale}, {"skeleton", skeleton.to_json()}, {"primitives", prims}};
}

TemplateBody TemplateBody::from_json(const json& j) {
    TemplateBody body;
    body.scale = j.value("scale", 1.0);
    body.skeleton = Skeleton::from_json(j.at("skeleton"));
    for (const auto& e : j.at("primitives")) {
        Primitive p;
        const auto part = part_from_name(e.at("part").get<std::string>());
        if (!part)
            throw InputError("unknown part '" + e.at("part").get<std::string>() + "'");
        p.part = *part;
        p.joint = body.skeleton.index_of(e.at("joint").get<std::string>());
        const std::string type = e.at("type").get<std::string>();
        if (type == "capsule") {
            p.kind = PrimitiveKind::capsule;
            p.a = vec_from(e.at("a"));
            p.b = vec_from(e.at("b"));
            p.radius = e.at("radius").get<double>();
        } else if (type == "ellipsoid") {
            p.kind = PrimitiveKind::ellipsoid;
            p.center = vec_from(e.at("center"));
            p.radii = vec_from(e.at("radii"));
        } else {
            throw InputError("unknown primitive type '" + type + "'");
        }
        if (e.contains("blend_start"))
            p.blend_start = body.skeleton.index_of(e["blend_start"].get<std::string>());
        if (e.contains("blend_end"))
            p.blend_end = body.skeleton.index_of(e["blend_end"].get<std::string>());
        body.primitives.push_back(p);
    }
    body.validate();
    return body;
}

Camera default_camera(int size) {
    const double f = 720.0 * size / 256.0;
    const double c = (size - 1) / 2.0;
    return Camera::facing_subject({f, f, c, c}, Vec3(0, 0.93, 6.0), size, size);
}

Camera back_camera(const Camera& front, const TemplateBody& body, const Pose& pose) {
    const Vec3 root = posed_world(body.skeleton, pose)[0].translation();
    const Vec3 eye = front.center();
    return front.back_view(Vec3(eye.x(), eye.y(), root.z()));
}

TemplateRender render_template(const TemplateBody& body, const Pose& pose, const Camera& camera, View view,
                               const RenderOptions& options) {
    const Camera cam = view == View::front ? camera : back_camera(camera, body, pose);
    const int w = cam.width(), h = cam.height();
    const int joints = int(body.skeleton.size());
    auto posed = pose_primitives(body, pose);
    if (options.parts) {
        std::erase_if(posed, [&](const PosedPrimitive& p) {
            return std::find(options.parts->begin(), options.parts->end(), p.source->part) == options.parts->end();
        });
    }

    TemplateRender r{view,
                     cam,
                     RasterMap(w, h, 1, Semantic::mask),
                     RasterMap(w, h, 1, Semantic::depth),
                     RasterMap(w, h, 3, Semantic::normal),
                     RasterMap(w, h, joints, Semantic::skinning),
                     RasterMap(w, h, 1, Semantic::label, double(kBackground))};
    const Vec3 origin = cam.center();
    std::size_t hits = 0;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const Vec3 d = cam.ray_direction(Vec2(x, y));
            Hit best;
            const PosedPrimitive* owner = nullptr;
            for (const auto& p : posed) {
                const Hit hit = p.source->kind == PrimitiveKind::capsule ? intersect_capsule(p, origin, d)
                                                                         : intersect_ellipsoid(p, origin, d);
                if (hit.t < best.t) {
                    best = hit;
                    owner = &p;
                }
            }
            if (!owner)
                continue;
            ++hits;
            const Vec3 point = origin + best.t * d;
            const Vec3 n = cam.direction_to_camera(best.normal).normalized();
            r.silhouette.at(x, y) = 1.0;
            r.depth.at(x, y) = cam.depth_of(point);
            r.normal.at(x, y, 0) = n.x();
            r.normal.at(x, y, 1) = n.y();
            r.normal.at(x, y, 2) = -n.z();
            r.label.at(x, y) = owner->source->part;
            skin_weights(*owner, best, r.skinning.pixel(x, y));
        }
    if (hits == 0)
        throw GeometryError("template render is empty: no primitive projects into the image");
    return r;
}

double bounding_diameter(const TemplateBody& body, const Pose& pose) {
    const auto posed = pose_primitives(body, pose);
    Eigen::AlignedBox3d box;
    for (const auto& p : posed) {
        if (p.source->kind == PrimitiveKind::capsule) {
            box.extend(p.a - Vec3::Constant(p.radius));
            box.extend(p.a + Vec3::Constant(p.radius));
            box.extend(p.b - Vec3::Constant(p.radius));
            box.extend(p.b + Vec3::Constant(p.radius));
        } else {
            const double r = p.radii.maxCoeff();
            box.extend(p.center - Vec3::Constant(r));
            box.extend(p.center + Vec3::Constant(r));
        }
    }
    const Vec3 c = box.center();
    double radius = 0.0;
    for (const auto& p : posed) {
        if (p.source->kind == PrimitiveKind::capsule)
            radius = std::max({radius, (p.a - c).norm() + p.radius, (p.b - c).norm() + p.radius});
        else
            radius = std::max(radius, (p.center - c).norm() + p.radii.maxCoeff());
    }
    return 2.0 * radius;
}

std::vector<int> group_parts(std::string_view group) {
    if (group == "body")
        return {id(Part::head), id(Part::torso), id(Part::left_leg), id(Part::right_leg)};
    if (group == "left_arm")
        return {id(Part::left_upper_arm), id(Part::left_lower_arm), id(Part::left_hand)};
    if (group == "right_arm")
        return {id(Part::right_upper_arm), id(Part::right_lower_arm), id(Part::right_hand)};
    throw InputError("unknown part group '" + std::string(group) + "'");
}

TemplateRenderSet render_set(const TemplateBody& body, const Pose& pose, const Camera& camera) {
    TemplateRenderSet set;
    set.front = render_template(body, pose, camera, View::front);
    set.back = render_template(body, pose, camera, View::back);
    for (const char* g : {"body", "left_arm", "right_arm"}) {
        RenderOptions opt{group_parts(g)};
        set.groups.emplace(g, std::make_pair(render_template(body, pose, camera, View::front, opt),
                                             render_template(body, pose, camera, View::back, opt)));
    }
    set.skeleton = bake_pose(body.skeleton, pose);
    set.bounding_diameter = bounding_diameter(body, pose);
    return set;
}

namespace {

json write_render(const TemplateRender& r, const std::filesystem::path& dir, const std::string& prefix) {
    json files;
    const std::pair<const char*, const RasterMap*> maps[] = {{"silhouette", &r.silhouette}, {"depth", &r.depth},
                                                             {"normal", &r.normal},         {"skinning", &r.skinning},
                                                             {"label", &r.label}};
    for (const auto& [name, map] : maps) {
        const std::string file = prefix + "_" + name + ".fmap";
        write_fmap(*map, dir / file);
        files[name] = file;
    }
    return {{"view", std::string(to_string(r.view))}, {"camera", r.camera.to_json()}, {"maps", files}};
}

TemplateRender read_render(const json& j, const std::filesystem::path& dir) {
    TemplateRender r;
    r.view = j.at("view").get<std::string>() == "back" ? View::back : View::front;
    r.camera = Camera::from_json(j.at("camera"));
    const auto& m = j.at("maps");
    r.silhouette = read_fmap(dir / m.at("silhouette").get<std::string>());
    r.depth = read_fmap(dir / m.at("depth").get<std::string>());
    r.normal = read_fmap(dir / m.at("normal").get<std::string>());
    r.skinning = read_fmap(dir / m.at("skinning").get<std::string>());
    r.label = read_fmap(dir / m.at("label").get<std::string>());
    return r;
}

} // namespace

void write_render_set(const TemplateRenderSet& set, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    json manifest{{"skeleton", set.skeleton.to_json()},
                  {"bounding_diameter", set.bounding_diameter},
                  {"front", write_render(set.front, dir, "front")},
                  {"back", write_render(set.back, dir, "back")}};
    for (const auto& [name, views] : set.groups)
        manifest["groups"][name] = {{"front", write_render(views.first, dir, name + "_front")},
                                    {"back", write_render(views.second, dir, name + "_back")}};
    std::ofstream(dir / "manifest.json") << manifest.dump(2) << '\n';
}

TemplateRenderSet read_render_set(const std::filesystem::path& dir) {
    std::ifstream in(dir / "manifest.json");
    if (!in)
        throw InputError("no manifest.json in template render set " + dir.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw InputError("malformed render-set manifest: " + std::string(e.what()));
    }
    TemplateRenderSet set;
    set.skeleton = Skeleton::from_json(j.at("skeleton"));
    set.bounding_diameter = j.at("bounding_diameter").get<double>();
    set.front = read_render(j.at("front"), dir);
    set.back = read_render(j.at("back"), dir);
    if (j.contains("groups"))
        for (const auto& [name, g] : j["groups"].items())
            set.groups.emplace(name, std::make_pair(read_render(g.at("front"), dir), read_render(g.at("back"), dir)));
    return set;
}

Pose a_pose(const Skeleton& skeleton, double degrees) {
    Pose pose = Pose::rest(skeleton.size());
    const double a = degrees * std::numbers::pi / 180.0;
    pose.rotations[std::size_t(skeleton.index_of("left_shoulder"))] = Quat(Eigen::AngleAxisd(-a, Vec3::UnitZ()));
    pose.rotations[std::size_t(skeleton.index_of("right_shoulder"))] = Quat(Eigen::AngleAxisd(a, Vec3::UnitZ()));
    return pose;
}

Pose arm_over_torso_pose(const Skeleton& skeleton) {
    Pose pose = Pose::rest(skeleton.size());
    // Upper arm down, out and forward; forearm back across the belly, well clear of it.
    const Vec3 rest(-1, 0, 0);
    const Vec3 upper = Vec3(-0.4, -0.4, 0.82).normalized();
    const Vec3 fore = Vec3(1, 0, 0.1).normalized();
    const Quat shoulder = Quat::FromTwoVectors(rest, upper);
    const Quat elbow = Quat::FromTwoVectors(rest, shoulder.conjugate() * fore);
    pose.rotations[std::size_t(skeleton.index_of("right_shoulder"))] = shoulder.normalized();
    pose.rotations[std::size_t(skeleton.index_of("right_elbow"))] = elbow.normalized();
    return pose;
}

namespace {

std::array<double, 3> part_color(int part, bool two_tone) {
    if (two_tone)
        return is_arm(part) ? std::array{0.85, 0.15, 0.15} : std::array{0.15, 0.2, 0.85};
    static constexpr std::array<std::array<double, 3>, kPartCount> palette{{{0.93, 0.76, 0.62},
                                                                           {0.20, 0.45, 0.70},
                                                                           {0.25, 0.55, 0.80},
                                                                           {0.90, 0.72, 0.58},
                                                                           {0.88, 0.70, 0.56},
                                                                           {0.25, 0.55, 0.80},
                                                                           {0.90, 0.72, 0.58},
                                                                           {0.88, 0.70, 0.56},
                                                                           {0.25, 0.25, 0.30},
                                                                           {0.28, 0.28, 0.33}}};
    return palette[std::size_t(part)];
}

RasterMap photo(const TemplateRender& r, bool two_tone, std::uint64_t seed) {
    RasterMap img(r.label.width(), r.label.height(), 3, Semantic::color, 0.5);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> noise(-0.02, 0.02);
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) {
            const int l = r.label.label_at(x, y);
            if (l == kBackground)
                continue;
            const auto base = part_color(l, two_tone);
            const double shade = two_tone ? 1.0 : 0.45 + 0.55 * std::max(0.0, r.normal.at(x, y, 2));
            for (int c = 0; c < 3; ++c)
                img.at(x, y, c) = std::clamp(base[std::size_t(c)] * shade + noise(rng), 0.0, 1.0);
        }
    return img;
}

RasterMap occlusion_contour(const TemplateRender& r, double tau) {
    const int w = r.label.width(), h = r.label.height();
    RasterMap out(w, h, 1, Semantic::mask);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const int lp = r.label.label_at(x, y);
            if (lp == kBackground)
                continue;
            for (const auto& [dx, dy] : {std::pair{1, 0}, std::pair{0, 1}}) {
                const int lq = r.label.label_at(x + dx, y + dy);
                if (lq == kBackground || !((is_arm(lp) && in_region_b(lq)) || (is_arm(lq) && in_region_b(lp))))
                    continue;
                const Vec3 P = r.camera.backproject(Vec2(x, y), r.depth.at(x, y));
                const Vec3 Q = r.camera.backproject(Vec2(x + dx, y + dy), r.depth.at(x + dx, y + dy));
                if ((P - Q).norm() > tau)
                    out.at(x, y) = out.at(x + dx, y + dy) = 1.0;
            }
        }
    return out;
}

// Extends colours into pixels of `domain` that the render does not cover.
RasterMap extend_colors(const RasterMap& image, const RasterMap& rendered, const RasterMap& domain) {
    std::vector<std::uint8_t> valid(image.pixel_count());
    for (std::size_t i = 0; i < valid.size(); ++i)
        valid[i] = rendered.data()[i] >= 0.5;
    RasterMap filled = fill_holes(image, valid, domain);
    for (std::size_t i = 0; i < valid.size(); ++i)
        if (domain.data()[i] < 0.5)
            for (int c = 0; c < 3; ++c)
                filled.data()[i * 3 + std::size_t(c)] = 0.5;
    return filled;
}

} // namespace

int default_fixture_size(std::string_view name) { return name.starts_with("arm_over_torso") ? 512 : 256; }

Fixture make_fixture(std::string_view name, const TemplateBody& body, const Camera& camera) {
    const auto it = std::find(kFixtureNames.begin(), kFixtureNames.end(), name);
    if (it == kFixtureNames.end())
        throw InputError("unknown fixture '" + std::string(name) + "'");
    const std::uint64_t seed = 1000 + std::uint64_t(it - kFixtureNames.begin());
    const Skeleton& sk = body.skeleton;

    Fixture f;
    f.name = std::string(name);
    if (name == "plain_tpose" || name == "dilated_clothing")
        f.pose = Pose::rest(sk.size());
    else if (name == "concave_sleeves")
        f.pose = a_pose(sk);
    else
        f.pose = arm_over_torso_pose(sk);

    // Pixel-sized perturbations are specified at 256 px and scaled with the image.
    const double px = camera.width() / 256.0;
    f.truth.pose = f.pose;
    if (name == "arm_over_torso_twotone") {
        // The photographed forearm sits about 3 px lower than the template's.
        const int s = sk.index_of("right_shoulder");
        const Quat tilt(Eigen::AngleAxisd(-0.1 / px, Vec3::UnitX()));
        f.truth.pose.rotations[std::size_t(s)] = (tilt * f.pose.rotations[std::size_t(s)]).normalized();
    }

    const TemplateRender truth = render_template(body, f.truth.pose, camera, View::front);
    f.truth.depth = truth.depth;
    f.truth.labels = truth.label;
    f.truth.body_silhouette =
        render_template(body, f.truth.pose, camera, View::front, {group_parts("body")}).silhouette;
    f.truth.occlusion_contour = occlusion_contour(truth, 0.05 * bounding_diameter(body, f.truth.pose));

    const bool two_tone = name == "arm_over_torso_twotone";
    RasterMap image = photo(truth, two_tone, seed);
    f.silhouette = truth.silhouette;
    if (name == "dilated_clothing") {
        f.silhouette = dilate(truth.silhouette, 6.0 * px);
    } else if (name == "concave_sleeves") {
        const RasterMap sleeves = select_labels(truth.label, {id(Part::left_upper_arm), id(Part::left_lower_arm),
                                                             id(Part::right_upper_arm), id(Part::right_lower_arm)});
        f.silhouette = mask_or(truth.silhouette, dilate(sleeves, 4.0 * px));
    }
    f.image = f.silhouette == truth.silhouette ? image : extend_colors(image, truth.silhouette, f.silhouette);
    spdlog::debug("fixture {}: {} silhouette pixels", f.name, f.silhouette.count_set());
    return f;
}

} // namespace photorig
