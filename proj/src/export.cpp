#include "photorig/export.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <map>
#include <numeric>

#include <nlohmann/json.hpp>

namespace photorig {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json vec(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path())
        fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw InputError("cannot write " + path.string());
    out << text;
    if (!out)
        throw InputError("failed writing " + path.string());
}

json read_json_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw InputError("cannot read " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw InputError(path.string() + ": " + e.what());
    }
}

// Binary buffer assembled from 4-byte aligned views.
class Buffer {
public:
    template <class T>
    std::size_t append(const std::vector<T>& values, int target, json& views) {
        while (bytes_.size() % 4)
            bytes_.push_back(0);
        const std::size_t offset = bytes_.size();
        const std::size_t length = values.size() * sizeof(T);
        bytes_.resize(offset + length);
        if (length)
            std::memcpy(bytes_.data() + offset, values.data(), length);
        json view = {{"buffer", 0}, {"byteOffset", offset}, {"byteLength", length}};
        if (target)
            view["target"] = target;
        views.push_back(view);
        return views.size() - 1;
    }
    const std::vector<char>& bytes() const { return bytes_; }

private:
    std::vector<char> bytes_;
};

constexpr int kFloat = 5126, kUnsignedInt = 5125, kUnsignedShort = 5123;
constexpr int kArrayBuffer = 34962, kElementArrayBuffer = 34963;

std::size_t add_accessor(json& accessors, std::size_t view, int component, std::size_t count, const char* type,
                         std::optional<std::pair<json, json>> bounds = std::nullopt) {
    json a = {{"bufferView", view}, {"componentType", component}, {"count", count}, {"type", type}};
    if (bounds) {
        a["min"] = bounds->first;
        a["max"] = bounds->second;
    }
    accessors.push_back(a);
    return accessors.size() - 1;
}

std::array<float, 4> quat_xyzw(const Quat& q) {
    return {float(q.x()), float(q.y()), float(q.z()), float(q.w())};
}

} // namespace

std::pair<std::array<int, 4>, std::array<double, 4>> top4_weights(const double* row, int joints) {
    std::vector<int> order(static_cast<std::size_t>(joints));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return row[a] > row[b]; });
    std::array<int, 4> idx{0, 0, 0, 0};
    std::array<double, 4> w{0, 0, 0, 0};
    double sum = 0.0;
    for (int k = 0; k < std::min(4, joints); ++k) {
        idx[std::size_t(k)] = order[std::size_t(k)];
        w[std::size_t(k)] = std::max(0.0, row[order[std::size_t(k)]]);
        sum += w[std::size_t(k)];
    }
    if (sum <= 0.0)
        throw GeometryError("vertex has no positive skinning weight");
    for (std::size_t k = 0; k < 4; ++k) {
        w[k] /= sum;
        if (w[k] == 0.0)
            idx[k] = 0;
    }
    return {idx, w};
}

json mesh_to_json(const RiggedMesh& m) {
    const std::size_t b = m.joint_count();
    json vertices = json::array(), triangles = json::array(), weights = json::array(), uvs = json::array();
    for (const Vec3& v : m.vertices)
        vertices.push_back(vec(v));
    for (const Triangle& t : m.triangles)
        triangles.push_back(json::array({t[0], t[1], t[2]}));
    for (std::size_t v = 0; v < m.vertices.size(); ++v)
        weights.push_back(std::vector<double>(m.weights.begin() + std::ptrdiff_t(v * b),
                                              m.weights.begin() + std::ptrdiff_t((v + 1) * b)));
    for (const auto& c : m.corner_uvs)
        uvs.push_back(json::array({c[0].x(), c[0].y(), c[1].x(), c[1].y(), c[2].x(), c[2].y()}));
    std::vector<int> sides;
    sides.reserve(m.sides.size());
    for (SurfaceSide s : m.sides)
        sides.push_back(int(s));
    return {
        {"format", "photorig-mesh"},
        {"version", 1},
        {"skeleton", m.skeleton.to_json()},
        {"vertices", vertices},
        {"triangles", triangles},
        {"weights", weights},
        {"corner_uvs", uvs},
        {"labels", m.labels},
        {"groups", m.groups},
        {"sides", sides},
    };
}

RiggedMesh mesh_from_json(const json& j) {
    try {
        if (j.value("format", "") != "photorig-mesh")
            throw InputError("not a mesh dump");
        if (j.at("version").get<int>() != 1)
            throw InputError("unsupported mesh dump version");
        RiggedMesh m;
        m.skeleton = Skeleton::from_json(j.at("skeleton"));
        const std::size_t b = m.skeleton.size();
        for (const auto& v : j.at("vertices"))
            m.vertices.emplace_back(v.at(0).get<double>(), v.at(1).get<double>(), v.at(2).get<double>());
        for (const auto& t : j.at("triangles"))
            m.triangles.push_back({t.at(0).get<int>(), t.at(1).get<int>(), t.at(2).get<int>()});
        for (const auto& row : j.at("weights")) {
            if (row.size() != b)
                throw InputError("weight row length differs from the joint count");
            for (const auto& w : row)
                m.weights.push_back(w.get<double>());
        }
        for (const auto& c : j.at("corner_uvs")) {
            if (c.size() != 6)
                throw InputError("corner_uvs rows need 6 numbers");
            m.corner_uvs.push_back({Vec2(c[0].get<double>(), c[1].get<double>()),
                                    Vec2(c[2].get<double>(), c[3].get<double>()),
                                    Vec2(c[4].get<double>(), c[5].get<double>())});
        }
        m.labels = j.at("labels").get<std::vector<int>>();
        m.groups = j.at("groups").get<std::vector<int>>();
        for (int s : j.at("sides").get<std::vector<int>>()) {
            if (s < 0 || s > 2)
                throw InputError("bad side code");
            m.sides.push_back(SurfaceSide(s));
        }
        for (std::size_t n : {m.labels.size(), m.groups.size(), m.sides.size()})
            if (n != m.vertices.size())
                throw InputError("per-vertex arrays differ in length from the vertex list");
        m.validate(false);
        return m;
    } catch (const json::exception& e) {
        throw InputError(std::string("malformed mesh dump: ") + e.what());
    } catch (const GeometryError& e) {
        throw InputError(std::string("inconsistent mesh dump: ") + e.what());
    }
}

void write_mesh_json(const RiggedMesh& mesh, const fs::path& path) { write_text(path, mesh_to_json(mesh).dump()); }

RiggedMesh read_mesh_json(const fs::path& path) { return mesh_from_json(read_json_file(path)); }

void write_frame_json(const std::vector<Vec3>& vertices, const std::vector<Triangle>& triangles, int frame,
                      const fs::path& path) {
    json v = json::array(), t = json::array();
    for (const Vec3& p : vertices)
        v.push_back(vec(p));
    for (const Triangle& tri : triangles)
        t.push_back(json::array({tri[0], tri[1], tri[2]}));
    write_text(path, json{{"frame", frame}, {"vertices", v}, {"triangles", t}}.dump());
}

GltfFiles write_gltf(const RiggedMesh& m, const fs::path& dir, const GltfOptions& options) {
    m.validate(false);
    const int joints = int(m.joint_count());
    if (joints == 0)
        throw InputError("mesh has no skeleton");
    if (joints > 65535)
        throw InputError("too many joints for glTF");
    fs::create_directories(dir);
    GltfFiles files{dir / (options.name + ".gltf"), dir / (options.name + ".bin"), std::nullopt};
    const bool textured = !m.texture.empty() && m.corner_uvs.size() == m.triangles.size();

    // Split vertices wherever corners that share a position disagree on UV.
    std::map<std::tuple<int, float, float>, std::uint32_t> remap;
    std::vector<int> source;
    std::vector<float> uv;
    std::vector<std::uint32_t> indices;
    indices.reserve(m.triangles.size() * 3);
    for (std::size_t t = 0; t < m.triangles.size(); ++t)
        for (std::size_t k = 0; k < 3; ++k) {
            const int v = m.triangles[t][k];
            const Vec2 c = textured ? m.corner_uvs[t][k] : Vec2::Zero();
            const auto key = std::make_tuple(v, float(c.x()), float(c.y()));
            auto [it, inserted] = remap.try_emplace(key, std::uint32_t(source.size()));
            if (inserted) {
                source.push_back(v);
                uv.push_back(float(c.x()));
                uv.push_back(float(c.y()));
            }
            indices.push_back(it->second);
        }

    std::vector<float> positions;
    std::vector<std::uint16_t> joint_ids;
    std::vector<float> weights;
    Vec3 lo = Vec3::Constant(std::numeric_limits<double>::max()), hi = -lo;
    for (int v : source) {
        const Vec3& p = m.vertices[std::size_t(v)];
        for (int a = 0; a < 3; ++a)
            positions.push_back(float(p[a]));
        lo = lo.cwiseMin(p.cast<float>().cast<double>());
        hi = hi.cwiseMax(p.cast<float>().cast<double>());
        const auto [idx, w] = top4_weights(m.weights.data() + std::size_t(v) * std::size_t(joints), joints);
        for (int k = 0; k < 4; ++k) {
            joint_ids.push_back(std::uint16_t(idx[std::size_t(k)]));
            weights.push_back(float(w[std::size_t(k)]));
        }
    }

    const auto& rest = m.skeleton.rest_world();
    std::vector<float> inverse_bind;
    for (const auto& world : rest) {
        const Eigen::Matrix4d inv = world.inverse().matrix();
        for (int c = 0; c < 4; ++c)
            for (int r = 0; r < 4; ++r)
                inverse_bind.push_back(float(inv(r, c)));
    }

    Buffer buffer;
    json views = json::array(), accessors = json::array();
    const std::size_t count = source.size();
    const auto pos_acc = add_accessor(accessors, buffer.append(positions, kArrayBuffer, views), kFloat, count, "VEC3",
                                      std::make_pair(vec(lo), vec(hi)));
    const auto joint_acc =
        add_accessor(accessors, buffer.append(joint_ids, kArrayBuffer, views), kUnsignedShort, count, "VEC4");
    const auto weight_acc = add_accessor(accessors, buffer.append(weights, kArrayBuffer, views), kFloat, count, "VEC4");
    const auto index_acc = add_accessor(accessors, buffer.append(indices, kElementArrayBuffer, views), kUnsignedInt,
                                        indices.size(), "SCALAR");
    const auto ibm_acc =
        add_accessor(accessors, buffer.append(inverse_bind, 0, views), kFloat, std::size_t(joints), "MAT4");

    json attributes = {{"POSITION", pos_acc}, {"JOINTS_0", joint_acc}, {"WEIGHTS_0", weight_acc}};
    json primitive = {{"attributes", attributes}, {"indices", index_acc}, {"mode", 4}};

    json doc = {{"asset", {{"version", "2.0"}, {"generator", "photorig"}}}, {"scene", 0}};
    if (textured) {
        primitive["attributes"]["TEXCOORD_0"] =
            add_accessor(accessors, buffer.append(uv, kArrayBuffer, views), kFloat, count, "VEC2");
        primitive["material"] = 0;
        const fs::path png = dir / (options.name + "_texture.png");
        write_png(m.texture, png);
        files.texture = png;
        doc["images"] = json::array({{{"uri", png.filename().string()}}});
        doc["samplers"] = json::array({{{"magFilter", 9729}, {"minFilter", 9729}, {"wrapS", 33071}, {"wrapT", 33071}}});
        doc["textures"] = json::array({{{"source", 0}, {"sampler", 0}}});
        doc["materials"] = json::array({{{"name", "atlas"},
                                         {"doubleSided", false},
                                         {"pbrMetallicRoughness",
                                          {{"baseColorTexture", {{"index", 0}}},
                                           {"metallicFactor", 0.0},
                                           {"roughnessFactor", 1.0}}}}});
    }

    // Nodes 0..B-1 are joints, node B carries the skinned mesh.
    json nodes = json::array();
    std::vector<std::vector<int>> children(static_cast<std::size_t>(joints));
    std::vector<int> roots;
    for (int i = 0; i < joints; ++i) {
        const Joint& jt = m.skeleton[std::size_t(i)];
        (jt.parent < 0 ? roots : children[std::size_t(jt.parent)]).push_back(i);
    }
    for (int i = 0; i < joints; ++i) {
        const Joint& jt = m.skeleton[std::size_t(i)];
        const auto q = quat_xyzw(jt.rotation);
        json node = {{"name", jt.name},
                     {"translation", vec(jt.translation)},
                     {"rotation", json::array({q[0], q[1], q[2], q[3]})}};
        if (!children[std::size_t(i)].empty())
            node["children"] = children[std::size_t(i)];
        nodes.push_back(node);
    }
    nodes.push_back({{"name", options.name}, {"mesh", 0}, {"skin", 0}});
    std::vector<int> scene_nodes = roots;
    scene_nodes.push_back(joints);
    std::vector<int> joint_nodes(static_cast<std::size_t>(joints));
    std::iota(joint_nodes.begin(), joint_nodes.end(), 0);

    doc["nodes"] = nodes;
    doc["scenes"] = json::array({{{"nodes", scene_nodes}}});
    doc["meshes"] = json::array({{{"name", options.name}, {"primitives", json::array({primitive})}}});
    doc["skins"] = json::array({{{"inverseBindMatrices", ibm_acc}, {"joints", joint_nodes}, {"skeleton", roots[0]}}});

    if (options.animation && !options.animation->frames.empty()) {
        const Clip& clip = *options.animation;
        if (clip.fps <= 0.0)
            throw InputError("clip fps must be positive");
        std::vector<float> times;
        for (std::size_t f = 0; f < clip.frames.size(); ++f)
            times.push_back(float(double(f) / clip.fps));
        const auto time_acc = add_accessor(accessors, buffer.append(times, 0, views), kFloat, times.size(), "SCALAR",
                                           std::make_pair(json::array({times.front()}), json::array({times.back()})));
        json samplers = json::array(), channels = json::array();
        for (int i = 0; i < joints; ++i) {
            std::vector<float> rot;
            for (const Pose& pose : clip.frames) {
                pose.validate(m.skeleton);
                const auto q = quat_xyzw((m.skeleton[std::size_t(i)].rotation * pose.rotations[std::size_t(i)]).normalized());
                rot.insert(rot.end(), q.begin(), q.end());
            }
            const auto acc = add_accessor(accessors, buffer.append(rot, 0, views), kFloat, clip.frames.size(), "VEC4");
            samplers.push_back({{"input", time_acc}, {"output", acc}, {"interpolation", "LINEAR"}});
            channels.push_back({{"sampler", samplers.size() - 1}, {"target", {{"node", i}, {"path", "rotation"}}}});
        }
        const bool moves_root = std::any_of(clip.frames.begin(), clip.frames.end(),
                                            [](const Pose& p) { return p.root_translation.has_value(); });
        if (moves_root)
            for (int root : roots) {
                std::vector<float> tr;
                for (const Pose& pose : clip.frames) {
                    const Vec3 t = m.skeleton[std::size_t(root)].translation + pose.root_translation.value_or(Vec3::Zero());
                    tr.insert(tr.end(), {float(t.x()), float(t.y()), float(t.z())});
                }
                const auto acc = add_accessor(accessors, buffer.append(tr, 0, views), kFloat, clip.frames.size(), "VEC3");
                samplers.push_back({{"input", time_acc}, {"output", acc}, {"interpolation", "LINEAR"}});
                channels.push_back({{"sampler", samplers.size() - 1}, {"target", {{"node", root}, {"path", "translation"}}}});
            }
        doc["animations"] = json::array({{{"name", "clip"}, {"samplers", samplers}, {"channels", channels}}});
    }

    doc["bufferViews"] = views;
    doc["accessors"] = accessors;
    doc["buffers"] = json::array({{{"uri", files.bin.filename().string()}, {"byteLength", buffer.bytes().size()}}});

    write_text(files.bin, std::string(buffer.bytes().begin(), buffer.bytes().end()));
    write_text(files.gltf, doc.dump(1));
    return files;
}

} // namespace photorig
