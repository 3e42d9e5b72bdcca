#include "photorig/skeleton.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

namespace photorig {

namespace {

constexpr double kUnitTolerance = 1e-6;

Quat quat_from_json(const nlohmann::json& j, const std::string& what) {
    if (!j.is_array() || j.size() != 4)
        throw InputError(what + ": quaternion must be [x, y, z, w]");
    return Quat(j[3].get<double>(), j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

nlohmann::json quat_to_json(const Quat& q) { return {q.x(), q.y(), q.z(), q.w()}; }

Vec3 vec3_from_json(const nlohmann::json& j, const std::string& what) {
    if (!j.is_array() || j.size() != 3)
        throw InputError(what + ": expected [x, y, z]");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

Eigen::Isometry3d local_transform(const Joint& joint, const Quat& pose) {
    Eigen::Isometry3d t = Eigen::Isometry3d::Identity();
    t.translation() = joint.translation;
    t.linear() = (joint.rotation * pose).toRotationMatrix();
    return t;
}

} // namespace

Skeleton::Skeleton(std::vector<Joint> joints) : joints_(std::move(joints)) {
    if (joints_.empty())
        throw InputError("skeleton has no joints");
    for (std::size_t i = 0; i < joints_.size(); ++i) {
        const Joint& j = joints_[i];
        if ((i == 0) != (j.parent < 0))
            throw InputError("skeleton must have exactly one root, at index 0");
        if (j.parent >= int(i))
            throw InputError("skeleton joint '" + j.name + "' precedes its parent");
        if (std::abs(j.rotation.norm() - 1.0) > kUnitTolerance)
            throw InputError("skeleton joint '" + j.name + "' has a non-unit rest rotation");
        for (std::size_t k = 0; k < i; ++k)
            if (joints_[k].name == j.name)
                throw InputError("duplicate joint name '" + j.name + "'");
    }
    rest_world_ = posed_world(*this, Pose::rest(joints_.size()));
}

std::optional<int> Skeleton::find(std::string_view name) const {
    for (std::size_t i = 0; i < joints_.size(); ++i)
        if (joints_[i].name == name)
            return int(i);
    return std::nullopt;
}

int Skeleton::index_of(std::string_view name) const {
    if (auto i = find(name))
        return *i;
    throw InputError("unknown joint '" + std::string(name) + "'");
}

nlohmann::json Skeleton::to_json() const {
    nlohmann::json joints = nlohmann::json::array();
    for (const Joint& j : joints_)
        joints.push_back({{"name", j.name},
                          {"parent", j.parent},
                          {"rotation", quat_to_json(j.rotation)},
                          {"translation", {j.translation.x(), j.translation.y(), j.translation.z()}}});
    return {{"joints", joints}};
}

Skeleton Skeleton::from_json(const nlohmann::json& j) {
    std::vector<Joint> joints;
    for (const auto& e : j.at("joints")) {
        Joint joint;
        joint.name = e.at("name").get<std::string>();
        joint.parent = e.at("parent").get<int>();
        if (e.contains("rotation"))
            joint.rotation = quat_from_json(e["rotation"], joint.name);
        joint.translation = vec3_from_json(e.at("translation"), joint.name);
        joints.push_back(std::move(joint));
    }
    return Skeleton(std::move(joints));
}

Pose Pose::rest(std::size_t joints) { return {std::vector<Quat>(joints, Quat::Identity()), std::nullopt}; }

void Pose::validate(const Skeleton& skeleton) const {
    if (rotations.size() != skeleton.size())
        throw InputError("pose has " + std::to_string(rotations.size()) + " joints, skeleton has " +
                         std::to_string(skeleton.size()));
    for (std::size_t i = 0; i < rotations.size(); ++i)
        if (!(std::abs(rotations[i].norm() - 1.0) <= kUnitTolerance))
            throw InputError("pose rotation for joint '" + skeleton[i].name + "' is not a unit quaternion");
}

std::vector<Eigen::Isometry3d> posed_world(const Skeleton& skeleton, const Pose& pose) {
    pose.validate(skeleton);
    std::vector<Eigen::Isometry3d> world(skeleton.size());
    for (std::size_t i = 0; i < skeleton.size(); ++i) {
        const Joint& j = skeleton[i];
        const Eigen::Isometry3d local = local_transform(j, pose.rotations[i]);
        if (j.parent < 0) {
            Eigen::Isometry3d root = Eigen::Isometry3d::Identity();
            if (pose.root_translation)
                root.translation() = *pose.root_translation;
            world[i] = root * local;
        } else {
            world[i] = world[std::size_t(j.parent)] * local;
        }
    }
    return world;
}

std::vector<Eigen::Isometry3d> skinning_matrices(const Skeleton& skeleton, const Pose& pose) {
    auto world = posed_world(skeleton, pose);
    for (std::size_t i = 0; i < world.size(); ++i)
        world[i] = world[i] * skeleton.rest_world()[i].inverse();
    return world;
}

Skeleton bake_pose(const Skeleton& skeleton, const Pose& pose) {
    pose.validate(skeleton);
    auto joints = skeleton.joints();
    for (std::size_t i = 0; i < joints.size(); ++i)
        joints[i].rotation = (joints[i].rotation * pose.rotations[i]).normalized();
    if (pose.root_translation)
        joints[0].translation += *pose.root_translation;
    return Skeleton(std::move(joints));
}

Pose pose_from_json(const nlohmann::json& j, const Skeleton& skeleton) {
    if (!j.is_object())
        throw InputError("pose must be a JSON object");
    Pose pose = Pose::rest(skeleton.size());
    std::vector<std::string> unknown;
    if (j.contains("rotations")) {
        for (const auto& [name, q] : j["rotations"].items()) {
            const auto idx = skeleton.find(name);
            if (!idx) {
                unknown.push_back(name);
                continue;
            }
            pose.rotations[std::size_t(*idx)] = quat_from_json(q, name);
        }
    }
    if (!unknown.empty()) {
        std::string list;
        for (const auto& u : unknown)
            list += (list.empty() ? "" : ", ") + u;
        throw InputError("unknown joints: " + list);
    }
    if (j.contains("root_translation") && !j["root_translation"].is_null())
        pose.root_translation = vec3_from_json(j["root_translation"], "root_translation");
    pose.validate(skeleton);
    return pose;
}

nlohmann::json pose_to_json(const Pose& pose, const Skeleton& skeleton) {
    pose.validate(skeleton);
    nlohmann::json rotations = nlohmann::json::object();
    for (std::size_t i = 0; i < skeleton.size(); ++i)
        rotations[skeleton[i].name] = quat_to_json(pose.rotations[i]);
    nlohmann::json out{{"rotations", rotations}};
    if (pose.root_translation)
        out["root_translation"] = {pose.root_translation->x(), pose.root_translation->y(), pose.root_translation->z()};
    return out;
}

Clip clip_from_json(const nlohmann::json& j, const Skeleton& skeleton) {
    Clip clip;
    clip.fps = j.value("fps", 30.0);
    if (!(clip.fps > 0))
        throw InputError("clip fps must be positive");
    if (!j.contains("frames") || !j["frames"].is_array())
        throw InputError("clip has no frames array");
    for (const auto& f : j["frames"])
        clip.frames.push_back(pose_from_json(f, skeleton));
    return clip;
}

nlohmann::json clip_to_json(const Clip& clip, const Skeleton& skeleton) {
    nlohmann::json frames = nlohmann::json::array();
    for (const Pose& p : clip.frames)
        frames.push_back(pose_to_json(p, skeleton));
    return {{"fps", clip.fps}, {"frames", frames}};
}

std::vector<Vec3> lbs(const std::vector<Vec3>& vertices, const std::vector<double>& weights, const Skeleton& skeleton,
                      const Pose& pose) {
    const std::size_t b = skeleton.size();
    if (weights.size() != vertices.size() * b)
        throw InputError("lbs: weight table does not match vertices x joints");
    const auto m = skinning_matrices(skeleton, pose);
    std::vector<Vec3> out(vertices.size());
    for (std::size_t v = 0; v < vertices.size(); ++v) {
        Vec3 acc = Vec3::Zero();
        for (std::size_t k = 0; k < b; ++k) {
            const double w = weights[v * b + k];
            if (w != 0.0)
                acc += w * (m[k] * vertices[v]);
        }
        out[v] = acc;
    }
    return out;
}

} // namespace photorig
