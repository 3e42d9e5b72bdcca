#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "photorig/core.hpp"

namespace photorig {

using Quat = Eigen::Quaterniond;

struct Joint {
    std::string name;
    int parent = -1;
    Quat rotation = Quat::Identity(); ///< rest local rotation
    Vec3 translation = Vec3::Zero();  ///< rest offset from the parent, model units
};

/// Joint hierarchy; parents always precede their children.
class Skeleton {
public:
    Skeleton() = default;
    explicit Skeleton(std::vector<Joint> joints);

    std::size_t size() const noexcept { return joints_.size(); }
    const Joint& operator[](std::size_t i) const { return joints_[i]; }
    const std::vector<Joint>& joints() const noexcept { return joints_; }
    std::optional<int> find(std::string_view name) const;
    int index_of(std::string_view name) const; ///< throws InputError

    /// Rest world transform of every joint.
    const std::vector<Eigen::Isometry3d>& rest_world() const noexcept { return rest_world_; }

    nlohmann::json to_json() const;
    static Skeleton from_json(const nlohmann::json& j);

private:
    std::vector<Joint> joints_;
    std::vector<Eigen::Isometry3d> rest_world_;
};

/// Per-joint local rotations applied on top of the rest pose.
struct Pose {
    std::vector<Quat> rotations;
    std::optional<Vec3> root_translation;

    static Pose rest(std::size_t joints);
    /// Throws InputError unless sizes match and every quaternion is unit within 1e-6.
    void validate(const Skeleton& skeleton) const;
};

/// World transform of every joint under `pose`.
std::vector<Eigen::Isometry3d> posed_world(const Skeleton& skeleton, const Pose& pose);

/// Per-joint skinning matrices: posed world times inverse rest world.
std::vector<Eigen::Isometry3d> skinning_matrices(const Skeleton& skeleton, const Pose& pose);

/// Skeleton whose rest pose is `pose` applied to `skeleton`.
Skeleton bake_pose(const Skeleton& skeleton, const Pose& pose);

/// Pose JSON: {"rotations": {"joint": [x, y, z, w], ...}, "root_translation": [x, y, z]}.
/// Joints not mentioned keep their rest rotation. Unknown joint names are rejected, all listed.
Pose pose_from_json(const nlohmann::json& j, const Skeleton& skeleton);
nlohmann::json pose_to_json(const Pose& pose, const Skeleton& skeleton);

struct Clip {
    double fps = 30.0;
    std::vector<Pose> frames;
};

/// Clip JSON: {"fps": 30, "frames": [pose, ...]}.
Clip clip_from_json(const nlohmann::json& j, const Skeleton& skeleton);
nlohmann::json clip_to_json(const Clip& clip, const Skeleton& skeleton);

/// Linear blend skinning. `weights` is vertices x joints, row-major.
std::vector<Vec3> lbs(const std::vector<Vec3>& vertices, const std::vector<double>& weights, const Skeleton& skeleton,
                      const Pose& pose);

} // namespace photorig
