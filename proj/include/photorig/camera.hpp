#pragma once

#include <nlohmann/json_fwd.hpp>

#include "photorig/core.hpp"

namespace photorig {

struct Intrinsics {
    double fx = 1.0;
    double fy = 1.0;
    double cx = 0.0;
    double cy = 0.0;
};

/// Pinhole camera. World space is y-up with the subject facing +z; the camera
/// frame is x right, y down, z forward (depth).
class Camera {
public:
    Camera() = default;
    Camera(Intrinsics k, Eigen::Isometry3d world_to_camera, int width, int height);

    /// Camera at `position` looking along world -z, image x along world +x.
    static Camera facing_subject(Intrinsics k, const Vec3& position, int width, int height);

    const Intrinsics& intrinsics() const noexcept { return k_; }
    const Eigen::Isometry3d& world_to_camera() const noexcept { return world_to_camera_; }
    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }

    Vec3 to_camera(const Vec3& world) const { return world_to_camera_ * world; }
    Vec3 to_world(const Vec3& cam) const { return world_to_camera_.inverse() * cam; }
    Vec3 direction_to_camera(const Vec3& world_dir) const { return world_to_camera_.linear() * world_dir; }

    Vec2 project(const Vec3& world) const;
    double depth_of(const Vec3& world) const { return to_camera(world).z(); }
    /// World point on the ray through `pixel` at camera depth `depth`.
    Vec3 backproject(const Vec2& pixel, double depth) const;
    Vec3 center() const { return world_to_camera_.inverse().translation(); }
    /// Unit world-space direction of the ray through `pixel`.
    Vec3 ray_direction(const Vec2& pixel) const;

    /// The same camera orbited 180 degrees about the vertical axis through `pivot`.
    Camera back_view(const Vec3& pivot) const;

    nlohmann::json to_json() const;
    static Camera from_json(const nlohmann::json& j);

private:
    Intrinsics k_;
    Eigen::Isometry3d world_to_camera_ = Eigen::Isometry3d::Identity();
    int width_ = 0;
    int height_ = 0;
};

} // namespace photorig
