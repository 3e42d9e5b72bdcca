#include "photorig/camera.hpp"

#include <nlohmann/json.hpp>

namespace photorig {

Camera::Camera(Intrinsics k, Eigen::Isometry3d world_to_camera, int width, int height)
    : k_(k), world_to_camera_(world_to_camera), width_(width), height_(height) {
    if (k.fx <= 0 || k.fy <= 0)
        throw InputError("camera focal lengths must be positive");
}

Camera Camera::facing_subject(Intrinsics k, const Vec3& position, int width, int height) {
    Eigen::Isometry3d t = Eigen::Isometry3d::Identity();
    t.linear() = Eigen::Vector3d(1.0, -1.0, -1.0).asDiagonal();
    t.translation() = -(t.linear() * position);
    return Camera(k, t, width, height);
}

Vec2 Camera::project(const Vec3& world) const {
    const Vec3 c = to_camera(world);
    return {k_.fx * c.x() / c.z() + k_.cx, k_.fy * c.y() / c.z() + k_.cy};
}

Vec3 Camera::backproject(const Vec2& pixel, double depth) const {
    const Vec3 c((pixel.x() - k_.cx) * depth / k_.fx, (pixel.y() - k_.cy) * depth / k_.fy, depth);
    return to_world(c);
}

Vec3 Camera::ray_direction(const Vec2& pixel) const {
    const Vec3 c((pixel.x() - k_.cx) / k_.fx, (pixel.y() - k_.cy) / k_.fy, 1.0);
    return (world_to_camera_.linear().transpose() * c).normalized();
}

Camera Camera::back_view(const Vec3& pivot) const {
    // Orbit: world point p maps to pivot + R(p - pivot) with R a half turn about y.
    Eigen::Isometry3d orbit = Eigen::Isometry3d::Identity();
    orbit.linear() = Eigen::Vector3d(-1.0, 1.0, -1.0).asDiagonal();
    orbit.translation() = pivot - orbit.linear() * pivot;
    return Camera(k_, world_to_camera_ * orbit.inverse(), width_, height_);
}

nlohmann::json Camera::to_json() const {
    const Eigen::Matrix4d m = world_to_camera_.matrix();
    // Stored row-major for readability.
    std::vector<double> row_major(16);
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c)
            row_major[r * 4 + c] = m(r, c);
    return {{"fx", k_.fx},       {"fy", k_.fy},         {"cx", k_.cx},
            {"cy", k_.cy},       {"width", width_},     {"height", height_},
            {"world_to_camera", row_major}};
}

Camera Camera::from_json(const nlohmann::json& j) {
    try {
        Intrinsics k{j.at("fx").get<double>(), j.at("fy").get<double>(), j.at("cx").get<double>(),
                     j.at("cy").get<double>()};
        const auto m = j.at("world_to_camera").get<std::vector<double>>();
        if (m.size() != 16)
            throw InputError("camera world_to_camera must have 16 entries");
        Eigen::Matrix4d mat;
        for (int r = 0; r < 4; ++r)
            for (int c = 0; c < 4; ++c)
                mat(r, c) = m[r * 4 + c];
        Eigen::Isometry3d t;
        t.matrix() = mat;
        return Camera(k, t, j.at("width").get<int>(), j.at("height").get<int>());
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("malformed camera JSON: ") + e.what());
    }
}

} // namespace photorig
