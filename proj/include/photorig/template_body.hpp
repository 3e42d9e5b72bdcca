#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "photorig/camera.hpp"
#include "photorig/raster.hpp"
#include "photorig/skeleton.hpp"

namespace photorig {

enum class PrimitiveKind { capsule, ellipsoid };

/// One solid of the template body, given in rest-pose model coordinates.
struct Primitive {
    PrimitiveKind kind = PrimitiveKind::capsule;
    int part = 0;  ///< body part label
    int joint = 0; ///< bone that carries the primitive
    // capsule
    Vec3 a = Vec3::Zero();
    Vec3 b = Vec3::Zero();
    double radius = 0.0;
    // ellipsoid (axes along the rest frame)
    Vec3 center = Vec3::Zero();
    Vec3 radii = Vec3::Ones();
    /// Joints blended in within 1.5 radii of the capsule ends (-1: none).
    int blend_start = -1;
    int blend_end = -1;
};

struct TemplateBody {
    Skeleton skeleton;
    std::vector<Primitive> primitives;
    double scale = 1.0; ///< model units per meter

    /// The built-in 19-joint capsule body in T-pose, facing +z, feet near y = 0.
    static TemplateBody default_body();

    void validate() const;
    nlohmann::json to_json() const;
    static TemplateBody from_json(const nlohmann::json& j);
};

enum class View { front, back };
std::string_view to_string(View v);

/// Camera used by fixtures and the CLI defaults: square image, whole body in view.
Camera default_camera(int size = 256);

/// Camera orbited behind the body. Its raw image is the horizontal mirror of
/// the front view, so its maps align with the mirrored person mask.
Camera back_camera(const Camera& front, const TemplateBody& body, const Pose& pose);

struct TemplateRender {
    View view = View::front;
    Camera camera;
    RasterMap silhouette; ///< mask
    RasterMap depth;      ///< camera-space z, 0 off the silhouette
    RasterMap normal;     ///< unit normals, x right, y down, z toward the viewer
    RasterMap skinning;   ///< one channel per joint
    RasterMap label;      ///< visible part, kBackground elsewhere
};

struct RenderOptions {
    /// Render only primitives of these parts; all when unset.
    std::optional<std::vector<int>> parts;
};

/// Ray casts the posed body through every pixel centre. For View::back the
/// camera is back_camera(camera, ...). Throws GeometryError when nothing is hit.
TemplateRender render_template(const TemplateBody& body, const Pose& pose, const Camera& camera, View view,
                               const RenderOptions& options = {});

/// Diameter of a sphere enclosing the posed body.
double bounding_diameter(const TemplateBody& body, const Pose& pose);

/// Front and back renders of the whole body and of its part groups
/// ("body" = head, torso and legs; "left_arm"; "right_arm").
struct TemplateRenderSet {
    TemplateRender front;
    TemplateRender back;
    std::map<std::string, std::pair<TemplateRender, TemplateRender>> groups;
    Skeleton skeleton; ///< rest pose = the rendered pose
    double bounding_diameter = 0.0;
};

TemplateRenderSet render_set(const TemplateBody& body, const Pose& pose, const Camera& camera);

/// Part labels of a group name used by TemplateRenderSet.
std::vector<int> group_parts(std::string_view group);

/// Writes ".fmap" maps plus manifest.json; read_render_set loads them back.
void write_render_set(const TemplateRenderSet& set, const std::filesystem::path& dir);
TemplateRenderSet read_render_set(const std::filesystem::path& dir);

// Poses used by the fixtures.
Pose a_pose(const Skeleton& skeleton, double degrees = 45.0);
Pose arm_over_torso_pose(const Skeleton& skeleton);

struct FixtureTruth {
    Pose pose;                  ///< pose that produced the photo
    RasterMap depth;            ///< front depth of the photographed body
    RasterMap labels;           ///< visible parts of the photographed body
    RasterMap body_silhouette;  ///< head, torso and legs rendered without arms
    RasterMap occlusion_contour; ///< arm/body label-boundary pixels whose surfaces are apart in 3D
};

struct Fixture {
    std::string name;
    RasterMap silhouette;
    RasterMap image;
    Pose pose; ///< template pose handed to reconstruction
    FixtureTruth truth;
};

inline constexpr std::array<std::string_view, 5> kFixtureNames{
    "plain_tpose", "dilated_clothing", "concave_sleeves", "arm_over_torso", "arm_over_torso_twotone"};

/// Image size the fixture is meant to be rendered at. The arm-over-torso
/// pair needs 512 px for the forearm to survive the initial label prior.
int default_fixture_size(std::string_view name);

/// Deterministic synthetic inputs. Throws InputError for unknown names.
Fixture make_fixture(std::string_view name, const TemplateBody& body, const Camera& camera);

} // namespace photorig
