#pragma once

#include <array>
#include <optional>
#include <vector>

#include "photorig/camera.hpp"
#include "photorig/raster.hpp"
#include "photorig/skeleton.hpp"

namespace photorig {

using Triangle = std::array<int, 3>;

enum class Orientation { front, back };
enum class SurfaceSide : std::uint8_t { front = 0, back = 1, seam = 2 };

/// Grid mesh of one side of a silhouette. Vertex pixels are in the front
/// (un-mirrored) image frame for both orientations.
struct OpenMesh {
    Orientation orientation = Orientation::front;
    Camera camera;
    RasterMap mask; ///< S, front frame
    std::vector<Vec3> vertices;
    std::vector<Vec2i> pixels;
    std::vector<double> weights; ///< vertices x joints
    int joints = 0;
    std::vector<Triangle> triangles;
    std::vector<int> pixel_to_vertex; ///< front-frame pixel index -> vertex, -1 when absent
};

/// One vertex per pixel of `mask`, back-projected through `camera` at `depth`;
/// two triangles per 2x2 foreground block. Front meshes face the camera.
/// Back maps are taken in the frame of the back camera (the mirrored image);
/// the mesh is re-indexed into the front frame with normals facing away from
/// the front viewer. Throws GeometryError for fewer than 3 foreground pixels.
OpenMesh mesh_from_depth(const RasterMap& depth, const RasterMap& skinning, const RasterMap& mask,
                         Orientation orientation, const Camera& camera);

/// Closed surface built from a front and a back grid.
struct ClosedMesh {
    std::vector<Vec3> vertices;
    std::vector<Vec2i> pixels;
    std::vector<SurfaceSide> sides;
    std::vector<double> weights;
    int joints = 0;
    std::vector<Triangle> triangles;
    std::vector<SurfaceSide> triangle_sides; ///< front or back
    Camera front_camera;
    Camera back_camera;
};

struct StitchReport {
    std::size_t merged = 0;
    std::size_t dropped_unreferenced = 0;
    std::size_t split_edges = 0; ///< interior front edges split to keep the surface manifold
    double max_seam_gap = 0.0; ///< largest front/back distance at merged vertices
};

/// Merges the vertices on the open boundary of both grids by pixel identity.
/// A merged vertex lies on the front ray at the mean of the front depth and the
/// back vertex's front-camera depth; weights are averaged and renormalised.
/// Throws GeometryError (with the symmetric-difference count) when the two
/// silhouettes have different boundary pixels.
ClosedMesh stitch(const OpenMesh& front, const OpenMesh& back, StitchReport* report = nullptr);

struct SmoothOptions {
    int iterations = 3;
    double step = 0.5;
    const std::vector<char>* movable = nullptr;    ///< all vertices when null
    const std::vector<Vec3>* directions = nullptr; ///< restrict each update to this unit direction
};

/// Uniform-weight Laplacian smoothing with simultaneous updates.
std::vector<Vec3> laplacian_smooth(const std::vector<Vec3>& vertices, const std::vector<Triangle>& triangles,
                                   const SmoothOptions& options = {});

/// Vertices within `rings` edges of a seam vertex (seam vertices included).
std::vector<char> seam_neighbourhood(const ClosedMesh& mesh, int rings);

/// Number of triangles using each undirected edge.
std::size_t count_edges(const std::vector<Triangle>& triangles);
bool is_closed(const std::vector<Triangle>& triangles);
long euler_characteristic(std::size_t vertex_count, const std::vector<Triangle>& triangles);
double signed_volume(const std::vector<Vec3>& vertices, const std::vector<Triangle>& triangles);
double triangle_area(const std::vector<Vec3>& vertices, const Triangle& t);

/// Pixels whose centre falls inside (or on the edge of) a projected triangle.
RasterMap rasterize_silhouette(const std::vector<Vec3>& vertices, const std::vector<Triangle>& triangles,
                               const Camera& camera);

/// Textured, skinned triangle mesh.
struct RiggedMesh {
    std::vector<Vec3> vertices;
    std::vector<Triangle> triangles;
    std::vector<double> weights; ///< vertices x joints; rows sum to 1
    std::vector<std::array<Vec2, 3>> corner_uvs;
    std::vector<int> labels;     ///< body part per vertex
    std::vector<int> groups;     ///< part group (separate surface) per vertex
    std::vector<SurfaceSide> sides;
    Skeleton skeleton;
    RasterMap texture;

    std::size_t joint_count() const noexcept { return skeleton.size(); }
    /// Throws GeometryError when a mesh invariant is broken.
    void validate(bool require_closed = true) const;
};

/// Posed vertex positions under linear blend skinning.
std::vector<Vec3> lbs_pose(const RiggedMesh& mesh, const Pose& pose);

} // namespace photorig
