#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "photorig/mesh.hpp"
#include "photorig/skeleton.hpp"

namespace photorig {

/// Lossless mesh dump: positions, triangles, full weight rows, corner UVs,
/// labels, groups, sides and the skeleton. Numbers are written in shortest
/// round-trip form, so equal meshes give equal bytes.
nlohmann::json mesh_to_json(const RiggedMesh& mesh);
/// The texture is not part of the dump and comes back empty.
RiggedMesh mesh_from_json(const nlohmann::json& j);

void write_mesh_json(const RiggedMesh& mesh, const std::filesystem::path& path);
RiggedMesh read_mesh_json(const std::filesystem::path& path);

/// Posed positions only, for per-frame output.
void write_frame_json(const std::vector<Vec3>& vertices, const std::vector<Triangle>& triangles, int frame,
                      const std::filesystem::path& path);

struct GltfOptions {
    std::optional<Clip> animation; ///< baked as one rotation channel per joint
    std::string name = "mesh";
};

struct GltfFiles {
    std::filesystem::path gltf;
    std::filesystem::path bin;
    std::optional<std::filesystem::path> texture;
};

/// Writes `<name>.gltf`, `<name>.bin` and, when the mesh has a texture,
/// `<name>_texture.png` into `dir`. Vertices are split where corner UVs
/// differ. Each vertex keeps its four largest weights, renormalised.
GltfFiles write_gltf(const RiggedMesh& mesh, const std::filesystem::path& dir, const GltfOptions& options = {});

/// Four largest weights of one row with their joint indices, summing to 1.
/// Ties go to the lower joint index.
std::pair<std::array<int, 4>, std::array<double, 4>> top4_weights(const double* row, int joints);

} // namespace photorig
