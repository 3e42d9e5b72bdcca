#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "photorig/reconstruction.hpp"

namespace photorig::app {

namespace fs = std::filesystem;

/// File names inside an export directory.
inline constexpr const char* kManifest = "manifest.json";
inline constexpr const char* kMeshJson = "mesh.json";
inline constexpr const char* kSkeletonJson = "skeleton.json";
inline constexpr const char* kReportJson = "report.json";
inline constexpr const char* kPostedPose = "posted_pose.json";
inline constexpr const char* kMeshName = "mesh";

/// Reconstruction inputs and parameters as read from a JSON config:
///
///     {"input": {"mask": "s.png", "image": "photo.png"},
///      "template": {"renders": "dir"} | {"body": "body.json", "pose": "pose.json"},
///      "parameters": {...}, "output": "out"}
///
/// Relative paths resolve against the config file's directory.
struct ReconstructConfig {
    fs::path mask;
    std::optional<fs::path> image;
    std::optional<fs::path> renders;
    std::optional<fs::path> body;
    std::optional<fs::path> pose;
    ReconstructParams params;
    fs::path output = "out";

    static ReconstructConfig from_json(const nlohmann::json& j, const fs::path& base);
    nlohmann::json to_json() const;
};

ReconstructConfig load_config(const fs::path& file);

/// Loads a mask from PNG (grey >= 128 is set) or .fmap.
RasterMap load_mask(const fs::path& path);

/// Runs the pipeline and writes glTF, the JSON mesh dump, the skeleton, the
/// report and a manifest into `config.output`. Returns the report.
nlohmann::json run_reconstruct(const ReconstructConfig& config, bool keep_intermediates);

/// Renders a template set for `size` x `size` pixels. Defaults: built-in body,
/// rest pose.
void run_template_render(const std::optional<fs::path>& body, const std::optional<fs::path>& pose, int size,
                         const fs::path& out);

/// Writes a synthetic fixture: silhouette, photo, template pose and renders,
/// ground truth, and a config.json ready for `reconstruct`.
void run_fixture_make(const std::string& name, std::optional<int> size, const fs::path& out);

enum class AnimateFormat { gltf, frames };

struct AnimateRequest {
    fs::path mesh;                  ///< JSON mesh dump
    std::optional<fs::path> clip;   ///< clip JSON
    std::optional<fs::path> pose;   ///< single pose JSON
    std::optional<fs::path> texture;
    AnimateFormat format = AnimateFormat::gltf;
    fs::path out;
};

/// Returns the number of frames written.
std::size_t run_animate(const AnimateRequest& request);

struct TextureRequest {
    fs::path export_dir; ///< output of reconstruct
    std::optional<fs::path> image;
    std::optional<fs::path> labels; ///< edited front label map (.fmap, front frame)
    std::optional<BackMode> back_mode;
    fs::path out;
};

/// Re-synthesises the texture atlas of an existing reconstruction and
/// rewrites its glTF. The mesh and its UVs are unchanged.
void run_texture(const TextureRequest& request);

/// Read-only HTTP view of an export directory. GET serves files, POST /pose
/// validates a Pose JSON against the exported skeleton and stores it as
/// posted_pose.json (last write wins).
class Server {
public:
    explicit Server(fs::path dir);
    ~Server();
    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    /// Binds `port` (0 picks a free one) and returns the bound port. A busy
    /// port is an InputError.
    int bind(const std::string& host, int port);
    void start(); ///< serves on a background thread
    void run();   ///< serves on the calling thread until stop()
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Entry point of the command-line tool. Exit codes: 0 success, 2 input
/// error, 3 stage failure.
int cli_main(int argc, const char* const* argv);

} // namespace photorig::app
