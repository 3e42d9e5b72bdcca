#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace photorig {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec2i = Eigen::Vector2i;

/// Base class of every error the library throws.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or unusable input data (files, configs, arguments).
class InputError : public Error {
public:
    using Error::Error;
};

/// Degenerate geometry: zero-area polygons, coincident endpoints, empty masks.
class GeometryError : public Error {
public:
    using Error::Error;
};

/// A pipeline stage failed; `stage()` names it.
class StageError : public Error {
public:
    StageError(std::string stage, const std::string& what)
        : Error(stage + ": " + what), stage_(std::move(stage)) {}
    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

/// Collects non-fatal warnings for a caller while also forwarding them to the log.
struct Diagnostics {
    std::vector<std::string> warnings;

    void warn(std::string message);
    bool empty() const noexcept { return warnings.empty(); }
};

/// Emits a warning into `diag` when present, otherwise only to the log.
void warn(Diagnostics* diag, std::string message);

} // namespace photorig
