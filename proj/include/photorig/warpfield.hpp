#pragma once

#include <vector>

#include "photorig/boundary.hpp"

namespace photorig {

/// f(x) = sum_i lambda_i(x) q_phi[i], with lambda the mean-value coordinates
/// of x in the input polygon.
class MvcWarp {
public:
    MvcWarp(const BoundaryPolygon& input, const BoundaryPolygon& templ, const Correspondence& corr);

    Vec2 operator()(const Vec2& x) const;
    const BoundaryPolygon& input() const noexcept { return input_; }
    std::span<const Vec2> targets() const noexcept { return targets_; }

private:
    BoundaryPolygon input_;
    std::vector<Vec2> targets_;
};

/// Inverse warp sampled at the pixel centres of the input silhouette.
struct WarpField {
    RasterMap domain;              ///< input silhouette S
    std::vector<Vec2> target;      ///< template-image position per pixel (row-major); zero off S
    std::vector<std::uint8_t> valid; ///< f(x) inside the template polygon
    std::size_t invalid_count() const;
};

WarpField build_warp(const BoundaryPolygon& input_poly, const BoundaryPolygon& template_poly,
                     const Correspondence& corr, const RasterMap& domain);

struct WarpedMap {
    RasterMap map;
    std::vector<std::uint8_t> valid; ///< false where the pixel needs hole filling (and off S)
};

/// Pulls `source` back through the warp. `source_support` marks template pixels
/// holding data; bilinear taps outside it are dropped and the rest renormalised.
/// Labels use nearest-neighbour sampling; normals and skinning are renormalised.
WarpedMap warp_map(const WarpField& field, const RasterMap& source, const RasterMap& source_support);

struct FillStats {
    std::size_t filled = 0;
    int iterations = 0;
    double residual = 0.0;
};

/// Harmonic interpolation (4-neighbourhood, restricted to `domain`) of every
/// invalid domain pixel from the valid ones, solved by Gauss-Seidel to a max
/// update below 1e-6 or 10,000 sweeps. Valid pixels are returned untouched;
/// filled normals are renormalised and filled skinning rows rescaled to sum 1.
/// Label maps take the nearest valid label instead.
RasterMap fill_holes(const RasterMap& map, const std::vector<std::uint8_t>& validity, const RasterMap& domain,
                     FillStats* stats = nullptr, Diagnostics* diag = nullptr);

} // namespace photorig
