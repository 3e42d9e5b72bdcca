#pragma once

#include <vector>

#include "photorig/boundary.hpp"

namespace photorig {

/// Contiguous boundary indices [start, start + length) taken cyclically.
struct OccludedRun {
    std::size_t start = 0;
    std::size_t length = 0;
    std::size_t end(std::size_t n) const { return (start + length - 1) % n; }
};

struct RegionBoundary {
    BoundaryPolygon polygon;
    std::vector<OccludedRun> runs;
};

/// Maximal cyclic runs of boundary points whose pixel lies in `occlusion`;
/// runs shorter than two points are dropped.
RegionBoundary find_occluded_runs(const BoundaryPolygon& boundary, const RasterMap& occlusion);

struct ReplaceReport {
    std::size_t replaced = 0;
    std::size_t skipped_degenerate = 0;
    std::size_t kept_self_intersecting = 0;
};

/// Replaces each run by the template sub-polyline between the matched
/// endpoints, mapped by the similarity taking the template endpoints onto the
/// run endpoints and resampled to the run's point count. Runs whose splice
/// would break simplicity keep their original points.
BoundaryPolygon replace_occluded_runs(const RegionBoundary& region, const BoundaryPolygon& template_poly,
                                      const Correspondence& corr, Diagnostics* diag = nullptr,
                                      ReplaceReport* report = nullptr);

/// Matches the region boundary against the template first.
BoundaryPolygon replace_occluded_runs(const RegionBoundary& region, const BoundaryPolygon& template_poly,
                                      const MatchOptions& options = {}, Diagnostics* diag = nullptr,
                                      ReplaceReport* report = nullptr);

/// Pixels whose centre lies inside the polygon.
RasterMap rasterize_polygon(const BoundaryPolygon& poly, int width, int height);

} // namespace photorig
