#pragma once

#include <vector>

#include "photorig/geometry.hpp"
#include "photorig/raster.hpp"

namespace photorig {

/// Cyclic, monotone index map from input boundary vertices to template
/// boundary vertices. Forward jumps (mod n) lie in [0, kappa] and wind
/// exactly once around the template.
struct Correspondence {
    std::vector<int> phi;
    int template_size = 0;
    int kappa = 32;
    double distance_cost = 0.0; ///< sum of ||p_i - q_phi[i]||
    double total_cost = 0.0;    ///< distance_cost plus one per transition

    /// Forward jump from phi[i] to phi[i+1], both mod n.
    int jump(std::size_t i) const;
    bool satisfies_jump_bound() const;
};

/// Traces the outer contour of the largest 4-connected foreground component.
/// Vertices sit at midpoints between foreground and background pixel centres
/// (the marching-squares contour at iso-level 0.5); enclosed background is
/// treated as foreground. Throws GeometryError on an empty mask.
BoundaryPolygon extract_boundary(const RasterMap& mask, Diagnostics* diag = nullptr);

/// `count` points equally spaced by arc length, starting at vertex 0.
BoundaryPolygon resample_boundary(const BoundaryPolygon& poly, std::size_t count);

struct MatchOptions {
    int kappa = 32;
    /// Candidate template indices tried for phi[0] (nearest to input vertex 0).
    std::size_t anchors = 16;
    /// Try every template vertex as anchor; exact cyclic optimum.
    bool full_sweep = false;
};

/// Minimises sum_i ||p_i - q_phi[i]|| + T(phi[i], phi[i+1]) over cyclic
/// mappings by dynamic programming, one linear-chain solve per anchor.
/// Among equal costs the smallest forward jump wins, then the lowest anchor.
Correspondence match_boundaries(const BoundaryPolygon& input, const BoundaryPolygon& templ,
                                const MatchOptions& options = {});

} // namespace photorig
