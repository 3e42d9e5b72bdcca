#pragma once

#include "photorig/raster.hpp"

namespace photorig {

enum class IntegrationSolver { conjugate_gradient, direct };

struct IntegrationProblem {
    RasterMap normals;        ///< normal map, unit length on the domain
    RasterMap domain;         ///< mask S
    RasterMap boundary_depth; ///< depth map; only the values on boundary pixels of S are read
    double nz_floor = 0.05;
    /// Lateral size of one pixel in depth units at the surface. 1 for
    /// pixel-unit problems; mean depth / focal length under a pinhole camera.
    double pixel_size = 1.0;
    IntegrationSolver solver = IntegrationSolver::conjugate_gradient;
    double tolerance = 1e-8; ///< relative residual for the iterative solver
};

struct IntegrationReport {
    std::size_t unknowns = 0;
    std::size_t boundary = 0;
    int iterations = 0;
    double residual = 0.0;
    double energy = 0.0;
};

/// Least-squares depth whose 4-neighbour forward differences match the
/// slopes (-n_x/n_z, -n_y/n_z) implied by the normals, with the boundary
/// pixels of the domain held at their prescribed depth. The target slope of
/// each difference comes from the edge-midpoint normal (the normalised sum of
/// its two pixel normals), which is exact for planes and spheres. Off-domain
/// pixels are zero.
RasterMap integrate(const IntegrationProblem& problem, IntegrationReport* report = nullptr);

/// The objective minimised by integrate(), evaluated for any depth map.
double integration_energy(const IntegrationProblem& problem, const RasterMap& depth);

} // namespace photorig
