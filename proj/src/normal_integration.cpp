#include "photorig/normal_integration.hpp"

#include <cmath>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include "photorig/mask_ops.hpp"

namespace photorig {

namespace {

void check(const IntegrationProblem& p) {
    if (p.domain.semantic() != Semantic::mask)
        throw InputError("integration domain must be a mask");
    if (p.normals.semantic() != Semantic::normal || p.normals.channels() != 3)
        throw InputError("integration needs a 3-channel normal map");
    if (p.boundary_depth.semantic() != Semantic::depth)
        throw InputError("boundary depth must be a depth map");
    const auto same = [&](const RasterMap& m) { return m.width() == p.domain.width() && m.height() == p.domain.height(); };
    if (!same(p.normals) || !same(p.boundary_depth))
        throw InputError("integration maps differ in size");
    if (!(p.nz_floor > 0.0) || p.nz_floor > 1.0)
        throw InputError("nz_floor must lie in (0, 1]");
}

// Target difference along the edge a -> b: the slope of the normal at the edge
// midpoint, taken as the normalised sum of the two pixel normals.
double edge_slope(const IntegrationProblem& p, std::size_t a, std::size_t b, int axis) {
    const auto n = p.normals.data();
    Vec3 m(n[3 * a] + n[3 * b], n[3 * a + 1] + n[3 * b + 1], n[3 * a + 2] + n[3 * b + 2]);
    const double len = m.norm();
    if (len < 1e-12)
        return 0.0;
    m /= len;
    double nz = m.z();
    if (std::abs(nz) < p.nz_floor)
        nz = nz < 0 ? -p.nz_floor : p.nz_floor;
    return -p.pixel_size * m[axis] / nz;
}

// Visits each 4-neighbour edge (a, b = a + axis) inside the domain with its target difference.
template <class F>
void for_each_edge(const IntegrationProblem& p, F&& f) {
    const RasterMap& domain = p.domain;
    for (int y = 0; y < domain.height(); ++y)
        for (int x = 0; x < domain.width(); ++x) {
            if (!domain.is_set(x, y))
                continue;
            const auto a = domain.index(x, y);
            if (domain.is_set(x + 1, y)) {
                const auto b = domain.index(x + 1, y);
                f(a, b, edge_slope(p, a, b, 0));
            }
            if (domain.is_set(x, y + 1)) {
                const auto b = domain.index(x, y + 1);
                f(a, b, edge_slope(p, a, b, 1));
            }
        }
}

} // namespace

double integration_energy(const IntegrationProblem& problem, const RasterMap& depth) {
    check(problem);
    double e = 0.0;
    const auto z = depth.data();
    for_each_edge(problem, [&](std::size_t a, std::size_t b, double t) {
        const double r = z[b] - z[a] - t;
        e += r * r;
    });
    return e;
}

RasterMap integrate(const IntegrationProblem& problem, IntegrationReport* report) {
    check(problem);
    const RasterMap& domain = problem.domain;
    const int w = domain.width(), h = domain.height();

    // Unknown index per interior pixel; boundary pixels are Dirichlet.
    std::vector<int> unknown(domain.pixel_count(), -1);
    std::vector<double> fixed(domain.pixel_count(), 0.0);
    int n = 0;
    std::size_t boundary = 0;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            if (!domain.is_set(x, y))
                continue;
            const auto i = domain.index(x, y);
            if (is_boundary_pixel(domain, x, y)) {
                fixed[i] = problem.boundary_depth.at(x, y);
                if (!std::isfinite(fixed[i]))
                    throw InputError("boundary depth is not finite at (" + std::to_string(x) + "," + std::to_string(y) + ")");
                ++boundary;
            } else {
                unknown[i] = n++;
            }
        }

    RasterMap depth(w, h, 1, Semantic::depth);
    IntegrationReport local;
    local.unknowns = std::size_t(n);
    local.boundary = boundary;

    if (n > 0) {
        std::vector<Eigen::Triplet<double>> triplets;
        triplets.reserve(std::size_t(n) * 5);
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
        Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
        // Normal equations of sum (z_b - z_a - t)^2 with Dirichlet values moved to the right.
        for_each_edge(problem, [&](std::size_t a, std::size_t b, double t) {
            const int ua = unknown[a], ub = unknown[b];
            if (ua >= 0) {
                diag[ua] += 1.0;
                rhs[ua] -= t;
                if (ub >= 0)
                    triplets.emplace_back(ua, ub, -1.0);
                else
                    rhs[ua] += fixed[b];
            }
            if (ub >= 0) {
                diag[ub] += 1.0;
                rhs[ub] += t;
                if (ua >= 0)
                    triplets.emplace_back(ub, ua, -1.0);
                else
                    rhs[ub] += fixed[a];
            }
        });
        for (int i = 0; i < n; ++i)
            triplets.emplace_back(i, i, diag[i]);
        Eigen::SparseMatrix<double> A(n, n);
        A.setFromTriplets(triplets.begin(), triplets.end());

        Eigen::VectorXd z;
        if (problem.solver == IntegrationSolver::direct) {
            Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(A);
            if (ldlt.info() != Eigen::Success)
                throw StageError("integrate", "sparse factorisation failed");
            z = ldlt.solve(rhs);
            local.residual = rhs.norm() > 0 ? (A * z - rhs).norm() / rhs.norm() : 0.0;
        } else {
            double mean_boundary = 0.0;
            for (std::size_t i = 0; i < fixed.size(); ++i)
                mean_boundary += fixed[i];
            mean_boundary = boundary ? mean_boundary / double(boundary) : 0.0;
            Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper> cg;
            cg.setTolerance(problem.tolerance);
            cg.setMaxIterations(std::max(1000, 20 * n));
            cg.compute(A);
            z = cg.solveWithGuess(rhs, Eigen::VectorXd::Constant(n, mean_boundary));
            if (cg.info() != Eigen::Success)
                throw StageError("integrate", "conjugate gradient did not converge (residual " +
                                                  std::to_string(cg.error()) + ")");
            local.iterations = int(cg.iterations());
            local.residual = cg.error();
        }
        for (std::size_t i = 0; i < unknown.size(); ++i)
            if (unknown[i] >= 0)
                fixed[i] = z[unknown[i]];
    }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (domain.is_set(x, y))
                depth.at(x, y) = fixed[domain.index(x, y)];

    if (report) {
        local.energy = integration_energy(problem, depth);
        *report = local;
    }
    return depth;
}

} // namespace photorig
