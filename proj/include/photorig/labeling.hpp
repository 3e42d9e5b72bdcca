#pragma once

#include <cstdint>
#include <vector>

#include "photorig/camera.hpp"
#include "photorig/parts.hpp"
#include "photorig/raster.hpp"

namespace photorig {

/// Multi-label pairwise MRF with weighted Potts interactions:
/// E(f) = sum_p U(p, f_p) + sum_(p,q) w_pq [f_p != f_q].
struct PairwiseGraph {
    struct Edge {
        int a;
        int b;
        double weight; ///< must be >= 0
    };

    int nodes = 0;
    int labels = 0;
    std::vector<double> unary; ///< nodes x labels, row-major; +inf forbids a label
    std::vector<Edge> edges;

    PairwiseGraph() = default;
    PairwiseGraph(int node_count, int label_count);

    double& cost(int node, int label) { return unary[std::size_t(node) * labels + label]; }
    double cost(int node, int label) const { return unary[std::size_t(node) * labels + label]; }
    void add_edge(int a, int b, double weight);
};

double energy(const PairwiseGraph& graph, const std::vector<int>& labeling);

/// Per-node label of least unary cost (lowest id on ties).
std::vector<int> unary_argmin(const PairwiseGraph& graph);

struct ExpansionResult {
    std::vector<int> labeling;
    std::vector<double> energy_trace; ///< initial energy, then the energy after every move
    int sweeps = 0;
    int accepted_moves = 0;
};

/// Alpha-expansion: each move solves the binary "keep or switch to alpha"
/// problem exactly by min-cut and is kept only if it lowers the energy.
/// Stops after a sweep over all labels with no accepted move.
ExpansionResult alpha_expansion(const PairwiseGraph& graph, std::vector<int> init, int max_sweeps = 50);

struct InitialLabelOptions {
    double gamma = 16.0;
    int label_count = kPartCount;
};

/// Labels every pixel of `silhouette` by an MRF whose unary cost is the
/// distance to the nearest template pixel carrying that label, with an
/// 8-neighbour Potts prior of weight gamma. Pixels off the silhouette hold
/// kBackground.
RasterMap initial_labels(const RasterMap& silhouette, const RasterMap& template_labels,
                         const InitialLabelOptions& options = {}, ExpansionResult* trace = nullptr);

/// Template data needed to lift label-map pixels back onto the 3D body.
struct OcclusionTemplate {
    RasterMap labels; ///< template label map
    RasterMap depth;  ///< template depth, valid where labels != kBackground
    Camera camera;
    double bounding_diameter = 1.0; ///< diameter of the template's bounding sphere
};

struct OcclusionOptions {
    double tau_fraction = 0.05; ///< tau as a fraction of the bounding diameter
    double dilation = 9.0;      ///< pixels
    double surface_snap = 2.5;  ///< warped points this close to the part (pixels) take its nearest pixel
    std::size_t part_samples = 512;
    int kappa = 32;
};

struct OcclusionDebug {
    RasterMap flagged;                      ///< pixels of flagged pairs, before dilation
    std::size_t pairs_tested = 0;
    std::size_t pairs_flagged = 0;
    std::vector<int> skipped_parts;
};

/// Flags 4-neighbour pixel pairs with different labels (at least one on an
/// arm) whose per-part warps land on template surface points farther apart
/// than tau in 3D, then dilates the flagged pixels within the silhouette.
RasterMap detect_occlusion_mask(const RasterMap& labels, const OcclusionTemplate& templ,
                                const OcclusionOptions& options = {}, Diagnostics* diag = nullptr,
                                OcclusionDebug* debug = nullptr);

/// Gaussian mixture over RGB with full covariances.
struct GmmColorModel {
    struct Component {
        double weight = 0.0;
        Vec3 mean = Vec3::Zero();
        Eigen::Matrix3d covariance = Eigen::Matrix3d::Identity();
    };
    std::vector<Component> components; ///< empty means a uniform density on the unit cube

    /// Natural log of the density at `color`.
    double log_density(const Vec3& color) const;
};

/// k-means++ seeding followed by EM. Covariances are regularised by 1e-5 I.
GmmColorModel fit_gmm(const std::vector<Vec3>& samples, int components, int em_iterations, std::uint64_t seed);

struct RefineOptions {
    double gamma = 8.0;
    int components = 5;
    int em_iterations = 10;
    int outer_iterations = 5;
    std::uint64_t seed = 1;
};

struct RefineReport {
    int outer_iterations = 0;
    double beta = 0.0;
    std::vector<double> energies; ///< final energy of each outer iteration
};

/// Re-labels the pixels of `occlusion` from colour evidence: per-label GMM
/// likelihoods plus a contrast-sensitive 8-neighbour Potts term, alternating
/// GMM re-fits and alpha-expansion. Pixels outside the mask never change.
RasterMap refine_labels(const RasterMap& labels, const RasterMap& image, const RasterMap& occlusion,
                        const RefineOptions& options = {}, RefineReport* report = nullptr);

} // namespace photorig
