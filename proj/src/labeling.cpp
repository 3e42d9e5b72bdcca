#include "photorig/labeling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <random>

#include <spdlog/spdlog.h>

#include "photorig/boundary.hpp"
#include "photorig/mask_ops.hpp"
#include "photorig/maxflow.hpp"
#include "photorig/warpfield.hpp"

namespace photorig {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Stand-in for +inf unary costs inside a single expansion move.
constexpr double kForbidden = 1e9;

double finite_cost(double c) { return std::isinf(c) ? kForbidden : c; }

// 8-neighbourhood offsets covering each unordered pair once.
constexpr int kHalfNeighbours[4][2] = {{1, 0}, {-1, 1}, {0, 1}, {1, 1}};

} // namespace

PairwiseGraph::PairwiseGraph(int node_count, int label_count)
    : nodes(node_count), labels(label_count), unary(std::size_t(node_count) * label_count, 0.0) {}

void PairwiseGraph::add_edge(int a, int b, double weight) {
    if (weight < 0)
        throw InputError("pairwise weights must be non-negative");
    edges.push_back({a, b, weight});
}

double energy(const PairwiseGraph& graph, const std::vector<int>& labeling) {
    double e = 0.0;
    for (int p = 0; p < graph.nodes; ++p)
        e += graph.cost(p, labeling[std::size_t(p)]);
    for (const auto& edge : graph.edges)
        if (labeling[std::size_t(edge.a)] != labeling[std::size_t(edge.b)])
            e += edge.weight;
    return e;
}

std::vector<int> unary_argmin(const PairwiseGraph& graph) {
    std::vector<int> f(std::size_t(graph.nodes), 0);
    for (int p = 0; p < graph.nodes; ++p)
        for (int l = 1; l < graph.labels; ++l)
            if (graph.cost(p, l) < graph.cost(p, f[std::size_t(p)]))
                f[std::size_t(p)] = l;
    return f;
}

namespace {

// Best labeling within one expansion of `alpha` from `f`.
std::vector<int> expansion_move(const PairwiseGraph& g, const std::vector<int>& f, int alpha) {
    std::vector<int> var(std::size_t(g.nodes), -1);
    int n = 0;
    for (int p = 0; p < g.nodes; ++p)
        if (f[std::size_t(p)] != alpha)
            var[std::size_t(p)] = n++;
    if (n == 0)
        return f;

    // x = 0 keeps the current label, x = 1 switches to alpha.
    std::vector<double> e0(std::size_t(n), 0.0), e1(std::size_t(n), 0.0);
    for (int p = 0; p < g.nodes; ++p) {
        const int v = var[std::size_t(p)];
        if (v < 0)
            continue;
        e0[std::size_t(v)] = finite_cost(g.cost(p, f[std::size_t(p)]));
        e1[std::size_t(v)] = finite_cost(g.cost(p, alpha));
    }
    MaxFlow flow(n);
    for (const auto& edge : g.edges) {
        const int fa = f[std::size_t(edge.a)], fb = f[std::size_t(edge.b)];
        const int va = var[std::size_t(edge.a)], vb = var[std::size_t(edge.b)];
        const double w = edge.weight;
        const double A = fa != fb ? w : 0.0; // (0,0)
        const double B = fa != alpha ? w : 0.0; // (0,1)
        const double C = alpha != fb ? w : 0.0; // (1,0)
        if (va >= 0 && vb >= 0) {
            // A + (C-A) x_a + (D-C) x_b + (B+C-A-D)(1-x_a) x_b with D = 0.
            e1[std::size_t(va)] += C - A;
            e1[std::size_t(vb)] -= C;
            flow.add_edge(va, vb, B + C - A, 0.0);
        } else if (va >= 0) {
            e0[std::size_t(va)] += A; // x_b = 0 with f_b = alpha
            e1[std::size_t(va)] += C;
        } else if (vb >= 0) {
            e0[std::size_t(vb)] += A;
            e1[std::size_t(vb)] += B;
        }
    }
    for (int v = 0; v < n; ++v) {
        const double base = std::min(e0[std::size_t(v)], e1[std::size_t(v)]);
        // Sink side (x = 1) cuts the source arc, so it carries the cost of switching.
        flow.add_terminal(v, e1[std::size_t(v)] - base, e0[std::size_t(v)] - base);
    }
    flow.solve();
    std::vector<int> out = f;
    for (int p = 0; p < g.nodes; ++p) {
        const int v = var[std::size_t(p)];
        if (v >= 0 && !flow.on_source_side(v))
            out[std::size_t(p)] = alpha;
    }
    return out;
}

} // namespace

ExpansionResult alpha_expansion(const PairwiseGraph& graph, std::vector<int> init, int max_sweeps) {
    if (int(init.size()) != graph.nodes)
        throw InputError("alpha_expansion: initial labeling has the wrong size");
    if (graph.unary.size() != std::size_t(graph.nodes) * graph.labels)
        throw InputError("alpha_expansion: unary table has the wrong size");
    for (int l : init)
        if (l < 0 || l >= graph.labels)
            throw InputError("alpha_expansion: initial label out of range");

    ExpansionResult result;
    result.labeling = std::move(init);
    double current = energy(graph, result.labeling);
    result.energy_trace.push_back(current);
    for (result.sweeps = 0; result.sweeps < max_sweeps;) {
        bool improved = false;
        for (int alpha = 0; alpha < graph.labels; ++alpha) {
            auto candidate = expansion_move(graph, result.labeling, alpha);
            const double e = energy(graph, candidate);
            const bool lower = std::isinf(current) ? e < current : e < current - 1e-12 * std::max(1.0, std::abs(current));
            if (lower) {
                result.labeling = std::move(candidate);
                current = e;
                improved = true;
                ++result.accepted_moves;
            }
            result.energy_trace.push_back(current);
        }
        ++result.sweeps;
        if (!improved)
            break;
    }
    return result;
}

RasterMap initial_labels(const RasterMap& silhouette, const RasterMap& template_labels,
                         const InitialLabelOptions& options, ExpansionResult* trace) {
    if (silhouette.semantic() != Semantic::mask || template_labels.semantic() != Semantic::label)
        throw InputError("initial_labels expects a mask and a label map");
    if (silhouette.width() != template_labels.width() || silhouette.height() != template_labels.height())
        throw InputError("initial_labels: silhouette and template differ in size");
    const int w = silhouette.width(), h = silhouette.height();
    const int L = options.label_count;

    std::vector<int> node(silhouette.pixel_count(), -1);
    std::vector<int> pixel_of;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (silhouette.is_set(x, y)) {
                node[silhouette.index(x, y)] = int(pixel_of.size());
                pixel_of.push_back(int(silhouette.index(x, y)));
            }
    if (pixel_of.empty())
        throw GeometryError("initial_labels: empty silhouette");

    PairwiseGraph g(int(pixel_of.size()), L);
    for (int l = 0; l < L; ++l) {
        RasterMap part(w, h, 1, Semantic::mask);
        bool any = false;
        for (std::size_t i = 0; i < part.pixel_count(); ++i)
            if (std::lround(template_labels.data()[i]) == l) {
                part.data()[i] = 1.0;
                any = true;
            }
        if (!any) {
            for (int p = 0; p < g.nodes; ++p)
                g.cost(p, l) = kInf;
            continue;
        }
        const auto d2 = squared_distance_to_set(part);
        for (int p = 0; p < g.nodes; ++p)
            g.cost(p, l) = std::sqrt(d2[std::size_t(pixel_of[std::size_t(p)])]);
    }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const int a = node[silhouette.index(x, y)];
            if (a < 0)
                continue;
            for (const auto& o : kHalfNeighbours) {
                if (!silhouette.is_set(x + o[0], y + o[1]))
                    continue;
                g.add_edge(a, node[silhouette.index(x + o[0], y + o[1])], options.gamma);
            }
        }

    auto result = alpha_expansion(g, unary_argmin(g));
    RasterMap out(w, h, 1, Semantic::label, double(kBackground));
    for (int p = 0; p < g.nodes; ++p)
        out.data()[std::size_t(pixel_of[std::size_t(p)])] = result.labeling[std::size_t(p)];
    if (trace)
        *trace = std::move(result);
    return out;
}

namespace {

RasterMap label_mask(const RasterMap& labels, int label) {
    RasterMap m(labels.width(), labels.height(), 1, Semantic::mask);
    for (std::size_t i = 0; i < m.pixel_count(); ++i)
        if (std::lround(labels.data()[i]) == label)
            m.data()[i] = 1.0;
    return m;
}

// Maps input pixels of one part into the template image and onto the template surface.
class PartLift {
public:
    PartLift(const RasterMap& input_part, const RasterMap& template_part, const OcclusionTemplate& templ,
             const OcclusionOptions& options, Diagnostics* diag, int label)
        : templ_(templ), support_(template_part), snap_(options.surface_snap) {
        Diagnostics local;
        auto in_poly = extract_boundary(input_part, &local);
        auto t_poly = extract_boundary(template_part, &local);
        if (!local.empty())
            warn(diag, std::string("occlusion: part ") + std::string(part_name(label)) +
                           " is not a single simply connected region; using its largest component");
        in_poly = resample_boundary(in_poly, std::min(options.part_samples, in_poly.size()));
        t_poly = resample_boundary(t_poly, std::min(options.part_samples, t_poly.size()));
        const auto corr = match_boundaries(in_poly, t_poly, {.kappa = options.kappa});
        warp_.emplace(in_poly, t_poly, corr);
    }

    std::optional<Vec3> operator()(int x, int y) const {
        const Vec2 t = (*warp_)(Vec2(x, y));
        const int x0 = int(std::floor(t.x())), y0 = int(std::floor(t.y()));
        const double tx = t.x() - x0, ty = t.y() - y0;
        double z = 0.0, total = 0.0;
        for (int k = 0; k < 4; ++k) {
            const int sx = x0 + (k & 1), sy = y0 + (k >> 1);
            const double wgt = ((k & 1) ? tx : 1 - tx) * ((k >> 1) ? ty : 1 - ty);
            if (wgt <= 0 || !support_.is_set(sx, sy) || !std::isfinite(templ_.depth.at(sx, sy)))
                continue;
            z += wgt * templ_.depth.at(sx, sy);
            total += wgt;
        }
        if (total > 1e-12)
            return templ_.camera.backproject(t, z / total);
        // Landing just outside the rasterised part is a sampling artefact, not a miss.
        const int r = int(std::ceil(snap_));
        double best = kInf;
        std::optional<Vec3> hit;
        for (int dy = -r; dy <= r + 1; ++dy)
            for (int dx = -r; dx <= r + 1; ++dx) {
                const int sx = x0 + dx, sy = y0 + dy;
                const double d = (Vec2(sx, sy) - t).norm();
                if (d > snap_ || d >= best || !support_.is_set(sx, sy) || !std::isfinite(templ_.depth.at(sx, sy)))
                    continue;
                best = d;
                hit = templ_.camera.backproject(Vec2(sx, sy), templ_.depth.at(sx, sy));
            }
        return hit;
    }

private:
    const OcclusionTemplate& templ_;
    RasterMap support_;
    double snap_;
    std::optional<MvcWarp> warp_;
};

} // namespace

RasterMap detect_occlusion_mask(const RasterMap& labels, const OcclusionTemplate& templ,
                                const OcclusionOptions& options, Diagnostics* diag, OcclusionDebug* debug) {
    if (labels.semantic() != Semantic::label || templ.labels.semantic() != Semantic::label)
        throw InputError("detect_occlusion_mask expects label maps");
    if (labels.width() != templ.labels.width() || labels.height() != templ.labels.height() ||
        templ.depth.width() != labels.width() || templ.depth.height() != labels.height())
        throw InputError("detect_occlusion_mask: label and template maps differ in size");
    const int w = labels.width(), h = labels.height();
    const double tau = options.tau_fraction * templ.bounding_diameter;

    std::map<int, std::optional<PartLift>> lifts;
    OcclusionDebug local;
    auto lift_for = [&](int label) -> const PartLift* {
        auto it = lifts.find(label);
        if (it == lifts.end()) {
            std::optional<PartLift> lift;
            const RasterMap in_part = label_mask(labels, label);
            const RasterMap t_part = label_mask(templ.labels, label);
            if (t_part.count_set() == 0) {
                warn(diag, std::string("occlusion: template has no ") + std::string(part_name(label)) + " pixels");
                local.skipped_parts.push_back(label);
            } else {
                try {
                    lift.emplace(in_part, t_part, templ, options, diag, label);
                } catch (const GeometryError& e) {
                    warn(diag, std::string("occlusion: skipping part ") + std::string(part_name(label)) + ": " + e.what());
                    local.skipped_parts.push_back(label);
                }
            }
            it = lifts.emplace(label, std::move(lift)).first;
        }
        return it->second ? &*it->second : nullptr;
    };

    RasterMap silhouette(w, h, 1, Semantic::mask);
    for (std::size_t i = 0; i < silhouette.pixel_count(); ++i)
        silhouette.data()[i] = std::lround(labels.data()[i]) != kBackground ? 1.0 : 0.0;
    local.flagged = RasterMap(w, h, 1, Semantic::mask);

    constexpr int kForward[2][2] = {{1, 0}, {0, 1}};
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const int lp = labels.label_at(x, y);
            if (lp == kBackground)
                continue;
            for (const auto& o : kForward) {
                const int qx = x + o[0], qy = y + o[1];
                if (!labels.contains(qx, qy))
                    continue;
                const int lq = labels.label_at(qx, qy);
                if (lq == kBackground || lq == lp || !(is_arm(lp) || is_arm(lq)))
                    continue;
                ++local.pairs_tested;
                const PartLift* fp = lift_for(lp);
                const PartLift* fq = lift_for(lq);
                if (!fp || !fq)
                    continue;
                const auto P = (*fp)(x, y);
                const auto Q = (*fq)(qx, qy);
                if (P && Q && (*P - *Q).norm() <= tau)
                    continue;
                ++local.pairs_flagged;
                local.flagged.at(x, y) = 1.0;
                local.flagged.at(qx, qy) = 1.0;
            }
        }
    RasterMap mask = mask_and(dilate(local.flagged, options.dilation), silhouette);
    spdlog::debug("occlusion: {} of {} part-boundary pairs flagged, {} mask pixels", local.pairs_flagged,
                  local.pairs_tested, mask.count_set());
    if (debug)
        *debug = std::move(local);
    return mask;
}

namespace {

struct PreparedComponent {
    double log_weight;
    Vec3 mean;
    Eigen::Matrix3d inverse;
    double log_norm; // -0.5 (3 log 2pi + log det)
};

std::vector<PreparedComponent> prepare(const GmmColorModel& gmm) {
    std::vector<PreparedComponent> out;
    for (const auto& c : gmm.components) {
        if (c.weight <= 0)
            continue;
        Eigen::LLT<Eigen::Matrix3d> llt(c.covariance);
        if (llt.info() != Eigen::Success)
            throw GeometryError("GMM covariance is not positive definite");
        const Eigen::Matrix3d L = llt.matrixL();
        const double log_det = 2.0 * (std::log(L(0, 0)) + std::log(L(1, 1)) + std::log(L(2, 2)));
        out.push_back({std::log(c.weight), c.mean, llt.solve(Eigen::Matrix3d::Identity()),
                       -0.5 * (3.0 * std::log(2.0 * std::numbers::pi) + log_det)});
    }
    return out;
}

double log_density(const std::vector<PreparedComponent>& comps, const Vec3& x) {
    if (comps.empty())
        return 0.0; // uniform on the unit cube
    double best = -kInf;
    thread_local std::vector<double> terms;
    terms.clear();
    for (const auto& c : comps) {
        const Vec3 d = x - c.mean;
        const double t = c.log_weight + c.log_norm - 0.5 * d.dot(c.inverse * d);
        terms.push_back(t);
        best = std::max(best, t);
    }
    double s = 0.0;
    for (double t : terms)
        s += std::exp(t - best);
    return best + std::log(s);
}

double unit_uniform(std::mt19937_64& rng) { return double(rng() >> 11) * 0x1.0p-53; }

} // namespace

double GmmColorModel::log_density(const Vec3& color) const { return photorig::log_density(prepare(*this), color); }

GmmColorModel fit_gmm(const std::vector<Vec3>& samples, int components, int em_iterations, std::uint64_t seed) {
    GmmColorModel gmm;
    const std::size_t n = samples.size();
    if (n == 0 || components <= 0)
        return gmm;
    const Eigen::Matrix3d reg = 1e-5 * Eigen::Matrix3d::Identity();

    // k-means++ seeding.
    std::mt19937_64 rng(seed);
    std::vector<Vec3> centers{samples[std::size_t(rng() % n)]};
    std::vector<double> d2(n);
    while (int(centers.size()) < components) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double best = kInf;
            for (const Vec3& c : centers)
                best = std::min(best, (samples[i] - c).squaredNorm());
            d2[i] = best;
            total += best;
        }
        if (total <= 0)
            break;
        double u = unit_uniform(rng) * total;
        std::size_t pick = n - 1;
        for (std::size_t i = 0; i < n; ++i) {
            u -= d2[i];
            if (u < 0) {
                pick = i;
                break;
            }
        }
        centers.push_back(samples[pick]);
    }
    const int k = int(centers.size());

    Vec3 global_mean = Vec3::Zero();
    for (const Vec3& s : samples)
        global_mean += s;
    global_mean /= double(n);
    Eigen::Matrix3d global_cov = Eigen::Matrix3d::Zero();
    for (const Vec3& s : samples)
        global_cov += (s - global_mean) * (s - global_mean).transpose();
    global_cov = global_cov / double(n) + reg;

    // Responsibilities start as a hard assignment to the nearest centre.
    Eigen::MatrixXd resp = Eigen::MatrixXd::Zero(Eigen::Index(n), k);
    for (std::size_t i = 0; i < n; ++i) {
        int best = 0;
        for (int c = 1; c < k; ++c)
            if ((samples[i] - centers[std::size_t(c)]).squaredNorm() < (samples[i] - centers[std::size_t(best)]).squaredNorm())
                best = c;
        resp(Eigen::Index(i), best) = 1.0;
    }

    gmm.components.resize(std::size_t(k));
    auto m_step = [&] {
        for (int c = 0; c < k; ++c) {
            auto& comp = gmm.components[std::size_t(c)];
            const double nk = resp.col(c).sum();
            comp.weight = nk / double(n);
            if (nk < 1e-10) {
                comp.weight = 0.0;
                continue;
            }
            Vec3 mean = Vec3::Zero();
            for (std::size_t i = 0; i < n; ++i)
                mean += resp(Eigen::Index(i), c) * samples[i];
            mean /= nk;
            Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
            for (std::size_t i = 0; i < n; ++i)
                cov += resp(Eigen::Index(i), c) * (samples[i] - mean) * (samples[i] - mean).transpose();
            comp.mean = mean;
            comp.covariance = nk >= 2.0 ? Eigen::Matrix3d(cov / nk + reg) : global_cov;
        }
    };
    m_step();
    for (int it = 0; it < em_iterations; ++it) {
        const auto prepared = prepare(gmm);
        std::vector<int> alive;
        for (int c = 0; c < k; ++c)
            if (gmm.components[std::size_t(c)].weight > 0)
                alive.push_back(c);
        for (std::size_t i = 0; i < n; ++i) {
            double best = -kInf;
            std::vector<double> t(prepared.size());
            for (std::size_t j = 0; j < prepared.size(); ++j) {
                const Vec3 d = samples[i] - prepared[j].mean;
                t[j] = prepared[j].log_weight + prepared[j].log_norm - 0.5 * d.dot(prepared[j].inverse * d);
                best = std::max(best, t[j]);
            }
            double s = 0.0;
            for (double v : t)
                s += std::exp(v - best);
            resp.row(Eigen::Index(i)).setZero();
            for (std::size_t j = 0; j < prepared.size(); ++j)
                resp(Eigen::Index(i), alive[j]) = std::exp(t[j] - best) / s;
        }
        m_step();
    }
    std::erase_if(gmm.components, [](const auto& c) { return c.weight <= 0; });
    double total = 0.0;
    for (const auto& c : gmm.components)
        total += c.weight;
    for (auto& c : gmm.components)
        c.weight /= total;
    return gmm;
}

RasterMap refine_labels(const RasterMap& labels, const RasterMap& image, const RasterMap& occlusion,
                        const RefineOptions& options, RefineReport* report) {
    if (labels.semantic() != Semantic::label || occlusion.semantic() != Semantic::mask)
        throw InputError("refine_labels expects a label map and an occlusion mask");
    if (image.channels() != 3)
        throw InputError("refine_labels expects an RGB image");
    const int w = labels.width(), h = labels.height();
    if (image.width() != w || image.height() != h || occlusion.width() != w || occlusion.height() != h)
        throw InputError("refine_labels: map sizes differ");

    RefineReport local;
    RasterMap current = labels;
    auto in_s = [&](int x, int y) { return labels.contains(x, y) && labels.label_at(x, y) != kBackground; };
    auto color = [&](int x, int y) { return Vec3(image.at(x, y, 0), image.at(x, y, 1), image.at(x, y, 2)); };

    std::vector<int> node(labels.pixel_count(), -1);
    std::vector<std::pair<int, int>> pixels;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (occlusion.is_set(x, y) && in_s(x, y)) {
                node[labels.index(x, y)] = int(pixels.size());
                pixels.emplace_back(x, y);
            }
    if (pixels.empty()) {
        if (report)
            *report = local;
        return current;
    }

    int label_count = kPartCount;
    std::vector<char> present;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (in_s(x, y))
                label_count = std::max(label_count, labels.label_at(x, y) + 1);
    present.assign(std::size_t(label_count), 0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (in_s(x, y))
                present[std::size_t(labels.label_at(x, y))] = 1;

    // Contrast normalisation over neighbouring pairs inside the mask.
    double sum_sq = 0.0;
    std::size_t pair_count = 0;
    for (const auto& [x, y] : pixels)
        for (const auto& o : kHalfNeighbours) {
            const int qx = x + o[0], qy = y + o[1];
            if (!labels.contains(qx, qy) || node[labels.index(qx, qy)] < 0)
                continue;
            sum_sq += (color(x, y) - color(qx, qy)).squaredNorm();
            ++pair_count;
        }
    const double mean_sq = pair_count ? sum_sq / double(pair_count) : 0.0;
    local.beta = mean_sq > 0 ? 1.0 / (2.0 * mean_sq) : 0.0;
    auto pair_weight = [&](int x, int y, int qx, int qy) {
        const double c = (x != qx && y != qy) ? 1.0 / std::sqrt(2.0) : 1.0;
        return options.gamma * c * std::exp(-local.beta * (color(x, y) - color(qx, qy)).squaredNorm());
    };

    // Graph structure is fixed across outer iterations; only unaries change.
    PairwiseGraph base(int(pixels.size()), label_count);
    std::vector<std::vector<std::pair<int, double>>> fixed_neighbours(pixels.size());
    for (std::size_t p = 0; p < pixels.size(); ++p) {
        const auto [x, y] = pixels[p];
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
                if (dx == 0 && dy == 0)
                    continue;
                const int qx = x + dx, qy = y + dy;
                if (!in_s(qx, qy))
                    continue;
                const int q = node[labels.index(qx, qy)];
                if (q < 0)
                    fixed_neighbours[p].emplace_back(labels.label_at(qx, qy), pair_weight(x, y, qx, qy));
                else if (q > int(p))
                    base.add_edge(int(p), q, pair_weight(x, y, qx, qy));
            }
    }

    for (local.outer_iterations = 0; local.outer_iterations < options.outer_iterations;) {
        std::vector<std::vector<Vec3>> samples(static_cast<std::size_t>(label_count));
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                if (in_s(x, y))
                    samples[std::size_t(current.label_at(x, y))].push_back(color(x, y));
        std::vector<std::vector<PreparedComponent>> models(static_cast<std::size_t>(label_count));
        for (int l = 0; l < label_count; ++l)
            if (present[std::size_t(l)])
                models[std::size_t(l)] = prepare(fit_gmm(samples[std::size_t(l)], options.components,
                                                         options.em_iterations, options.seed + std::uint64_t(l)));

        PairwiseGraph g = base;
        std::vector<int> init(pixels.size());
        for (std::size_t p = 0; p < pixels.size(); ++p) {
            const auto [x, y] = pixels[p];
            const Vec3 c = color(x, y);
            for (int l = 0; l < label_count; ++l) {
                if (!present[std::size_t(l)]) {
                    g.cost(int(p), l) = kInf;
                    continue;
                }
                double u = -log_density(models[std::size_t(l)], c);
                for (const auto& [fl, fw] : fixed_neighbours[p])
                    if (fl != l)
                        u += fw;
                g.cost(int(p), l) = u;
            }
            init[p] = current.label_at(x, y);
        }
        const auto result = alpha_expansion(g, init);
        local.energies.push_back(result.energy_trace.back());
        ++local.outer_iterations;
        bool changed = false;
        for (std::size_t p = 0; p < pixels.size(); ++p) {
            const auto [x, y] = pixels[p];
            if (result.labeling[p] != init[p]) {
                current.at(x, y) = result.labeling[p];
                changed = true;
            }
        }
        if (!changed)
            break;
    }
    if (report)
        *report = local;
    return current;
}

} // namespace photorig
