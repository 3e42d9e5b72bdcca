// Acceptance checks for the library and pipeline. Prints one PASS/FAIL line
// per criterion and exits non-zero if any fails.
#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "oracles.hpp"
#include "photorig/export.hpp"
#include "photorig/geometry.hpp"
#include "photorig/labeling.hpp"
#include "photorig/mask_ops.hpp"
#include "photorig/normal_integration.hpp"
#include "photorig/occlusion_completion.hpp"
#include "photorig/reconstruction.hpp"
#include "support.hpp"

using namespace photorig;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass;
    std::string detail;
};

int failures = 0;

void criterion(const std::string& name, double budget_s, const std::function<Outcome()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (budget_s > 0 && dt >= budget_s) {
        o.pass = false;
        o.detail += fmt::format("; over the {:.0f} s budget", budget_s);
    }
    failures += !o.pass;
    fmt::print("{} {}: {} [{:.2f} s]\n", o.pass ? "PASS" : "FAIL", name, o.detail, dt);
    std::fflush(stdout);
}

const TemplateBody& body() {
    static const TemplateBody b = TemplateBody::default_body();
    return b;
}

struct Run {
    Fixture fixture;
    Reconstruction result;
    double seconds = 0.0;
};

Run run(std::string_view name, ReconstructParams params = {}) {
    const Camera cam = default_camera(default_fixture_size(name));
    Run r{make_fixture(name, body(), cam), {}, 0.0};
    const auto t0 = std::chrono::steady_clock::now();
    r.result = reconstruct({r.fixture.silhouette, r.fixture.image, render_set(body(), r.fixture.pose, cam)}, params);
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

double worst_weight_sum_error(const RiggedMesh& m) {
    const std::size_t b = m.joint_count();
    double worst = 0.0;
    for (std::size_t v = 0; v < m.vertices.size(); ++v) {
        double sum = 0.0;
        for (std::size_t k = 0; k < b; ++k)
            sum += m.weights[v * b + k];
        worst = std::max(worst, std::abs(sum - 1.0));
    }
    return worst;
}

bool is_arm_body_pair(int a, int b) {
    return (is_arm(a) && in_region_b(b)) || (is_arm(b) && in_region_b(a));
}

// Midpoints of 4-neighbour arm/body label edges, optionally only where one
// side lies in `within`.
std::vector<Vec2> arm_body_edges(const RasterMap& labels, const RasterMap* within) {
    std::vector<Vec2> out;
    for (int y = 0; y < labels.height(); ++y)
        for (int x = 0; x < labels.width(); ++x)
            for (const auto [dx, dy] : {std::pair{1, 0}, std::pair{0, 1}}) {
                const int x2 = x + dx, y2 = y + dy;
                if (!labels.contains(x2, y2) || !is_arm_body_pair(labels.label_at(x, y), labels.label_at(x2, y2)))
                    continue;
                if (within && !within->is_set(x, y) && !within->is_set(x2, y2))
                    continue;
                out.emplace_back(0.5 * (x + x2), 0.5 * (y + y2));
            }
    return out;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

} // namespace

int main() {
    criterion("mvc partition of unity and linear precision", 5.0, [] {
        std::mt19937 rng(2024);
        std::uniform_real_distribution<double> u(-30, 30);
        double worst_sum = 0.0, worst_lin = 0.0;
        for (int trial = 0; trial < 1000; ++trial) {
            const int n = 3 + trial % 30;
            const auto poly = trial % 2 ? testsupport::random_star_polygon(rng, n, Vec2(0, 0), 5.0, 20.0)
                                        : testsupport::random_convex_polygon(rng, n, Vec2(0, 0), 15.0);
            const Vec2 x(u(rng), u(rng));
            const auto w = mvc_weights(x, poly);
            double sum = 0.0;
            Vec2 p = Vec2::Zero();
            for (std::size_t i = 0; i < w.size(); ++i) {
                sum += w[i];
                p += w[i] * poly[i];
            }
            worst_sum = std::max(worst_sum, std::abs(sum - 1.0));
            worst_lin = std::max(worst_lin, (p - x).norm());
        }
        return Outcome{worst_sum < 1e-9 && worst_lin < 1e-6,
                       fmt::format("1000 pairs, max |sum-1| {:.2e}, max precision error {:.2e}", worst_sum, worst_lin)};
    });

    criterion("boundary matching DP equals brute force", 30.0, [] {
        std::mt19937 rng(41);
        std::uniform_int_distribution<int> um(3, 8), un(3, 10), uk(1, 4);
        int instances = 0, equal = 0;
        double worst = 0.0;
        while (instances < 200) {
            const int m = um(rng), n = un(rng), kappa = uk(rng);
            if (std::min(kappa, n - 1) * m < n)
                continue;
            const auto p = testsupport::random_star_polygon(rng, m, Vec2(0, 0), 5, 15);
            const auto q = testsupport::random_star_polygon(rng, n, Vec2(1, 0), 5, 15);
            const auto c = match_boundaries(BoundaryPolygon(p), BoundaryPolygon(q), {.kappa = kappa});
            const double brute = testsupport::brute_force_match_cost(p, q, kappa);
            ++instances;
            equal += c.total_cost == brute && c.satisfies_jump_bound();
            worst = std::max(worst, std::abs(c.total_cost - brute));
        }
        return Outcome{equal == instances,
                       fmt::format("{}/{} instances equal, max difference {:.2e}", equal, instances, worst)};
    });

    criterion("normal integration oracles", 10.0, [] {
        // Hemisphere of radius 40 on a 128 grid, boundary depth from the truth.
        const int size = 128;
        const double radius = 40;
        const Vec2 c((size - 1) / 2.0, (size - 1) / 2.0);
        IntegrationProblem h;
        h.domain = testsupport::disk_mask(size, size, c, radius);
        h.normals = RasterMap(size, size, 3, Semantic::normal);
        RasterMap truth(size, size, 1, Semantic::depth);
        for (int y = 0; y < size; ++y)
            for (int x = 0; x < size; ++x) {
                if (!h.domain.is_set(x, y))
                    continue;
                const double dx = x - c.x(), dy = y - c.y();
                const double z = std::sqrt(std::max(0.0, radius * radius - dx * dx - dy * dy));
                truth.at(x, y) = z;
                h.normals.at(x, y, 0) = dx / radius;
                h.normals.at(x, y, 1) = dy / radius;
                h.normals.at(x, y, 2) = z / radius;
            }
        h.boundary_depth = truth;
        const auto z = integrate(h);
        double se = 0.0;
        std::size_t n = 0;
        for (int y = 0; y < size; ++y)
            for (int x = 0; x < size; ++x)
                if (h.domain.is_set(x, y)) {
                    se += std::pow(z.at(x, y) - truth.at(x, y), 2);
                    ++n;
                }
        const double rmse = std::sqrt(se / double(n));

        // Tilted plane z = x / 2.
        IntegrationProblem p;
        p.domain = testsupport::rect_mask(48, 40, 3, 2, 44, 37);
        p.normals = RasterMap(48, 40, 3, Semantic::normal);
        p.boundary_depth = RasterMap(48, 40, 1, Semantic::depth);
        const Vec3 normal = Vec3(-0.5, 0.0, 1.0).normalized();
        for (int y = 0; y < 40; ++y)
            for (int x = 0; x < 48; ++x) {
                for (int k = 0; k < 3; ++k)
                    p.normals.at(x, y, k) = normal[k];
                p.boundary_depth.at(x, y) = x / 2.0;
            }
        const auto plane = integrate(p);
        double worst = 0.0;
        for (int y = 0; y < 40; ++y)
            for (int x = 0; x < 48; ++x)
                if (p.domain.is_set(x, y))
                    worst = std::max(worst, std::abs(plane.at(x, y) - x / 2.0));
        return Outcome{rmse < 0.4 && worst < 1e-4,
                       fmt::format("hemisphere RMSE {:.3e} px, plane max error {:.2e}", rmse, worst)};
    });

    criterion("alpha-expansion vs exhaustive search", 60.0, [] {
        int exact = 0, within = 0;
        bool monotone = true;
        for (int trial = 0; trial < 100; ++trial) {
            std::mt19937 rng(5000 + trial);
            const auto g = testsupport::random_grid_graph(rng, 4, 3, 3);
            const auto r = alpha_expansion(g, unary_argmin(g));
            for (std::size_t i = 1; i < r.energy_trace.size(); ++i)
                monotone = monotone && r.energy_trace[i] <= r.energy_trace[i - 1];
            const double opt = testsupport::exhaustive_min_energy(g);
            const double e = energy(g, r.labeling);
            within += e <= 1.02 * opt + 1e-12;
            exact += std::abs(e - opt) <= 1e-9 * std::max(1.0, opt);
        }
        return Outcome{monotone && exact >= 95 && within == 100,
                       fmt::format("monotone {}, optimal {}/100, within 2% {}/100", monotone, exact, within)};
    });

    for (const char* name : {"plain_tpose", "dilated_clothing", "concave_sleeves"}) {
        criterion(fmt::format("silhouette fidelity on {}", name), 120.0, [name] {
            const Run r = run(name);
            const RiggedMesh& m = r.result.mesh;
            const bool closed = is_closed(m.triangles);
            const double werr = worst_weight_sum_error(m);
            return Outcome{r.fixture.silhouette.width() == 256 && r.result.iou >= 0.98 && closed && werr <= 1e-5,
                           fmt::format("{}px, IoU {:.5f}, closed {}, max weight-sum error {:.1e}",
                                       r.fixture.silhouette.width(), r.result.iou, closed, werr)};
        });
    }

    criterion("integrated depth thicker than warped depth", 0.0, [] {
        ReconstructParams warp;
        warp.depth_mode = DepthMode::warp;
        const double thick = run("dilated_clothing").result.mean_thickness;
        const double flat = run("dilated_clothing", warp).result.mean_thickness;
        return Outcome{thick >= 1.10 * flat,
                       fmt::format("integrate {:.4f}, warp {:.4f}, ratio {:.3f}", thick, flat, thick / flat)};
    });

    criterion("occlusion pipeline on arm_over_torso", 0.0, [] {
        const Run r = run("arm_over_torso");
        const auto& truth = r.fixture.truth;
        std::size_t contour = 0, covered = 0;
        for (int y = 0; y < truth.occlusion_contour.height(); ++y)
            for (int x = 0; x < truth.occlusion_contour.width(); ++x)
                if (truth.occlusion_contour.is_set(x, y)) {
                    ++contour;
                    covered += r.result.occlusion.is_set(x, y);
                }
        const double coverage = contour ? double(covered) / double(contour) : 0.0;

        double hausdorff = std::numeric_limits<double>::infinity();
        if (r.result.completed_body) {
            const auto completed = rasterize_polygon(*r.result.completed_body, truth.body_silhouette.width(),
                                                     truth.body_silhouette.height());
            hausdorff = hausdorff_distance(extract_boundary(completed).points(),
                                           extract_boundary(truth.body_silhouette).points());
        }

        const RiggedMesh& m = r.result.mesh;
        std::size_t mixed = 0;
        for (const auto& t : m.triangles) {
            const auto a = std::size_t(t[0]), b = std::size_t(t[1]), c = std::size_t(t[2]);
            const bool one_group = m.groups[a] == m.groups[b] && m.groups[b] == m.groups[c];
            const bool any_arm = is_arm(m.labels[a]) || is_arm(m.labels[b]) || is_arm(m.labels[c]);
            const bool any_body =
                in_region_b(m.labels[a]) || in_region_b(m.labels[b]) || in_region_b(m.labels[c]);
            mixed += !one_group || (any_arm && any_body);
        }
        const bool closed = is_closed(m.triangles);
        const bool separate = mixed == 0 && r.result.surfaces.size() >= 2;
        return Outcome{coverage >= 0.95 && hausdorff <= 3.0 && separate,
                       fmt::format("contour coverage {:.1f}%, completed boundary Hausdorff {:.2f} px, {} surfaces, "
                                   "{} mixed triangles, closed {}",
                                   100 * coverage, hausdorff, r.result.surfaces.size(), mixed, closed)};
    });

    criterion("refined labels follow the colour edge on arm_over_torso_twotone", 0.0, [] {
        const Run r = run("arm_over_torso_twotone");
        const auto truth = arm_body_edges(r.fixture.truth.labels, nullptr);
        const auto refined = arm_body_edges(r.result.labels, &r.result.occlusion);
        std::size_t near = 0;
        for (const Vec2& p : refined) {
            double best = std::numeric_limits<double>::infinity();
            for (const Vec2& q : truth)
                best = std::min(best, (p - q).norm());
            near += best <= 1.0 + 1e-9;
        }
        const double frac = refined.empty() ? 0.0 : double(near) / double(refined.size());
        return Outcome{frac >= 0.95, fmt::format("{}/{} edge segments within 1 px ({:.1f}%)", near, refined.size(),
                                                 100 * frac)};
    });

    criterion("rigging: rest identity and rigid root rotation", 0.0, [] {
        const RiggedMesh m = run("plain_tpose").result.mesh;
        const std::size_t joints = m.skeleton.size();
        const auto rest = lbs_pose(m, Pose::rest(joints));
        double rest_err = 0.0;
        for (std::size_t v = 0; v < rest.size(); ++v)
            rest_err = std::max(rest_err, (rest[v] - m.vertices[v]).norm());

        double rigid_err = 0.0;
        for (int f = 0; f < 12; ++f) {
            Pose pose = Pose::rest(joints);
            pose.rotations[0] = Quat(Eigen::AngleAxisd(2 * std::numbers::pi * f / 12, Vec3(0.3, 1, 0.2).normalized()));
            pose.root_translation = Vec3(0.1 * f, 0.0, -0.05 * f);
            const auto posed = lbs_pose(m, pose);
            const Eigen::Isometry3d rigid = posed_world(m.skeleton, pose)[0] * m.skeleton.rest_world()[0].inverse();
            for (std::size_t v = 0; v < posed.size(); ++v)
                rigid_err = std::max(rigid_err, (posed[v] - rigid * m.vertices[v]).norm());
        }
        return Outcome{rest_err < 1e-6 && rigid_err < 1e-6,
                       fmt::format("rest max delta {:.2e}, rigid clip max deviation {:.2e} over 12 frames", rest_err,
                                   rigid_err)};
    });

    criterion("determinism: identical runs give identical mesh dumps", 0.0, [] {
        const fs::path dir = fs::temp_directory_path() / "photorig_acceptance";
        fs::remove_all(dir);
        fs::create_directories(dir);
        write_mesh_json(run("arm_over_torso").result.mesh, dir / "a.json");
        write_mesh_json(run("arm_over_torso").result.mesh, dir / "b.json");
        const std::string a = read_file(dir / "a.json"), b = read_file(dir / "b.json");
        return Outcome{!a.empty() && a == b, fmt::format("{} bytes each, identical {}", a.size(), a == b)};
    });

    fmt::print("{} criterion(s) failed\n", failures);
    return failures == 0 ? 0 : 1;
}
