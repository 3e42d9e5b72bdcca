#include <doctest.h>

#include <nlohmann/json.hpp>

#include "photorig/mask_ops.hpp"
#include "photorig/reconstruction.hpp"

using namespace photorig;

namespace {

const TemplateBody& body() {
    static const TemplateBody b = TemplateBody::default_body();
    return b;
}

Reconstruction run(std::string_view name, ReconstructParams params = {}) {
    const Camera cam = default_camera(default_fixture_size(name));
    const Fixture f = make_fixture(name, body(), cam);
    return reconstruct({f.silhouette, f.image, render_set(body(), f.pose, cam)}, params);
}

const Reconstruction& plain() {
    static const Reconstruction r = run("plain_tpose");
    return r;
}

const Reconstruction& dilated() {
    static const Reconstruction r = run("dilated_clothing");
    return r;
}

} // namespace

TEST_CASE("plain T-pose reconstruction") {
    const Reconstruction& r = plain();
    CHECK(r.iou >= 0.98);
    CHECK(r.occlusion.count_set() == 0);
    REQUIRE(r.surfaces.size() == 1);
    CHECK(r.surfaces[0].group == "body");
    CHECK(is_closed(r.mesh.triangles));
    CHECK_NOTHROW(r.mesh.validate(true));
    CHECK(signed_volume(r.mesh.vertices, r.mesh.triangles) > 0);
    CHECK(r.mesh.corner_uvs.size() == r.mesh.triangles.size());
    CHECK(r.mesh.texture.width() == 2 * 256);

    const std::size_t b = r.mesh.joint_count();
    double worst = 0.0;
    for (std::size_t v = 0; v < r.mesh.vertices.size(); ++v) {
        double sum = 0.0;
        for (std::size_t k = 0; k < b; ++k)
            sum += r.mesh.weights[v * b + k];
        worst = std::max(worst, std::abs(sum - 1.0));
    }
    CHECK(worst < 1e-5);

    for (const char* stage : {"input", "labels", "occlusion", "warp_and_integrate", "mesh", "smooth", "texture", "rig"})
        CHECK_MESSAGE(r.report.at("timings").contains(stage), stage);
    CHECK(r.report.at("closed").get<bool>());
    CHECK(r.report.at("energies").at("body_smoothing_volume_change").get<double>() < 0.05);
}

TEST_CASE("texture coordinates stay inside the surface's atlas row") {
    const Reconstruction& r = plain();
    for (const auto& corners : r.mesh.corner_uvs)
        for (const Vec2& uv : corners) {
            REQUIRE(uv.x() > 0.0);
            REQUIRE(uv.x() < 1.0);
            REQUIRE(uv.y() > 0.0);
            REQUIRE(uv.y() < 1.0);
        }
}

TEST_CASE("dilated clothing gives a thicker mesh than the plain body") {
    CHECK(dilated().iou >= 0.98);
    CHECK(dilated().mean_thickness > plain().mean_thickness);
}

TEST_CASE("integrated depth is thicker than warped depth") {
    ReconstructParams warp;
    warp.depth_mode = DepthMode::warp;
    const Reconstruction baseline = run("dilated_clothing", warp);
    MESSAGE("integrate " << dilated().mean_thickness << ", warp " << baseline.mean_thickness);
    CHECK(dilated().mean_thickness > baseline.mean_thickness);
    CHECK_FALSE(baseline.report.at("energies").contains("body_integration_front"));
}

TEST_CASE("empty and mismatched silhouettes are rejected") {
    const Camera cam = default_camera(64);
    const auto templ = render_set(body(), Pose::rest(body().skeleton.size()), cam);
    try {
        reconstruct({RasterMap(64, 64, 1, Semantic::mask), {}, templ});
        FAIL("empty silhouette accepted");
    } catch (const StageError& e) {
        CHECK(e.stage() == "input");
    }
    CHECK_THROWS_AS(reconstruct({RasterMap(32, 64, 1, Semantic::mask, 1.0), {}, templ}), InputError);
    CHECK_THROWS_AS(reconstruct({RasterMap(64, 64, 1, Semantic::depth, 1.0), {}, templ}), InputError);
}

TEST_CASE("parameters round-trip through JSON") {
    ReconstructParams p;
    p.kappa = 12;
    p.depth_mode = DepthMode::warp;
    p.back_mode = BackMode::inpaint;
    p.refine.seed = 77;
    p.complete_arm_junctions = false;
    const ReconstructParams q = ReconstructParams::from_json(p.to_json());
    CHECK(q.to_json() == p.to_json());
    CHECK(q.occlusion.kappa == 12);

    CHECK_THROWS_AS(ReconstructParams::from_json({{"kapa", 3}}), InputError);
    CHECK_THROWS_AS(ReconstructParams::from_json({{"kappa", "many"}}), InputError);
    CHECK_THROWS_AS(ReconstructParams::from_json({{"depth_mode", "guess"}}), InputError);
    CHECK_THROWS_AS(ReconstructParams::from_json({{"smooth_step", 2.0}}), InputError);
    CHECK_THROWS_AS(ReconstructParams::from_json(nlohmann::json::array()), InputError);
}
