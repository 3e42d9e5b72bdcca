#include <doctest.h>

#include "photorig/geometry.hpp"
#include "photorig/labeling.hpp"
#include "photorig/mask_ops.hpp"
#include "photorig/template_body.hpp"

using namespace photorig;

namespace {

const TemplateBody& body() {
    static const TemplateBody b = TemplateBody::default_body();
    return b;
}

std::vector<Vec2> pixels_with(const RasterMap& labels, int label) {
    std::vector<Vec2> out;
    for (int y = 0; y < labels.height(); ++y)
        for (int x = 0; x < labels.width(); ++x)
            if (labels.label_at(x, y) == label)
                out.emplace_back(x, y);
    return out;
}

struct Detection {
    Fixture fixture;
    RasterMap occlusion;
};

Detection detect(std::string_view name, const OcclusionOptions& options = {}) {
    const Camera cam = default_camera(default_fixture_size(name));
    Detection d{make_fixture(name, body(), cam), {}};
    const auto tpl = render_template(body(), d.fixture.pose, cam, View::front);
    const auto labels = initial_labels(d.fixture.silhouette, tpl.label);
    d.occlusion = detect_occlusion_mask(labels, {tpl.label, tpl.depth, cam, bounding_diameter(body(), d.fixture.pose)},
                                        options);
    return d;
}

} // namespace

TEST_CASE("body labels on the template's own silhouette") {
    const auto tpl = render_template(body(), Pose::rest(body().skeleton.size()), default_camera(), View::front);
    const auto out = initial_labels(tpl.silhouette, tpl.label);
    std::size_t disagree = 0;
    for (std::size_t i = 0; i < out.pixel_count(); ++i)
        disagree += out.data()[i] != tpl.label.data()[i];
    const double rate = double(disagree) / double(tpl.silhouette.count_set());
    MESSAGE("disagreement " << rate);
    CHECK(rate < 0.01);
}

TEST_CASE("body labels on a silhouette dilated by 4 px") {
    const auto tpl = render_template(body(), Pose::rest(body().skeleton.size()), default_camera(), View::front);
    const auto s = dilate(tpl.silhouette, 4.0);
    const auto out = initial_labels(s, tpl.label);
    for (int y = 0; y < s.height(); ++y)
        for (int x = 0; x < s.width(); ++x)
            REQUIRE((out.label_at(x, y) != kBackground) == s.is_set(x, y));
    for (int l = 0; l < kPartCount; ++l) {
        const auto a = pixels_with(out, l), b = pixels_with(tpl.label, l);
        REQUIRE(!a.empty());
        const double hd = hausdorff_distance(a, b);
        CHECK_MESSAGE(hd <= 6.0, part_name(l) << " " << hd);
    }
}

TEST_CASE("occlusion mask is empty without occlusion geometry") {
    for (const char* name : {"plain_tpose", "dilated_clothing", "concave_sleeves"}) {
        CAPTURE(name);
        CHECK(detect(name).occlusion.count_set() == 0);
    }
}

TEST_CASE("occlusion mask covers the arm-over-torso contour") {
    const auto d = detect("arm_over_torso");
    std::size_t covered = 0, total = 0;
    const auto& gt = d.fixture.truth.occlusion_contour;
    for (int y = 0; y < gt.height(); ++y)
        for (int x = 0; x < gt.width(); ++x)
            if (gt.is_set(x, y)) {
                ++total;
                covered += d.occlusion.is_set(x, y);
            }
    REQUIRE(total > 0);
    MESSAGE("covered " << covered << " of " << total);
    CHECK(double(covered) >= 0.95 * double(total));
    CHECK(mask_and(d.occlusion, d.fixture.silhouette) == d.occlusion);
}

TEST_CASE("an unbounded threshold flags nothing") {
    CHECK(detect("arm_over_torso", {.tau_fraction = 1e9}).occlusion.count_set() == 0);
}
