#include <doctest.h>

#include <filesystem>

#include <nlohmann/json.hpp>

#include "photorig/mask_ops.hpp"
#include "photorig/parts.hpp"
#include "photorig/template_body.hpp"

using namespace photorig;

namespace {

TemplateBody unit_sphere() {
    TemplateBody body;
    body.skeleton = Skeleton({{"root", -1, Quat::Identity(), Vec3::Zero()}});
    for (int part = 0; part < kPartCount; ++part) {
        Primitive p;
        p.part = part;
        p.radius = part == 0 ? 1.0 : 1e-3;
        p.a = p.b = part == 0 ? Vec3::Zero() : Vec3(0, 0, -50);
        body.primitives.push_back(p);
    }
    return body;
}

const TemplateBody& body() {
    static const TemplateBody b = TemplateBody::default_body();
    return b;
}

} // namespace

TEST_CASE("unit sphere renders a disc with a frontal normal at its centre") {
    const auto cam = Camera::facing_subject({2000, 2000, 32, 32}, Vec3(0, 0, 100), 65, 65);
    const auto r = render_template(unit_sphere(), Pose::rest(1), cam, View::front);
    CHECK(r.label.label_at(32, 32) == 0);
    CHECK(std::abs(r.normal.at(32, 32, 0)) < 1e-3);
    CHECK(std::abs(r.normal.at(32, 32, 1)) < 1e-3);
    CHECK(std::abs(r.normal.at(32, 32, 2) - 1.0) < 1e-3);
    CHECK(std::abs(r.depth.at(32, 32) - 99.0) < 1e-9);
    // Radius in pixels is about f * 1 / 100 = 20.
    const double area = double(r.silhouette.count_set());
    CHECK(std::abs(std::sqrt(area / 3.14159265) - 20.0) < 0.5);
    // A pixel to the right has a normal pointing right.
    CHECK(r.normal.at(42, 32, 0) > 0.3);
    CHECK(r.normal.at(32, 42, 1) > 0.3);
}

TEST_CASE("default T-pose shows every part, left arm on the image right") {
    const auto cam = default_camera();
    const auto r = render_template(body(), Pose::rest(body().skeleton.size()), cam, View::front);
    std::vector<double> sum_x(kPartCount, 0.0);
    std::vector<int> count(kPartCount, 0);
    for (int y = 0; y < r.label.height(); ++y)
        for (int x = 0; x < r.label.width(); ++x) {
            const int l = r.label.label_at(x, y);
            if (l == kBackground)
                continue;
            sum_x[std::size_t(l)] += x;
            ++count[std::size_t(l)];
            double s = 0.0;
            for (double w : r.skinning.pixel(x, y))
                s += w;
            CHECK(std::abs(s - 1.0) < 1e-12);
        }
    for (int l = 0; l < kPartCount; ++l)
        CHECK(count[std::size_t(l)] > 0);
    for (Part left : {Part::left_upper_arm, Part::left_lower_arm, Part::left_hand, Part::left_leg})
        CHECK(sum_x[std::size_t(id(left))] / count[std::size_t(id(left))] > cam.intrinsics().cx);
    for (Part right : {Part::right_upper_arm, Part::right_lower_arm, Part::right_hand, Part::right_leg})
        CHECK(sum_x[std::size_t(id(right))] / count[std::size_t(id(right))] < cam.intrinsics().cx);
}

TEST_CASE("front and mirrored back silhouettes agree") {
    const auto cam = default_camera();
    const Pose rest = Pose::rest(body().skeleton.size());
    const auto f = render_template(body(), rest, cam, View::front);
    const auto b = render_template(body(), rest, cam, View::back);
    const double iou = intersection_over_union(f.silhouette, b.silhouette.mirrored());
    MESSAGE("mirror IoU " << iou);
    CHECK(iou >= 0.99);
    // Back depth is measured from the back camera, so the chest is nearer than the pivot.
    CHECK(b.depth.at(127, 100) > 5.5);
    CHECK(b.depth.at(127, 100) < 6.0);
}

TEST_CASE("renders are deterministic and survive the render-set files") {
    const auto cam = default_camera(96);
    const Pose pose = arm_over_torso_pose(body().skeleton);
    const auto a = render_template(body(), pose, cam, View::front);
    const auto b = render_template(body(), pose, cam, View::front);
    CHECK(a.depth == b.depth);
    CHECK(a.skinning == b.skinning);

    const auto set = render_set(body(), pose, cam);
    const auto dir = std::filesystem::temp_directory_path() / "photorig_render_set_test";
    std::filesystem::remove_all(dir);
    write_render_set(set, dir);
    const auto loaded = read_render_set(dir);
    auto as_float = [](RasterMap m) {
        for (double& v : m.data())
            v = double(float(v));
        return m;
    };
    CHECK(loaded.front.depth == as_float(set.front.depth));
    CHECK(loaded.back.normal == as_float(set.back.normal));
    CHECK(loaded.groups.at("body").first.label == set.groups.at("body").first.label);
    CHECK(loaded.skeleton.size() == set.skeleton.size());
    CHECK(loaded.bounding_diameter == set.bounding_diameter);
    std::filesystem::remove_all(dir);
}

TEST_CASE("template body JSON round trip and validation") {
    const auto j = body().to_json();
    const auto copy = TemplateBody::from_json(j);
    CHECK(copy.to_json() == j);
    auto broken = j;
    broken["primitives"][0]["part"] = "tail";
    CHECK_THROWS_AS(TemplateBody::from_json(broken), InputError);
    auto missing = body();
    std::erase_if(missing.primitives, [](const Primitive& p) { return p.part == id(Part::head); });
    CHECK_THROWS_AS(missing.validate(), InputError);
}

TEST_CASE("a body outside the view is rejected") {
    const auto cam = Camera::facing_subject({100, 100, 16, 16}, Vec3(0, 0, -60), 32, 32);
    CHECK_THROWS_AS(render_template(unit_sphere(), Pose::rest(1), cam, View::front), GeometryError);
}

TEST_CASE("fixtures") {
    const auto cam = default_camera();
    const auto plain = make_fixture("plain_tpose", body(), cam);
    const auto tpl = render_template(body(), plain.pose, cam, View::front);
    CHECK(plain.silhouette == tpl.silhouette);
    CHECK(plain.truth.occlusion_contour.count_set() == 0);

    const auto dilated = make_fixture("dilated_clothing", body(), cam);
    CHECK(dilated.silhouette == dilate(tpl.silhouette, 6.0));

    const auto occluded = make_fixture("arm_over_torso", body(), cam);
    CHECK(occluded.truth.occlusion_contour.count_set() > 50);
    std::size_t arm = 0, b = 0;
    for (int y = 0; y < 256; ++y)
        for (int x = 0; x < 256; ++x)
            if (occluded.truth.occlusion_contour.is_set(x, y)) {
                const int l = occluded.truth.labels.label_at(x, y);
                arm += is_right_arm(l);
                b += in_region_b(l);
            }
    CHECK(arm + b == occluded.truth.occlusion_contour.count_set());
    CHECK(arm > 0);
    CHECK(b > 0);
    // The arm-free body covers the torso behind the forearm.
    CHECK(occluded.truth.body_silhouette.count_set() > select_labels(occluded.truth.labels, group_parts("body")).count_set());

    const auto again = make_fixture("arm_over_torso", body(), cam);
    CHECK(again.image == occluded.image);
    CHECK_THROWS_AS(make_fixture("cartwheel", body(), cam), InputError);
}
