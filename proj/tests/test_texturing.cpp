#include <doctest.h>

#include <random>

#include "photorig/mask_ops.hpp"
#include "photorig/parts.hpp"
#include "photorig/texturing.hpp"
#include "support.hpp"

using namespace photorig;
using namespace testsupport;

namespace {

RasterMap solid(int w, int h, const Vec3& c) {
    RasterMap m(w, h, 3, Semantic::color);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int k = 0; k < 3; ++k)
                m.at(x, y, k) = c[k];
    return m;
}

RasterMap noise(int w, int h, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    RasterMap m(w, h, 3, Semantic::color);
    for (double& v : m.data())
        v = u(rng);
    return m;
}

RasterMap labels_from(const RasterMap& mask, int label) {
    RasterMap l(mask.width(), mask.height(), 1, Semantic::label, double(kBackground));
    for (int y = 0; y < mask.height(); ++y)
        for (int x = 0; x < mask.width(); ++x)
            if (mask.is_set(x, y))
                l.at(x, y) = label;
    return l;
}

} // namespace

TEST_CASE("project_front") {
    const auto s = disk_mask(40, 40, Vec2(20, 20), 12);
    SUBCASE("uniform grey in, uniform grey out, nothing flagged") {
        const auto tile = project_front(solid(40, 40, Vec3::Constant(0.5)), s, s);
        CHECK(tile.flagged.count_set() == 0);
        for (int y = 0; y < 40; ++y)
            for (int x = 0; x < 40; ++x)
                if (s.is_set(x, y))
                    CHECK(tile.color.at(x, y, 1) == 0.5);
    }
    SUBCASE("hidden pixels are flagged and filled") {
        const auto hidden = rect_mask(40, 40, 15, 15, 24, 24);
        const auto visible = mask_minus(s, hidden);
        const auto tile = project_front(solid(40, 40, Vec3(0.1, 0.6, 0.3)), visible, s);
        CHECK(tile.flagged == mask_and(s, hidden));
        CHECK(tile.color.at(20, 20, 1) == doctest::Approx(0.6).epsilon(1e-6));
    }
}

TEST_CASE("mirror mode") {
    const auto front = noise(17, 9, 3);
    const auto labels = labels_from(RasterMap(17, 9, 1, Semantic::mask, 1.0), 1);
    const auto back = synthesize_back(front, labels, BackMode::mirror);
    for (int y = 0; y < 9; ++y)
        for (int x = 0; x < 17; ++x)
            for (int k = 0; k < 3; ++k)
                CHECK(back.at(x, y, k) == front.at(16 - x, y, k));
    CHECK(synthesize_back(back, labels, BackMode::mirror) == front);
}

TEST_CASE("inpaint mode") {
    const auto s = disk_mask(48, 48, Vec2(24, 24), 18);
    SUBCASE("one front colour gives one back colour") {
        auto labels = labels_from(s, id(Part::torso));
        for (int y = 30; y < 48; ++y)
            for (int x = 0; x < 48; ++x)
                if (s.is_set(x, y))
                    labels.at(x, y) = id(Part::left_leg);
        const Vec3 c(0.3, 0.5, 0.7);
        const auto back = synthesize_back(solid(48, 48, c), labels, BackMode::inpaint);
        const auto back_support = s.mirrored();
        for (int y = 0; y < 48; ++y)
            for (int x = 0; x < 48; ++x)
                if (back_support.is_set(x, y))
                    for (int k = 0; k < 3; ++k)
                        CHECK(back.at(x, y, k) == doctest::Approx(c[k]).epsilon(1e-9));
    }
    SUBCASE("a hair donor never borrows from the face") {
        constexpr int kHair = 10;
        auto labels = labels_from(s, id(Part::head));
        RasterMap front(48, 48, 3, Semantic::color);
        for (int y = 0; y < 48; ++y)
            for (int x = 0; x < 48; ++x) {
                if (!s.is_set(x, y))
                    continue;
                const bool hair = y < 20;
                labels.at(x, y) = hair ? kHair : id(Part::head);
                const Vec3 c = hair ? Vec3(0.1 + 0.01 * (x % 3), 0.08, 0.05) : Vec3(0.9, 0.7, 0.6 + 0.01 * (y % 4));
                for (int k = 0; k < 3; ++k)
                    front.at(x, y, k) = c[k];
            }
        InpaintGuide guide;
        guide.back_labels = labels_from(s.mirrored(), kHair);
        Provenance prov;
        const auto back = synthesize_back(front, labels, BackMode::inpaint, guide, &prov);
        CHECK(prov.seeded[id(Part::head)] == 0);
        CHECK(prov.snapped[id(Part::head)] == 0);
        CHECK(prov.seeded[kHair] > 0);
        CHECK(prov.seeded[kHair] + prov.snapped[kHair] == s.count_set());
        const auto back_support = s.mirrored();
        for (int y = 0; y < 48; ++y)
            for (int x = 0; x < 48; ++x)
                if (back_support.is_set(x, y))
                    CHECK(back.at(x, y, 0) < 0.2);
    }
    SUBCASE("a label without front pixels takes the mean colour") {
        const auto labels = labels_from(s, id(Part::torso));
        InpaintGuide guide;
        guide.back_labels = labels_from(s.mirrored(), id(Part::head));
        Diagnostics diag;
        Provenance prov;
        const auto back = synthesize_back(solid(48, 48, Vec3(0.2, 0.4, 0.6)), labels, BackMode::inpaint, guide, &prov,
                                          &diag);
        CHECK(diag.warnings.size() == 1);
        CHECK(prov.mean_filled == s.count_set());
        CHECK(back.at(24, 24, 2) == doctest::Approx(0.6));
    }
}

TEST_CASE("seam blending") {
    const auto s = rect_mask(60, 240, 10, 10, 49, 229);
    SUBCASE("consistent tiles are left alone") {
        const auto front = noise(60, 240, 9);
        const auto out = blend_seam(front, front.mirrored(), s, 8);
        double worst = 0;
        for (std::size_t i = 0; i < front.data().size(); ++i)
            worst = std::max(worst, std::abs(out.front.data()[i] - front.data()[i]));
        CHECK(worst < 1e-7);
        CHECK(out.back == blend_seam(front, front.mirrored(), s, 8).back);
    }
    SUBCASE("constant tiles give a linear ramp") {
        const int w = 8;
        const auto out = blend_seam(solid(60, 240, Vec3::Constant(0.2)), solid(60, 240, Vec3::Constant(0.8)), s, w);
        const int y = 120;
        // Front pixel at distance d from the left seam, then the mirrored back pixel.
        double prev = -1;
        for (int d = w; d >= 0; --d) {
            const double v = out.front.at(10 + d, y);
            CHECK(v == doctest::Approx(0.2 + 0.3 * (w - d) / w).epsilon(1e-4));
            CHECK(v > prev);
            prev = v;
        }
        for (int d = 1; d <= w; ++d) {
            const double v = out.back.at(59 - (10 + d), y);
            CHECK(v == doctest::Approx(0.5 + 0.3 * d / w).epsilon(1e-4));
            CHECK(v > prev);
            prev = v;
        }
        CHECK(out.front.at(10 + w, y) == 0.2);
        CHECK(out.back.at(59 - (10 + w), y) == 0.8);
    }
    SUBCASE("a one-pixel band averages") {
        const auto out = blend_seam(solid(60, 240, Vec3::Constant(0.2)), solid(60, 240, Vec3::Constant(0.8)), s, 1);
        for (int y = 10; y <= 229; ++y) {
            CHECK(out.front.at(10, y) == doctest::Approx(0.5).epsilon(1e-6));
            CHECK(out.front.at(49, y) == doctest::Approx(0.5).epsilon(1e-6));
        }
        CHECK(out.band.count_set() == 2 * 40 + 2 * 218);
    }
    SUBCASE("nothing outside the band changes") {
        const auto front = noise(60, 240, 1), back = noise(60, 240, 2);
        const auto out = blend_seam(front, back, s, 5);
        const auto band_back = out.band.mirrored();
        for (int y = 0; y < 240; ++y)
            for (int x = 0; x < 60; ++x)
                for (int k = 0; k < 3; ++k) {
                    if (!out.band.is_set(x, y))
                        CHECK(out.front.at(x, y, k) == front.at(x, y, k));
                    if (!band_back.is_set(x, y))
                        CHECK(out.back.at(x, y, k) == back.at(x, y, k));
                }
    }
}

TEST_CASE("atlas layout") {
    BlendedTiles a{solid(4, 3, Vec3::Constant(0.1)), solid(4, 3, Vec3::Constant(0.2)), {}};
    BlendedTiles b{solid(4, 3, Vec3::Constant(0.3)), solid(4, 3, Vec3::Constant(0.4)), {}};
    const auto atlas = compose_atlas({a, b});
    CHECK(atlas.image.width() == 8);
    CHECK(atlas.image.height() == 6);
    CHECK(atlas.image.at(5, 4) == 0.4);
    const Vec2 uv = atlas.uv(1, true, Vec2(1, 1));
    CHECK(uv.x() == doctest::Approx(5.5 / 8));
    CHECK(uv.y() == doctest::Approx(4.5 / 6));
}
