#include <doctest.h>

#include <numbers>

#include "oracles.hpp"
#include "photorig/boundary.hpp"
#include "support.hpp"

using namespace photorig;

TEST_CASE("extract_boundary: 2x2 block gives the marching-squares octagon") {
    const auto mask = testsupport::rect_mask(4, 4, 1, 1, 2, 2);
    const auto poly = extract_boundary(mask);
    CHECK(poly.size() == 8);
    // Hand-derived: a 2x2 square with its four corners cut by half-pixel diagonals.
    CHECK(poly.area() == doctest::Approx(3.5));
    CHECK(poly.is_simple());
}

TEST_CASE("extract_boundary: full frame traces the image border") {
    RasterMap mask(6, 5, 1, Semantic::mask, 1.0);
    const auto poly = extract_boundary(mask);
    for (const Vec2& p : poly.points()) {
        const bool on_x = std::abs(p.x() + 0.5) < 1e-12 || std::abs(p.x() - 5.5) < 1e-12;
        const bool on_y = std::abs(p.y() + 0.5) < 1e-12 || std::abs(p.y() - 4.5) < 1e-12;
        CHECK((on_x || on_y));
    }
    // The four corners are cut by half-pixel diagonals.
    CHECK(poly.area() == doctest::Approx(6.0 * 5.0 - 4 * 0.125));
}

TEST_CASE("extract_boundary: disk perimeter matches the staircase-contour length") {
    const auto mask = testsupport::disk_mask(128, 128, Vec2(64, 64), 50);
    const auto poly = extract_boundary(mask);
    // A digital line at angle t (0..45 deg) gives cos t - sin t unit segments and
    // 2 sin t half-diagonal corner cuts per unit length; averaged over t:
    const double s = std::sqrt(0.5);
    const double factor = 4.0 / std::numbers::pi * (s + (std::sqrt(2.0) - 1.0) * (1.0 - s));
    const double circumference = 2 * std::numbers::pi * 50;
    CHECK(std::abs(poly.length() - factor * circumference) < 0.01 * circumference);
    CHECK(poly.area() == doctest::Approx(std::numbers::pi * 50 * 50).epsilon(0.01));
}

TEST_CASE("extract_boundary: encloses exactly the foreground pixel centres") {
    std::mt19937 rng(2);
    const auto shape = testsupport::random_star_polygon(rng, 9, Vec2(32, 32), 8, 28);
    const auto mask = testsupport::polygon_mask(64, 64, shape);
    const auto poly = extract_boundary(mask);
    CHECK(poly.is_simple());
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x)
            CHECK(poly.contains(Vec2(x, y)) == mask.is_set(x, y));
}

TEST_CASE("extract_boundary: diagonal pixels are separate components") {
    RasterMap mask(5, 5, 1, Semantic::mask);
    mask.at(1, 1) = 1;
    mask.at(2, 1) = 1;
    mask.at(1, 2) = 1;
    mask.at(3, 3) = 1;
    Diagnostics diag;
    const auto poly = extract_boundary(mask, &diag);
    CHECK(diag.warnings.size() == 1);
    CHECK(poly.area() > 0);
    CHECK_FALSE(poly.contains(Vec2(3, 3)));
}

TEST_CASE("extract_boundary: empty mask is rejected") {
    RasterMap mask(4, 4, 1, Semantic::mask);
    CHECK_THROWS_AS(extract_boundary(mask), GeometryError);
}

TEST_CASE("resample_boundary") {
    const BoundaryPolygon sq({{0, 0}, {4, 0}, {4, 4}, {0, 4}});
    SUBCASE("square, 4 points") {
        const auto r = resample_boundary(sq, 4);
        CHECK(r.size() == 4);
        CHECK((r[1] - Vec2(4, 0)).norm() < 1e-12);
        CHECK((r[2] - Vec2(4, 4)).norm() < 1e-12);
    }
    SUBCASE("square, 8 points") {
        const auto r = resample_boundary(sq, 8);
        CHECK(r.size() == 8);
        for (std::size_t i = 0; i < 8; ++i)
            CHECK(distance_to_polygon(r[i], sq.points()) < 1e-12);
        CHECK((r[1] - Vec2(2, 0)).norm() < 1e-12);
        CHECK((r[3] - Vec2(4, 2)).norm() < 1e-12);
    }
    SUBCASE("random polygon, 256 points have equal arc gaps") {
        std::mt19937 rng(9);
        const auto poly = BoundaryPolygon(testsupport::random_star_polygon(rng, 30, Vec2(0, 0), 10, 40));
        const auto r = resample_boundary(poly, 256);
        REQUIRE(r.size() == 256);
        // Arc positions recomputed by projecting onto the input polyline.
        std::vector<double> cum{0.0};
        for (std::size_t i = 0; i < poly.size(); ++i)
            cum.push_back(cum.back() + (poly.at_cyclic(std::ptrdiff_t(i) + 1) - poly[i]).norm());
        auto arc = [&](const Vec2& p) {
            double best = 1e300, s = 0.0;
            for (std::size_t i = 0; i < poly.size(); ++i) {
                const Vec2 a = poly[i], b = poly.at_cyclic(std::ptrdiff_t(i) + 1);
                const double t = std::clamp((p - a).dot(b - a) / (b - a).squaredNorm(), 0.0, 1.0);
                const double d = (a + t * (b - a) - p).norm();
                if (d < best) {
                    best = d;
                    s = cum[i] + t * (b - a).norm();
                }
            }
            return s;
        };
        const double gap = cum.back() / 256;
        for (std::size_t i = 1; i < 256; ++i)
            CHECK(std::abs(arc(r[i]) - arc(r[i - 1]) - gap) < 1e-6);
    }
    CHECK_THROWS_AS(resample_boundary(sq, 2), InputError);
}

TEST_CASE("match_boundaries: identity and rotated indices") {
    std::vector<Vec2> oct;
    for (int i = 0; i < 8; ++i)
        oct.emplace_back(10 * std::cos(2 * std::numbers::pi * i / 8), 10 * std::sin(2 * std::numbers::pi * i / 8));
    const BoundaryPolygon p(oct);
    const auto c = match_boundaries(p, p);
    for (int i = 0; i < 8; ++i)
        CHECK(c.phi[std::size_t(i)] == i);
    CHECK(c.distance_cost == 0.0);
    CHECK(c.total_cost == 8.0);

    std::vector<Vec2> rotated(8);
    for (int i = 0; i < 8; ++i)
        rotated[std::size_t((i + 3) % 8)] = oct[std::size_t(i)];
    const auto r = match_boundaries(p, BoundaryPolygon(rotated), {.kappa = 32, .anchors = 16, .full_sweep = false});
    for (int i = 0; i < 8; ++i)
        CHECK(r.phi[std::size_t(i)] == (i + 3) % 8);
    CHECK(r.distance_cost == 0.0);
}

TEST_CASE("match_boundaries: DP equals brute force on small instances") {
    std::mt19937 rng(41);
    for (int trial = 0; trial < 40; ++trial) {
        const int m = 3 + trial % 6;
        const int n = 3 + (trial * 7) % 8;
        const int kappa = 1 + trial % 4;
        if (std::min(kappa, n - 1) * m < n)
            continue;
        const auto p = testsupport::random_star_polygon(rng, m, Vec2(0, 0), 5, 15);
        const auto q = testsupport::random_star_polygon(rng, n, Vec2(1, 0), 5, 15);
        const auto c = match_boundaries(BoundaryPolygon(p), BoundaryPolygon(q), {.kappa = kappa});
        CHECK(c.satisfies_jump_bound());
        CHECK(c.total_cost == testsupport::brute_force_match_cost(p, q, kappa));
    }
}

TEST_CASE("match_boundaries: m=6, n=9, kappa=4 against brute force") {
    std::mt19937 rng(69);
    const auto p = testsupport::random_star_polygon(rng, 6, Vec2(0, 0), 5, 15);
    const auto q = testsupport::random_star_polygon(rng, 9, Vec2(0, 0), 5, 15);
    const auto c = match_boundaries(BoundaryPolygon(p), BoundaryPolygon(q), {.kappa = 4});
    CHECK(c.total_cost == testsupport::brute_force_match_cost(p, q, 4));
}

TEST_CASE("match_boundaries: infeasible jump bound is rejected") {
    std::mt19937 rng(1);
    const BoundaryPolygon p(testsupport::random_star_polygon(rng, 3, Vec2(0, 0), 5, 15));
    const BoundaryPolygon q(testsupport::random_star_polygon(rng, 10, Vec2(0, 0), 5, 15));
    CHECK_THROWS_AS(match_boundaries(p, q, {.kappa = 2}), GeometryError);
}

TEST_CASE("match_boundaries: jump bound holds on resampled silhouettes") {
    const auto a = resample_boundary(extract_boundary(testsupport::disk_mask(96, 96, Vec2(48, 48), 30)), 128);
    const auto b = resample_boundary(extract_boundary(testsupport::rect_mask(96, 96, 20, 10, 70, 85)), 160);
    const auto c = match_boundaries(a, b);
    CHECK(c.satisfies_jump_bound());
    int winding = 0;
    for (std::size_t i = 0; i < c.phi.size(); ++i)
        winding += c.jump(i);
    CHECK(winding == 160);
}
