#pragma once

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "photorig/geometry.hpp"
#include "photorig/raster.hpp"

namespace testsupport {

using photorig::RasterMap;
using photorig::Semantic;
using photorig::Vec2;

// Star-shaped about `center`, hence simple; counterclockwise in pixel coordinates.
inline std::vector<Vec2> random_star_polygon(std::mt19937& rng, int vertices, Vec2 center, double r_min, double r_max) {
    std::uniform_real_distribution<double> jitter(0.1, 0.9), radius(r_min, r_max);
    std::vector<Vec2> pts;
    for (int i = 0; i < vertices; ++i) {
        const double a = 2.0 * std::numbers::pi * (i + jitter(rng)) / vertices;
        const double r = radius(rng);
        pts.emplace_back(center.x() + r * std::cos(a), center.y() + r * std::sin(a));
    }
    return pts;
}

inline std::vector<Vec2> random_convex_polygon(std::mt19937& rng, int vertices, Vec2 center, double r) {
    std::uniform_real_distribution<double> jitter(0.1, 0.9);
    std::vector<Vec2> pts;
    for (int i = 0; i < vertices; ++i) {
        const double a = 2.0 * std::numbers::pi * (i + jitter(rng)) / vertices;
        pts.emplace_back(center.x() + r * std::cos(a), center.y() + r * std::sin(a));
    }
    return pts;
}

inline RasterMap disk_mask(int w, int h, Vec2 c, double r) {
    RasterMap m(w, h, 1, Semantic::mask);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if ((Vec2(x, y) - c).squaredNorm() <= r * r)
                m.at(x, y) = 1;
    return m;
}

inline RasterMap rect_mask(int w, int h, int x0, int y0, int x1, int y1) {
    RasterMap m(w, h, 1, Semantic::mask);
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x)
            m.at(x, y) = 1;
    return m;
}

inline RasterMap polygon_mask(int w, int h, const std::vector<Vec2>& poly) {
    RasterMap m(w, h, 1, Semantic::mask);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (photorig::point_in_polygon(Vec2(x, y), poly))
                m.at(x, y) = 1;
    return m;
}

} // namespace testsupport
