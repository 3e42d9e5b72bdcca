#include "photorig/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace photorig {

namespace {

double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

} // namespace

double signed_area(std::span<const Vec2> points) {
    double twice = 0.0;
    const std::size_t n = points.size();
    for (std::size_t i = 0; i < n; ++i)
        twice += cross(points[i], points[(i + 1) % n]);
    return 0.5 * twice;
}

double perimeter(std::span<const Vec2> points) {
    double len = 0.0;
    const std::size_t n = points.size();
    for (std::size_t i = 0; i < n; ++i)
        len += (points[(i + 1) % n] - points[i]).norm();
    return len;
}

BoundaryPolygon::BoundaryPolygon(std::vector<Vec2> points) : points_(std::move(points)) {
    const std::size_t n = points_.size();
    if (n < 3)
        throw GeometryError("polygon needs at least 3 vertices, got " + std::to_string(n));
    for (std::size_t i = 0; i < n; ++i) {
        if (!points_[i].allFinite())
            throw GeometryError("polygon vertex " + std::to_string(i) + " is not finite");
        if ((points_[(i + 1) % n] - points_[i]).norm() <= 1e-9)
            throw GeometryError("polygon vertices " + std::to_string(i) + " and " + std::to_string((i + 1) % n) +
                                " coincide");
    }
    const double a = signed_area(points_);
    if (std::abs(a) <= 1e-12)
        throw GeometryError("degenerate polygon: zero area (collinear vertices)");
    if (a < 0)
        throw GeometryError("polygon is clockwise; expected counterclockwise orientation");
}

BoundaryPolygon BoundaryPolygon::counterclockwise(std::vector<Vec2> points) {
    if (signed_area(points) < 0)
        std::reverse(points.begin(), points.end());
    return BoundaryPolygon(std::move(points));
}

const Vec2& BoundaryPolygon::at_cyclic(std::ptrdiff_t i) const {
    const auto n = std::ptrdiff_t(points_.size());
    return points_[std::size_t(((i % n) + n) % n)];
}

bool BoundaryPolygon::contains(const Vec2& p) const { return point_in_polygon(p, points_); }

bool BoundaryPolygon::is_simple() const { return is_simple_polygon(points_); }

bool point_in_polygon(const Vec2& p, std::span<const Vec2> poly) {
    bool inside = false;
    const std::size_t n = poly.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const Vec2& a = poly[i];
        const Vec2& b = poly[j];
        if ((a.y() > p.y()) != (b.y() > p.y())) {
            const double xcross = a.x() + (p.y() - a.y()) * (b.x() - a.x()) / (b.y() - a.y());
            if (p.x() < xcross)
                inside = !inside;
        }
    }
    return inside;
}

bool segments_intersect(const Vec2& a0, const Vec2& a1, const Vec2& b0, const Vec2& b1) {
    auto orient = [](const Vec2& p, const Vec2& q, const Vec2& r) {
        const double v = cross(q - p, r - p);
        return (v > 1e-12) - (v < -1e-12);
    };
    auto on_segment = [](const Vec2& p, const Vec2& q, const Vec2& r) {
        return std::min(p.x(), q.x()) - 1e-12 <= r.x() && r.x() <= std::max(p.x(), q.x()) + 1e-12 &&
               std::min(p.y(), q.y()) - 1e-12 <= r.y() && r.y() <= std::max(p.y(), q.y()) + 1e-12;
    };
    const int o1 = orient(a0, a1, b0), o2 = orient(a0, a1, b1);
    const int o3 = orient(b0, b1, a0), o4 = orient(b0, b1, a1);
    if (o1 != o2 && o3 != o4)
        return true;
    if (o1 == 0 && on_segment(a0, a1, b0))
        return true;
    if (o2 == 0 && on_segment(a0, a1, b1))
        return true;
    if (o3 == 0 && on_segment(b0, b1, a0))
        return true;
    if (o4 == 0 && on_segment(b0, b1, a1))
        return true;
    return false;
}

bool is_simple_polygon(std::span<const Vec2> poly) {
    const std::size_t n = poly.size();
    if (n < 3)
        return false;
    // Bounding-box rejection keeps the quadratic scan cheap on smooth contours.
    std::vector<Eigen::AlignedBox2d> boxes(n);
    for (std::size_t i = 0; i < n; ++i) {
        boxes[i].extend(poly[i]);
        boxes[i].extend(poly[(i + 1) % n]);
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const bool adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if (adjacent) {
                // Adjacent edges may only share their common vertex: reject folds back.
                const std::size_t shared = (j == i + 1) ? j : i;
                const Vec2& c = poly[shared];
                const Vec2& p = poly[(shared + n - 1) % n];
                const Vec2& q = poly[(shared + 1) % n];
                if (std::abs(cross(p - c, q - c)) <= 1e-12 && (p - c).dot(q - c) > 0)
                    return false;
                continue;
            }
            if (!boxes[i].intersects(boxes[j]))
                continue;
            if (segments_intersect(poly[i], poly[(i + 1) % n], poly[j], poly[(j + 1) % n]))
                return false;
        }
    }
    return true;
}

double distance_to_segment(const Vec2& p, const Vec2& a, const Vec2& b) {
    const Vec2 ab = b - a;
    const double len2 = ab.squaredNorm();
    if (len2 == 0.0)
        return (p - a).norm();
    const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
    return (p - (a + t * ab)).norm();
}

double distance_to_polygon(const Vec2& p, std::span<const Vec2> poly) {
    double best = std::numeric_limits<double>::infinity();
    const std::size_t n = poly.size();
    for (std::size_t i = 0; i < n; ++i)
        best = std::min(best, distance_to_segment(p, poly[i], poly[(i + 1) % n]));
    return best;
}

double hausdorff_distance(std::span<const Vec2> a, std::span<const Vec2> b) {
    double h = 0.0;
    for (const auto& p : a)
        h = std::max(h, distance_to_polygon(p, b));
    for (const auto& p : b)
        h = std::max(h, distance_to_polygon(p, a));
    return h;
}

void mvc_weights_into(const Vec2& x, std::span<const Vec2> poly, std::span<double> out) {
    const std::size_t n = poly.size();
    std::fill(out.begin(), out.end(), 0.0);

    // Small fixed buffers would be faster, but polygons here have hundreds of vertices.
    thread_local std::vector<Vec2> s;
    thread_local std::vector<double> r, tan_half;
    s.resize(n);
    r.resize(n);
    tan_half.resize(n);

    for (std::size_t i = 0; i < n; ++i) {
        s[i] = poly[i] - x;
        r[i] = s[i].norm();
        if (r[i] < kMvcEpsilon) {
            out[i] = 1.0;
            return;
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = (i + 1) % n;
        const double area2 = cross(s[i], s[j]);
        const double dot = s[i].dot(s[j]);
        const double edge = (poly[j] - poly[i]).norm();
        if (std::abs(area2) <= kMvcEpsilon * edge && dot < 0.0) {
            // On the edge interior: MVC's boundary limit is linear interpolation.
            const double t = r[i] / (r[i] + r[j]);
            out[i] = 1.0 - t;
            out[j] = t;
            return;
        }
        // tan(alpha/2) = sin(alpha) / (1 + cos(alpha)), stable away from alpha = pi.
        tan_half[i] = area2 / (r[i] * r[j] + dot);
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double w = (tan_half[(i + n - 1) % n] + tan_half[i]) / r[i];
        out[i] = w;
        sum += w;
    }
    for (std::size_t i = 0; i < n; ++i)
        out[i] /= sum;
}

std::vector<double> mvc_weights(const Vec2& x, std::span<const Vec2> poly) {
    if (poly.size() < 3 || std::abs(signed_area(poly)) <= 1e-12)
        throw GeometryError("mean-value coordinates need a polygon with nonzero area");
    std::vector<double> w(poly.size());
    mvc_weights_into(x, poly, w);
    return w;
}

std::vector<double> mvc_weights(const Vec2& x, const BoundaryPolygon& poly) { return mvc_weights(x, poly.points()); }

Eigen::Matrix2d SimilarityTransform2D::linear() const {
    const double c = std::cos(angle) * scale, s = std::sin(angle) * scale;
    Eigen::Matrix2d m;
    m << c, -s, s, c;
    return m;
}

SimilarityTransform2D SimilarityTransform2D::inverse() const {
    SimilarityTransform2D inv;
    inv.angle = -angle;
    inv.scale = 1.0 / scale;
    inv.translation = -(inv.linear() * translation);
    return inv;
}

SimilarityTransform2D similarity_from_endpoints(const Vec2& a0, const Vec2& a1, const Vec2& b0, const Vec2& b1) {
    const Vec2 da = a1 - a0, db = b1 - b0;
    if (da.norm() <= 1e-9 || db.norm() <= 1e-9)
        throw GeometryError("similarity transform needs distinct endpoints");
    SimilarityTransform2D t;
    t.scale = da.norm() / db.norm();
    t.angle = std::atan2(cross(db, da), db.dot(da));
    t.translation = a0 - t.linear() * b0;
    return t;
}

} // namespace photorig
