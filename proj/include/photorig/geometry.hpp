#pragma once

#include <span>
#include <vector>

#include "photorig/core.hpp"

namespace photorig {

/// Snap radius (pixels) for mean-value coordinates near vertices and edges.
inline constexpr double kMvcEpsilon = 1e-6;

double signed_area(std::span<const Vec2> points);
double perimeter(std::span<const Vec2> points);

/// Closed, counterclockwise (positive shoelace area in pixel coordinates)
/// loop of subpixel points with distinct consecutive vertices.
class BoundaryPolygon {
public:
    BoundaryPolygon() = default;
    /// Throws GeometryError unless the loop has >= 3 distinct consecutive
    /// vertices and positive area.
    explicit BoundaryPolygon(std::vector<Vec2> points);

    /// Reverses clockwise input before validating.
    static BoundaryPolygon counterclockwise(std::vector<Vec2> points);

    std::size_t size() const noexcept { return points_.size(); }
    const Vec2& operator[](std::size_t i) const { return points_[i]; }
    const Vec2& at_cyclic(std::ptrdiff_t i) const;
    std::span<const Vec2> points() const noexcept { return points_; }

    double area() const { return signed_area(points_); }
    double length() const { return perimeter(points_); }

    bool contains(const Vec2& p) const;
    /// O(n^2) segment test; adjacent edges only share their common vertex.
    bool is_simple() const;

private:
    std::vector<Vec2> points_;
};

bool point_in_polygon(const Vec2& p, std::span<const Vec2> poly);
bool segments_intersect(const Vec2& a0, const Vec2& a1, const Vec2& b0, const Vec2& b1);
bool is_simple_polygon(std::span<const Vec2> poly);

double distance_to_segment(const Vec2& p, const Vec2& a, const Vec2& b);
/// Distance from p to the closed polyline through `poly`.
double distance_to_polygon(const Vec2& p, std::span<const Vec2> poly);
/// Symmetric Hausdorff distance between two closed polylines, measured from
/// each vertex set to the other polyline.
double hausdorff_distance(std::span<const Vec2> a, std::span<const Vec2> b);

/// Mean-value coordinates of `x` with respect to the vertices of `poly`.
/// Points within kMvcEpsilon of a vertex snap to it; points within
/// kMvcEpsilon of an edge interpolate linearly along that edge.
/// Throws GeometryError for polygons with (near) zero area.
std::vector<double> mvc_weights(const Vec2& x, std::span<const Vec2> poly);
std::vector<double> mvc_weights(const Vec2& x, const BoundaryPolygon& poly);

/// Allocation-free variant for hot loops; `out.size()` must equal `poly.size()`.
/// Skips the area check.
void mvc_weights_into(const Vec2& x, std::span<const Vec2> poly, std::span<double> out);

struct SimilarityTransform2D {
    double angle = 0.0; ///< radians
    double scale = 1.0;
    Vec2 translation = Vec2::Zero();

    Eigen::Matrix2d linear() const;
    Vec2 operator()(const Vec2& p) const { return linear() * p + translation; }
    SimilarityTransform2D inverse() const;
};

/// The transform T with T(b0) = a0 and T(b1) = a1.
SimilarityTransform2D similarity_from_endpoints(const Vec2& a0, const Vec2& a1, const Vec2& b0, const Vec2& b1);

} // namespace photorig
