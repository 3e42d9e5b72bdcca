#include "photorig/occlusion_completion.hpp"

#include <algorithm>
#include <cmath>

namespace photorig {

RegionBoundary find_occluded_runs(const BoundaryPolygon& boundary, const RasterMap& occlusion) {
    if (occlusion.semantic() != Semantic::mask)
        throw InputError("find_occluded_runs expects a mask");
    const std::size_t n = boundary.size();
    std::vector<char> inside(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2& p = boundary[i];
        inside[i] = occlusion.is_set(int(std::floor(p.x() + 0.5)), int(std::floor(p.y() + 0.5)));
    }
    RegionBoundary out{boundary, {}};
    // Start scanning just after an outside point so no run straddles the scan origin.
    std::size_t origin = n;
    for (std::size_t i = 0; i < n; ++i)
        if (!inside[i]) {
            origin = i;
            break;
        }
    if (origin == n) {
        out.runs.push_back({0, n});
        return out;
    }
    std::size_t k = 1;
    while (k <= n) {
        const std::size_t i = (origin + k) % n;
        if (!inside[i]) {
            ++k;
            continue;
        }
        std::size_t len = 0;
        while (k + len <= n && inside[(origin + k + len) % n])
            ++len;
        if (len >= 2)
            out.runs.push_back({i, len});
        k += len;
    }
    std::sort(out.runs.begin(), out.runs.end(), [](const OccludedRun& a, const OccludedRun& b) { return a.start < b.start; });
    return out;
}

namespace {

std::vector<Vec2> resample_open(const std::vector<Vec2>& pts, std::size_t count) {
    std::vector<double> cum{0.0};
    for (std::size_t i = 1; i < pts.size(); ++i)
        cum.push_back(cum.back() + (pts[i] - pts[i - 1]).norm());
    const double total = cum.back();
    std::vector<Vec2> out;
    out.reserve(count);
    std::size_t seg = 0;
    for (std::size_t k = 0; k < count; ++k) {
        const double s = total * double(k) / double(count - 1);
        while (seg + 2 < pts.size() && cum[seg + 1] <= s)
            ++seg;
        const double len = cum[seg + 1] - cum[seg];
        const double t = len > 0 ? std::clamp((s - cum[seg]) / len, 0.0, 1.0) : 0.0;
        out.push_back(pts[seg] + t * (pts[seg + 1] - pts[seg]));
    }
    return out;
}

bool acceptable(const std::vector<Vec2>& pts) {
    for (std::size_t i = 0; i < pts.size(); ++i)
        if ((pts[i] - pts[(i + 1) % pts.size()]).norm() <= 1e-9)
            return false;
    return signed_area(pts) > 0 && is_simple_polygon(pts);
}

} // namespace

BoundaryPolygon replace_occluded_runs(const RegionBoundary& region, const BoundaryPolygon& template_poly,
                                      const Correspondence& corr, Diagnostics* diag, ReplaceReport* report) {
    const std::size_t m = region.polygon.size();
    const int n = int(template_poly.size());
    if (corr.phi.size() != m || corr.template_size != n)
        throw InputError("replace_occluded_runs: correspondence does not fit the polygons");

    ReplaceReport local;
    std::vector<Vec2> pts(region.polygon.points().begin(), region.polygon.points().end());
    for (const OccludedRun& run : region.runs) {
        if (run.length < 2 || run.length >= m) {
            warn(diag, "occluded run covers the whole boundary; left unchanged");
            ++local.skipped_degenerate;
            continue;
        }
        const std::size_t s = run.start, e = run.end(m);
        const Vec2 a0 = pts[s], a1 = pts[e];
        const int ts = corr.phi[s], te = corr.phi[e];
        const int arc_len = ((te - ts) % n + n) % n;
        if (arc_len == 0 || (a1 - a0).norm() <= 1e-9) {
            warn(diag, "occluded run at boundary index " + std::to_string(s) + " has degenerate endpoints; skipped");
            ++local.skipped_degenerate;
            continue;
        }
        std::vector<Vec2> arc;
        for (int k = 0; k <= arc_len; ++k)
            arc.push_back(template_poly[std::size_t((ts + k) % n)]);
        SimilarityTransform2D t;
        try {
            t = similarity_from_endpoints(a0, a1, arc.front(), arc.back());
        } catch (const GeometryError&) {
            warn(diag, "occluded run at boundary index " + std::to_string(s) + " maps to coincident template endpoints; skipped");
            ++local.skipped_degenerate;
            continue;
        }
        for (Vec2& q : arc)
            q = t(q);
        auto spliced = resample_open(arc, run.length);
        spliced.front() = a0;
        spliced.back() = a1;

        std::vector<Vec2> trial = pts;
        for (std::size_t k = 0; k < run.length; ++k)
            trial[(s + k) % m] = spliced[k];
        if (!acceptable(trial)) {
            warn(diag, "replacing occluded run at boundary index " + std::to_string(s) +
                           " would self-intersect; keeping the original run");
            ++local.kept_self_intersecting;
            continue;
        }
        pts = std::move(trial);
        ++local.replaced;
    }
    if (report)
        *report = local;
    return BoundaryPolygon(std::move(pts));
}

BoundaryPolygon replace_occluded_runs(const RegionBoundary& region, const BoundaryPolygon& template_poly,
                                      const MatchOptions& options, Diagnostics* diag, ReplaceReport* report) {
    const auto corr = match_boundaries(region.polygon, template_poly, options);
    return replace_occluded_runs(region, template_poly, corr, diag, report);
}

RasterMap rasterize_polygon(const BoundaryPolygon& poly, int width, int height) {
    RasterMap m(width, height, 1, Semantic::mask);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
            if (poly.contains(Vec2(x, y)))
                m.at(x, y) = 1.0;
    return m;
}

} // namespace photorig
