#include "photorig/boundary.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

#include "photorig/mask_ops.hpp"

namespace photorig {

int Correspondence::jump(std::size_t i) const {
    const std::size_t m = phi.size();
    const int n = template_size;
    return ((phi[(i + 1) % m] - phi[i]) % n + n) % n;
}

bool Correspondence::satisfies_jump_bound() const {
    for (std::size_t i = 0; i < phi.size(); ++i) {
        if (phi[i] < 0 || phi[i] >= template_size)
            return false;
        const int d = jump(i);
        if (d < 0 || d > kappa)
            return false;
    }
    return true;
}

namespace {

// Directed crack edge between pixel corners, foreground on its left.
struct Crack {
    int from;
    int to;
    int dx;
    int dy;
};

} // namespace

BoundaryPolygon extract_boundary(const RasterMap& mask, Diagnostics* diag) {
    if (mask.semantic() != Semantic::mask)
        throw InputError("extract_boundary expects a mask");
    std::size_t components = 0;
    RasterMap fg = largest_component(mask, &components);
    if (components == 0)
        throw GeometryError("empty mask: no foreground pixels");
    if (components > 1)
        warn(diag, "mask has " + std::to_string(components) + " components; keeping the largest");
    fg = fill_enclosed_background(fg);

    const int w = fg.width(), h = fg.height();
    const int corner_stride = w + 1;
    auto corner = [&](int cx, int cy) { return cy * corner_stride + cx; };

    std::vector<Crack> cracks;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!fg.is_set(x, y))
                continue;
            if (!fg.is_set(x, y - 1))
                cracks.push_back({corner(x, y), corner(x + 1, y), 1, 0});
            if (!fg.is_set(x + 1, y))
                cracks.push_back({corner(x + 1, y), corner(x + 1, y + 1), 0, 1});
            if (!fg.is_set(x, y + 1))
                cracks.push_back({corner(x + 1, y + 1), corner(x, y + 1), -1, 0});
            if (!fg.is_set(x - 1, y))
                cracks.push_back({corner(x, y + 1), corner(x, y), 0, -1});
        }
    }

    // At most two cracks leave any corner (two only at diagonal saddles).
    std::vector<std::array<int, 2>> outgoing(std::size_t(corner_stride) * (h + 1), {-1, -1});
    for (int i = 0; i < int(cracks.size()); ++i) {
        auto& slot = outgoing[std::size_t(cracks[i].from)];
        (slot[0] < 0 ? slot[0] : slot[1]) = i;
    }

    auto corner_pos = [&](int c) { return Vec2(c % corner_stride - 0.5, c / corner_stride - 0.5); };

    std::vector<std::uint8_t> used(cracks.size(), 0);
    std::vector<Vec2> points;
    points.reserve(cracks.size());
    int cur = 0;
    while (!used[std::size_t(cur)]) {
        used[std::size_t(cur)] = 1;
        const Crack& c = cracks[std::size_t(cur)];
        points.push_back(0.5 * (corner_pos(c.from) + corner_pos(c.to)));
        const auto& slot = outgoing[std::size_t(c.to)];
        int next = slot[0];
        if (slot[1] >= 0) {
            // Saddle: turn left so diagonal foreground pixels stay separate (4-connectivity).
            const Crack& a = cracks[std::size_t(slot[0])];
            const int turn = c.dx * a.dy - c.dy * a.dx;
            next = turn > 0 ? slot[0] : slot[1];
        }
        cur = next;
    }
    if (points.size() != cracks.size())
        warn(diag, "boundary trace left " + std::to_string(cracks.size() - points.size()) + " crack edges unvisited");
    return BoundaryPolygon(std::move(points));
}

BoundaryPolygon resample_boundary(const BoundaryPolygon& poly, std::size_t count) {
    if (count < 3)
        throw InputError("resample target must be at least 3");
    const std::size_t n = poly.size();
    std::vector<double> cumulative(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        cumulative[i + 1] = cumulative[i] + (poly.at_cyclic(std::ptrdiff_t(i) + 1) - poly[i]).norm();
    const double total = cumulative[n];
    std::vector<Vec2> out;
    out.reserve(count);
    std::size_t seg = 0;
    for (std::size_t k = 0; k < count; ++k) {
        const double s = total * double(k) / double(count);
        while (seg + 1 < n && cumulative[seg + 1] <= s)
            ++seg;
        const double len = cumulative[seg + 1] - cumulative[seg];
        const double t = len > 0 ? (s - cumulative[seg]) / len : 0.0;
        out.push_back(poly[seg] + t * (poly.at_cyclic(std::ptrdiff_t(seg) + 1) - poly[seg]));
    }
    return BoundaryPolygon(std::move(out));
}

namespace {

struct AnchorResult {
    double cost = std::numeric_limits<double>::infinity();
    std::vector<int> offsets; // unwrapped template offset per input vertex
};

// Linear-chain DP with phi[0] = anchor and the unwrapped offset reaching n at closure.
AnchorResult solve_anchor(const BoundaryPolygon& input, const BoundaryPolygon& templ, int anchor, int kappa) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    const int m = int(input.size());
    const int n = int(templ.size());
    const int max_jump = std::min(kappa, n - 1);
    const int states = n + 1;

    auto dist = [&](int i, int k) { return (input[std::size_t(i)] - templ[std::size_t((anchor + k) % n)]).norm(); };

    std::vector<double> prev(std::size_t(states), inf), next(std::size_t(states), inf);
    std::vector<std::uint16_t> choice(std::size_t(m) * states, 0);
    prev[0] = dist(0, 0);
    for (int i = 1; i < m; ++i) {
        std::fill(next.begin(), next.end(), inf);
        const int reach = std::min(n, i * max_jump);
        for (int k = 0; k <= reach; ++k) {
            double best = inf;
            int best_d = 0;
            for (int d = 0; d <= std::min(max_jump, k); ++d) {
                const double c = prev[std::size_t(k - d)];
                if (c < best) {
                    best = c;
                    best_d = d;
                }
            }
            if (best == inf)
                continue;
            next[std::size_t(k)] = best + dist(i, k) + 1.0;
            choice[std::size_t(i) * states + k] = std::uint16_t(best_d);
        }
        std::swap(prev, next);
    }

    AnchorResult result;
    int best_k = -1;
    // Closing jump n - k; scan from the smallest jump upward.
    for (int k = n; k >= std::max(0, n - max_jump); --k) {
        const double c = prev[std::size_t(k)] + 1.0;
        if (c < result.cost) {
            result.cost = c;
            best_k = k;
        }
    }
    if (best_k < 0)
        return result;
    result.offsets.assign(std::size_t(m), 0);
    int k = best_k;
    for (int i = m - 1; i >= 0; --i) {
        result.offsets[std::size_t(i)] = k;
        if (i > 0)
            k -= choice[std::size_t(i) * states + k];
    }
    return result;
}

} // namespace

Correspondence match_boundaries(const BoundaryPolygon& input, const BoundaryPolygon& templ,
                                const MatchOptions& options) {
    if (input.size() == 0 || templ.size() == 0)
        throw InputError("match_boundaries needs nonempty polygons");
    if (options.kappa < 1)
        throw InputError("kappa must be at least 1");
    if (options.kappa > 65535)
        throw InputError("kappa too large");
    const int m = int(input.size());
    const int n = int(templ.size());
    const int max_jump = std::min(options.kappa, n - 1);
    if (std::int64_t(max_jump) * m < n)
        throw GeometryError("no finite-cost boundary mapping: template has " + std::to_string(n) +
                            " vertices but input " + std::to_string(m) + " with kappa " +
                            std::to_string(options.kappa) + " can cover at most " +
                            std::to_string(std::int64_t(max_jump) * m));

    std::vector<int> anchors(static_cast<std::size_t>(n));
    std::iota(anchors.begin(), anchors.end(), 0);
    if (!options.full_sweep && options.anchors < std::size_t(n)) {
        std::stable_sort(anchors.begin(), anchors.end(), [&](int a, int b) {
            return (templ[std::size_t(a)] - input[0]).squaredNorm() < (templ[std::size_t(b)] - input[0]).squaredNorm();
        });
        anchors.resize(options.anchors);
        std::sort(anchors.begin(), anchors.end());
    }

    AnchorResult best;
    int best_anchor = -1;
    for (int a : anchors) {
        AnchorResult r = solve_anchor(input, templ, a, options.kappa);
        if (r.cost < best.cost) {
            best = std::move(r);
            best_anchor = a;
        }
    }
    if (best_anchor < 0)
        throw GeometryError("no finite-cost boundary mapping found");

    Correspondence corr;
    corr.template_size = n;
    corr.kappa = options.kappa;
    corr.phi.resize(std::size_t(m));
    // Costs are re-summed in index order so they depend only on phi, not on
    // the order the DP visited states.
    for (int i = 0; i < m; ++i) {
        corr.phi[std::size_t(i)] = (best_anchor + best.offsets[std::size_t(i)]) % n;
        const double d = (input[std::size_t(i)] - templ[std::size_t(corr.phi[std::size_t(i)])]).norm();
        corr.distance_cost += d;
        corr.total_cost += d + 1.0;
    }
    return corr;
}

} // namespace photorig
