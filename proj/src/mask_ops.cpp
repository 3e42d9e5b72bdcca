#include "photorig/mask_ops.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

namespace photorig {

namespace {

void require_mask(const RasterMap& m) {
    if (m.semantic() != Semantic::mask)
        throw InputError("expected a mask raster");
}

void require_same_grid(const RasterMap& a, const RasterMap& b) {
    if (a.width() != b.width() || a.height() != b.height())
        throw InputError("raster dimensions differ");
}

// Felzenszwalb-Huttenlocher lower envelope of parabolas, 1D.
void distance_1d(const double* f, int n, double* d, std::vector<int>& v, std::vector<double>& z) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    int k = -1;
    for (int q = 0; q < n; ++q) {
        if (f[q] == inf)
            continue;
        if (k < 0) {
            k = 0;
            v[0] = q;
            z[0] = -inf;
            z[1] = inf;
            continue;
        }
        double s;
        while (true) {
            const int p = v[k];
            s = ((f[q] + double(q) * q) - (f[p] + double(p) * p)) / (2.0 * (q - p));
            if (s <= z[k] && k > 0)
                --k;
            else
                break;
        }
        if (s <= z[k]) {
            v[k] = q;
            z[k + 1] = inf;
        } else {
            ++k;
            v[k] = q;
            z[k] = s;
            z[k + 1] = inf;
        }
    }
    if (k < 0) {
        std::fill(d, d + n, inf);
        return;
    }
    int j = 0;
    for (int q = 0; q < n; ++q) {
        while (z[j + 1] < q)
            ++j;
        const double dq = q - v[j];
        d[q] = dq * dq + f[v[j]];
    }
}

} // namespace

int label_components(const RasterMap& mask, std::vector<int>& labels) {
    const int w = mask.width(), h = mask.height();
    labels.assign(mask.pixel_count(), -1);
    int count = 0;
    std::vector<int> stack;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!mask.is_set(x, y) || labels[mask.index(x, y)] >= 0)
                continue;
            stack.push_back(int(mask.index(x, y)));
            labels[mask.index(x, y)] = count;
            while (!stack.empty()) {
                const int i = stack.back();
                stack.pop_back();
                const int px = i % w, py = i / w;
                const int nx[4] = {px + 1, px - 1, px, px};
                const int ny[4] = {py, py, py + 1, py - 1};
                for (int k = 0; k < 4; ++k) {
                    if (!mask.is_set(nx[k], ny[k]))
                        continue;
                    const auto j = mask.index(nx[k], ny[k]);
                    if (labels[j] < 0) {
                        labels[j] = count;
                        stack.push_back(int(j));
                    }
                }
            }
            ++count;
        }
    }
    return count;
}

RasterMap largest_component(const RasterMap& mask, std::size_t* components) {
    require_mask(mask);
    std::vector<int> labels;
    const int n = label_components(mask, labels);
    if (components)
        *components = std::size_t(n);
    RasterMap out(mask.width(), mask.height(), 1, Semantic::mask);
    if (n == 0)
        return out;
    std::vector<std::size_t> sizes(std::size_t(n), 0);
    for (int l : labels)
        if (l >= 0)
            ++sizes[std::size_t(l)];
    // Ties resolve to the lowest component id, i.e. the first in raster order.
    const int keep = int(std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
    for (std::size_t i = 0; i < labels.size(); ++i)
        out.data()[i] = labels[i] == keep ? 1.0f : 0.0f;
    return out;
}

RasterMap fill_enclosed_background(const RasterMap& mask) {
    require_mask(mask);
    const int w = mask.width(), h = mask.height();
    std::vector<std::uint8_t> outside(mask.pixel_count(), 0);
    std::deque<int> queue;
    auto seed = [&](int x, int y) {
        if (!mask.is_set(x, y) && !outside[mask.index(x, y)]) {
            outside[mask.index(x, y)] = 1;
            queue.push_back(int(mask.index(x, y)));
        }
    };
    for (int x = 0; x < w; ++x) {
        seed(x, 0);
        seed(x, h - 1);
    }
    for (int y = 0; y < h; ++y) {
        seed(0, y);
        seed(w - 1, y);
    }
    while (!queue.empty()) {
        const int i = queue.front();
        queue.pop_front();
        const int px = i % w, py = i / w;
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx)
                if ((dx || dy) && mask.contains(px + dx, py + dy))
                    seed(px + dx, py + dy);
    }
    RasterMap out = mask;
    for (std::size_t i = 0; i < outside.size(); ++i)
        if (!outside[i])
            out.data()[i] = 1.0f;
    return out;
}

std::vector<double> squared_distance_to_set(const RasterMap& mask) {
    const int w = mask.width(), h = mask.height();
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> grid(mask.pixel_count());
    for (std::size_t i = 0; i < grid.size(); ++i)
        grid[i] = mask.data()[i * mask.channels()] >= 0.5f ? 0.0 : inf;
    const int n = std::max(w, h);
    std::vector<double> f(n), d(n), z(n + 1);
    std::vector<int> v(n);
    for (int x = 0; x < w; ++x) {
        for (int y = 0; y < h; ++y)
            f[y] = grid[std::size_t(y) * w + x];
        distance_1d(f.data(), h, d.data(), v, z);
        for (int y = 0; y < h; ++y)
            grid[std::size_t(y) * w + x] = d[y];
    }
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x)
            f[x] = grid[std::size_t(y) * w + x];
        distance_1d(f.data(), w, d.data(), v, z);
        for (int x = 0; x < w; ++x)
            grid[std::size_t(y) * w + x] = d[x];
    }
    return grid;
}

RasterMap dilate(const RasterMap& mask, double radius) {
    require_mask(mask);
    const auto d2 = squared_distance_to_set(mask);
    RasterMap out(mask.width(), mask.height(), 1, Semantic::mask);
    const double r2 = radius * radius + 1e-9;
    for (std::size_t i = 0; i < d2.size(); ++i)
        out.data()[i] = d2[i] <= r2 ? 1.0f : 0.0f;
    return out;
}

RasterMap erode(const RasterMap& mask, double radius) {
    require_mask(mask);
    RasterMap inverted = mask;
    for (double& v : inverted.data())
        v = v >= 0.5f ? 0.0f : 1.0f;
    RasterMap grown = dilate(inverted, radius);
    for (double& v : grown.data())
        v = v >= 0.5f ? 0.0f : 1.0f;
    return grown;
}

bool is_boundary_pixel(const RasterMap& mask, int x, int y) {
    if (!mask.is_set(x, y))
        return false;
    return !mask.is_set(x + 1, y) || !mask.is_set(x - 1, y) || !mask.is_set(x, y + 1) || !mask.is_set(x, y - 1);
}

std::vector<int> boundary_step_distance(const RasterMap& mask) {
    const int w = mask.width(), h = mask.height();
    std::vector<int> dist(mask.pixel_count(), -1);
    std::deque<int> queue;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (is_boundary_pixel(mask, x, y)) {
                dist[mask.index(x, y)] = 0;
                queue.push_back(int(mask.index(x, y)));
            }
    while (!queue.empty()) {
        const int i = queue.front();
        queue.pop_front();
        const int px = i % w, py = i / w;
        const int nx[4] = {px + 1, px - 1, px, px};
        const int ny[4] = {py, py, py + 1, py - 1};
        for (int k = 0; k < 4; ++k) {
            if (!mask.is_set(nx[k], ny[k]))
                continue;
            const auto j = mask.index(nx[k], ny[k]);
            if (dist[j] < 0) {
                dist[j] = dist[i] + 1;
                queue.push_back(int(j));
            }
        }
    }
    return dist;
}

double intersection_over_union(const RasterMap& a, const RasterMap& b) {
    require_same_grid(a, b);
    std::size_t inter = 0, uni = 0;
    for (std::size_t i = 0; i < a.pixel_count(); ++i) {
        const bool sa = a.data()[i * a.channels()] >= 0.5f;
        const bool sb = b.data()[i * b.channels()] >= 0.5f;
        inter += sa && sb;
        uni += sa || sb;
    }
    return uni == 0 ? 1.0 : double(inter) / double(uni);
}

RasterMap select_labels(const RasterMap& label_map, const std::vector<int>& labels) {
    RasterMap out(label_map.width(), label_map.height(), 1, Semantic::mask);
    for (int y = 0; y < label_map.height(); ++y)
        for (int x = 0; x < label_map.width(); ++x) {
            const int l = label_map.label_at(x, y);
            if (std::find(labels.begin(), labels.end(), l) != labels.end())
                out.at(x, y) = 1.0f;
        }
    return out;
}

namespace {
template <typename Op>
RasterMap combine(const RasterMap& a, const RasterMap& b, Op op) {
    require_same_grid(a, b);
    RasterMap out(a.width(), a.height(), 1, Semantic::mask);
    for (std::size_t i = 0; i < a.pixel_count(); ++i)
        out.data()[i] = op(a.data()[i * a.channels()] >= 0.5f, b.data()[i * b.channels()] >= 0.5f) ? 1.0f : 0.0f;
    return out;
}
} // namespace

RasterMap mask_and(const RasterMap& a, const RasterMap& b) {
    return combine(a, b, [](bool x, bool y) { return x && y; });
}
RasterMap mask_or(const RasterMap& a, const RasterMap& b) {
    return combine(a, b, [](bool x, bool y) { return x || y; });
}
RasterMap mask_minus(const RasterMap& a, const RasterMap& b) {
    return combine(a, b, [](bool x, bool y) { return x && !y; });
}

} // namespace photorig
