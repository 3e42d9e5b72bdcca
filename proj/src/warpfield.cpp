#include "photorig/warpfield.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>

namespace photorig {

MvcWarp::MvcWarp(const BoundaryPolygon& input, const BoundaryPolygon& templ, const Correspondence& corr)
    : input_(input) {
    if (corr.phi.size() != input.size())
        throw InputError("correspondence size does not match the input polygon");
    if (corr.template_size != int(templ.size()))
        throw InputError("correspondence was built for a different template polygon");
    targets_.reserve(input.size());
    for (int j : corr.phi)
        targets_.push_back(templ[std::size_t(j)]);
}

Vec2 MvcWarp::operator()(const Vec2& x) const {
    thread_local std::vector<double> w;
    w.resize(input_.size());
    mvc_weights_into(x, input_.points(), w);
    Vec2 f = Vec2::Zero();
    for (std::size_t i = 0; i < w.size(); ++i)
        f += w[i] * targets_[i];
    return f;
}

std::size_t WarpField::invalid_count() const {
    std::size_t n = 0;
    for (std::size_t i = 0; i < valid.size(); ++i)
        n += domain.data()[i] >= 0.5 && !valid[i];
    return n;
}

WarpField build_warp(const BoundaryPolygon& input_poly, const BoundaryPolygon& template_poly,
                     const Correspondence& corr, const RasterMap& domain) {
    if (domain.semantic() != Semantic::mask)
        throw InputError("warp domain must be a mask");
    const MvcWarp warp(input_poly, template_poly, corr);
    WarpField field;
    field.domain = domain;
    field.target.assign(domain.pixel_count(), Vec2::Zero());
    field.valid.assign(domain.pixel_count(), 0);
    for (int y = 0; y < domain.height(); ++y) {
        for (int x = 0; x < domain.width(); ++x) {
            if (!domain.is_set(x, y))
                continue;
            const Vec2 f = warp(Vec2(x, y));
            field.target[domain.index(x, y)] = f;
            field.valid[domain.index(x, y)] = template_poly.contains(f);
        }
    }
    return field;
}

namespace {

void renormalize(std::span<double> px, Semantic semantic) {
    if (semantic == Semantic::normal) {
        const double len = std::sqrt(double(px[0]) * px[0] + double(px[1]) * px[1] + double(px[2]) * px[2]);
        if (len > 0)
            for (double& v : px)
                v /= len;
    } else if (semantic == Semantic::skinning) {
        double sum = 0.0;
        for (double& v : px) {
            v = std::max(v, 0.0);
            sum += v;
        }
        if (sum > 0)
            for (double& v : px)
                v /= sum;
    }
}

} // namespace

WarpedMap warp_map(const WarpField& field, const RasterMap& source, const RasterMap& source_support) {
    const Semantic sem = source.semantic();
    if (sem != Semantic::depth && sem != Semantic::normal && sem != Semantic::skinning && sem != Semantic::label)
        throw InputError("warp_map cannot warp a " + std::string(to_string(sem)) + " map");
    if (source.width() != source_support.width() || source.height() != source_support.height())
        throw InputError("source map and its support differ in size");

    const RasterMap& domain = field.domain;
    const int channels = source.channels();
    WarpedMap out{RasterMap(domain.width(), domain.height(), channels, sem), std::vector<std::uint8_t>(domain.pixel_count(), 0)};
    std::vector<double> acc(static_cast<std::size_t>(channels));

    for (int y = 0; y < domain.height(); ++y) {
        for (int x = 0; x < domain.width(); ++x) {
            const auto idx = domain.index(x, y);
            if (!domain.is_set(x, y) || !field.valid[idx])
                continue;
            const Vec2 f = field.target[idx];
            const int x0 = int(std::floor(f.x())), y0 = int(std::floor(f.y()));
            const double tx = f.x() - x0, ty = f.y() - y0;
            const int xs[4] = {x0, x0 + 1, x0, x0 + 1};
            const int ys[4] = {y0, y0, y0 + 1, y0 + 1};
            const double ws[4] = {(1 - tx) * (1 - ty), tx * (1 - ty), (1 - tx) * ty, tx * ty};
            auto dst = out.map.pixel(x, y);

            if (sem == Semantic::label) {
                int best = -1;
                double best_w = -1.0;
                for (int k = 0; k < 4; ++k)
                    if (source_support.is_set(xs[k], ys[k]) && ws[k] > best_w) {
                        best = k;
                        best_w = ws[k];
                    }
                if (best < 0)
                    continue;
                dst[0] = source.at(xs[best], ys[best]);
                out.valid[idx] = 1;
                continue;
            }

            std::fill(acc.begin(), acc.end(), 0.0);
            double total = 0.0;
            for (int k = 0; k < 4; ++k) {
                if (ws[k] <= 0.0 || !source_support.is_set(xs[k], ys[k]))
                    continue;
                auto src = source.pixel(xs[k], ys[k]);
                for (int c = 0; c < channels; ++c)
                    acc[std::size_t(c)] += ws[k] * src[std::size_t(c)];
                total += ws[k];
            }
            if (total <= 1e-12)
                continue;
            for (int c = 0; c < channels; ++c)
                dst[std::size_t(c)] = acc[std::size_t(c)] / total;
            renormalize(dst, sem);
            out.valid[idx] = 1;
        }
    }
    return out;
}

RasterMap fill_holes(const RasterMap& map, const std::vector<std::uint8_t>& validity, const RasterMap& domain,
                     FillStats* stats, Diagnostics* diag) {
    if (validity.size() != map.pixel_count() || domain.pixel_count() != map.pixel_count())
        throw InputError("fill_holes: map, validity and domain sizes differ");
    const int w = map.width(), h = map.height(), channels = map.channels();

    std::vector<int> holes;
    bool any_valid = false;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            if (!domain.is_set(x, y))
                continue;
            if (validity[map.index(x, y)])
                any_valid = true;
            else
                holes.push_back(int(map.index(x, y)));
        }
    RasterMap out = map;
    if (holes.empty()) {
        if (stats)
            *stats = FillStats{};
        return out;
    }
    if (!any_valid)
        throw GeometryError("fill_holes: no valid pixels to interpolate from");

    // Seed every hole with its nearest valid value (BFS inside the domain).
    std::vector<int> source(map.pixel_count(), -1);
    std::deque<int> queue;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (domain.is_set(x, y) && validity[map.index(x, y)]) {
                source[map.index(x, y)] = int(map.index(x, y));
                queue.push_back(int(map.index(x, y)));
            }
    while (!queue.empty()) {
        const int i = queue.front();
        queue.pop_front();
        const int px = i % w, py = i / w;
        const int nx[4] = {px + 1, px - 1, px, px};
        const int ny[4] = {py, py, py + 1, py - 1};
        for (int k = 0; k < 4; ++k) {
            if (!domain.is_set(nx[k], ny[k]))
                continue;
            const auto j = map.index(nx[k], ny[k]);
            if (source[j] < 0) {
                source[j] = source[std::size_t(i)];
                queue.push_back(int(j));
            }
        }
    }
    std::size_t unreachable = 0;
    for (int i : holes) {
        if (source[std::size_t(i)] < 0) {
            ++unreachable;
            continue;
        }
        for (int c = 0; c < channels; ++c)
            out.data()[std::size_t(i) * channels + c] = map.data()[std::size_t(source[std::size_t(i)]) * channels + c];
    }
    if (unreachable)
        warn(diag, "fill_holes: " + std::to_string(unreachable) + " hole pixels have no valid pixel in their component");

    FillStats local;
    local.filled = holes.size() - unreachable;
    if (map.semantic() != Semantic::label) {
        // Neighbour lists once; the sweep order is raster order, so results are deterministic.
        std::vector<std::array<int, 4>> nbrs(holes.size());
        std::vector<int> nbr_count(holes.size(), 0);
        for (std::size_t k = 0; k < holes.size(); ++k) {
            const int i = holes[k];
            if (source[std::size_t(i)] < 0)
                continue;
            const int px = i % w, py = i / w;
            const int nx[4] = {px + 1, px - 1, px, px};
            const int ny[4] = {py, py, py + 1, py - 1};
            for (int d = 0; d < 4; ++d)
                if (domain.is_set(nx[d], ny[d]))
                    nbrs[k][std::size_t(nbr_count[k]++)] = int(map.index(nx[d], ny[d]));
        }
        auto data = out.data();
        for (local.iterations = 0; local.iterations < 10000;) {
            double max_change = 0.0;
            for (std::size_t k = 0; k < holes.size(); ++k) {
                if (nbr_count[k] == 0)
                    continue;
                const std::size_t base = std::size_t(holes[k]) * channels;
                for (int c = 0; c < channels; ++c) {
                    double s = 0.0;
                    for (int d = 0; d < nbr_count[k]; ++d)
                        s += data[std::size_t(nbrs[k][std::size_t(d)]) * channels + c];
                    const double v = s / nbr_count[k];
                    max_change = std::max(max_change, std::abs(v - data[base + c]));
                    data[base + c] = v;
                }
            }
            ++local.iterations;
            local.residual = max_change;
            if (max_change < 1e-6)
                break;
        }
        for (int i : holes)
            if (source[std::size_t(i)] >= 0)
                renormalize(out.pixel(i % w, i / w), map.semantic());
    }
    if (stats)
        *stats = local;
    return out;
}

} // namespace photorig
