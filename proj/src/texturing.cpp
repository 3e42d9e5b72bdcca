#include "photorig/texturing.hpp"

#include <Eigen/Sparse>
#include <algorithm>
#include <cmath>
#include <limits>

#include "photorig/mask_ops.hpp"
#include "photorig/parts.hpp"
#include "photorig/warpfield.hpp"

namespace photorig {

namespace {

constexpr int kDx[4] = {1, -1, 0, 0};
constexpr int kDy[4] = {0, 0, 1, -1};

void require_color(const RasterMap& m, const char* what) {
    if (m.channels() < 3)
        throw InputError(std::string(what) + ": expected an RGB map");
}

Vec3 rgb(const RasterMap& m, int x, int y) { return {m.at(x, y, 0), m.at(x, y, 1), m.at(x, y, 2)}; }

void set_rgb(RasterMap& m, int x, int y, const Vec3& c) {
    for (int k = 0; k < 3; ++k)
        m.at(x, y, k) = c[k];
}

// Mean colour of the in-mask pixels of the (2r+1)^2 window around each pixel.
std::vector<Vec3> window_means(const RasterMap& color, const std::vector<char>& inside, int w, int h, int r) {
    const int W = w + 1;
    std::vector<Vec3> sum(std::size_t(W) * std::size_t(h + 1), Vec3::Zero());
    std::vector<double> count(sum.size(), 0.0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const std::size_t i = std::size_t(y + 1) * std::size_t(W) + std::size_t(x + 1);
            const std::size_t up = i - std::size_t(W), left = i - 1, diag = up - 1;
            const bool in = inside[std::size_t(y) * std::size_t(w) + std::size_t(x)];
            sum[i] = sum[up] + sum[left] - sum[diag] + (in ? rgb(color, x, y) : Vec3::Zero());
            count[i] = count[up] + count[left] - count[diag] + (in ? 1.0 : 0.0);
        }
    std::vector<Vec3> out(std::size_t(w) * std::size_t(h), Vec3::Zero());
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const int x0 = std::max(0, x - r), y0 = std::max(0, y - r);
            const int x1 = std::min(w, x + r + 1), y1 = std::min(h, y + r + 1);
            auto at = [&](int xx, int yy) { return std::size_t(yy) * std::size_t(W) + std::size_t(xx); };
            const double n = count[at(x1, y1)] - count[at(x0, y1)] - count[at(x1, y0)] + count[at(x0, y0)];
            if (n > 0)
                out[std::size_t(y) * std::size_t(w) + std::size_t(x)] =
                    (sum[at(x1, y1)] - sum[at(x0, y1)] - sum[at(x1, y0)] + sum[at(x0, y0)]) / n;
        }
    return out;
}

} // namespace

FrontTile project_front(const RasterMap& image, const RasterMap& visible, const RasterMap& domain, Diagnostics* diag) {
    require_color(image, "project_front");
    if (image.width() != domain.width() || image.height() != domain.height() || visible.width() != domain.width() ||
        visible.height() != domain.height())
        throw InputError("project_front: image and masks differ in size");
    const int w = domain.width(), h = domain.height();
    FrontTile tile{RasterMap(w, h, 3, Semantic::color), RasterMap(w, h, 1, Semantic::mask)};
    std::vector<std::uint8_t> valid(domain.pixel_count(), 0);
    bool any_visible = false;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            if (!domain.is_set(x, y))
                continue;
            if (visible.is_set(x, y)) {
                set_rgb(tile.color, x, y, rgb(image, x, y));
                valid[domain.index(x, y)] = 1;
                any_visible = true;
            } else {
                tile.flagged.at(x, y) = 1.0;
            }
        }
    if (tile.flagged.count_set() == 0)
        return tile;
    if (!any_visible) {
        warn(diag, "project_front: no visible pixels; hidden surface painted grey");
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                if (domain.is_set(x, y))
                    set_rgb(tile.color, x, y, Vec3::Constant(0.5));
        return tile;
    }
    tile.color = fill_holes(tile.color, valid, domain, nullptr, diag);
    return tile;
}

std::string_view to_string(BackMode mode) { return mode == BackMode::mirror ? "mirror" : "inpaint"; }

BackMode back_mode_from_string(std::string_view name) {
    if (name == "mirror")
        return BackMode::mirror;
    if (name == "inpaint")
        return BackMode::inpaint;
    throw InputError("unknown back texture mode '" + std::string(name) + "'");
}

RasterMap synthesize_back(const RasterMap& front, const RasterMap& front_labels, BackMode mode,
                          const InpaintGuide& guide, Provenance* provenance, Diagnostics* diag) {
    require_color(front, "synthesize_back");
    if (mode == BackMode::mirror)
        return front.mirrored();

    const int w = front.width(), h = front.height();
    if (front_labels.width() != w || front_labels.height() != h)
        throw InputError("synthesize_back: label map and tile differ in size");
    const RasterMap back_labels = guide.back_labels.empty() ? front_labels.mirrored() : guide.back_labels;
    if (back_labels.width() != w || back_labels.height() != h)
        throw InputError("synthesize_back: back label map and tile differ in size");
    if (guide.patch < 1 || guide.patch % 2 == 0)
        throw InputError("synthesize_back: patch size must be odd and positive");

    Provenance prov;
    RasterMap back(w, h, 3, Semantic::color);
    RasterMap back_support(w, h, 1, Semantic::mask);
    Vec3 global_mean = Vec3::Zero();
    std::size_t global_count = 0;
    std::vector<int> region_ids;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            if (front_labels.label_at(x, y) != kBackground) {
                global_mean += rgb(front, x, y);
                ++global_count;
            }
            const int l = back_labels.label_at(x, y);
            if (l != kBackground) {
                back_support.at(x, y) = 1.0;
                region_ids.push_back(l);
            }
        }
    if (global_count > 0)
        global_mean /= double(global_count);
    std::sort(region_ids.begin(), region_ids.end());
    region_ids.erase(std::unique(region_ids.begin(), region_ids.end()), region_ids.end());

    for (const int label : region_ids) {
        std::vector<char> donor(front.pixel_count(), 0), region(front.pixel_count(), 0);
        std::vector<int> donor_pixels;
        Vec3 donor_mean = Vec3::Zero();
        RasterMap region_mask(w, h, 1, Semantic::mask);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const auto i = front.index(x, y);
                if (front_labels.label_at(x, y) == label) {
                    donor[i] = 1;
                    donor_pixels.push_back(int(i));
                    donor_mean += rgb(front, x, y);
                }
                if (back_labels.label_at(x, y) == label) {
                    region[i] = 1;
                    region_mask.at(x, y) = 1.0;
                }
            }
        if (donor_pixels.empty()) {
            warn(diag, "inpaint: label " + std::to_string(label) + " has no front pixels; using the mean colour");
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x)
                    if (region[front.index(x, y)]) {
                        set_rgb(back, x, y, global_mean);
                        ++prov.mean_filled;
                    }
            continue;
        }
        donor_mean /= double(donor_pixels.size());

        // Seam pixels see the same surface point as the mirrored front pixel.
        std::vector<std::uint8_t> fixed(front.pixel_count(), 0);
        RasterMap fill(w, h, 3, Semantic::color);
        std::size_t seeded = 0;
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                if (!region[front.index(x, y)])
                    continue;
                set_rgb(fill, x, y, donor_mean);
                const int fx = w - 1 - x;
                if (is_boundary_pixel(back_support, x, y) && donor[front.index(fx, y)]) {
                    set_rgb(fill, x, y, rgb(front, fx, y));
                    fixed[front.index(x, y)] = 1;
                    ++seeded;
                }
            }
        prov.seeded[label] += seeded;
        if (seeded > 0) {
            Diagnostics quiet;
            fill = fill_holes(fill, fixed, region_mask, nullptr, &quiet);
        }

        std::size_t snapped = 0;
        if (guide.coherence) {
            const int r = guide.patch / 2;
            const auto region_means = window_means(fill, region, w, h, r);
            const auto donor_means = window_means(front, donor, w, h, r);
            const std::size_t stride =
                std::max<std::size_t>(1, (donor_pixels.size() + guide.max_candidates - 1) / guide.max_candidates);
            std::vector<int> candidates;
            for (std::size_t k = 0; k < donor_pixels.size(); k += stride)
                candidates.push_back(donor_pixels[k]);
            RasterMap snapped_fill = fill;
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) {
                    const auto i = front.index(x, y);
                    if (!region[i] || fixed[i])
                        continue;
                    double best = std::numeric_limits<double>::infinity();
                    int best_pixel = -1;
                    for (int c : candidates) {
                        const double d = (donor_means[std::size_t(c)] - region_means[i]).squaredNorm();
                        if (d < best) {
                            best = d;
                            best_pixel = c;
                        }
                    }
                    set_rgb(snapped_fill, x, y, rgb(front, best_pixel % w, best_pixel / w));
                    ++snapped;
                }
            fill = std::move(snapped_fill);
        } else if (seeded == 0) {
            prov.mean_filled += std::size_t(std::count(region.begin(), region.end(), 1));
        }
        prov.snapped[label] += snapped;
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                if (region[front.index(x, y)])
                    set_rgb(back, x, y, rgb(fill, x, y));
    }
    if (provenance)
        *provenance = std::move(prov);
    return back;
}

BlendedTiles blend_seam(const RasterMap& front, const RasterMap& back, const RasterMap& domain, int width) {
    require_color(front, "blend_seam");
    require_color(back, "blend_seam");
    if (width < 1)
        throw InputError("blend_seam: band width must be at least 1");
    const int w = domain.width(), h = domain.height();
    if (front.width() != w || front.height() != h || back.width() != w || back.height() != h)
        throw InputError("blend_seam: tiles and domain differ in size");

    const auto dist = boundary_step_distance(domain);
    // Unknown ids per front-frame pixel: the seam is shared, interior band
    // pixels exist once per tile.
    std::vector<int> front_id(domain.pixel_count(), -1), back_id(domain.pixel_count(), -1);
    int n = 0;
    for (std::size_t i = 0; i < dist.size(); ++i)
        if (dist[i] == 0) {
            front_id[i] = back_id[i] = n++;
        } else if (dist[i] > 0 && dist[i] < width) {
            front_id[i] = n++;
            back_id[i] = n++;
        }

    BlendedTiles out{front, back, RasterMap(w, h, 1, Semantic::mask)};
    for (std::size_t i = 0; i < dist.size(); ++i)
        if (front_id[i] >= 0)
            out.band.data()[i] = 1.0;
    if (n == 0)
        return out;

    // Source value of front-frame pixel (x, y) in either tile.
    auto source = [&](bool is_back, int x, int y, int c) {
        return is_back ? back.at(w - 1 - x, y, c) : front.at(x, y, c);
    };
    // A tiny pull towards the source keeps components without fixed pixels solvable.
    constexpr double kAnchor = 1e-9;
    std::vector<Eigen::Triplet<double>> triplets;
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(n, 3);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const auto i = domain.index(x, y);
            for (int tile = 0; tile < 2; ++tile) {
                const bool is_back = tile == 1;
                const int row = is_back ? back_id[i] : front_id[i];
                if (row < 0 || (is_back && dist[i] == 0))
                    continue;
                // Seam rows gather both tiles' neighbours.
                const int tiles_here = dist[i] == 0 ? 2 : 1;
                double diag = kAnchor;
                for (int k = 0; k < 3; ++k)
                    rhs(row, k) += kAnchor * source(is_back, x, y, k);
                for (int t = 0; t < tiles_here; ++t) {
                    const bool b = tiles_here == 2 ? t == 1 : is_back;
                    for (int d = 0; d < 4; ++d) {
                        const int qx = x + kDx[d], qy = y + kDy[d];
                        if (!domain.is_set(qx, qy))
                            continue;
                        const auto j = domain.index(qx, qy);
                        diag += 1.0;
                        const int col = b ? back_id[j] : front_id[j];
                        for (int k = 0; k < 3; ++k) {
                            rhs(row, k) += source(b, x, y, k) - source(b, qx, qy, k);
                            if (col < 0)
                                rhs(row, k) += source(b, qx, qy, k);
                        }
                        if (col >= 0)
                            triplets.emplace_back(row, col, -1.0);
                    }
                }
                triplets.emplace_back(row, row, diag);
            }
        }
    Eigen::SparseMatrix<double> A(n, n);
    A.setFromTriplets(triplets.begin(), triplets.end());
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(A);
    if (solver.info() != Eigen::Success)
        throw GeometryError("blend_seam: factorisation failed");
    const Eigen::MatrixXd sol = solver.solve(rhs);

    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const auto i = domain.index(x, y);
            for (int k = 0; k < 3; ++k) {
                if (front_id[i] >= 0)
                    out.front.at(x, y, k) = std::clamp(sol(front_id[i], k), 0.0, 1.0);
                if (back_id[i] >= 0)
                    out.back.at(w - 1 - x, y, k) = std::clamp(sol(back_id[i], k), 0.0, 1.0);
            }
        }
    return out;
}

Vec2 Atlas::uv(int surface, bool back, const Vec2& pixel) const {
    const double ax = (back ? tile_width : 0) + pixel.x() + 0.5;
    const double ay = surface * tile_height + pixel.y() + 0.5;
    return {ax / (2.0 * tile_width), ay / (double(surfaces) * tile_height)};
}

Atlas compose_atlas(const std::vector<BlendedTiles>& tiles) {
    if (tiles.empty())
        throw InputError("compose_atlas: no tiles");
    Atlas atlas;
    atlas.tile_width = tiles.front().front.width();
    atlas.tile_height = tiles.front().front.height();
    atlas.surfaces = int(tiles.size());
    atlas.image = RasterMap(2 * atlas.tile_width, atlas.surfaces * atlas.tile_height, 3, Semantic::color);
    for (int s = 0; s < atlas.surfaces; ++s) {
        const auto& t = tiles[std::size_t(s)];
        if (t.front.width() != atlas.tile_width || t.front.height() != atlas.tile_height ||
            t.back.width() != atlas.tile_width || t.back.height() != atlas.tile_height)
            throw InputError("compose_atlas: tiles differ in size");
        for (int y = 0; y < atlas.tile_height; ++y)
            for (int x = 0; x < atlas.tile_width; ++x)
                for (int k = 0; k < 3; ++k) {
                    atlas.image.at(x, s * atlas.tile_height + y, k) = t.front.at(x, y, k);
                    atlas.image.at(atlas.tile_width + x, s * atlas.tile_height + y, k) = t.back.at(x, y, k);
                }
    }
    return atlas;
}

} // namespace photorig
