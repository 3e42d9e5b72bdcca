#include "photorig/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <unordered_map>

#include "photorig/mask_ops.hpp"

namespace photorig {

namespace {

std::uint64_t edge_key(int a, int b) {
    const auto lo = std::uint64_t(std::min(a, b)), hi = std::uint64_t(std::max(a, b));
    return (lo << 32) | hi;
}

std::unordered_map<std::uint64_t, int> edge_uses(const std::vector<Triangle>& triangles) {
    std::unordered_map<std::uint64_t, int> uses;
    uses.reserve(triangles.size() * 2);
    for (const Triangle& t : triangles)
        for (int k = 0; k < 3; ++k)
            ++uses[edge_key(t[std::size_t(k)], t[std::size_t((k + 1) % 3)])];
    return uses;
}

std::vector<std::vector<int>> adjacency(std::size_t n, const std::vector<Triangle>& triangles) {
    std::vector<std::vector<int>> adj(n);
    for (const Triangle& t : triangles)
        for (int k = 0; k < 3; ++k) {
            const int a = t[std::size_t(k)], b = t[std::size_t((k + 1) % 3)];
            adj[std::size_t(a)].push_back(b);
            adj[std::size_t(b)].push_back(a);
        }
    for (auto& list : adj) {
        std::sort(list.begin(), list.end());
        list.erase(std::unique(list.begin(), list.end()), list.end());
    }
    return adj;
}

} // namespace

OpenMesh mesh_from_depth(const RasterMap& depth, const RasterMap& skinning, const RasterMap& mask,
                         Orientation orientation, const Camera& camera) {
    if (mask.semantic() != Semantic::mask || depth.semantic() != Semantic::depth ||
        skinning.semantic() != Semantic::skinning)
        throw InputError("mesh_from_depth expects mask, depth and skinning maps");
    const int w = mask.width(), h = mask.height();
    if (depth.width() != w || depth.height() != h || skinning.width() != w || skinning.height() != h)
        throw InputError("mesh_from_depth: map sizes differ");

    OpenMesh m;
    m.orientation = orientation;
    m.camera = camera;
    const bool back = orientation == Orientation::back;
    m.mask = back ? mask.mirrored() : mask;
    m.joints = skinning.channels();
    m.pixel_to_vertex.assign(mask.pixel_count(), -1);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            if (!m.mask.is_set(x, y))
                continue;
            const int sx = back ? w - 1 - x : x;
            const double z = depth.at(sx, y);
            if (!(z > 0) || !std::isfinite(z))
                throw GeometryError("mesh_from_depth: invalid depth at a silhouette pixel");
            m.pixel_to_vertex[m.mask.index(x, y)] = int(m.vertices.size());
            m.vertices.push_back(camera.backproject(Vec2(sx, y), z));
            m.pixels.emplace_back(x, y);
            const auto wrow = skinning.pixel(sx, y);
            m.weights.insert(m.weights.end(), wrow.begin(), wrow.end());
        }
    if (m.vertices.size() < 3)
        throw GeometryError("mesh_from_depth: fewer than 3 foreground pixels");

    for (int y = 0; y + 1 < h; ++y)
        for (int x = 0; x + 1 < w; ++x) {
            const int p00 = m.pixel_to_vertex[m.mask.index(x, y)];
            const int p10 = m.pixel_to_vertex[m.mask.index(x + 1, y)];
            const int p01 = m.pixel_to_vertex[m.mask.index(x, y + 1)];
            const int p11 = m.pixel_to_vertex[m.mask.index(x + 1, y + 1)];
            if (p00 < 0 || p10 < 0 || p01 < 0 || p11 < 0)
                continue;
            if (back) {
                m.triangles.push_back({p00, p10, p01});
                m.triangles.push_back({p10, p11, p01});
            } else {
                m.triangles.push_back({p00, p01, p10});
                m.triangles.push_back({p10, p01, p11});
            }
        }
    return m;
}

ClosedMesh stitch(const OpenMesh& front, const OpenMesh& back, StitchReport* report) {
    if (front.orientation != Orientation::front || back.orientation != Orientation::back)
        throw InputError("stitch expects a front and a back mesh");
    if (front.mask.width() != back.mask.width() || front.mask.height() != back.mask.height())
        throw GeometryError("stitch: front and back silhouettes have different sizes");
    if (front.joints != back.joints)
        throw GeometryError("stitch: front and back skinning widths differ");

    const int w = front.mask.width(), h = front.mask.height();
    std::size_t boundary_diff = 0, pixel_diff = 0;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            boundary_diff += is_boundary_pixel(front.mask, x, y) != is_boundary_pixel(back.mask, x, y);
            pixel_diff += front.mask.is_set(x, y) != back.mask.is_set(x, y);
        }
    if (boundary_diff > 0)
        throw GeometryError("stitch: front and back boundary pixel sets differ by " + std::to_string(boundary_diff) +
                            " pixel(s)");
    if (pixel_diff > 0)
        throw GeometryError("stitch: front and back silhouettes differ by " + std::to_string(pixel_diff) + " pixel(s)");

    // Open-boundary vertices of the front grid; the back grid shares the same blocks.
    std::vector<char> on_seam(front.vertices.size(), 0);
    for (const auto& [key, uses] : edge_uses(front.triangles))
        if (uses == 1) {
            on_seam[std::size_t(key >> 32)] = 1;
            on_seam[std::size_t(key & 0xffffffffu)] = 1;
        }

    const std::size_t b = std::size_t(front.joints);
    ClosedMesh out;
    out.joints = front.joints;
    out.front_camera = front.camera;
    out.back_camera = back.camera;
    out.vertices = front.vertices;
    out.pixels = front.pixels;
    out.weights = front.weights;
    out.sides.assign(front.vertices.size(), SurfaceSide::front);
    StitchReport local;

    std::vector<int> back_index(back.vertices.size(), -1);
    for (std::size_t v = 0; v < back.vertices.size(); ++v) {
        const Vec2i px = back.pixels[v];
        const int f = front.pixel_to_vertex[front.mask.index(px.x(), px.y())];
        if (f >= 0 && on_seam[std::size_t(f)]) {
            const Vec3& pf = front.vertices[std::size_t(f)];
            const Vec3& pb = back.vertices[v];
            local.max_seam_gap = std::max(local.max_seam_gap, (pf - pb).norm());
            const double depth = 0.5 * (front.camera.depth_of(pf) + front.camera.depth_of(pb));
            out.vertices[std::size_t(f)] = front.camera.backproject(px.cast<double>(), depth);
            out.sides[std::size_t(f)] = SurfaceSide::seam;
            double sum = 0.0;
            for (std::size_t k = 0; k < b; ++k) {
                double& wk = out.weights[std::size_t(f) * b + k];
                wk = 0.5 * (wk + back.weights[v * b + k]);
                sum += wk;
            }
            if (sum > 0)
                for (std::size_t k = 0; k < b; ++k)
                    out.weights[std::size_t(f) * b + k] /= sum;
            back_index[v] = f;
            ++local.merged;
        } else {
            back_index[v] = int(out.vertices.size());
            out.vertices.push_back(back.vertices[v]);
            out.pixels.push_back(px);
            out.sides.push_back(SurfaceSide::back);
            out.weights.insert(out.weights.end(), back.weights.begin() + std::ptrdiff_t(v * b),
                               back.weights.begin() + std::ptrdiff_t((v + 1) * b));
        }
    }
    // An interior front edge whose ends both sit on the seam would coincide with
    // its back twin after merging and be shared by four triangles. Splitting the
    // front copy at its midpoint keeps every edge on exactly two triangles.
    const auto front_uses = edge_uses(front.triangles);
    std::unordered_map<std::uint64_t, int> midpoint;
    auto split_vertex = [&](int a, int c) {
        if (!on_seam[std::size_t(a)] || !on_seam[std::size_t(c)] || front_uses.at(edge_key(a, c)) != 2)
            return -1;
        auto [it, fresh] = midpoint.try_emplace(edge_key(a, c), int(out.vertices.size()));
        if (fresh) {
            out.vertices.push_back(0.5 * (front.vertices[std::size_t(a)] + front.vertices[std::size_t(c)]));
            out.pixels.push_back(out.pixels[std::size_t(std::min(a, c))]);
            out.sides.push_back(SurfaceSide::front);
            for (std::size_t k = 0; k < b; ++k)
                out.weights.push_back(0.5 * (out.weights[std::size_t(a) * b + k] + out.weights[std::size_t(c) * b + k]));
            ++local.split_edges;
        }
        return it->second;
    };
    for (const Triangle& t : front.triangles) {
        const std::array<int, 3> m{split_vertex(t[0], t[1]), split_vertex(t[1], t[2]), split_vertex(t[2], t[0])};
        const int splits = int(m[0] >= 0) + int(m[1] >= 0) + int(m[2] >= 0);
        std::vector<Triangle> pieces;
        if (splits == 0) {
            pieces.push_back(t);
        } else if (splits == 3) {
            pieces = {{t[0], m[0], m[2]}, {m[0], t[1], m[1]}, {m[2], m[1], t[2]}, {m[0], m[1], m[2]}};
        } else {
            // Rotate so the corners read a, b, c with edge ab split (and bc too when two are).
            int r = 0;
            if (splits == 1)
                while (m[std::size_t(r)] < 0)
                    ++r;
            else
                while (m[std::size_t(r)] < 0 || m[std::size_t((r + 1) % 3)] < 0)
                    ++r;
            const int a = t[std::size_t(r)], bb = t[std::size_t((r + 1) % 3)], c = t[std::size_t((r + 2) % 3)];
            const int mab = m[std::size_t(r)];
            if (splits == 1) {
                pieces = {{a, mab, c}, {mab, bb, c}};
            } else {
                const int mbc = m[std::size_t((r + 1) % 3)];
                pieces = {{mab, bb, mbc}, {a, mab, mbc}, {a, mbc, c}};
            }
        }
        for (const Triangle& piece : pieces) {
            out.triangles.push_back(piece);
            out.triangle_sides.push_back(SurfaceSide::front);
        }
    }
    for (const Triangle& t : back.triangles) {
        out.triangles.push_back({back_index[std::size_t(t[0])], back_index[std::size_t(t[1])],
                                 back_index[std::size_t(t[2])]});
        out.triangle_sides.push_back(SurfaceSide::back);
    }

    // Drop vertices no triangle uses (isolated pixels and one-pixel spurs).
    std::vector<int> remap(out.vertices.size(), -1);
    for (const Triangle& t : out.triangles)
        for (int v : t)
            remap[std::size_t(v)] = 0;
    int next = 0;
    ClosedMesh compact;
    compact.joints = out.joints;
    compact.front_camera = out.front_camera;
    compact.back_camera = out.back_camera;
    for (std::size_t v = 0; v < out.vertices.size(); ++v) {
        if (remap[v] < 0) {
            ++local.dropped_unreferenced;
            continue;
        }
        remap[v] = next++;
        compact.vertices.push_back(out.vertices[v]);
        compact.pixels.push_back(out.pixels[v]);
        compact.sides.push_back(out.sides[v]);
        compact.weights.insert(compact.weights.end(), out.weights.begin() + std::ptrdiff_t(v * b),
                               out.weights.begin() + std::ptrdiff_t((v + 1) * b));
    }
    for (Triangle t : out.triangles) {
        for (int& v : t)
            v = remap[std::size_t(v)];
        compact.triangles.push_back(t);
    }
    compact.triangle_sides = std::move(out.triangle_sides);
    if (report)
        *report = local;
    return compact;
}

std::vector<Vec3> laplacian_smooth(const std::vector<Vec3>& vertices, const std::vector<Triangle>& triangles,
                                   const SmoothOptions& options) {
    if (options.step < 0 || options.step > 1)
        throw InputError("laplacian_smooth: step must lie in [0, 1]");
    const auto adj = adjacency(vertices.size(), triangles);
    std::vector<Vec3> cur = vertices;
    std::vector<Vec3> next;
    for (int it = 0; it < options.iterations; ++it) {
        next = cur;
        for (std::size_t v = 0; v < cur.size(); ++v) {
            if ((options.movable && !(*options.movable)[v]) || adj[v].empty())
                continue;
            Vec3 mean = Vec3::Zero();
            for (int u : adj[v])
                mean += cur[std::size_t(u)];
            mean /= double(adj[v].size());
            Vec3 d = options.step * (mean - cur[v]);
            if (options.directions) {
                const Vec3& dir = (*options.directions)[v];
                d = dir * dir.dot(d);
            }
            next[v] = cur[v] + d;
        }
        cur.swap(next);
    }
    return cur;
}

std::vector<char> seam_neighbourhood(const ClosedMesh& mesh, int rings) {
    const auto adj = adjacency(mesh.vertices.size(), mesh.triangles);
    std::vector<int> dist(mesh.vertices.size(), -1);
    std::deque<int> queue;
    for (std::size_t v = 0; v < mesh.vertices.size(); ++v)
        if (mesh.sides[v] == SurfaceSide::seam) {
            dist[v] = 0;
            queue.push_back(int(v));
        }
    while (!queue.empty()) {
        const int v = queue.front();
        queue.pop_front();
        if (dist[std::size_t(v)] >= rings)
            continue;
        for (int u : adj[std::size_t(v)])
            if (dist[std::size_t(u)] < 0) {
                dist[std::size_t(u)] = dist[std::size_t(v)] + 1;
                queue.push_back(u);
            }
    }
    std::vector<char> out(mesh.vertices.size());
    for (std::size_t v = 0; v < out.size(); ++v)
        out[v] = dist[v] >= 0;
    return out;
}

std::size_t count_edges(const std::vector<Triangle>& triangles) { return edge_uses(triangles).size(); }

bool is_closed(const std::vector<Triangle>& triangles) {
    if (triangles.empty())
        return false;
    for (const auto& [key, uses] : edge_uses(triangles))
        if (uses != 2)
            return false;
    return true;
}

long euler_characteristic(std::size_t vertex_count, const std::vector<Triangle>& triangles) {
    return long(vertex_count) - long(count_edges(triangles)) + long(triangles.size());
}

double signed_volume(const std::vector<Vec3>& vertices, const std::vector<Triangle>& triangles) {
    double v = 0.0;
    for (const Triangle& t : triangles)
        v += vertices[std::size_t(t[0])].dot(vertices[std::size_t(t[1])].cross(vertices[std::size_t(t[2])]));
    return v / 6.0;
}

double triangle_area(const std::vector<Vec3>& vertices, const Triangle& t) {
    const Vec3& a = vertices[std::size_t(t[0])];
    return 0.5 * (vertices[std::size_t(t[1])] - a).cross(vertices[std::size_t(t[2])] - a).norm();
}

RasterMap rasterize_silhouette(const std::vector<Vec3>& vertices, const std::vector<Triangle>& triangles,
                               const Camera& camera) {
    const int w = camera.width(), h = camera.height();
    RasterMap out(w, h, 1, Semantic::mask);
    std::vector<Vec2> proj(vertices.size());
    std::vector<char> in_front(vertices.size());
    for (std::size_t i = 0; i < vertices.size(); ++i) {
        in_front[i] = camera.depth_of(vertices[i]) > 0;
        if (in_front[i])
            proj[i] = camera.project(vertices[i]);
    }
    for (const Triangle& t : triangles) {
        if (!in_front[std::size_t(t[0])] || !in_front[std::size_t(t[1])] || !in_front[std::size_t(t[2])])
            continue;
        const Vec2 a = proj[std::size_t(t[0])], b = proj[std::size_t(t[1])], c = proj[std::size_t(t[2])];
        const double area = (b - a).x() * (c - a).y() - (b - a).y() * (c - a).x();
        if (std::abs(area) < 1e-12)
            continue;
        const double eps = 1e-9 * std::abs(area);
        const int x0 = std::max(0, int(std::ceil(std::min({a.x(), b.x(), c.x()}) - 1e-9)));
        const int x1 = std::min(w - 1, int(std::floor(std::max({a.x(), b.x(), c.x()}) + 1e-9)));
        const int y0 = std::max(0, int(std::ceil(std::min({a.y(), b.y(), c.y()}) - 1e-9)));
        const int y1 = std::min(h - 1, int(std::floor(std::max({a.y(), b.y(), c.y()}) + 1e-9)));
        const double s = area > 0 ? 1.0 : -1.0;
        auto edge = [](const Vec2& p, const Vec2& q, double x, double y) {
            return (q.x() - p.x()) * (y - p.y()) - (q.y() - p.y()) * (x - p.x());
        };
        for (int y = y0; y <= y1; ++y)
            for (int x = x0; x <= x1; ++x) {
                if (s * edge(a, b, x, y) >= -eps && s * edge(b, c, x, y) >= -eps && s * edge(c, a, x, y) >= -eps)
                    out.at(x, y) = 1.0;
            }
    }
    return out;
}

void RiggedMesh::validate(bool require_closed) const {
    const std::size_t b = joint_count();
    if (b == 0 || weights.size() != vertices.size() * b)
        throw GeometryError("rigged mesh: weight table does not match vertices x joints");
    for (std::size_t v = 0; v < vertices.size(); ++v) {
        double sum = 0.0;
        for (std::size_t k = 0; k < b; ++k) {
            const double wk = weights[v * b + k];
            if (!(wk >= 0))
                throw GeometryError("rigged mesh: negative skinning weight at vertex " + std::to_string(v));
            sum += wk;
        }
        if (std::abs(sum - 1.0) > 1e-5)
            throw GeometryError("rigged mesh: weights at vertex " + std::to_string(v) + " sum to " + std::to_string(sum));
    }
    for (const Triangle& t : triangles) {
        for (int v : t)
            if (v < 0 || std::size_t(v) >= vertices.size())
                throw GeometryError("rigged mesh: triangle index out of range");
        if (!(triangle_area(vertices, t) > 1e-12))
            throw GeometryError("rigged mesh: degenerate triangle");
    }
    if (!corner_uvs.empty() && corner_uvs.size() != triangles.size())
        throw GeometryError("rigged mesh: one UV triple per triangle expected");
    if (require_closed && !is_closed(triangles))
        throw GeometryError("rigged mesh is not closed");
}

std::vector<Vec3> lbs_pose(const RiggedMesh& mesh, const Pose& pose) {
    return lbs(mesh.vertices, mesh.weights, mesh.skeleton, pose);
}

} // namespace photorig
