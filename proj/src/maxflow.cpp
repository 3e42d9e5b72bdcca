#include "photorig/maxflow.hpp"

#include <algorithm>
#include <deque>
#include <limits>

#include "photorig/core.hpp"

namespace photorig {

namespace {
constexpr double kResidualEps = 1e-12;
}

MaxFlow::MaxFlow(int nodes) {
    if (nodes < 0)
        throw InputError("MaxFlow: negative node count");
    first_.assign(std::size_t(nodes), -1);
    source_cap_.assign(std::size_t(nodes), 0.0);
    sink_cap_.assign(std::size_t(nodes), 0.0);
}

void MaxFlow::add_terminal(int node, double source_cap, double sink_cap) {
    if (source_cap < 0 || sink_cap < 0)
        throw InputError("MaxFlow: negative terminal capacity");
    source_cap_[std::size_t(node)] += source_cap;
    sink_cap_[std::size_t(node)] += sink_cap;
}

void MaxFlow::add_edge(int a, int b, double cap_ab, double cap_ba) {
    if (cap_ab < 0 || cap_ba < 0)
        throw InputError("MaxFlow: negative edge capacity");
    if (a == b)
        return;
    add_arc_pair(a, b, cap_ab, cap_ba);
}

void MaxFlow::add_arc_pair(int a, int b, double cap_ab, double cap_ba) {
    arcs_.push_back({b, first_[std::size_t(a)], cap_ab});
    first_[std::size_t(a)] = int(arcs_.size()) - 1;
    arcs_.push_back({a, first_[std::size_t(b)], cap_ba});
    first_[std::size_t(b)] = int(arcs_.size()) - 1;
}

bool MaxFlow::build_levels() {
    std::fill(level_.begin(), level_.end(), -1);
    std::deque<int> queue{source_};
    level_[std::size_t(source_)] = 0;
    while (!queue.empty()) {
        const int u = queue.front();
        queue.pop_front();
        for (int a = first_[std::size_t(u)]; a >= 0; a = arcs_[std::size_t(a)].next) {
            const Arc& arc = arcs_[std::size_t(a)];
            if (arc.cap > kResidualEps && level_[std::size_t(arc.to)] < 0) {
                level_[std::size_t(arc.to)] = level_[std::size_t(u)] + 1;
                queue.push_back(arc.to);
            }
        }
    }
    return level_[std::size_t(sink_)] >= 0;
}

double MaxFlow::push(int node, double limit) {
    if (node == sink_)
        return limit;
    for (int& a = cursor_[std::size_t(node)]; a >= 0; a = arcs_[std::size_t(a)].next) {
        Arc& arc = arcs_[std::size_t(a)];
        if (arc.cap <= kResidualEps || level_[std::size_t(arc.to)] != level_[std::size_t(node)] + 1)
            continue;
        const double pushed = push(arc.to, std::min(limit, arc.cap));
        if (pushed > 0) {
            arc.cap -= pushed;
            arcs_[std::size_t(a ^ 1)].cap += pushed;
            return pushed;
        }
    }
    return 0.0;
}

double MaxFlow::solve() {
    const int n = node_count();
    source_ = n;
    sink_ = n + 1;
    first_.resize(std::size_t(n) + 2, -1);
    // Terminal flow that can go straight through a node never needs augmenting paths.
    double flow = 0.0;
    for (int v = 0; v < n; ++v) {
        const double direct = std::min(source_cap_[std::size_t(v)], sink_cap_[std::size_t(v)]);
        flow += direct;
        const double s = source_cap_[std::size_t(v)] - direct;
        const double t = sink_cap_[std::size_t(v)] - direct;
        if (s > 0)
            add_arc_pair(source_, v, s, 0.0);
        if (t > 0)
            add_arc_pair(v, sink_, t, 0.0);
    }
    level_.assign(std::size_t(n) + 2, -1);
    constexpr double inf = std::numeric_limits<double>::infinity();
    while (build_levels()) {
        cursor_ = first_;
        for (double f = push(source_, inf); f > 0; f = push(source_, inf))
            flow += f;
    }
    // Source side = reachable from the source in the final residual graph.
    build_levels();
    source_side_.assign(std::size_t(n), 0);
    for (int v = 0; v < n; ++v)
        source_side_[std::size_t(v)] = level_[std::size_t(v)] >= 0;
    return flow;
}

} // namespace photorig
