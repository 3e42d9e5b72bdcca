#pragma once

#include <vector>

namespace photorig {

/// s-t minimum cut on a graph with real capacities (Dinic's blocking flows).
/// Nodes left on the source side after solve() take value 0 in the binary
/// energies built on top of it; sink-side nodes take 1.
class MaxFlow {
public:
    explicit MaxFlow(int nodes);

    int node_count() const noexcept { return int(first_.size()); }

    /// Adds source->node and node->sink capacities (accumulated).
    void add_terminal(int node, double source_cap, double sink_cap);
    /// Adds the arc pair a->b (cap_ab) and b->a (cap_ba).
    void add_edge(int a, int b, double cap_ab, double cap_ba);

    double solve();
    bool on_source_side(int node) const { return source_side_[std::size_t(node)] != 0; }

private:
    struct Arc {
        int to;
        int next;
        double cap;
    };

    void add_arc_pair(int a, int b, double cap_ab, double cap_ba);
    bool build_levels();
    double push(int node, double limit);

    std::vector<int> first_;
    std::vector<Arc> arcs_;
    std::vector<double> source_cap_;
    std::vector<double> sink_cap_;
    std::vector<int> level_;
    std::vector<int> cursor_;
    std::vector<char> source_side_;
    int source_ = -1;
    int sink_ = -1;
};

} // namespace photorig
