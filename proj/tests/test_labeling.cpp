#include <doctest.h>

#include "oracles.hpp"
#include "photorig/labeling.hpp"
#include "photorig/mask_ops.hpp"
#include "photorig/maxflow.hpp"
#include "support.hpp"

using namespace photorig;

TEST_CASE("maxflow: textbook network") {
    // s=4, t=5 handled by terminals: classic 4-node example with max flow 23.
    MaxFlow f(4);
    f.add_terminal(0, 16, 0);
    f.add_terminal(1, 13, 0);
    f.add_edge(0, 1, 10, 4);
    f.add_edge(0, 2, 12, 0);
    f.add_edge(1, 3, 14, 0);
    f.add_edge(2, 1, 9, 0);
    f.add_edge(3, 2, 7, 0);
    f.add_terminal(2, 0, 20);
    f.add_terminal(3, 0, 4);
    CHECK(f.solve() == doctest::Approx(23.0));
    CHECK(f.on_source_side(0));
    CHECK(f.on_source_side(1));
    CHECK(f.on_source_side(3));
    CHECK_FALSE(f.on_source_side(2));
}

TEST_CASE("alpha_expansion: zero pairwise gives the per-node argmin") {
    std::mt19937 rng(8);
    auto g = testsupport::random_grid_graph(rng, 5, 4, 4);
    for (auto& e : g.edges)
        e.weight = 0.0;
    const auto r = alpha_expansion(g, std::vector<int>(20, 0));
    for (int p = 0; p < g.nodes; ++p) {
        int best = 0;
        for (int l = 1; l < g.labels; ++l)
            if (g.cost(p, l) < g.cost(p, best))
                best = l;
        CHECK(r.labeling[std::size_t(p)] == best);
    }
}

TEST_CASE("alpha_expansion: uniform unary yields a single label") {
    std::mt19937 rng(8);
    auto g = testsupport::random_grid_graph(rng, 4, 4, 3);
    for (double& c : g.unary)
        c = 1.0;
    for (auto& e : g.edges)
        e.weight = 0.5 + e.weight;
    std::vector<int> init(16);
    for (int i = 0; i < 16; ++i)
        init[std::size_t(i)] = i % 3;
    const auto r = alpha_expansion(g, init);
    CHECK(energy(g, r.labeling) == doctest::Approx(16.0));
}

TEST_CASE("alpha_expansion: matches exhaustive search on 3x4 grids") {
    int exact = 0;
    for (int trial = 0; trial < 30; ++trial) {
        std::mt19937 rng(1000 + trial);
        const auto g = testsupport::random_grid_graph(rng, 4, 3, 3);
        const auto r = alpha_expansion(g, unary_argmin(g));
        for (std::size_t i = 1; i < r.energy_trace.size(); ++i)
            CHECK(r.energy_trace[i] <= r.energy_trace[i - 1]);
        const double opt = testsupport::exhaustive_min_energy(g);
        const double e = energy(g, r.labeling);
        CHECK(e <= 1.02 * opt + 1e-12);
        exact += std::abs(e - opt) <= 1e-9 * std::max(1.0, opt);
    }
    CHECK(exact >= 28);
}

TEST_CASE("alpha_expansion: forbidden labels are never chosen when avoidable") {
    PairwiseGraph g(3, 2);
    for (int p = 0; p < 3; ++p) {
        g.cost(p, 0) = std::numeric_limits<double>::infinity();
        g.cost(p, 1) = 1.0;
    }
    g.add_edge(0, 1, 1.0);
    const auto r = alpha_expansion(g, {0, 0, 0});
    CHECK(r.labeling == std::vector<int>{1, 1, 1});
    CHECK(r.energy_trace.back() == doctest::Approx(3.0));
}

namespace {

// Vertical stripes of labels 0..2 in the middle of a 40x30 image.
RasterMap stripe_labels(int shift_x = 0, int shift_y = 0) {
    RasterMap m(40, 30, 1, Semantic::label, double(kBackground));
    for (int y = 5; y < 25; ++y)
        for (int x = 5; x < 35; ++x)
            m.at(x + shift_x, y + shift_y) = (x - 5) / 10;
    return m;
}

RasterMap support_of(const RasterMap& labels) {
    RasterMap s(labels.width(), labels.height(), 1, Semantic::mask);
    for (std::size_t i = 0; i < s.pixel_count(); ++i)
        s.data()[i] = labels.data()[i] >= 0 ? 1.0 : 0.0;
    return s;
}

} // namespace

TEST_CASE("initial_labels: own silhouette reproduces the template labels") {
    const auto templ = stripe_labels();
    const auto out = initial_labels(support_of(templ), templ);
    std::size_t disagree = 0;
    for (std::size_t i = 0; i < out.pixel_count(); ++i)
        disagree += out.data()[i] != templ.data()[i];
    CHECK(disagree == 0);
}

TEST_CASE("initial_labels: single-label template labels all of S") {
    RasterMap templ(20, 20, 1, Semantic::label, double(kBackground));
    for (int y = 8; y < 12; ++y)
        for (int x = 8; x < 12; ++x)
            templ.at(x, y) = 4;
    const auto s = testsupport::disk_mask(20, 20, Vec2(10, 10), 7);
    const auto out = initial_labels(s, templ);
    for (int y = 0; y < 20; ++y)
        for (int x = 0; x < 20; ++x)
            CHECK(out.label_at(x, y) == (s.is_set(x, y) ? 4 : kBackground));
}

TEST_CASE("initial_labels: translation invariance") {
    const auto templ = stripe_labels();
    const auto s = dilate(support_of(templ), 2.0);
    const auto out = initial_labels(s, templ);
    const auto templ_shifted = stripe_labels(2, 1);
    RasterMap s_shifted(40, 30, 1, Semantic::mask);
    for (int y = 0; y + 1 < 30; ++y)
        for (int x = 0; x + 2 < 40; ++x)
            s_shifted.at(x + 2, y + 1) = s.at(x, y);
    const auto out_shifted = initial_labels(s_shifted, templ_shifted);
    for (int y = 0; y + 1 < 30; ++y)
        for (int x = 0; x + 2 < 40; ++x)
            CHECK(out_shifted.label_at(x + 2, y + 1) == out.label_at(x, y));
}

TEST_CASE("refine_labels: empty mask returns the input bit-exactly") {
    const auto labels = stripe_labels();
    RasterMap image(40, 30, 3, Semantic::color, 0.5);
    RasterMap none(40, 30, 1, Semantic::mask);
    CHECK(refine_labels(labels, image, none) == labels);
}

TEST_CASE("refine_labels: snaps a shifted boundary onto the colour edge") {
    // Two labels; the colour edge sits at x = 20, the label edge at x = 23.
    RasterMap labels(40, 30, 1, Semantic::label, double(kBackground));
    RasterMap image(40, 30, 3, Semantic::color);
    RasterMap occl(40, 30, 1, Semantic::mask);
    std::mt19937 rng(3);
    std::normal_distribution<double> noise(0.0, 0.02);
    for (int y = 3; y < 27; ++y)
        for (int x = 3; x < 37; ++x) {
            labels.at(x, y) = x < 23 ? 1 : 5;
            const bool red = x >= 20;
            image.at(x, y, 0) = (red ? 0.85 : 0.1) + noise(rng);
            image.at(x, y, 1) = 0.1 + noise(rng);
            image.at(x, y, 2) = (red ? 0.1 : 0.85) + noise(rng);
            if (std::abs(x - 22) <= 6)
                occl.at(x, y) = 1;
        }
    RefineReport report;
    const auto out = refine_labels(labels, image, occl, {}, &report);
    for (int y = 3; y < 27; ++y)
        for (int x = 3; x < 37; ++x) {
            CHECK(out.label_at(x, y) == (x < 20 ? 1 : 5));
            if (!occl.is_set(x, y))
                CHECK(out.at(x, y) == labels.at(x, y));
        }
    CHECK(report.beta > 0);
}

TEST_CASE("refine_labels: constant colour never adds label components") {
    const auto labels = stripe_labels();
    RasterMap image(40, 30, 3, Semantic::color, 0.4);
    RasterMap occl(40, 30, 1, Semantic::mask);
    for (int y = 5; y < 25; ++y)
        for (int x = 10; x < 30; ++x)
            occl.at(x, y) = 1;
    const auto out = refine_labels(labels, image, occl);
    for (int l = 0; l < 3; ++l) {
        std::vector<int> comp;
        CHECK(label_components(select_labels(out, {l}), comp) <= 1);
    }
}

TEST_CASE("gmm: recovers two well-separated clusters") {
    std::mt19937 rng(12);
    std::normal_distribution<double> n(0.0, 0.01);
    std::vector<Vec3> samples;
    for (int i = 0; i < 200; ++i)
        samples.emplace_back(0.2 + n(rng), 0.2 + n(rng), 0.2 + n(rng));
    for (int i = 0; i < 100; ++i)
        samples.emplace_back(0.8 + n(rng), 0.7 + n(rng), 0.1 + n(rng));
    const auto gmm = fit_gmm(samples, 2, 10, 7);
    REQUIRE(gmm.components.size() == 2);
    double total = 0.0;
    for (const auto& c : gmm.components) {
        total += c.weight;
        CHECK(c.covariance.isApprox(c.covariance.transpose()));
    }
    CHECK(total == doctest::Approx(1.0));
    CHECK(gmm.log_density(Vec3(0.2, 0.2, 0.2)) > gmm.log_density(Vec3(0.5, 0.5, 0.5)));
    const auto again = fit_gmm(samples, 2, 10, 7);
    CHECK(again.components[0].mean == gmm.components[0].mean);
    CHECK(GmmColorModel{}.log_density(Vec3(0.3, 0.3, 0.3)) == 0.0);
}
