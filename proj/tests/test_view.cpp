#include "milbo/view.hpp"

#include <doctest.h>

#include <set>

using namespace milbo;

namespace {

Graph small_sbm(std::uint64_t seed = 1) {
    SbmSpec spec;
    spec.blocks = {30, 30, 30};
    spec.p_in = 0.3;
    spec.p_out = 0.02;
    spec.feature_noise = 0.5;
    spec.seed = seed;
    return generate_sbm(spec);
}

}  // namespace

TEST_CASE("zero drop rates reproduce the raw graph") {
    Graph g = small_sbm();
    Rng rng(0);
    ViewSample v = sample_view(g, SampleConfig{0.0, 0.0}, rng);
    CHECK((v.masked_features - g.features).cwiseAbs().maxCoeff() == 0.0);
    CHECK(v.edge_keep_set == g.edges);
    Matrix diff = Matrix(v.dropped_adjacency.mat) - Matrix(normalize_adjacency(g).mat);
    CHECK(diff.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("masking is all-or-nothing per node row") {
    Graph g = small_sbm();
    Rng rng(12);
    ViewSample v = sample_view(g, SampleConfig{0.5, 0.0}, rng);
    for (int i = 0; i < g.n; ++i) {
        if (v.node_mask[i]) {
            CHECK((v.masked_features.row(i) - g.features.row(i)).cwiseAbs().maxCoeff() == 0.0);
        } else {
            CHECK(v.masked_features.row(i).cwiseAbs().maxCoeff() == 0.0);
        }
    }
}

TEST_CASE("kept edges are a subset of the source edges") {
    Graph g = small_sbm();
    Rng rng(4);
    ViewSample v = sample_view(g, SampleConfig{0.0, 0.5}, rng);
    std::set<std::pair<int, int>> src(g.edges.begin(), g.edges.end());
    for (const auto& e : v.edge_keep_set) CHECK(src.count(e) == 1);
    CHECK(v.edge_keep_set.size() < g.edges.size());  // overwhelmingly likely at p_a=0.5
}

TEST_CASE("dropped adjacency has no entry where the source had none") {
    Graph g = small_sbm();
    Rng rng(5);
    ViewSample v = sample_view(g, SampleConfig{0.2, 0.5}, rng);
    Matrix src = Matrix(g.adjacency());
    Matrix dropped = Matrix(v.dropped_adjacency.mat);
    for (int i = 0; i < g.n; ++i)
        for (int j = 0; j < g.n; ++j)
            if (i != j && src(i, j) == 0.0) CHECK(dropped(i, j) == 0.0);
}

TEST_CASE("heavy node drop keeps a 3-sigma binomial count") {
    Graph g;
    g.n = 1000;
    g.f = 1;
    g.features = Matrix::Ones(1000, 1);
    Rng rng(99);
    ViewSample v = sample_view(g, SampleConfig{0.99, 0.0}, rng);
    int kept = 0;
    for (auto m : v.node_mask) kept += m;
    const double mean = 1000 * 0.01;
    const double sigma = std::sqrt(1000 * 0.01 * 0.99);
    CHECK(std::abs(kept - mean) <= 3.0 * sigma);
}

TEST_CASE("sample_epoch_views is deterministic per seed") {
    Graph g = small_sbm();
    SampleConfig cfg{0.3, 0.3};
    Rng rng_a(42, 0);
    Rng rng_b(42, 0);
    auto [a1, a2] = sample_epoch_views(g, cfg, rng_a);
    auto [b1, b2] = sample_epoch_views(g, cfg, rng_b);
    CHECK(a1.node_mask == b1.node_mask);
    CHECK(a1.edge_keep_set == b1.edge_keep_set);
    CHECK(a2.node_mask == b2.node_mask);
    CHECK(a2.edge_keep_set == b2.edge_keep_set);
}

TEST_CASE("zero drop rates give identical epoch views") {
    Graph g = small_sbm();
    Rng rng(7, 0);
    auto [v1, v2] = sample_epoch_views(g, SampleConfig{0.0, 0.0}, rng);
    CHECK(v1.edge_keep_set == v2.edge_keep_set);
    CHECK((v1.masked_features - g.features).cwiseAbs().maxCoeff() == 0.0);
    CHECK((v2.masked_features - g.features).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("the two epoch views differ for nearly every seed at p_a=0.5") {
    Graph g = small_sbm();
    SampleConfig cfg{0.0, 0.5};
    int differing = 0;
    for (int seed = 0; seed < 100; ++seed) {
        Rng rng(seed, 0);
        auto [v1, v2] = sample_epoch_views(g, cfg, rng);
        if (v1.edge_keep_set != v2.edge_keep_set) ++differing;
    }
    CHECK(differing >= 99);
}

TEST_CASE("empirical keep frequencies match 1-p within 3 sigma") {
    Graph g = small_sbm();
    const int trials = 10000;
    for (double p : {0.1, 0.5, 0.9}) {
        long node_kept = 0, edge_kept = 0;
        for (int t = 0; t < trials; ++t) {
            Rng rng(1234, static_cast<std::uint64_t>(t));
            ViewSample v = sample_view(g, SampleConfig{p, p}, rng);
            for (auto m : v.node_mask) node_kept += m;
            edge_kept += static_cast<long>(v.edge_keep_set.size());
        }
        const double node_total = static_cast<double>(trials) * g.n;
        const double edge_total = static_cast<double>(trials) * g.edges.size();
        const double q = 1.0 - p;
        CHECK(std::abs(node_kept / node_total - q) <= 3.0 * std::sqrt(p * q / node_total));
        CHECK(std::abs(edge_kept / edge_total - q) <= 3.0 * std::sqrt(p * q / edge_total));
    }
}

TEST_CASE("sample config validation") {
    CHECK_THROWS_AS((SampleConfig{1.0, 0.0}.validate()), std::invalid_argument);
    CHECK_THROWS_AS((SampleConfig{0.0, 1.0}.validate()), std::invalid_argument);
    CHECK_THROWS_AS((SampleConfig{-0.1, 0.0}).validate(), std::invalid_argument);
    CHECK_NOTHROW((SampleConfig{0.99, 0.0}.validate()));
}
