#include "milbo/view.hpp"

#include <stdexcept>

namespace milbo {

void SampleConfig::validate() const {
    if (!(p_h >= 0.0 && p_h <= 0.99))
        throw std::invalid_argument("SampleConfig: p_h must lie in [0, 0.99]");
    if (!(p_a >= 0.0 && p_a < 1.0))
        throw std::invalid_argument("SampleConfig: p_a must lie in [0, 1)");
}

ViewSample sample_view(const Graph& g, const SampleConfig& cfg, Rng& rng) {
    cfg.validate();
    ViewSample view;

    // One Bernoulli draw per node, zeroing the whole feature row.
    view.node_mask.resize(g.n);
    view.masked_features = g.features;
    for (int i = 0; i < g.n; ++i) {
        const bool keep = cfg.p_h == 0.0 ? true : rng.bernoulli(1.0 - cfg.p_h);
        view.node_mask[i] = keep ? 1 : 0;
        if (!keep) view.masked_features.row(i).setZero();
    }

    // One draw per undirected edge, applied symmetrically.
    view.edge_keep_set.reserve(g.edges.size());
    for (const auto& e : g.edges) {
        const bool keep = cfg.p_a == 0.0 ? true : rng.bernoulli(1.0 - cfg.p_a);
        if (keep) view.edge_keep_set.push_back(e);
    }

    // Degrees recomputed over what survived; self-loops re-enter here.
    view.dropped_adjacency = normalize_edges(g.n, view.edge_keep_set);
    return view;
}

std::pair<ViewSample, ViewSample> sample_epoch_views(const Graph& g, const SampleConfig& cfg,
                                                     Rng& rng) {
    ViewSample v1 = sample_view(g, cfg, rng);
    ViewSample v2 = sample_view(g, cfg, rng);
    return {std::move(v1), std::move(v2)};
}

}  // namespace milbo
