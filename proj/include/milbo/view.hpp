#pragma once

#include "milbo/graph.hpp"
#include "milbo/rng.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace milbo {

struct SampleConfig {
    double p_h = 0.2;  // node-feature drop rate, [0, 0.99]
    double p_a = 0.2;  // edge drop rate, [0, 1)

    void validate() const;
};

// One sampled subset view: whole feature rows zeroed per node, edges dropped
// per undirected edge, propagation matrix renormalized over what survived.
struct ViewSample {
    Matrix masked_features;                       // n x f
    NormalizedAdjacency dropped_adjacency;        // renormalized over kept edges
    std::vector<std::uint8_t> node_mask;          // 1 = row kept
    std::vector<std::pair<int, int>> edge_keep_set;  // subset of g.edges
};

ViewSample sample_view(const Graph& g, const SampleConfig& cfg, Rng& rng);

// Two independent draws from the same stream (Algorithm lines: one view per
// call, same epoch rng).
std::pair<ViewSample, ViewSample> sample_epoch_views(const Graph& g, const SampleConfig& cfg,
                                                     Rng& rng);

}  // namespace milbo
