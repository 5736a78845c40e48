#pragma once

#include "milbo/encoder.hpp"

#include <cstdint>
#include <tuple>
#include <utility>
#include <vector>

namespace milbo {

// Raw cross-view scores s_ij = z_i^(1) . z_j^(2). Discriminator values
// sigmoid(s_ij) are never materialized; the loss works in log space.
struct SimilarityMatrix {
    Matrix s;  // n x n
};

// Positive / negative index pairs over the similarity matrix. All diagonal
// pairs are positives; off-diagonal membership comes from a global top-k /
// top-l rule (or the shuffling baseline).
struct PairSets {
    std::vector<std::pair<int, int>> positives;
    std::vector<std::pair<int, int>> negatives;
    int k = 0;
    int l = 0;
};

struct LossBreakdown {
    double contrastive = 0.0;
    double consistency = 0.0;
    double lambda = 0.0;
    double total = 0.0;
};

SimilarityMatrix similarity(const Embeddings& z1, const Embeddings& z2);

// Off-diagonal entries ranked by score, ties broken by row-major index (the
// lower index ranks first among equals). Positives take the head of the
// descending ranking, negatives the tail. Requires k + l <= n^2 - n.
PairSets select_pairs(const SimilarityMatrix& sim, int k, int l);

// Baseline: positives on the diagonal, negatives (i, pi(i)) for a uniform
// random permutation pi, skipping fixed points. Ignores the similarity matrix.
PairSets select_pairs_shuffling(int n, std::uint64_t seed);

// -(1/|P|) sum log sigmoid(s) - (1/|N|) sum log(1 - sigmoid(s)), N term
// omitted when empty. grad_s is zero outside P and N.
std::pair<double, Matrix> contrastive_loss(const SimilarityMatrix& sim, const PairSets& pairs);

// (1/n) sum_i ||z1_i - z2_i||^2 with its gradients.
std::tuple<double, Matrix, Matrix> consistency_loss(const Embeddings& z1, const Embeddings& z2);

struct CombinedResult {
    LossBreakdown loss;
    Matrix grad_z1;
    Matrix grad_z2;
    PairSets pairs;
};

// similarity -> select_pairs -> contrastive + lambda * consistency, chained
// into both embeddings. Pair selection is held fixed during differentiation.
CombinedResult combined_loss(const Embeddings& z1, const Embeddings& z2, int k, int l,
                             double lambda);

// Same composition but with caller-supplied pairs (shuffling baseline feeds
// its own sets; consistency-only passes diagonal-free handling upstream).
CombinedResult combined_loss_with_pairs(const Embeddings& z1, const Embeddings& z2,
                                        const PairSets& pairs, double lambda);

}  // namespace milbo
