#include "milbo/objective.hpp"

#include "milbo/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace milbo {

namespace {

// log(1 + exp(x)) without overflow.
double softplus(double x) {
    if (x > 0.0) return x + std::log1p(std::exp(-x));
    return std::log1p(std::exp(x));
}

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace

SimilarityMatrix similarity(const Embeddings& z1, const Embeddings& z2) {
    if (z1.z.rows() != z2.z.rows() || z1.z.cols() != z2.z.cols())
        throw std::invalid_argument("similarity: embedding shape mismatch");
    SimilarityMatrix sim;
    sim.s = z1.z * z2.z.transpose();  // s(i,j) = z1_i . z2_j
    return sim;
}

PairSets select_pairs(const SimilarityMatrix& sim, int k, int l) {
    const int n = static_cast<int>(sim.s.rows());
    const long off_diag = static_cast<long>(n) * n - n;
    if (k < 0 || l < 0) throw std::invalid_argument("select_pairs: negative budget");
    if (static_cast<long>(k) + l > off_diag)
        throw std::invalid_argument("select_pairs: k + l exceeds off-diagonal count");

    PairSets out;
    out.k = k;
    out.l = l;
    out.positives.reserve(n + k);
    out.negatives.reserve(l);
    for (int i = 0; i < n; ++i) out.positives.emplace_back(i, i);
    if (off_diag == 0 || (k == 0 && l == 0)) return out;

    // Row-major linear ids of off-diagonal entries, ranked by score descending
    // with the lower id first among equal scores.
    std::vector<long> ids;
    ids.reserve(off_diag);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (i != j) ids.push_back(static_cast<long>(i) * n + j);

    auto score = [&](long id) { return sim.s(static_cast<int>(id / n), static_cast<int>(id % n)); };
    auto rank_desc = [&](long a, long b) {
        const double sa = score(a), sb = score(b);
        if (sa != sb) return sa > sb;
        return a < b;
    };

    if (k > 0) {
        std::nth_element(ids.begin(), ids.begin() + (k - 1), ids.end(), rank_desc);
        std::sort(ids.begin(), ids.begin() + k, rank_desc);
    }
    if (l > 0) {
        std::nth_element(ids.begin() + k, ids.end() - l, ids.end(), rank_desc);
        std::sort(ids.end() - l, ids.end(), rank_desc);
    }
    for (long t = 0; t < k; ++t)
        out.positives.emplace_back(static_cast<int>(ids[t] / n), static_cast<int>(ids[t] % n));
    // Tail of the descending ranking, reported smallest-first.
    for (long t = 0; t < l; ++t) {
        const long id = ids[ids.size() - 1 - t];
        out.negatives.emplace_back(static_cast<int>(id / n), static_cast<int>(id % n));
    }
    return out;
}

PairSets select_pairs_shuffling(int n, std::uint64_t seed) {
    if (n < 2) throw std::invalid_argument("select_pairs_shuffling: need n >= 2");
    Rng rng(seed);
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng.engine());

    PairSets out;
    out.positives.reserve(n);
    out.negatives.reserve(n);
    for (int i = 0; i < n; ++i) out.positives.emplace_back(i, i);
    for (int i = 0; i < n; ++i)
        if (perm[i] != i) out.negatives.emplace_back(i, perm[i]);
    return out;
}

std::pair<double, Matrix> contrastive_loss(const SimilarityMatrix& sim, const PairSets& pairs) {
    const int n = static_cast<int>(sim.s.rows());
    if (pairs.positives.empty()) throw std::invalid_argument("contrastive_loss: empty P");

    double value = 0.0;
    Matrix grad = Matrix::Zero(n, n);

    const double inv_p = 1.0 / static_cast<double>(pairs.positives.size());
    for (auto [i, j] : pairs.positives) {
        const double s = sim.s(i, j);
        value += inv_p * softplus(-s);             // -log sigmoid(s)
        grad(i, j) += inv_p * (sigmoid(s) - 1.0);  // d/ds
    }
    if (!pairs.negatives.empty()) {
        const double inv_n = 1.0 / static_cast<double>(pairs.negatives.size());
        for (auto [i, j] : pairs.negatives) {
            const double s = sim.s(i, j);
            value += inv_n * softplus(s);  // -log(1 - sigmoid(s))
            grad(i, j) += inv_n * sigmoid(s);
        }
    }
    return {value, std::move(grad)};
}

std::tuple<double, Matrix, Matrix> consistency_loss(const Embeddings& z1, const Embeddings& z2) {
    if (z1.z.rows() != z2.z.rows() || z1.z.cols() != z2.z.cols())
        throw std::invalid_argument("consistency_loss: shape mismatch");
    const double n = static_cast<double>(z1.z.rows());
    Matrix diff = z1.z - z2.z;
    const double value = diff.squaredNorm() / n;
    Matrix grad1 = (2.0 / n) * diff;
    Matrix grad2 = -grad1;
    return {value, std::move(grad1), std::move(grad2)};
}

CombinedResult combined_loss_with_pairs(const Embeddings& z1, const Embeddings& z2,
                                        const PairSets& pairs, double lambda) {
    if (lambda < 0.0) throw std::invalid_argument("combined_loss: lambda must be >= 0");
    SimilarityMatrix sim = similarity(z1, z2);
    auto [cl, grad_s] = contrastive_loss(sim, pairs);
    auto [cvc, cvc_g1, cvc_g2] = consistency_loss(z1, z2);

    CombinedResult out;
    out.pairs = pairs;
    out.loss.contrastive = cl;
    out.loss.consistency = cvc;
    out.loss.lambda = lambda;
    out.loss.total = cl + lambda * cvc;
    // S = Z1 Z2^T, so dL/dZ1 = dL/dS * Z2 and dL/dZ2 = (dL/dS)^T * Z1.
    out.grad_z1 = grad_s * z2.z + lambda * cvc_g1;
    out.grad_z2 = grad_s.transpose() * z1.z + lambda * cvc_g2;
    return out;
}

CombinedResult combined_loss(const Embeddings& z1, const Embeddings& z2, int k, int l,
                             double lambda) {
    SimilarityMatrix sim = similarity(z1, z2);
    PairSets pairs = select_pairs(sim, k, l);
    return combined_loss_with_pairs(z1, z2, pairs, lambda);
}

}  // namespace milbo
