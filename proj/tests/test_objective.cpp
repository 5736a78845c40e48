#include "milbo/objective.hpp"

#include "milbo/rng.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace milbo;

namespace {

Embeddings random_embeddings(int n, int d, std::uint64_t seed, int tag = 0) {
    Embeddings z;
    z.z.resize(n, d);
    Rng rng(seed);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) z.z(i, j) = rng.normal();
    z.view_tag = tag;
    return z;
}

// Full-sort selection oracle: rank all off-diagonal entries by (score
// descending, row-major id ascending); P takes the head, N the tail
// (reported smallest first).
PairSets select_oracle(const Matrix& s, int k, int l) {
    const int n = static_cast<int>(s.rows());
    std::vector<std::pair<double, long>> entries;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (i != j) entries.push_back({s(i, j), static_cast<long>(i) * n + j});
    std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    PairSets out;
    out.k = k;
    out.l = l;
    for (int i = 0; i < n; ++i) out.positives.emplace_back(i, i);
    for (int t = 0; t < k; ++t)
        out.positives.emplace_back(static_cast<int>(entries[t].second / n),
                                   static_cast<int>(entries[t].second % n));
    for (int t = 0; t < l; ++t) {
        const long id = entries[entries.size() - 1 - t].second;
        out.negatives.emplace_back(static_cast<int>(id / n), static_cast<int>(id % n));
    }
    return out;
}

// Scalar-by-scalar loss oracle using the naive sigmoid/log formulas.
double contrastive_oracle(const Matrix& s, const PairSets& pairs) {
    auto sig = [](double x) { return 1.0 / (1.0 + std::exp(-x)); };
    double pos = 0.0;
    for (auto [i, j] : pairs.positives) pos += std::log(sig(s(i, j)));
    double value = -pos / static_cast<double>(pairs.positives.size());
    if (!pairs.negatives.empty()) {
        double neg = 0.0;
        for (auto [i, j] : pairs.negatives) neg += std::log(1.0 - sig(s(i, j)));
        value -= neg / static_cast<double>(pairs.negatives.size());
    }
    return value;
}

}  // namespace

TEST_CASE("similarity basics") {
    SUBCASE("orthonormal rows give the identity") {
        Embeddings e1, e2;
        e1.z = Matrix::Identity(3, 3);
        e2.z = Matrix::Identity(3, 3);
        SimilarityMatrix sim = similarity(e1, e2);
        CHECK((sim.s - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("orthogonal vectors score zero") {
        Embeddings e1, e2;
        e1.z.resize(2, 2);
        e1.z << 1, 0, 0, 0;
        e2.z.resize(2, 2);
        e2.z << 0, 0, 0, 1;
        SimilarityMatrix sim = similarity(e1, e2);
        CHECK(sim.s(0, 1) == 0.0);  // z1_1 . z2_2
    }
    SUBCASE("matches an element-wise dot-product oracle") {
        Embeddings e1 = random_embeddings(4, 3, 1);
        Embeddings e2 = random_embeddings(4, 3, 2);
        SimilarityMatrix sim = similarity(e1, e2);
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) {
                double dot = 0.0;
                for (int t = 0; t < 3; ++t) dot += e1.z(i, t) * e2.z(j, t);
                CHECK(std::abs(sim.s(i, j) - dot) <= 1e-12);
            }
    }
    SUBCASE("shape mismatch throws") {
        Embeddings e1 = random_embeddings(4, 3, 1);
        Embeddings e2 = random_embeddings(4, 2, 2);
        CHECK_THROWS_AS(similarity(e1, e2), std::invalid_argument);
    }
}

TEST_CASE("select_pairs worked example") {
    SimilarityMatrix sim;
    sim.s.resize(2, 2);
    sim.s << 0.9, 0.1, 0.2, 0.8;
    PairSets p = select_pairs(sim, 1, 1);
    CHECK(p.positives == std::vector<std::pair<int, int>>{{0, 0}, {1, 1}, {1, 0}});
    CHECK(p.negatives == std::vector<std::pair<int, int>>{{0, 1}});
}

TEST_CASE("select_pairs degenerate budget keeps only the diagonal") {
    SimilarityMatrix sim;
    sim.s = Matrix::Random(5, 5);
    PairSets p = select_pairs(sim, 0, 0);
    CHECK(p.positives.size() == 5);
    CHECK(p.negatives.empty());
}

TEST_CASE("select_pairs budget overflow throws") {
    SimilarityMatrix sim;
    sim.s = Matrix::Random(3, 3);
    CHECK_THROWS_AS(select_pairs(sim, 4, 3), std::invalid_argument);  // 7 > 6
    CHECK_NOTHROW(select_pairs(sim, 3, 3));
}

TEST_CASE("select_pairs equals the full-sort oracle") {
    for (int trial = 0; trial < 20; ++trial) {
        Rng rng(trial);
        const int n = 20;
        SimilarityMatrix sim;
        sim.s.resize(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) sim.s(i, j) = rng.normal();
        PairSets got = select_pairs(sim, 30, 40);
        PairSets expect = select_oracle(sim.s, 30, 40);
        CHECK(got.positives == expect.positives);
        CHECK(got.negatives == expect.negatives);
    }
}

TEST_CASE("ranking on raw scores equals ranking on sigmoid scores") {
    for (int trial = 0; trial < 10; ++trial) {
        Rng rng(100 + trial);
        const int n = 12;
        SimilarityMatrix raw;
        raw.s.resize(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) raw.s(i, j) = 3.0 * rng.normal();
        SimilarityMatrix squashed;
        squashed.s = raw.s.unaryExpr([](double x) { return 1.0 / (1.0 + std::exp(-x)); });
        PairSets a = select_pairs(raw, 15, 15);
        PairSets b = select_pairs(squashed, 15, 15);
        CHECK(a.positives == b.positives);
        CHECK(a.negatives == b.negatives);
    }
}

TEST_CASE("contrastive loss at the symmetric point is 2 log 2") {
    SimilarityMatrix sim;
    sim.s = Matrix::Zero(3, 3);
    PairSets pairs;
    pairs.positives = {{0, 0}, {1, 1}, {2, 2}};
    pairs.negatives = {{0, 1}, {1, 2}};
    auto [value, grad] = contrastive_loss(sim, pairs);
    CHECK(value == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("contrastive loss approaches its supremum at extreme scores") {
    SimilarityMatrix sim;
    sim.s.resize(2, 2);
    sim.s << 50.0, -50.0, -50.0, 50.0;
    PairSets pairs;
    pairs.positives = {{0, 0}, {1, 1}};
    pairs.negatives = {{0, 1}, {1, 0}};
    auto [value, grad] = contrastive_loss(sim, pairs);
    CHECK(value >= 0.0);
    CHECK(value <= 1e-20);
}

TEST_CASE("contrastive loss stays finite for very large scores") {
    SimilarityMatrix sim;
    sim.s.resize(1, 1);
    sim.s << 1000.0;
    PairSets pairs;
    pairs.positives = {{0, 0}};
    auto [value, grad] = contrastive_loss(sim, pairs);
    CHECK(std::isfinite(value));
    sim.s << -1000.0;
    auto [v2, g2] = contrastive_loss(sim, pairs);
    CHECK(std::isfinite(v2));
    CHECK(v2 == doctest::Approx(1000.0).epsilon(1e-12));
}

TEST_CASE("empty positive set throws, empty negative set is allowed") {
    SimilarityMatrix sim;
    sim.s = Matrix::Zero(2, 2);
    PairSets empty_p;
    CHECK_THROWS_AS(contrastive_loss(sim, empty_p), std::invalid_argument);
    PairSets no_neg;
    no_neg.positives = {{0, 0}, {1, 1}};
    auto [value, grad] = contrastive_loss(sim, no_neg);
    CHECK(value == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("contrastive loss matches scalar oracle and finite differences") {
    for (int trial = 0; trial < 10; ++trial) {
        Embeddings e1 = random_embeddings(5, 3, 200 + trial);
        Embeddings e2 = random_embeddings(5, 3, 300 + trial);
        SimilarityMatrix sim = similarity(e1, e2);
        PairSets pairs = select_pairs(sim, 4, 6);
        auto [value, grad] = contrastive_loss(sim, pairs);

        CHECK(std::abs(value - contrastive_oracle(sim.s, pairs)) <= 1e-12);
        CHECK(value >= 0.0);

        const double h = 1e-6;
        for (int i = 0; i < 5; ++i)
            for (int j = 0; j < 5; ++j) {
                SimilarityMatrix pert = sim;
                pert.s(i, j) += h;
                auto [vp, gp] = contrastive_loss(pert, pairs);
                pert.s(i, j) -= 2.0 * h;
                auto [vm, gm] = contrastive_loss(pert, pairs);
                const double fd = (vp - vm) / (2.0 * h);
                CHECK(std::abs(grad(i, j) - fd) <= 1e-6);
            }
    }
}

TEST_CASE("consistency loss values and gradients") {
    SUBCASE("identical views") {
        Embeddings e = random_embeddings(4, 3, 1);
        auto [value, g1, g2] = consistency_loss(e, e);
        CHECK(value == 0.0);
        CHECK(g1.cwiseAbs().maxCoeff() == 0.0);
        CHECK(g2.cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("hand value for a single node") {
        Embeddings e1, e2;
        e1.z.resize(1, 2);
        e1.z << 1, 0;
        e2.z.resize(1, 2);
        e2.z << 0, 1;
        auto [value, g1, g2] = consistency_loss(e1, e2);
        CHECK(value == doctest::Approx(2.0).epsilon(1e-15));
    }
    SUBCASE("gradients match finite differences") {
        Embeddings e1 = random_embeddings(4, 3, 5);
        Embeddings e2 = random_embeddings(4, 3, 6);
        auto [value, g1, g2] = consistency_loss(e1, e2);
        const double h = 1e-6;
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 3; ++j) {
                Embeddings p = e1;
                p.z(i, j) += h;
                auto [vp, a, b] = consistency_loss(p, e2);
                p.z(i, j) -= 2.0 * h;
                auto [vm, c, d] = consistency_loss(p, e2);
                CHECK(std::abs(g1(i, j) - (vp - vm) / (2.0 * h)) <= 1e-6);
            }
        CHECK((g1 + g2).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("combined loss composition") {
    Embeddings e1 = random_embeddings(6, 4, 11);
    Embeddings e2 = random_embeddings(6, 4, 12);

    SUBCASE("lambda=0 reduces to the contrastive term") {
        CombinedResult r = combined_loss(e1, e2, 3, 3, 0.0);
        CHECK(r.loss.total == r.loss.contrastive);
    }
    SUBCASE("identical views with empty budgets hit the diagonal-only formula") {
        CombinedResult r = combined_loss(e1, e1, 0, 0, 0.0);
        double expect = 0.0;
        for (int i = 0; i < 6; ++i) {
            const double s = e1.z.row(i).squaredNorm();
            expect -= std::log(1.0 / (1.0 + std::exp(-s)));
        }
        expect /= 6.0;
        CHECK(r.loss.total == doctest::Approx(expect).epsilon(1e-12));
    }
    SUBCASE("total is affine in lambda with slope l_cvc") {
        CombinedResult r0 = combined_loss(e1, e2, 3, 3, 0.0);
        for (double lam : {0.1, 0.3, 0.5, 1.0}) {
            CombinedResult r = combined_loss(e1, e2, 3, 3, lam);
            CHECK(std::abs(r.loss.total - (r0.loss.total + lam * r.loss.consistency)) <= 1e-12);
        }
    }
    SUBCASE("loss decomposition holds to 1e-12") {
        for (double lam : {0.0, 0.3, 1.0}) {
            CombinedResult r = combined_loss(e1, e2, 5, 5, lam);
            CHECK(std::abs(r.loss.total - (r.loss.contrastive + lam * r.loss.consistency)) <=
                  1e-12);
        }
    }
    SUBCASE("combined gradient equals sum of part gradients") {
        const double lam = 0.3;
        CombinedResult r = combined_loss(e1, e2, 4, 4, lam);
        SimilarityMatrix sim = similarity(e1, e2);
        auto [cl, grad_s] = contrastive_loss(sim, r.pairs);
        auto [cvc, cg1, cg2] = consistency_loss(e1, e2);
        Matrix expect_g1 = grad_s * e2.z + lam * cg1;
        Matrix expect_g2 = grad_s.transpose() * e1.z + lam * cg2;
        CHECK((r.grad_z1 - expect_g1).cwiseAbs().maxCoeff() <= 1e-10);
        CHECK((r.grad_z2 - expect_g2).cwiseAbs().maxCoeff() <= 1e-10);
    }
}

TEST_CASE("combined loss gradient matches finite differences through Z") {
    Embeddings e1 = random_embeddings(5, 3, 21);
    Embeddings e2 = random_embeddings(5, 3, 22);
    const double lam = 0.4;
    CombinedResult base = combined_loss(e1, e2, 3, 3, lam);

    const double h = 1e-6;
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 3; ++j) {
            Embeddings p = e1;
            p.z(i, j) += h;
            double vp = combined_loss_with_pairs(p, e2, base.pairs, lam).loss.total;
            p.z(i, j) -= 2.0 * h;
            double vm = combined_loss_with_pairs(p, e2, base.pairs, lam).loss.total;
            CHECK(std::abs(base.grad_z1(i, j) - (vp - vm) / (2.0 * h)) <= 1e-5);
        }
}

TEST_CASE("joint row permutation permutes pairs and preserves loss") {
    Embeddings e1 = random_embeddings(6, 4, 31);
    Embeddings e2 = random_embeddings(6, 4, 32);
    CombinedResult base = combined_loss(e1, e2, 4, 4, 0.3);

    std::vector<int> perm = {3, 5, 0, 1, 4, 2};
    Embeddings p1, p2;
    p1.z.resize(6, 4);
    p2.z.resize(6, 4);
    for (int i = 0; i < 6; ++i) {
        p1.z.row(perm[i]) = e1.z.row(i);
        p2.z.row(perm[i]) = e2.z.row(i);
    }
    CombinedResult permuted = combined_loss(p1, p2, 4, 4, 0.3);
    CHECK(std::abs(permuted.loss.total - base.loss.total) <= 1e-10);

    auto mapped = base.pairs.negatives;
    for (auto& [i, j] : mapped) {
        i = perm[i];
        j = perm[j];
    }
    std::sort(mapped.begin(), mapped.end());
    auto got = permuted.pairs.negatives;
    std::sort(got.begin(), got.end());
    CHECK(got == mapped);
}

TEST_CASE("shuffling pair selection") {
    SUBCASE("n=2 either fixes both or swaps both") {
        bool saw_derangement = false;
        for (int seed = 0; seed < 20; ++seed) {
            PairSets p = select_pairs_shuffling(2, seed);
            CHECK(p.positives.size() == 2);
            if (p.negatives.size() == 2) {
                CHECK(p.negatives ==
                      std::vector<std::pair<int, int>>{{0, 1}, {1, 0}});
                saw_derangement = true;
            } else {
                CHECK(p.negatives.empty());  // identity permutation
            }
        }
        CHECK(saw_derangement);
    }
    SUBCASE("positives are always the full diagonal") {
        PairSets p = select_pairs_shuffling(15, 7);
        CHECK(p.positives.size() == 15);
        for (int i = 0; i < 15; ++i) CHECK(p.positives[i] == std::pair<int, int>{i, i});
        for (auto [i, j] : p.negatives) CHECK(i != j);
    }
    SUBCASE("fixed seed gives identical sets") {
        PairSets a = select_pairs_shuffling(20, 99);
        PairSets b = select_pairs_shuffling(20, 99);
        CHECK(a.negatives == b.negatives);
    }
}
