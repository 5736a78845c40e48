#include "milbo/gradcheck.hpp"

#include "milbo/view.hpp"

#include <cmath>

namespace milbo {

namespace {

// One epoch's loss as a function of the parameters, with the views and the
// pair sets frozen (pair selection is held constant during differentiation,
// matching the analytic path).
struct FrozenEpoch {
    const Graph* g;
    ViewSample v1, v2;
    PairSets pairs;
    Strategy strategy;
    double lambda;

    double loss(const EncoderParams& params) const {
        auto [z1, t1] = forward(params, v1);
        auto [z2, t2] = forward(params, v2);
        return eval(z1, z2).loss.total;
    }

    CombinedResult eval(const Embeddings& z1, const Embeddings& z2) const {
        if (strategy == Strategy::consistency_only) {
            auto [cvc, g1, g2] = consistency_loss(z1, z2);
            CombinedResult out;
            out.loss.consistency = cvc;
            out.loss.lambda = lambda;
            out.loss.total = lambda * cvc;
            out.grad_z1 = lambda * g1;
            out.grad_z2 = lambda * g2;
            return out;
        }
        return combined_loss_with_pairs(z1, z2, pairs, lambda);
    }
};

}  // namespace

GradCheckReport grad_check(const Graph& g, const TrainConfig& cfg, std::uint64_t seed,
                           double fd_step, double tolerance) {
    cfg.validate();
    EncoderParams params =
        init_params(g.f, cfg.d_hidden, cfg.d_out, seed, cfg.use_bias, cfg.negative_slope);

    Rng rng(seed, 0);
    FrozenEpoch ep;
    ep.g = &g;
    ep.v1 = sample_view(g, SampleConfig{cfg.p_h, cfg.p_a}, rng);
    ep.v2 = sample_view(g, SampleConfig{cfg.p_h2.value_or(cfg.p_h), cfg.p_a2.value_or(cfg.p_a)},
                        rng);
    const std::uint64_t pair_seed = rng.next_u64();
    ep.strategy = cfg.strategy;
    ep.lambda = cfg.lambda;

    // Analytic gradient at the base point; pairs frozen from this evaluation.
    auto [z1, tape1] = forward(params, ep.v1);
    auto [z2, tape2] = forward(params, ep.v2);
    if (cfg.strategy == Strategy::milbo) {
        ep.pairs = select_pairs(similarity(z1, z2), cfg.k, cfg.l);
    } else if (cfg.strategy == Strategy::shuffling) {
        ep.pairs = select_pairs_shuffling(g.n, pair_seed);
    }
    CombinedResult base = ep.eval(z1, z2);
    EncoderGrads g1 = backward(params, tape1, base.grad_z1);
    EncoderGrads g2 = backward(params, tape2, base.grad_z2);
    EncoderGrads analytic{g1.w1 + g2.w1, g1.w2 + g2.w2};
    if (params.has_bias()) {
        analytic.b1 = g1.b1 + g2.b1;
        analytic.b2 = g1.b2 + g2.b2;
    }

    GradCheckReport report;
    report.tolerance = tolerance;

    auto check_entry = [&](double& x, double a) {
        const double orig = x;
        x = orig + fd_step;
        const double lp = ep.loss(params);
        x = orig - fd_step;
        const double lm = ep.loss(params);
        x = orig;
        const double fd = (lp - lm) / (2.0 * fd_step);
        const double rel = std::abs(a - fd) / std::max(1e-4, std::abs(a) + std::abs(fd));
        report.max_rel_error = std::max(report.max_rel_error, rel);
        ++report.params_checked;
    };
    auto check_matrix = [&](Matrix& w, const Matrix& grad) {
        for (long i = 0; i < w.rows(); ++i)
            for (long j = 0; j < w.cols(); ++j) check_entry(w(i, j), grad(i, j));
    };
    check_matrix(params.w1, analytic.w1);
    check_matrix(params.w2, analytic.w2);
    if (params.has_bias()) {
        for (long i = 0; i < params.b1.size(); ++i) check_entry(params.b1[i], analytic.b1[i]);
        for (long i = 0; i < params.b2.size(); ++i) check_entry(params.b2[i], analytic.b2[i]);
    }

    report.passed = report.max_rel_error <= tolerance;
    return report;
}

}  // namespace milbo
