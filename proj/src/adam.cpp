#include "milbo/adam.hpp"

#include <cmath>

namespace milbo {

AdamState adam_init(const EncoderParams& params, const AdamConfig& cfg) {
    AdamState s;
    s.m_w1 = Matrix::Zero(params.w1.rows(), params.w1.cols());
    s.v_w1 = Matrix::Zero(params.w1.rows(), params.w1.cols());
    s.m_w2 = Matrix::Zero(params.w2.rows(), params.w2.cols());
    s.v_w2 = Matrix::Zero(params.w2.rows(), params.w2.cols());
    if (params.has_bias()) {
        s.m_b1 = Eigen::VectorXd::Zero(params.b1.size());
        s.v_b1 = Eigen::VectorXd::Zero(params.b1.size());
        s.m_b2 = Eigen::VectorXd::Zero(params.b2.size());
        s.v_b2 = Eigen::VectorXd::Zero(params.b2.size());
    }
    s.cfg = cfg;
    return s;
}

void adam_step(EncoderParams& params, const EncoderGrads& grads, AdamState& state) {
    if (!grads.w1.allFinite() || !grads.w2.allFinite() || !grads.b1.allFinite() ||
        !grads.b2.allFinite())
        throw NonFiniteGradient("adam_step: non-finite gradient, step refused");

    const AdamConfig& c = state.cfg;
    state.t += 1;
    const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.t));

    auto update = [&](auto& w, const auto& g, auto& m, auto& v) {
        m = c.beta1 * m + (1.0 - c.beta1) * g;
        v = c.beta2 * v + (1.0 - c.beta2) * g.cwiseProduct(g);
        auto m_hat = (m / bc1).eval();
        auto v_hat = (v / bc2).eval();
        w.array() -= c.lr * m_hat.array() / (v_hat.array().sqrt() + c.eps);
    };
    update(params.w1, grads.w1, state.m_w1, state.v_w1);
    update(params.w2, grads.w2, state.m_w2, state.v_w2);
    if (params.has_bias()) {
        update(params.b1, grads.b1, state.m_b1, state.v_b1);
        update(params.b2, grads.b2, state.m_b2, state.v_b2);
    }
}

}  // namespace milbo
