#include "milbo/encoder.hpp"

#include "milbo/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace milbo {

EncoderParams init_params(int f_dim, int d_hidden, int d_out, std::uint64_t seed,
                          bool use_bias, double negative_slope) {
    if (f_dim <= 0 || d_hidden <= 0 || d_out <= 0)
        throw std::invalid_argument("init_params: dimensions must be positive");
    if (negative_slope < 0.0 || negative_slope >= 1.0)
        throw std::invalid_argument("init_params: negative_slope must be in [0, 1)");
    Rng rng(seed);
    auto glorot = [&rng](int fan_in, int fan_out) {
        const double bound = std::sqrt(6.0 / (fan_in + fan_out));
        Matrix w(fan_in, fan_out);
        for (int i = 0; i < fan_in; ++i)
            for (int j = 0; j < fan_out; ++j) w(i, j) = rng.uniform(-bound, bound);
        return w;
    };
    EncoderParams p;
    p.w1 = glorot(f_dim, d_hidden);
    p.w2 = glorot(d_hidden, d_out);
    if (use_bias) {
        p.b1 = Eigen::VectorXd::Zero(d_hidden);
        p.b2 = Eigen::VectorXd::Zero(d_out);
    }
    p.negative_slope = negative_slope;
    return p;
}

std::pair<Embeddings, EncoderTape> forward(const EncoderParams& params, const ViewSample& view) {
    if (view.masked_features.cols() != params.w1.rows())
        throw std::invalid_argument("forward: feature dimension does not match W1");

    EncoderTape tape;
    tape.prop = view.dropped_adjacency.mat;
    tape.prop_input = tape.prop * view.masked_features;
    tape.pre_act = tape.prop_input * params.w1;
    if (params.has_bias()) tape.pre_act.rowwise() += params.b1.transpose();
    Matrix activated = tape.pre_act.cwiseMax(0.0);
    if (params.negative_slope > 0.0)
        activated += params.negative_slope * tape.pre_act.cwiseMin(0.0);
    tape.hidden = tape.prop * activated;

    Embeddings z;
    z.z = tape.hidden * params.w2;
    if (params.has_bias()) z.z.rowwise() += params.b2.transpose();
    return {std::move(z), std::move(tape)};
}

EncoderGrads backward(const EncoderParams& params, const EncoderTape& tape,
                      const Matrix& grad_z) {
    if (grad_z.rows() != tape.hidden.rows() || grad_z.cols() != params.w2.cols())
        throw std::invalid_argument("backward: grad_z shape mismatch");

    EncoderGrads g;
    g.w2 = tape.hidden.transpose() * grad_z;

    // prop is symmetric, so prop^T * x = prop * x.
    Matrix grad_hidden_act = tape.prop * (grad_z * params.w2.transpose());
    // rectifier': 1 where pre_act > 0, negative_slope at and below 0.
    const double slope = params.negative_slope;
    Matrix deriv = (tape.pre_act.array() > 0.0).cast<double>();
    if (slope > 0.0) deriv = deriv.array() + slope * (1.0 - deriv.array());
    Matrix grad_pre = deriv.array() * grad_hidden_act.array();
    g.w1 = tape.prop_input.transpose() * grad_pre;
    if (params.has_bias()) {
        g.b1 = grad_pre.colwise().sum();
        g.b2 = grad_z.colwise().sum();
    }
    return g;
}

}  // namespace milbo
