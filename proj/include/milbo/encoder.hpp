#pragma once

#include "milbo/graph.hpp"
#include "milbo/view.hpp"

#include <cstdint>
#include <utility>

namespace milbo {

// Two-layer GCN weights, shared across both views (Siamese contract).
// Biases are optional (size 0 when disabled); negative_slope = 0 gives relu,
// a positive slope gives the leaky prelu-style alternative.
struct EncoderParams {
    Matrix w1;  // f x d_hidden
    Matrix w2;  // d_hidden x d_out
    Eigen::VectorXd b1;  // d_hidden, or empty
    Eigen::VectorXd b2;  // d_out, or empty
    double negative_slope = 0.0;

    bool has_bias() const { return b1.size() > 0; }
    int f_dim() const { return static_cast<int>(w1.rows()); }
    int d_hidden() const { return static_cast<int>(w1.cols()); }
    int d_out() const { return static_cast<int>(w2.cols()); }
};

struct Embeddings {
    Matrix z;  // n x d_out
    int view_tag = 0;
};

// Cached forward activations for the backward pass.
struct EncoderTape {
    SparseMatrix prop;    // the view's propagation matrix
    Matrix prop_input;    // prop * masked_features      (n x f)
    Matrix pre_act;       // prop_input * w1             (n x d_hidden)
    Matrix hidden;        // prop * relu(pre_act)        (n x d_hidden)
};

struct EncoderGrads {
    Matrix w1;
    Matrix w2;
    Eigen::VectorXd b1;  // empty when the params carry no bias
    Eigen::VectorXd b2;
};

// Glorot-uniform weights, bounds +-sqrt(6 / (fan_in + fan_out)); biases, when
// enabled, start at zero.
EncoderParams init_params(int f_dim, int d_hidden, int d_out, std::uint64_t seed,
                          bool use_bias = false, double negative_slope = 0.0);

// Z = P * act(P * H_masked * W1 + b1) * W2 + b2 with P the view's dropped
// normalized adjacency and act the (possibly leaky) rectifier.
std::pair<Embeddings, EncoderTape> forward(const EncoderParams& params, const ViewSample& view);

// Exact reverse mode through both layers; the rectifier subgradient at 0 uses
// the negative-branch slope (0 for plain relu).
EncoderGrads backward(const EncoderParams& params, const EncoderTape& tape,
                      const Matrix& grad_z);

}  // namespace milbo
