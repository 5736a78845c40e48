#pragma once

#include "milbo/encoder.hpp"

#include <stdexcept>

namespace milbo {

class NonFiniteGradient : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    Matrix m_w1, v_w1;
    Matrix m_w2, v_w2;
    Eigen::VectorXd m_b1, v_b1;  // empty when the params carry no bias
    Eigen::VectorXd m_b2, v_b2;
    long t = 0;
    AdamConfig cfg;
};

AdamState adam_init(const EncoderParams& params, const AdamConfig& cfg);

// Standard bias-corrected Adam. Throws NonFiniteGradient (state and params
// untouched) if any gradient entry is non-finite.
void adam_step(EncoderParams& params, const EncoderGrads& grads, AdamState& state);

}  // namespace milbo
