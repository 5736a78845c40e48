#pragma once

#include "milbo/train.hpp"

namespace milbo {

struct GradCheckReport {
    double max_rel_error = 0.0;
    int params_checked = 0;
    bool passed = false;
    double tolerance = 1e-4;
};

// Runs the full combined loss through forward/backward on one sampled epoch
// and compares every encoder parameter's analytic gradient against central
// finite differences (step 1e-5). Intended for small graphs (n <= 50).
GradCheckReport grad_check(const Graph& g, const TrainConfig& cfg, std::uint64_t seed,
                           double fd_step = 1e-5, double tolerance = 1e-4);

}  // namespace milbo
