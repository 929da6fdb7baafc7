#pragma once

#include "igr/common.hpp"

#include <string>
#include <vector>

namespace igr {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Adam moments. Parameter vectors may grow between steps (truncated
/// supports); new coordinates start with zero moments and their own bias
/// correction count.
struct OptimizerState {
    AdamConfig config;
    std::size_t step = 0;
    Vector m;
    Vector v;
    std::vector<std::size_t> coordinate_steps;

    explicit OptimizerState(AdamConfig cfg = {}, Eigen::Index dim = 0);

    Eigen::Index dim() const { return m.size(); }
    void grow(Eigen::Index dim);
};

struct StepStatus {
    bool accepted = true;
    std::string diagnostic;
};

/// Bias-corrected Adam update of `params` in place. A non-finite gradient
/// rejects the step and leaves params and state untouched.
StepStatus adam_step(OptimizerState& state, Vector& params, const Vector& grads);

} // namespace igr
