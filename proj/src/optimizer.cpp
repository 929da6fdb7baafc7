#include "igr/optimizer.hpp"

#include <cmath>

namespace igr {

OptimizerState::OptimizerState(AdamConfig cfg, Eigen::Index dim) : config(cfg)
{
    grow(dim);
}

void OptimizerState::grow(Eigen::Index dim)
{
    const Eigen::Index old = m.size();
    if (dim <= old)
        return;
    m.conservativeResize(dim);
    v.conservativeResize(dim);
    m.tail(dim - old).setZero();
    v.tail(dim - old).setZero();
    coordinate_steps.resize(static_cast<std::size_t>(dim), 0);
}

StepStatus adam_step(OptimizerState& state, Vector& params, const Vector& grads)
{
    if (params.size() != grads.size())
        return {false, "adam: parameter and gradient sizes differ"};
    for (Eigen::Index i = 0; i < grads.size(); ++i) {
        if (!std::isfinite(grads[i]))
            return {false, "adam: non-finite gradient at coordinate " + std::to_string(i)};
    }
    state.grow(params.size());
    const auto& c = state.config;
    ++state.step;
    for (Eigen::Index i = 0; i < params.size(); ++i) {
        const auto t = static_cast<double>(++state.coordinate_steps[static_cast<std::size_t>(i)]);
        state.m[i] = c.beta1 * state.m[i] + (1.0 - c.beta1) * grads[i];
        state.v[i] = c.beta2 * state.v[i] + (1.0 - c.beta2) * grads[i] * grads[i];
        const double m_hat = state.m[i] / (1.0 - std::pow(c.beta1, t));
        const double v_hat = state.v[i] / (1.0 - std::pow(c.beta2, t));
        params[i] -= c.lr * m_hat / (std::sqrt(v_hat) + c.eps);
    }
    return {};
}

} // namespace igr
