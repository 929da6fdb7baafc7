#pragma once

// Gradient estimators and the moment-matching objective.

#include "igr/common.hpp"
#include "igr/distributions.hpp"
#include "igr/infinite.hpp"
#include "igr/recovery.hpp"

#include <functional>
#include <vector>

namespace igr {

/// A relaxed objective f~ on completed probability vectors, optionally with
/// its discrete restriction f on category indices (0-based).
struct TestObjective {
    std::function<double(const Vector&)> eval;
    /// Analytic gradient of eval; central differences are used when empty.
    std::function<Vector(const Vector&)> gradient;
    std::function<double(Eigen::Index)> discrete_eval;

    Vector gradient_at(const Vector& completed) const;

    /// f~(z) = sum_k f(k) z_k, the linear extension of a discrete objective.
    static TestObjective linear(const Vector& values);
};

/// Estimated gradient with respect to (mu, sigma).
struct IgrGradient {
    Vector mu;
    Vector sigma;
};

/// Single-draw reparameterization gradient for noise epsilon.
IgrGradient reparam_grad_sample(const IgrParams& params, const TestObjective& obj, const Vector& epsilon);

/// (1/B) sum_b grad_{mu,sigma} f~(g(mu + sigma eps_b, tau)).
IgrGradient reparam_grad(const IgrParams& params, const TestObjective& obj, std::size_t batch, Rng& rng);

/// Single-draw score-function gradient for a categorical with the given
/// logits: f(k) (e_k - softmax(logits)), k ~ softmax(logits).
Vector score_grad_sample(const Vector& logits, const TestObjective& obj, Rng& rng);

/// (1/B) sum_b f(k_b) grad log p(k_b). Requires obj.discrete_eval.
Vector score_grad(const Vector& logits, const TestObjective& obj, std::size_t batch, Rng& rng);

/// Score-function gradient with respect to (mu, sigma) of E_{H ~ alpha(mu, sigma)} f(H),
/// where alpha(mu, sigma) is the discrete distribution recovered from a
/// softmax++ relaxation and H is drawn by discretizing an IGR sample driven
/// by `epsilon`. Gives the score estimator in the same coordinates as
/// reparam_grad_sample.
IgrGradient score_grad_igr_sample(const IgrParams& params, const TestObjective& obj, const Vector& epsilon);

/// Loss and gradients of (1/B) sum_b ||completed(z_b) - target||^2 for fixed noise.
/// Gradients are taken with respect to mu, log sigma and the flow parameters.
struct MomentMatchGrad {
    double loss = 0.0;
    Vector mu;
    Vector log_sigma;
    std::vector<PlanarLayerGrad> flow;
};

MomentMatchGrad moment_match_grad(const IgrParams& params, const Vector& target, const std::vector<Vector>& noise);

/// Monte-Carlo moment-matching loss with `batch` fresh draws.
double moment_match_loss(const IgrParams& params, const DiscretePmf& target, std::size_t batch, Rng& rng);

/// GS version: gradients with respect to log alpha.
struct GsMomentMatchGrad {
    double loss = 0.0;
    Vector log_alpha;
};
GsMomentMatchGrad gs_moment_match_grad(const GsParams& params, const Vector& target, const std::vector<Vector>& gumbels);

/// Truncated-infinite version. For a draw using K coordinates the per-sample
/// loss is sum_{j<K} (z_j - p_j)^2 + r^2 + sum_{j>=K} p_j^2 with r the
/// leftover mass of z. Gradients are sized to the largest K in the batch.
struct TruncatedMomentMatchGrad {
    double loss = 0.0;
    std::vector<double> mu;
    std::vector<double> log_sigma;
    std::size_t max_k_used = 0;
};
TruncatedMomentMatchGrad truncated_moment_match_grad(const GrowableIgrParams& params, const Vector& target,
                                                     const std::vector<TruncatedTrace>& traces);

} // namespace igr
