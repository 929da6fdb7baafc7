#include "igr/estimators.hpp"

#include <cmath>

namespace igr {

namespace {

// Cotangent on the K-1 free coordinates from a gradient on the completed
// vector (the last coordinate is 1 - sum of the others).
Vector free_cotangent(const Vector& completed_grad)
{
    const Eigen::Index n = completed_grad.size() - 1;
    return (completed_grad.head(n).array() - completed_grad[n]).matrix();
}

void accumulate(std::vector<PlanarLayerGrad>& into, const std::vector<PlanarLayerGrad>& add)
{
    if (into.empty()) {
        into = add;
        return;
    }
    for (std::size_t l = 0; l < into.size(); ++l) {
        into[l].w += add[l].w;
        into[l].u += add[l].u;
        into[l].b += add[l].b;
    }
}

Vector softmax(const Vector& logits)
{
    const Vector e = (logits.array() - logits.maxCoeff()).exp().matrix();
    return e / e.sum();
}

} // namespace

Vector TestObjective::gradient_at(const Vector& completed) const
{
    if (gradient)
        return gradient(completed);
    Vector g(completed.size());
    Vector x = completed;
    for (Eigen::Index k = 0; k < x.size(); ++k) {
        const double h = 1e-6 * (1.0 + std::abs(x[k]));
        const double orig = x[k];
        x[k] = orig + h;
        const double fp = eval(x);
        x[k] = orig - h;
        const double fm = eval(x);
        x[k] = orig;
        g[k] = (fp - fm) / (2.0 * h);
    }
    return g;
}

TestObjective TestObjective::linear(const Vector& values)
{
    TestObjective obj;
    obj.eval = [values](const Vector& z) { return values.dot(z); };
    obj.gradient = [values](const Vector&) { return values; };
    obj.discrete_eval = [values](Eigen::Index k) { return values[k]; };
    return obj;
}

IgrGradient reparam_grad_sample(const IgrParams& params, const TestObjective& obj, const Vector& epsilon)
{
    const SampleTrace s = igr_sample_from_noise(params, epsilon);
    const Vector cot = free_cotangent(obj.gradient_at(s.z.completed()));
    const Vector dy = pullback(params.spec, s.y, params.tau, cot);
    return {dy, dy.cwiseProduct(epsilon)};
}

IgrGradient reparam_grad(const IgrParams& params, const TestObjective& obj, std::size_t batch, Rng& rng)
{
    if (batch == 0)
        throw InvalidInputError("reparam_grad: batch must be at least 1");
    params.validate();
    IgrGradient sum{Vector::Zero(params.dim()), Vector::Zero(params.dim())};
    for (std::size_t b = 0; b < batch; ++b) {
        const IgrGradient g = reparam_grad_sample(params, obj, rng.normal_vector(params.dim()));
        sum.mu += g.mu;
        sum.sigma += g.sigma;
    }
    const double inv = 1.0 / static_cast<double>(batch);
    return {sum.mu * inv, sum.sigma * inv};
}

Vector score_grad_sample(const Vector& logits, const TestObjective& obj, Rng& rng)
{
    if (!obj.discrete_eval)
        throw ContractError("score_grad: objective has no discrete restriction");
    const Vector p = softmax(logits);
    const double u = rng.uniform();
    Eigen::Index k = 0;
    double cum = p[0];
    while (u >= cum && k + 1 < p.size())
        cum += p[++k];
    Vector g = -p;
    g[k] += 1.0;
    return obj.discrete_eval(k) * g;
}

Vector score_grad(const Vector& logits, const TestObjective& obj, std::size_t batch, Rng& rng)
{
    if (!obj.discrete_eval)
        throw ContractError("score_grad: objective has no discrete restriction");
    if (batch == 0)
        throw InvalidInputError("score_grad: batch must be at least 1");
    require_finite(logits, "score_grad logits");
    Vector sum = Vector::Zero(logits.size());
    for (std::size_t b = 0; b < batch; ++b)
        sum += score_grad_sample(logits, obj, rng);
    return sum / static_cast<double>(batch);
}

IgrGradient score_grad_igr_sample(const IgrParams& params, const TestObjective& obj, const Vector& epsilon)
{
    if (!obj.discrete_eval)
        throw ContractError("score_grad: objective has no discrete restriction");
    if (params.spec.kind != TransformKind::SoftmaxPP)
        throw ContractError("score_grad: discrete recovery in closed form needs the softmax++ transform");
    const SampleTrace s = igr_sample_from_noise(params, epsilon);
    const Eigen::Index h = discretize(s.z, params.spec.delta);
    const QuadratureRecovery alpha = recover_pmf_quad(params.mu, params.sigma);
    const double p_h = alpha.pmf.probs[h] * (alpha.renormalized ? alpha.raw_sum : 1.0);
    Vector cot = Vector::Zero(params.categories());
    cot[h] = obj.discrete_eval(h) / p_h;
    const MuSigma g = recover_pmf_quad_pullback(params.mu, params.sigma, cot);
    return {g.mu, g.sigma};
}

MomentMatchGrad moment_match_grad(const IgrParams& params, const Vector& target, const std::vector<Vector>& noise)
{
    params.validate();
    if (target.size() != params.categories())
        throw InvalidInputError("moment matching: target has " + std::to_string(target.size()) +
                                " categories, relaxation has " + std::to_string(params.categories()));
    if (noise.empty())
        throw InvalidInputError("moment matching: empty batch");
    const Eigen::Index n = params.dim();
    MomentMatchGrad out{0.0, Vector::Zero(n), Vector::Zero(n), {}};
    for (const Vector& eps : noise) {
        if (eps.size() != n)
            throw InvalidInputError("moment matching: noise dimension mismatch");
        const Vector y = params.mu + params.sigma.cwiseProduct(eps);
        const Forwarded f = forward(params.spec, y, params.tau);
        const Vector diff = f.z.completed() - target;
        out.loss += diff.squaredNorm();
        const Vector cot = free_cotangent(2.0 * diff);
        const FullPullback pb = pullback_with_params(params.spec, y, params.tau, cot);
        out.mu += pb.y;
        out.log_sigma += pb.y.cwiseProduct(eps).cwiseProduct(params.sigma);
        accumulate(out.flow, pb.flow);
    }
    const double inv = 1.0 / static_cast<double>(noise.size());
    out.loss *= inv;
    out.mu *= inv;
    out.log_sigma *= inv;
    for (auto& g : out.flow) {
        g.w *= inv;
        g.u *= inv;
        g.b *= inv;
    }
    return out;
}

double moment_match_loss(const IgrParams& params, const DiscretePmf& target, std::size_t batch, Rng& rng)
{
    if (batch == 0)
        throw InvalidInputError("moment matching: batch must be at least 1");
    if (target.size() != params.categories())
        throw InvalidInputError("moment matching: target dimension does not match the relaxation");
    params.validate();
    double loss = 0.0;
    for (std::size_t b = 0; b < batch; ++b) {
        const SampleTrace s = igr_sample_from_noise(params, rng.normal_vector(params.dim()));
        loss += (s.z.completed() - target.probs).squaredNorm();
    }
    return loss / static_cast<double>(batch);
}

GsMomentMatchGrad gs_moment_match_grad(const GsParams& params, const Vector& target, const std::vector<Vector>& gumbels)
{
    params.validate();
    if (target.size() != params.categories())
        throw InvalidInputError("moment matching: target dimension does not match the relaxation");
    if (gumbels.empty())
        throw InvalidInputError("moment matching: empty batch");
    GsMomentMatchGrad out{0.0, Vector::Zero(params.categories())};
    for (const Vector& g : gumbels) {
        const Vector diff = gs_from_noise(params, g) - target;
        out.loss += diff.squaredNorm();
        out.log_alpha += gs_pullback_log_alpha(params, g, 2.0 * diff);
    }
    const double inv = 1.0 / static_cast<double>(gumbels.size());
    out.loss *= inv;
    out.log_alpha *= inv;
    return out;
}

TruncatedMomentMatchGrad truncated_moment_match_grad(const GrowableIgrParams& params, const Vector& target,
                                                     const std::vector<TruncatedTrace>& traces)
{
    if (traces.empty())
        throw InvalidInputError("moment matching: empty batch");
    TruncatedMomentMatchGrad out;
    for (const auto& t : traces)
        out.max_k_used = std::max(out.max_k_used, t.k_used);
    out.mu.assign(out.max_k_used, 0.0);
    out.log_sigma.assign(out.max_k_used, 0.0);

    // Suffix sums of p_j^2 for the part of the target past the truncation.
    std::vector<double> tail_sq(static_cast<std::size_t>(target.size()) + 1, 0.0);
    for (Eigen::Index j = target.size() - 1; j >= 0; --j)
        tail_sq[static_cast<std::size_t>(j)] = tail_sq[static_cast<std::size_t>(j) + 1] + target[j] * target[j];

    auto target_at = [&](Eigen::Index j) { return j < target.size() ? target[j] : 0.0; };
    for (const auto& t : traces) {
        const SimplexInterior& z = t.trace.z;
        const auto k = static_cast<Eigen::Index>(t.k_used);
        Vector diff(k);
        for (Eigen::Index j = 0; j < k; ++j)
            diff[j] = z[j] - target_at(j);
        const double r = z.remainder();
        const double past = k < target.size() ? tail_sq[static_cast<std::size_t>(k)] : 0.0;
        out.loss += diff.squaredNorm() + r * r + past;
        const Vector cot = (2.0 * diff.array() - 2.0 * r).matrix();
        const MuSigma g = truncated_pullback(params, t, cot);
        for (Eigen::Index j = 0; j < k; ++j) {
            const auto idx = static_cast<std::size_t>(j);
            out.mu[idx] += g.mu[j];
            out.log_sigma[idx] += g.sigma[j] * params.sigma(idx);
        }
    }
    const double inv = 1.0 / static_cast<double>(traces.size());
    out.loss *= inv;
    for (std::size_t j = 0; j < out.max_k_used; ++j) {
        out.mu[j] *= inv;
        out.log_sigma[j] *= inv;
    }
    return out;
}

} // namespace igr
