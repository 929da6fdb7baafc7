#include "igr/infinite.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace igr {

GrowableIgrParams::GrowableIgrParams(double tau, double rho, TransformSpec spec)
    : tau_(tau), rho_(rho), spec_(std::move(spec))
{
    if (!(tau > 0.0) || !std::isfinite(tau))
        throw InvalidInputError("truncated IGR: temperature must be positive");
    if (!(rho > 0.0 && rho < 1.0))
        throw InvalidInputError("truncated IGR: precision rho must lie in (0, 1)");
    if (spec_.kind != TransformKind::SbSoftmaxPP && spec_.kind != TransformKind::SbIdentity)
        throw InvalidInputError("truncated IGR: transform must be SbSoftmaxPP or SbIdentity");
    spec_.validate(0);
}

void GrowableIgrParams::set(std::size_t k, double mu, double sigma)
{
    if (!std::isfinite(mu) || !(sigma > 0.0) || !std::isfinite(sigma))
        throw InvalidInputError("truncated IGR: invalid coordinate value");
    materialize(k + 1);
    mu_[k] = mu;
    sigma_[k] = sigma;
}

void GrowableIgrParams::materialize(std::size_t k)
{
    if (k > mu_.size()) {
        mu_.resize(k, kDefaultMu);
        sigma_.resize(k, kDefaultSigma);
    }
}

double TruncatedTrace::captured_mass() const
{
    const Vector& w = *trace.w;
    double cum = 0.0;
    for (Eigen::Index k = 0; k < w.size(); ++k)
        cum += w[k];
    return cum;
}

TruncatedTrace sample_truncated(const GrowableIgrParams& params, Rng& rng)
{
    const double rho = params.rho();
    std::vector<double> eps;
    std::vector<double> ys;
    double stick = 1.0;
    double cum = 0.0;
    for (std::size_t k = 0;; ++k) {
        if (k >= params.hard_cap())
            throw RunawayTruncationError("truncated sampling exceeded " + std::to_string(params.hard_cap()) +
                                         " coordinates (rho too close to 1 or degenerate parameters)");
        const double e = rng.normal();
        const double y = params.mu(k) + params.sigma(k) * e;
        eps.push_back(e);
        ys.push_back(y);
        // Same arithmetic as the stick-breaking stage of forward().
        const double u = std::clamp(sigmoid(y), 1e-12, 1.0 - 1e-12);
        const double comp = std::clamp(sigmoid(-y), 1e-12, 1.0 - 1e-12);
        cum += u * stick;
        stick *= comp;
        if (cum > rho)
            break;
    }
    const auto n = static_cast<Eigen::Index>(ys.size());
    Vector epsilon = Eigen::Map<const Vector>(eps.data(), n);
    Vector y = Eigen::Map<const Vector>(ys.data(), n);
    Forwarded f = forward(params.spec(), y, params.tau());
    return TruncatedTrace{ys.size(), SampleTrace{std::move(epsilon), std::move(y), std::move(f.w), std::move(f.z), f.log_det_jac}};
}

TruncatedTrace sample_truncated_and_materialize(GrowableIgrParams& params, Rng& rng)
{
    TruncatedTrace t = sample_truncated(params, rng);
    params.materialize(t.k_used);
    return t;
}

std::vector<std::size_t> gradient_coords(const TruncatedTrace& trace)
{
    std::vector<std::size_t> out(trace.k_used);
    for (std::size_t k = 0; k < trace.k_used; ++k)
        out[k] = k;
    return out;
}

MuSigma truncated_pullback(const GrowableIgrParams& params, const TruncatedTrace& trace, const Vector& cotangent)
{
    const Vector dy = pullback(params.spec(), trace.trace.y, params.tau(), cotangent);
    return {dy, dy.cwiseProduct(trace.trace.epsilon)};
}

std::size_t truncated_category(const GrowableIgrParams& params, const TruncatedTrace& trace)
{
    if (params.spec().kind == TransformKind::SbSoftmaxPP)
        return static_cast<std::size_t>(discretize(trace.trace.z, params.spec().delta));
    // The remainder past the truncation point is not a category of its own.
    return static_cast<std::size_t>(argmax_lowest(*trace.trace.w));
}

PmfEstimate recover_pmf_truncated(const GrowableIgrParams& params, std::size_t n, Rng& rng, std::size_t support_limit)
{
    if (n == 0)
        throw InvalidInputError("truncated recovery: need at least one sample");
    std::vector<std::size_t> counts;
    std::size_t tail = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t c = truncated_category(params, sample_truncated(params, rng));
        if (support_limit != 0 && c >= support_limit) {
            ++tail;
            continue;
        }
        if (c >= counts.size())
            counts.resize(c + 1, 0);
        ++counts[c];
    }
    const auto k = static_cast<Eigen::Index>(counts.size());
    const double nd = static_cast<double>(n);
    PmfEstimate out{DiscretePmf{Vector(k), SupportKind::TruncatedInfinite, static_cast<double>(tail) / nd}, Vector(k)};
    for (Eigen::Index i = 0; i < k; ++i) {
        const double p = static_cast<double>(counts[static_cast<std::size_t>(i)]) / nd;
        out.pmf.probs[i] = p;
        out.std_error[i] = std::sqrt(p * (1.0 - p) / nd);
    }
    return out;
}

PmfEstimate recover_pmf_truncated_mean(const GrowableIgrParams& params, std::size_t n, Rng& rng,
                                       std::size_t support_limit)
{
    double tail = 0.0;
    PmfEstimate out = mean_of_draws(
        [&] {
            const TruncatedTrace t = sample_truncated(params, rng);
            const Vector& z = t.trace.z.coords();
            const Eigen::Index keep =
                support_limit == 0 ? z.size() : std::min<Eigen::Index>(z.size(), static_cast<Eigen::Index>(support_limit));
            tail += t.trace.z.remainder() + z.tail(z.size() - keep).sum();
            return Vector(z.head(keep));
        },
        n, SupportKind::TruncatedInfinite);
    out.pmf.tail_mass = tail / static_cast<double>(n);
    return out;
}

} // namespace igr
