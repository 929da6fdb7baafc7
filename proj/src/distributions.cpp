#include "igr/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace igr {

namespace {

double log_sum_exp(const Vector& v)
{
    const double m = v.maxCoeff();
    if (!std::isfinite(m))
        return m;
    return m + std::log((v.array() - m).exp().sum());
}

} // namespace

void GaussianDiag::validate() const
{
    if (mean.size() != std.size())
        throw InvalidInputError("gaussian: mean and std dimensions differ");
    require_finite(mean, "gaussian mean");
    require_finite(std, "gaussian std");
    if ((std.array() <= 0.0).any())
        throw InvalidInputError("gaussian: std must be strictly positive");
}

double GaussianDiag::log_pdf(const Vector& x) const
{
    if (x.size() != mean.size())
        throw InvalidInputError("gaussian log_pdf: dimension mismatch");
    const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
    double out = 0.0;
    for (Eigen::Index k = 0; k < x.size(); ++k) {
        const double r = (x[k] - mean[k]) / std[k];
        out += -0.5 * r * r - std::log(std[k]) - half_log_2pi;
    }
    return out;
}

double gaussian_kl(const GaussianDiag& p, const GaussianDiag& q)
{
    p.validate();
    q.validate();
    if (p.mean.size() != q.mean.size())
        throw InvalidInputError("gaussian KL: dimension mismatch");
    double out = 0.0;
    for (Eigen::Index k = 0; k < p.mean.size(); ++k) {
        const double d = p.mean[k] - q.mean[k];
        out += std::log(q.std[k] / p.std[k]) + (p.std[k] * p.std[k] + d * d) / (2.0 * q.std[k] * q.std[k]) - 0.5;
    }
    return out;
}

void IgrParams::validate() const
{
    if (mu.size() != sigma.size())
        throw InvalidInputError("IGR params: mu and sigma dimensions differ");
    require_finite(mu, "IGR mu");
    require_finite(sigma, "IGR sigma");
    if ((sigma.array() <= 0.0).any())
        throw InvalidInputError("IGR params: sigma must be strictly positive");
    if (!(tau > 0.0) || !std::isfinite(tau))
        throw InvalidInputError("IGR params: temperature must be positive");
    spec.validate(mu.size());
}

void GsParams::validate() const
{
    require_finite(alpha, "GS alpha");
    if (alpha.size() < 2)
        throw InvalidInputError("GS params: need at least two categories");
    if ((alpha.array() <= 0.0).any())
        throw InvalidInputError("GS params: alpha must be strictly positive");
    if (!(tau > 0.0) || !std::isfinite(tau))
        throw InvalidInputError("GS params: temperature must be positive");
}

SampleTrace igr_sample_from_noise(const IgrParams& params, const Vector& epsilon)
{
    if (epsilon.size() != params.dim())
        throw InvalidInputError("IGR sample: noise dimension mismatch");
    Vector y = params.mu + params.sigma.cwiseProduct(epsilon);
    Forwarded f = forward(params.spec, y, params.tau);
    return SampleTrace{epsilon, std::move(y), std::move(f.w), std::move(f.z), f.log_det_jac};
}

SampleTrace igr_sample(const IgrParams& params, Rng& rng)
{
    params.validate();
    return igr_sample_from_noise(params, rng.normal_vector(params.dim()));
}

double igr_log_density(const IgrParams& params, const SimplexInterior& z)
{
    params.validate();
    if (z.dim() != params.dim())
        throw InvalidInputError("IGR density: point dimension mismatch");
    const Vector y = inverse(params.spec, z, params.tau);
    if (!y.allFinite())
        throw DomainError("IGR density: point is outside the image of the transform");
    const double log_det = forward(params.spec, y, params.tau).log_det_jac;
    return params.gaussian().log_pdf(y) - log_det;
}

double igr_kl_closed(const IgrParams& p, const IgrParams& q)
{
    p.validate();
    q.validate();
    if (p.dim() != q.dim())
        throw InvalidInputError("IGR KL: dimension mismatch");
    if (!(p.spec == q.spec) || p.tau != q.tau)
        throw ContractError("IGR KL: closed form requires identical transform and temperature");
    return gaussian_kl(p.gaussian(), q.gaussian());
}

McEstimate igr_kl_mc(const IgrParams& p, const IgrParams& q, std::size_t n, Rng& rng)
{
    if (n < 2)
        throw InvalidInputError("IGR KL (MC): need at least two samples");
    if (p.dim() != q.dim())
        throw InvalidInputError("IGR KL (MC): dimension mismatch");
    p.validate();
    q.validate();
    // Welford accumulation of log p(z) - log q(z).
    double mean = 0.0;
    double m2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const SampleTrace s = igr_sample_from_noise(p, rng.normal_vector(p.dim()));
        const double log_p = p.gaussian().log_pdf(s.y) - s.log_det_jac;
        const double log_q = igr_log_density(q, s.z);
        const double d = log_p - log_q;
        const double delta = d - mean;
        mean += delta / static_cast<double>(i + 1);
        m2 += delta * (d - mean);
    }
    const double var = m2 / static_cast<double>(n - 1);
    return {mean, std::sqrt(var / static_cast<double>(n))};
}

Vector gumbel_noise(Eigen::Index k, Rng& rng)
{
    Vector g(k);
    for (Eigen::Index i = 0; i < k; ++i) {
        const double u = std::clamp(rng.uniform(), 1e-300, 1.0 - 1e-16);
        g[i] = -std::log(-std::log(u));
    }
    return g;
}

Vector gs_from_noise(const GsParams& params, const Vector& gumbel)
{
    if (gumbel.size() != params.categories())
        throw InvalidInputError("GS sample: noise dimension mismatch");
    const Vector logits = ((gumbel.array() + params.alpha.array().log()) / params.tau).matrix();
    const Vector log_z = (logits.array() - log_sum_exp(logits)).matrix();
    return log_z.array().exp().matrix();
}

Vector gs_sample(const GsParams& params, Rng& rng)
{
    params.validate();
    return gs_from_noise(params, gumbel_noise(params.categories(), rng));
}

Vector gs_pullback_log_alpha(const GsParams& params, const Vector& gumbel, const Vector& cotangent)
{
    if (cotangent.size() != params.categories())
        throw InvalidInputError("GS pullback: cotangent dimension mismatch");
    const Vector z = gs_from_noise(params, gumbel);
    return (z.cwiseProduct(cotangent) - z.dot(cotangent) * z) / params.tau;
}

double gs_log_density(const GsParams& params, const Vector& z)
{
    params.validate();
    const Eigen::Index k = params.categories();
    if (z.size() != k)
        throw InvalidInputError("GS density: point dimension mismatch");
    if (!z.allFinite() || (z.array() <= 0.0).any())
        throw DomainError("GS density: point on the boundary of the simplex");
    if (std::abs(z.sum() - 1.0) > 1e-9)
        throw DomainError("GS density: point does not sum to one");
    const double tau = params.tau;
    const Vector log_alpha = params.alpha.array().log().matrix();
    const Vector log_z = z.array().log().matrix();
    const double kd = static_cast<double>(k);
    const double lse = log_sum_exp((log_alpha.array() - tau * log_z.array()).matrix());
    return std::lgamma(kd) + (kd - 1.0) * std::log(tau) + (log_alpha.array() - (tau + 1.0) * log_z.array()).sum() -
           kd * lse;
}

} // namespace igr
