#pragma once

// The IGR family (Gaussian noise pushed through an invertible simplex map)
// and the Gumbel-Softmax baseline. Densities are log-densities throughout.

#include "igr/common.hpp"
#include "igr/simplex.hpp"
#include "igr/transforms.hpp"

namespace igr {

struct GaussianDiag {
    Vector mean;
    Vector std;

    void validate() const;
    double log_pdf(const Vector& x) const;
};

/// KL(N(p.mean, p.std^2) || N(q.mean, q.std^2)) for diagonal Gaussians.
double gaussian_kl(const GaussianDiag& p, const GaussianDiag& q);

struct IgrParams {
    Vector mu;
    Vector sigma; // standard deviations
    double tau = 1.0;
    TransformSpec spec;

    Eigen::Index dim() const { return mu.size(); }
    Eigen::Index categories() const { return mu.size() + 1; }
    GaussianDiag gaussian() const { return {mu, sigma}; }
    void validate() const;
};

struct GsParams {
    Vector alpha;
    double tau = 1.0;

    Eigen::Index categories() const { return alpha.size(); }
    void validate() const;
};

/// epsilon ~ N(0, I), y = mu + sigma * epsilon, z = g(y, tau).
SampleTrace igr_sample(const IgrParams& params, Rng& rng);

/// Same map with caller-supplied noise.
SampleTrace igr_sample_from_noise(const IgrParams& params, const Vector& epsilon);

/// log N(y | mu, sigma) - log|det J_g(y, tau)|, y = g^{-1}(z).
double igr_log_density(const IgrParams& params, const SimplexInterior& z);

inline double igr_density(const IgrParams& params, const SimplexInterior& z)
{
    return std::exp(igr_log_density(params, z));
}

/// Closed-form KL: the Jacobian terms cancel, leaving the Gaussian KL. Only
/// valid when both relaxations share transform and temperature; anything
/// else raises ContractError.
double igr_kl_closed(const IgrParams& p, const IgrParams& q);

struct McEstimate {
    double estimate = 0.0;
    double std_error = 0.0;
};

/// Monte-Carlo KL(p || q): mean and standard error of log p(z) - log q(z), z ~ p.
McEstimate igr_kl_mc(const IgrParams& p, const IgrParams& q, std::size_t n, Rng& rng);

/// softmax((g + log alpha) / tau), g iid Gumbel(0, 1), evaluated in log space.
/// Returns the completed length-K vector.
Vector gs_sample(const GsParams& params, Rng& rng);

/// Gumbel noise vector of length k, U clamped to [1e-300, 1 - 1e-16].
Vector gumbel_noise(Eigen::Index k, Rng& rng);

/// The GS map for a given Gumbel noise vector.
Vector gs_from_noise(const GsParams& params, const Vector& gumbel);

/// Pullback of the GS map with respect to log alpha.
Vector gs_pullback_log_alpha(const GsParams& params, const Vector& gumbel, const Vector& cotangent);

/// log[(K-1)!] + (K-1) log tau + sum_k [log alpha_k - (tau+1) log z_k]
///   - K log sum_j alpha_j z_j^(-tau).
double gs_log_density(const GsParams& params, const Vector& z);

inline double gs_density(const GsParams& params, const Vector& z) { return std::exp(gs_log_density(params, z)); }

} // namespace igr
