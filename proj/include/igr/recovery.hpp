#pragma once

// Mapping a trained relaxation back to the discrete distribution it relaxes.
//
// Category indices are 0-based: for a relaxation over K categories, indices
// 0..K-2 correspond to the K-1 free simplex coordinates and K-1 to the
// remainder coordinate.

#include "igr/common.hpp"
#include "igr/distributions.hpp"
#include "igr/simplex.hpp"
#include "igr/transforms.hpp"

#include <functional>
#include <vector>

namespace igr {

enum class SupportKind { Finite, TruncatedInfinite };

struct DiscretePmf {
    Vector probs;
    SupportKind support = SupportKind::Finite;
    double tail_mass = 0.0;

    Eigen::Index size() const { return probs.size(); }
    /// Throws InvalidInputError unless probs >= 0 and sum + tail = 1 within 1e-9.
    void validate() const;
};

/// Raw (unconstrained) parameters of the clamped parameterization used by the
/// quadrature path: mu = -5 tanh(mu_raw), sigma = 0.5 + 2 sigmoid(sigma_raw).
struct ClampedParams {
    Vector mu_raw;
    Vector sigma_raw;
};

struct MuSigma {
    Vector mu;
    Vector sigma;
};

MuSigma clamp_params(const ClampedParams& raw);
/// Cotangents of (mu_raw, sigma_raw) given cotangents of (mu, sigma).
ClampedParams clamp_params_pullback(const ClampedParams& raw, const Vector& d_mu, const Vector& d_sigma);

/// Limit map of softmax++ as tau -> 0: argmax_k y_k when max y > 0, else the
/// remainder category K-1. Ties go to the lowest index.
Eigen::Index hard_limit(const Vector& y);

/// hard_limit(softmax_pp_inverse(z, tau, delta)) without forming the inverse:
/// argmax_k z_k if max_k z_k > remainder / delta, else K-1.
Eigen::Index discretize(const SimplexInterior& z, double delta);

struct PmfEstimate {
    DiscretePmf pmf;
    Vector std_error;
};

/// Empirical frequencies of discretize(z) over n draws of the relaxation.
PmfEstimate recover_pmf_mc(const IgrParams& params, std::size_t n, Rng& rng);

/// Empirical frequencies of argmax over n GS draws.
PmfEstimate recover_pmf_gs_mc(const GsParams& params, std::size_t n, Rng& rng);

/// Mean of the completed relaxed draws (the first moment matched by the
/// moment-matching objective), with per-category standard errors. `draw`
/// may return vectors of varying length; shorter draws count as zeros.
PmfEstimate mean_of_draws(const std::function<Vector()>& draw, std::size_t n, SupportKind support);
PmfEstimate recover_pmf_mean(const IgrParams& params, std::size_t n, Rng& rng);
PmfEstimate recover_pmf_gs_mean(const GsParams& params, std::size_t n, Rng& rng);

struct QuadratureRecovery {
    DiscretePmf pmf;
    double raw_sum = 1.0;     // sum of the quadrature probabilities before renormalization
    bool renormalized = false; // set when |raw_sum - 1| > 1e-6
};

/// Gaussian-orthant probabilities of the limit map for the softmax++ transform:
/// P(H=k) = int_0^inf phi((t-mu_k)/sigma_k)/sigma_k prod_{j!=k} Phi((t-mu_j)/sigma_j) dt,
/// P(H=K) = prod_j Phi(-mu_j/sigma_j). The integrals use 64-point
/// Gauss-Legendre on each of 4 equal panels of [0, max mu + 10 max sigma].
QuadratureRecovery recover_pmf_quad(const Vector& mu, const Vector& sigma);

/// Vector-Jacobian product of the raw quadrature probabilities with respect
/// to (mu, sigma), differentiating the integrand at fixed nodes.
MuSigma recover_pmf_quad_pullback(const Vector& mu, const Vector& sigma, const Vector& cotangent);

/// n-point Gauss-Legendre nodes and weights on [-1, 1].
struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};
QuadratureRule gauss_legendre(int n);

/// Straight-through discretization: the forward value is the one-hot `hard`;
/// downstream gradients are to be routed to the continuous `surrogate`.
struct StraightThrough {
    Vector hard;
    Vector surrogate;
};
StraightThrough straight_through(const SampleTrace& trace, double delta = 1.0);

} // namespace igr
