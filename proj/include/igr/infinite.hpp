#pragma once

// Reparameterized sampling over countably infinite support. The location and
// scale sequences are unbounded; only a prefix (up to the high-water mark) is
// stored, and coordinates past it read the default initializer.
//
// Concurrency: GrowableIgrParams has a single owner. sample_truncated() takes
// a const reference and never mutates, so concurrent samplers must each work
// on a snapshot (a copy made by the owner between optimizer steps) with
// their own Rng. Materialization and gradient application happen on the
// owner's thread only.

#include "igr/common.hpp"
#include "igr/recovery.hpp"
#include "igr/transforms.hpp"

#include <cstddef>
#include <vector>

namespace igr {

class GrowableIgrParams {
public:
    static constexpr double kDefaultMu = 0.0;
    static constexpr double kDefaultSigma = 1.0;
    static constexpr std::size_t kDefaultHardCap = 10000;

    GrowableIgrParams(double tau, double rho, TransformSpec spec);

    double mu(std::size_t k) const { return k < mu_.size() ? mu_[k] : kDefaultMu; }
    double sigma(std::size_t k) const { return k < sigma_.size() ? sigma_[k] : kDefaultSigma; }
    void set(std::size_t k, double mu, double sigma);

    /// Grow the stored prefix to at least k coordinates. Never shrinks.
    void materialize(std::size_t k);
    std::size_t high_water() const { return mu_.size(); }

    const std::vector<double>& mu_prefix() const { return mu_; }
    const std::vector<double>& sigma_prefix() const { return sigma_; }

    double tau() const { return tau_; }
    double rho() const { return rho_; }
    const TransformSpec& spec() const { return spec_; }

    std::size_t hard_cap() const { return hard_cap_; }
    void set_hard_cap(std::size_t cap) { hard_cap_ = cap; }

    /// Read-only copy for concurrent samplers.
    GrowableIgrParams snapshot() const { return *this; }

private:
    std::vector<double> mu_;
    std::vector<double> sigma_;
    double tau_;
    double rho_;
    TransformSpec spec_;
    std::size_t hard_cap_ = kDefaultHardCap;
};

struct TruncatedTrace {
    std::size_t k_used = 0;
    SampleTrace trace; // over the first k_used coordinates

    /// Running sum of the stick weights, in coordinate order. This is the
    /// quantity the stopping rule compares against rho.
    double captured_mass() const;
};

/// Draws noise one coordinate at a time, extending the stick until the
/// cumulative stick mass first exceeds rho:
///   sum_{k<K} w_k <= rho < sum_{k<=K} w_k.
/// Throws RunawayTruncationError if K would exceed the hard cap.
TruncatedTrace sample_truncated(const GrowableIgrParams& params, Rng& rng);

/// sample_truncated followed by materializing the coordinates it touched.
TruncatedTrace sample_truncated_and_materialize(GrowableIgrParams& params, Rng& rng);

/// Coordinates that receive gradient for this draw: {0, ..., k_used - 1}.
std::vector<std::size_t> gradient_coords(const TruncatedTrace& trace);

/// Cotangents of (mu, sigma) over the first k_used coordinates given the
/// cotangent of the truncated output z.
MuSigma truncated_pullback(const GrowableIgrParams& params, const TruncatedTrace& trace, const Vector& cotangent);

/// Category of a truncated draw: the stick coordinate selected by the limit map.
std::size_t truncated_category(const GrowableIgrParams& params, const TruncatedTrace& trace);

/// MC recovery over n truncated draws. Categories at or past `support_limit`
/// (when non-zero) are pooled into tail_mass; otherwise the probability
/// vector extends to the largest category observed.
PmfEstimate recover_pmf_truncated(const GrowableIgrParams& params, std::size_t n, Rng& rng,
                                  std::size_t support_limit = 0);

/// Mean of the truncated relaxed draws z_0..z_{K-1}. The leftover mass of each
/// draw, and any coordinate at or past `support_limit` (when non-zero), is
/// pooled into tail_mass.
PmfEstimate recover_pmf_truncated_mean(const GrowableIgrParams& params, std::size_t n, Rng& rng,
                                       std::size_t support_limit = 0);

} // namespace igr
