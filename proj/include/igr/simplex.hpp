#pragma once

#include "igr/common.hpp"

namespace igr {

/// A point of the open simplex S^(K-1): K-1 positive coordinates whose sum is
/// below one. The remainder 1 - sum(coords) is carried explicitly so that
/// producers which know it more accurately than the subtraction (softmax++
/// computes it as delta/s, stick-breaking as a running product) do not lose it
/// to cancellation at low temperature.
class SimplexInterior {
public:
    SimplexInterior() = default;

    /// Checked construction from user data: every coordinate > 0 and the sum < 1.
    explicit SimplexInterior(Vector coords);

    /// Checked construction with an explicitly supplied remainder; the remainder
    /// must be positive and agree with 1 - sum(coords) within 1e-12.
    SimplexInterior(Vector coords, double remainder);

    /// Construction from the output of a forward map. Coordinates may have
    /// underflowed to +0 at extreme temperatures; anything negative, non-finite
    /// or inconsistent with the remainder is still rejected.
    static SimplexInterior from_map(Vector coords, double remainder);

    const Vector& coords() const { return coords_; }
    Eigen::Index dim() const { return coords_.size(); }
    /// Number of categories K.
    Eigen::Index categories() const { return coords_.size() + 1; }
    double operator[](Eigen::Index k) const { return coords_[k]; }
    double remainder() const { return remainder_; }

    /// Length-K probability vector (coords, remainder).
    Vector completed() const;

private:
    struct Unchecked {};
    SimplexInterior(Unchecked, Vector coords, double remainder)
        : coords_(std::move(coords)), remainder_(remainder)
    {
    }

    Vector coords_;
    double remainder_ = 1.0;
};

/// Index of the largest entry, ties broken by lowest index.
Eigen::Index argmax_lowest(const Vector& v);

} // namespace igr
