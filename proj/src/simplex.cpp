#include "igr/simplex.hpp"

#include <cmath>
#include <string>

namespace igr {

namespace {

double sum_tolerance(Eigen::Index k) { return 1e-12 + 1e-15 * static_cast<double>(k); }

void check_consistent(const Vector& coords, double remainder)
{
    const double total = coords.sum() + remainder;
    if (std::abs(total - 1.0) > sum_tolerance(coords.size()))
        throw DomainError("simplex point: coordinates and remainder sum to " + std::to_string(total));
}

} // namespace

SimplexInterior::SimplexInterior(Vector coords)
{
    require_finite(coords, "simplex point");
    for (Eigen::Index k = 0; k < coords.size(); ++k) {
        if (!(coords[k] > 0.0))
            throw DomainError("simplex point: coordinate " + std::to_string(k) + " is not positive");
    }
    const double remainder = 1.0 - coords.sum();
    if (!(remainder > 0.0))
        throw DomainError("simplex point: coordinates sum to 1 or more");
    coords_ = std::move(coords);
    remainder_ = remainder;
}

SimplexInterior::SimplexInterior(Vector coords, double remainder)
{
    require_finite(coords, "simplex point");
    for (Eigen::Index k = 0; k < coords.size(); ++k) {
        if (!(coords[k] > 0.0))
            throw DomainError("simplex point: coordinate " + std::to_string(k) + " is not positive");
    }
    if (!(remainder > 0.0) || !std::isfinite(remainder))
        throw DomainError("simplex point: remainder is not positive");
    check_consistent(coords, remainder);
    coords_ = std::move(coords);
    remainder_ = remainder;
}

SimplexInterior SimplexInterior::from_map(Vector coords, double remainder)
{
    require_finite(coords, "simplex point");
    if ((coords.array() < 0.0).any())
        throw DomainError("simplex point: negative coordinate from forward map");
    if (!(remainder >= 0.0) || !std::isfinite(remainder))
        throw DomainError("simplex point: invalid remainder from forward map");
    check_consistent(coords, remainder);
    return SimplexInterior(Unchecked{}, std::move(coords), remainder);
}

Vector SimplexInterior::completed() const
{
    Vector out(coords_.size() + 1);
    out.head(coords_.size()) = coords_;
    out[coords_.size()] = remainder_;
    return out;
}

Eigen::Index argmax_lowest(const Vector& v)
{
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < v.size(); ++k) {
        if (v[k] > v[best])
            best = k;
    }
    return best;
}

} // namespace igr
