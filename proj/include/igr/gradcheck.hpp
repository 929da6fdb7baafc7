#pragma once

// Central-difference oracle for vector-Jacobian products, and the registry of
// every hand-derived pullback in the library.

#include "igr/common.hpp"

#include <functional>
#include <string>
#include <vector>

namespace igr {

using VectorFn = std::function<Vector(const Vector&)>;
using PullbackFn = std::function<Vector(const Vector& point, const Vector& cotangent)>;

/// Compares pullback(point, c) against central differences of c^T fun(x)
/// with step h_k = 1e-5 (1 + |x_k|). Returns the largest per-coordinate
/// deviation |fd_k - vjp_k| / max(1, |fd_k|, |vjp_k|).
double fd_check(const VectorFn& fun, const Vector& point, const Vector& cotangent, const PullbackFn& pullback);

/// Central-difference Jacobian of fun at point, same step rule.
Matrix fd_jacobian(const VectorFn& fun, const Vector& point);

struct GradCheckCase {
    std::string name;
    /// Draws a random point (and cotangent) from rng and returns the fd_check error.
    std::function<double(Rng&)> run;
};

/// Every pullback registered in the library: softmax++, the stick-breaking
/// chains, vertex interpolation, planar layers (input and parameters), the
/// composed maps, clamping, quadrature recovery, GS, and the moment-matching
/// losses.
const std::vector<GradCheckCase>& registered_pullbacks();

struct GradCheckResult {
    std::string name;
    double max_error = 0.0;
    int points = 0;
};

/// Runs every registered case at `points` random points.
std::vector<GradCheckResult> run_registered_checks(int points, std::uint64_t seed);

} // namespace igr
