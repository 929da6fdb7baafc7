#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace igr {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Error taxonomy. Every error raised by the library derives from igr::Error so
// callers (the CLI in particular) can map them onto exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Non-finite values, wrong dimensions, non-positive scales.
class InvalidInputError : public Error {
public:
    using Error::Error;
};

/// Point outside the domain of a map (boundary of the simplex, depleted stick, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Caller broke an API precondition that makes the result meaningless,
/// e.g. closed-form KL between relaxations with different transforms.
class ContractError : public Error {
public:
    using Error::Error;
};

/// Truncated sampling did not terminate before the hard cap.
class RunawayTruncationError : public Error {
public:
    using Error::Error;
};

/// Bad experiment configuration (CLI exit code 1).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Random stream owned by the caller. One stream per worker; streams are
/// never shared between threads.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed), seed_(seed) {}

    double normal() { return normal_(engine_); }

    /// Uniform on [0, 1).
    double uniform() { return uniform_(engine_); }

    std::uint64_t next_u64() { return engine_(); }

    /// Index in [0, n).
    std::size_t index(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_); }

    Vector normal_vector(Eigen::Index n)
    {
        Vector out(n);
        for (Eigen::Index i = 0; i < n; ++i)
            out[i] = normal();
        return out;
    }

    /// Independent stream derived from this stream's seed and an index.
    /// Does not advance this stream.
    Rng substream(std::uint64_t index) const { return Rng(mix(seed_ ^ mix(index + 0x9e3779b97f4a7c15ULL))); }

    std::uint64_t seed() const { return seed_; }

private:
    static std::uint64_t mix(std::uint64_t x)
    {
        // splitmix64 finalizer
        x += 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

    std::mt19937_64 engine_;
    std::uint64_t seed_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

inline void require_finite(const Vector& v, const char* what)
{
    if (!v.allFinite())
        throw InvalidInputError(std::string(what) + ": non-finite input");
}

inline double sigmoid(double x)
{
    if (x >= 0.0)
        return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

/// log(1 + exp(x)) without overflow.
inline double softplus(double x)
{
    if (x > 0.0)
        return x + std::log1p(std::exp(-x));
    return std::log1p(std::exp(x));
}

/// Standard normal cdf.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

/// Standard normal density.
inline double normal_pdf(double x)
{
    constexpr double inv_sqrt_2pi = 0.39894228040143267794;
    return inv_sqrt_2pi * std::exp(-0.5 * x * x);
}

} // namespace igr
