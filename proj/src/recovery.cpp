#include "igr/recovery.hpp"

#include <cmath>
#include <numbers>
#include <utility>

namespace igr {

namespace {

constexpr int kQuadraturePoints = 64;
constexpr int kQuadraturePanels = 4;
constexpr double kQuadratureSpan = 10.0;
constexpr double kRenormalizeTolerance = 1e-6;

// Composite rule on [0, upper]: kQuadraturePanels equal panels, each with the
// kQuadraturePoints-point Gauss-Legendre rule.
QuadratureRule panel_rule(double upper)
{
    static const QuadratureRule base = gauss_legendre(kQuadraturePoints);
    QuadratureRule out;
    const double width = upper / kQuadraturePanels;
    for (int p = 0; p < kQuadraturePanels; ++p) {
        const double mid = (p + 0.5) * width;
        for (std::size_t q = 0; q < base.nodes.size(); ++q) {
            out.nodes.push_back(mid + 0.5 * width * base.nodes[q]);
            out.weights.push_back(0.5 * width * base.weights[q]);
        }
    }
    return out;
}

void check_mu_sigma(const Vector& mu, const Vector& sigma)
{
    if (mu.size() != sigma.size())
        throw InvalidInputError("quadrature recovery: mu and sigma dimensions differ");
    require_finite(mu, "quadrature recovery mu");
    require_finite(sigma, "quadrature recovery sigma");
    if ((sigma.array() <= 0.0).any())
        throw InvalidInputError("quadrature recovery: sigma must be strictly positive");
}

double upper_limit(const Vector& mu, const Vector& sigma)
{
    return mu.maxCoeff() + kQuadratureSpan * sigma.maxCoeff();
}

// Product of v over all indices except those in {a, b}.
double product_except(const Vector& v, Eigen::Index a, Eigen::Index b)
{
    double p = 1.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (i != a && i != b)
            p *= v[i];
    }
    return p;
}

PmfEstimate frequencies(const std::vector<std::size_t>& counts, std::size_t n)
{
    const auto k = static_cast<Eigen::Index>(counts.size());
    PmfEstimate out{DiscretePmf{Vector(k), SupportKind::Finite, 0.0}, Vector(k)};
    const double nd = static_cast<double>(n);
    for (Eigen::Index i = 0; i < k; ++i) {
        const double p = static_cast<double>(counts[static_cast<std::size_t>(i)]) / nd;
        out.pmf.probs[i] = p;
        out.std_error[i] = std::sqrt(p * (1.0 - p) / nd);
    }
    return out;
}

// Mean and standard error of draws accumulated as running sums.
struct MeanAccumulator {
    Vector sum;
    Vector sum_sq;
    std::size_t n = 0;

    explicit MeanAccumulator(Eigen::Index k) : sum(Vector::Zero(k)), sum_sq(Vector::Zero(k)) {}
    void add(const Vector& v)
    {
        if (v.size() > sum.size()) {
            const Eigen::Index old = sum.size();
            sum.conservativeResize(v.size());
            sum_sq.conservativeResize(v.size());
            sum.tail(v.size() - old).setZero();
            sum_sq.tail(v.size() - old).setZero();
        }
        sum.head(v.size()) += v;
        sum_sq.head(v.size()) += v.cwiseProduct(v);
        ++n;
    }
    PmfEstimate result(SupportKind support) const
    {
        const double nd = static_cast<double>(n);
        const Vector mean = sum / nd;
        const Vector var = (sum_sq / nd - mean.cwiseProduct(mean)).cwiseMax(0.0);
        return {DiscretePmf{mean, support, 0.0}, (var / nd).cwiseSqrt()};
    }
};

} // namespace

PmfEstimate mean_of_draws(const std::function<Vector()>& draw, std::size_t n, SupportKind support)
{
    if (n == 0)
        throw InvalidInputError("MC recovery: need at least one sample");
    MeanAccumulator acc(0);
    for (std::size_t i = 0; i < n; ++i)
        acc.add(draw());
    return acc.result(support);
}

PmfEstimate recover_pmf_mean(const IgrParams& params, std::size_t n, Rng& rng)
{
    params.validate();
    return mean_of_draws([&] { return igr_sample_from_noise(params, rng.normal_vector(params.dim())).z.completed(); },
                         n, SupportKind::Finite);
}

PmfEstimate recover_pmf_gs_mean(const GsParams& params, std::size_t n, Rng& rng)
{
    params.validate();
    return mean_of_draws([&] { return gs_sample(params, rng); }, n, SupportKind::Finite);
}

void DiscretePmf::validate() const
{
    require_finite(probs, "pmf");
    if ((probs.array() < 0.0).any() || !(tail_mass >= 0.0))
        throw InvalidInputError("pmf: negative probability");
    if (std::abs(probs.sum() + tail_mass - 1.0) > 1e-9)
        throw InvalidInputError("pmf: probabilities do not sum to one");
}

MuSigma clamp_params(const ClampedParams& raw)
{
    if (raw.mu_raw.size() != raw.sigma_raw.size())
        throw InvalidInputError("clamp_params: dimension mismatch");
    require_finite(raw.mu_raw, "clamp_params mu_raw");
    require_finite(raw.sigma_raw, "clamp_params sigma_raw");
    MuSigma out{Vector(raw.mu_raw.size()), Vector(raw.sigma_raw.size())};
    for (Eigen::Index k = 0; k < raw.mu_raw.size(); ++k) {
        out.mu[k] = -5.0 * std::tanh(raw.mu_raw[k]);
        out.sigma[k] = 0.5 + 2.0 * sigmoid(raw.sigma_raw[k]);
    }
    return out;
}

ClampedParams clamp_params_pullback(const ClampedParams& raw, const Vector& d_mu, const Vector& d_sigma)
{
    if (d_mu.size() != raw.mu_raw.size() || d_sigma.size() != raw.sigma_raw.size())
        throw InvalidInputError("clamp_params pullback: dimension mismatch");
    ClampedParams out{Vector(d_mu.size()), Vector(d_sigma.size())};
    for (Eigen::Index k = 0; k < d_mu.size(); ++k) {
        const double t = std::tanh(raw.mu_raw[k]);
        const double s = sigmoid(raw.sigma_raw[k]);
        out.mu_raw[k] = -5.0 * (1.0 - t * t) * d_mu[k];
        out.sigma_raw[k] = 2.0 * s * (1.0 - s) * d_sigma[k];
    }
    return out;
}

Eigen::Index hard_limit(const Vector& y)
{
    require_finite(y, "hard_limit");
    if (y.size() == 0)
        return 0;
    const Eigen::Index best = argmax_lowest(y);
    return y[best] > 0.0 ? best : y.size();
}

Eigen::Index discretize(const SimplexInterior& z, double delta)
{
    if (z.dim() == 0)
        return 0;
    const Eigen::Index best = argmax_lowest(z.coords());
    return z[best] > z.remainder() / delta ? best : z.dim();
}

PmfEstimate recover_pmf_mc(const IgrParams& params, std::size_t n, Rng& rng)
{
    if (n == 0)
        throw InvalidInputError("MC recovery: need at least one sample");
    params.validate();
    std::vector<std::size_t> counts(static_cast<std::size_t>(params.categories()), 0);
    for (std::size_t i = 0; i < n; ++i) {
        const SampleTrace s = igr_sample_from_noise(params, rng.normal_vector(params.dim()));
        ++counts[static_cast<std::size_t>(discretize(s.z, params.spec.delta))];
    }
    return frequencies(counts, n);
}

PmfEstimate recover_pmf_gs_mc(const GsParams& params, std::size_t n, Rng& rng)
{
    if (n == 0)
        throw InvalidInputError("MC recovery: need at least one sample");
    params.validate();
    std::vector<std::size_t> counts(static_cast<std::size_t>(params.categories()), 0);
    for (std::size_t i = 0; i < n; ++i)
        ++counts[static_cast<std::size_t>(argmax_lowest(gs_sample(params, rng)))];
    return frequencies(counts, n);
}

QuadratureRule gauss_legendre(int n)
{
    if (n < 1)
        throw InvalidInputError("gauss_legendre: need at least one node");
    // Returns (P_n(x), P_n'(x)) by the three-term recurrence.
    auto legendre = [n](double x) {
        double p0 = 1.0;
        double p1 = x;
        for (int j = 2; j <= n; ++j) {
            const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
            p0 = p1;
            p1 = p2;
        }
        return std::pair{p1, n * (x * p1 - p0) / (x * x - 1.0)};
    };
    const auto size = static_cast<std::size_t>(n);
    QuadratureRule rule{std::vector<double>(size), std::vector<double>(size)};
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        for (int iter = 0; iter < 100; ++iter) {
            const auto [p, dp] = legendre(x);
            const double dx = p / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16)
                break;
        }
        const double dp = legendre(x).second;
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        const auto lo = static_cast<std::size_t>(i);
        const auto hi = size - 1 - lo;
        rule.nodes[lo] = -x;
        rule.nodes[hi] = x;
        rule.weights[lo] = w;
        rule.weights[hi] = w;
    }
    return rule;
}

QuadratureRecovery recover_pmf_quad(const Vector& mu, const Vector& sigma)
{
    check_mu_sigma(mu, sigma);
    const Eigen::Index n = mu.size();
    Vector probs = Vector::Zero(n + 1);

    double last = 1.0;
    for (Eigen::Index j = 0; j < n; ++j)
        last *= normal_cdf(-mu[j] / sigma[j]);
    probs[n] = last;

    const double upper = upper_limit(mu, sigma);
    if (upper > 0.0) {
        const QuadratureRule rule = panel_rule(upper);
        Vector pdf(n);
        Vector cdf(n);
        for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
            const double t = rule.nodes[q];
            const double wq = rule.weights[q];
            for (Eigen::Index j = 0; j < n; ++j) {
                const double zj = (t - mu[j]) / sigma[j];
                pdf[j] = normal_pdf(zj) / sigma[j];
                cdf[j] = normal_cdf(zj);
            }
            for (Eigen::Index k = 0; k < n; ++k)
                probs[k] += wq * pdf[k] * product_except(cdf, k, k);
        }
    }

    QuadratureRecovery out{DiscretePmf{probs, SupportKind::Finite, 0.0}, probs.sum(), false};
    if (std::abs(out.raw_sum - 1.0) > kRenormalizeTolerance) {
        out.pmf.probs /= out.raw_sum;
        out.renormalized = true;
    }
    return out;
}

MuSigma recover_pmf_quad_pullback(const Vector& mu, const Vector& sigma, const Vector& cotangent)
{
    check_mu_sigma(mu, sigma);
    const Eigen::Index n = mu.size();
    if (cotangent.size() != n + 1)
        throw InvalidInputError("quadrature pullback: cotangent must have K entries");
    MuSigma grad{Vector::Zero(n), Vector::Zero(n)};

    // Remainder category: prod_j Phi(m_j), m_j = -mu_j / sigma_j.
    {
        Vector cdf(n);
        Vector m(n);
        for (Eigen::Index j = 0; j < n; ++j) {
            m[j] = -mu[j] / sigma[j];
            cdf[j] = normal_cdf(m[j]);
        }
        const double c = cotangent[n];
        for (Eigen::Index j = 0; j < n; ++j) {
            const double rest = product_except(cdf, j, j);
            const double dens = normal_pdf(m[j]);
            grad.mu[j] += c * rest * dens * (-1.0 / sigma[j]);
            grad.sigma[j] += c * rest * dens * (mu[j] / (sigma[j] * sigma[j]));
        }
    }

    const double upper = upper_limit(mu, sigma);
    if (!(upper > 0.0))
        return grad;

    const QuadratureRule rule = panel_rule(upper);
    Vector z(n);
    Vector dens(n); // phi(z_j)
    Vector cdf(n);
    for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
        const double t = rule.nodes[q];
        const double wq = rule.weights[q];
        for (Eigen::Index j = 0; j < n; ++j) {
            z[j] = (t - mu[j]) / sigma[j];
            dens[j] = normal_pdf(z[j]);
            cdf[j] = normal_cdf(z[j]);
        }
        for (Eigen::Index k = 0; k < n; ++k) {
            const double c = wq * cotangent[k];
            if (c == 0.0)
                continue;
            const double head = dens[k] / sigma[k];
            const double integrand = head * product_except(cdf, k, k);
            // Own coordinate: d/dmu [phi(z)/sigma] = phi(z) z / sigma^2,
            // d/dsigma = phi(z)(z^2 - 1) / sigma^2.
            grad.mu[k] += c * integrand * z[k] / sigma[k];
            grad.sigma[k] += c * integrand * (z[k] * z[k] - 1.0) / sigma[k];
            for (Eigen::Index j = 0; j < n; ++j) {
                if (j == k)
                    continue;
                const double rest = head * product_except(cdf, k, j);
                grad.mu[j] += c * rest * dens[j] * (-1.0 / sigma[j]);
                grad.sigma[j] += c * rest * dens[j] * (-z[j] / sigma[j]);
            }
        }
    }
    return grad;
}

StraightThrough straight_through(const SampleTrace& trace, double delta)
{
    const Vector surrogate = trace.z.completed();
    Vector hard = Vector::Zero(surrogate.size());
    hard[discretize(trace.z, delta)] = 1.0;
    return {std::move(hard), surrogate};
}

} // namespace igr
