#include "oracles.hpp"

#include "igr/recovery.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace igr;

namespace {

Vector vec(std::initializer_list<double> xs)
{
    Vector v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs)
        v[i++] = x;
    return v;
}

MuSigma random_clamped(Rng& rng, Eigen::Index n)
{
    ClampedParams raw{Vector(n), Vector(n)};
    for (Eigen::Index k = 0; k < n; ++k) {
        raw.mu_raw[k] = 0.6 * rng.normal();
        raw.sigma_raw[k] = 2.0 * rng.normal();
    }
    return clamp_params(raw);
}

IgrParams softmax_params(const MuSigma& ms, double tau)
{
    return {ms.mu, ms.sigma, tau, TransformSpec::softmax_pp()};
}

} // namespace

TEST_CASE("limit map")
{
    CHECK(hard_limit(vec({3, -1})) == 0);
    CHECK(hard_limit(vec({-2, -5})) == 2);
    CHECK(hard_limit(vec({0.1, 0.2})) == 1);
    CHECK(hard_limit(vec({0.4, 0.4})) == 0);
    CHECK(hard_limit(vec({0.0, 0.0})) == 2);
}

TEST_CASE("discretize")
{
    CHECK(discretize(SimplexInterior(vec({0.6, 0.3})), 1.0) == 0);
    CHECK(discretize(SimplexInterior(vec({0.2, 0.1})), 1.0) == 2);
    // delta = 2 halves the bar the coordinates must clear.
    CHECK(discretize(SimplexInterior(vec({0.32, 0.1})), 1.0) == 2);
    CHECK(discretize(SimplexInterior(vec({0.32, 0.1})), 2.0) == 0);

    Rng rng(1);
    for (int i = 0; i < 1000; ++i) {
        const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng.index(9));
        const Vector y = 2.0 * rng.normal_vector(n);
        const double delta = 0.3 + 2.0 * rng.uniform();
        const double tau = 0.05 + rng.uniform();
        const SimplexInterior z = softmax_pp(y, tau, delta);
        CHECK(discretize(z, delta) == hard_limit(softmax_pp_inverse(z, tau, delta)));
        CHECK(discretize(z, delta) == hard_limit(y));
    }
}

TEST_CASE("clamped parameters")
{
    const MuSigma zero = clamp_params({vec({0.0}), vec({0.0})});
    CHECK(zero.mu[0] == 0.0);
    CHECK(zero.sigma[0] == doctest::Approx(1.5));
    const MuSigma big = clamp_params({vec({50.0, -50.0}), vec({50.0, -50.0})});
    CHECK(big.mu[0] == doctest::Approx(-5.0));
    CHECK(big.mu[1] == doctest::Approx(5.0));
    CHECK(big.sigma[0] == doctest::Approx(2.5));
    CHECK(big.sigma[1] == doctest::Approx(0.5));

    Rng rng(2);
    for (int i = 0; i < 20; ++i) {
        const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng.index(5));
        const ClampedParams raw{rng.normal_vector(n), rng.normal_vector(n)};
        const Vector dmu = rng.normal_vector(n);
        const Vector dsigma = rng.normal_vector(n);
        const ClampedParams g = clamp_params_pullback(raw, dmu, dsigma);
        for (Eigen::Index k = 0; k < n; ++k) {
            const double d_mu = oracle::scalar_derivative([](double x) { return -5.0 * std::tanh(x); }, raw.mu_raw[k]);
            const double d_sigma = oracle::scalar_derivative(
                [](double x) { return 0.5 + 2.0 / (1.0 + std::exp(-x)); }, raw.sigma_raw[k]);
            CHECK(g.mu_raw[k] == doctest::Approx(dmu[k] * d_mu).epsilon(1e-6));
            CHECK(g.sigma_raw[k] == doctest::Approx(dsigma[k] * d_sigma).epsilon(1e-6));
        }
    }
}

TEST_CASE("Gauss-Legendre rule integrates polynomials exactly")
{
    const QuadratureRule rule = gauss_legendre(64);
    REQUIRE(rule.nodes.size() == 64);
    CHECK(std::accumulate(rule.weights.begin(), rule.weights.end(), 0.0) == doctest::Approx(2.0).epsilon(1e-14));
    for (int degree = 0; degree <= 127; degree += 7) {
        double s = 0.0;
        for (std::size_t i = 0; i < rule.nodes.size(); ++i)
            s += rule.weights[i] * std::pow(rule.nodes[i], degree);
        const double exact = degree % 2 ? 0.0 : 2.0 / (degree + 1);
        CHECK(std::abs(s - exact) < 1e-13);
    }
}

TEST_CASE("quadrature recovery closed forms")
{
    const QuadratureRecovery half = recover_pmf_quad(vec({0.0}), vec({1.0}));
    CHECK(std::abs(half.pmf.probs[0] - 0.5) < 1e-6);
    CHECK(std::abs(half.pmf.probs[1] - 0.5) < 1e-6);

    const QuadratureRecovery one = recover_pmf_quad(vec({1.0}), vec({1.0}));
    CHECK(std::abs(one.pmf.probs[0] - 0.8413447460685429) < 1e-6);
    CHECK(std::abs(one.pmf.probs[1] - 0.15865525393145707) < 1e-6);

    Rng rng(3);
    for (int i = 0; i < 100; ++i) {
        const MuSigma ms = random_clamped(rng, 1);
        const QuadratureRecovery q = recover_pmf_quad(ms.mu, ms.sigma);
        CHECK(std::abs(q.pmf.probs[0] - oracle::normal_cdf(ms.mu[0] / ms.sigma[0])) < 1e-6);
        CHECK(std::abs(q.pmf.probs[1] - oracle::normal_cdf(-ms.mu[0] / ms.sigma[0])) < 1e-6);
    }

    const QuadratureRecovery sym = recover_pmf_quad(vec({0.0, 0.0}), vec({1.0, 1.0}));
    CHECK(sym.pmf.probs[0] == doctest::Approx(0.375).epsilon(1e-9));
    CHECK(sym.pmf.probs[1] == doctest::Approx(0.375).epsilon(1e-9));
    CHECK(sym.pmf.probs[2] == doctest::Approx(0.25).epsilon(1e-12));

    CHECK_THROWS_AS(recover_pmf_quad(vec({0.0}), vec({0.0})), InvalidInputError);
}

TEST_CASE("raw quadrature sums are one over the clamped range")
{
    Rng rng(4);
    for (int i = 0; i < 200; ++i) {
        const MuSigma ms = random_clamped(rng, 1 + static_cast<Eigen::Index>(rng.index(9)));
        const QuadratureRecovery q = recover_pmf_quad(ms.mu, ms.sigma);
        CHECK(std::abs(q.raw_sum - 1.0) < 1e-6);
        CHECK_FALSE(q.renormalized);
    }
}

TEST_CASE("quadrature recovery permutes with its parameters")
{
    Rng rng(5);
    for (int i = 0; i < 20; ++i) {
        const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng.index(7));
        const MuSigma ms = random_clamped(rng, n);
        std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), std::mt19937(i));
        Vector mu(n);
        Vector sigma(n);
        for (Eigen::Index k = 0; k < n; ++k) {
            mu[k] = ms.mu[perm[k]];
            sigma[k] = ms.sigma[perm[k]];
        }
        const Vector a = recover_pmf_quad(ms.mu, ms.sigma).pmf.probs;
        const Vector b = recover_pmf_quad(mu, sigma).pmf.probs;
        for (Eigen::Index k = 0; k < n; ++k)
            CHECK(b[k] == doctest::Approx(a[perm[k]]).epsilon(1e-12));
        CHECK(b[n] == doctest::Approx(a[n]).epsilon(1e-12));
    }
}

TEST_CASE("quadrature recovery agrees with Monte Carlo")
{
    Rng rng(6);
    for (int i = 0; i < 50; ++i) {
        const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng.index(9));
        const MuSigma ms = random_clamped(rng, n);
        const Vector quad = recover_pmf_quad(ms.mu, ms.sigma).pmf.probs;
        const PmfEstimate mc = recover_pmf_mc(softmax_params(ms, 0.5), 100000, rng);
        for (Eigen::Index k = 0; k <= n; ++k)
            CHECK(std::abs(quad[k] - mc.pmf.probs[k]) <= 3.0 * mc.std_error[k] + 1e-3);
    }
}

TEST_CASE("Monte-Carlo recovery")
{
    Rng rng(7);
    const PmfEstimate det = recover_pmf_mc(
        {vec({10, -10, -10}), Vector::Constant(3, 0.01), 0.5, TransformSpec::softmax_pp()}, 1000, rng);
    CHECK(det.pmf.probs[0] == 1.0);

    const PmfEstimate sym = recover_pmf_mc({vec({0}), vec({1}), 1.0, TransformSpec::softmax_pp()}, 100000, rng);
    CHECK(std::abs(sym.pmf.probs[0] - 0.5) <= 3.0 * sym.std_error[0]);
    CHECK(sym.pmf.probs.sum() + sym.pmf.tail_mass == doctest::Approx(1.0).epsilon(1e-15));

    const PmfEstimate sym3 = recover_pmf_mc(softmax_params({vec({0, 0}), vec({1, 1})}, 0.3), 100000, rng);
    const Vector expected = vec({0.375, 0.375, 0.25});
    for (int k = 0; k < 3; ++k)
        CHECK(std::abs(sym3.pmf.probs[k] - expected[k]) <= 3.0 * sym3.std_error[k] + 1e-3);

    CHECK_THROWS_AS(recover_pmf_mc(softmax_params({vec({0}), vec({1})}, 1.0), 0, rng), InvalidInputError);
}

TEST_CASE("recovered pmf does not depend on the temperature")
{
    const MuSigma ms{vec({0.4, -0.3, 0.1}), vec({1.0, 0.7, 1.6})};
    std::vector<PmfEstimate> runs;
    for (double tau : {0.01, 0.1, 1.0}) {
        Rng rng(8);
        runs.push_back(recover_pmf_mc(softmax_params(ms, tau), 100000, rng));
    }
    // Same noise at every temperature, and the limit map ignores tau: the
    // frequencies agree exactly, well inside any sampling band.
    for (std::size_t r = 1; r < runs.size(); ++r)
        for (int k = 0; k < 4; ++k)
            CHECK(std::abs(runs[r].pmf.probs[k] - runs[0].pmf.probs[k]) <= 3.0 * runs[0].std_error[k]);

    Rng fresh(9);
    const PmfEstimate other = recover_pmf_mc(softmax_params(ms, 0.05), 100000, fresh);
    for (int k = 0; k < 4; ++k) {
        const double se = std::hypot(other.std_error[k], runs[0].std_error[k]);
        CHECK(std::abs(other.pmf.probs[k] - runs[0].pmf.probs[k]) <= 3.0 * se + 1e-12);
    }
}

TEST_CASE("straight-through discretization")
{
    Rng rng(10);
    const IgrParams p{vec({0.2, -0.1, 0.5}), vec({1.0, 1.0, 0.5}), 0.4, TransformSpec::softmax_pp()};
    Vector mean_hard = Vector::Zero(4);
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        const SampleTrace t = igr_sample(p, rng);
        const StraightThrough st = straight_through(t);
        CHECK(st.hard.sum() == 1.0);
        CHECK(st.hard.maxCoeff() == 1.0);
        CHECK((st.surrogate.array() > 0.0).all());
        CHECK((st.surrogate - t.z.completed()).norm() == 0.0);
        mean_hard += st.hard;
    }
    mean_hard /= n;
    Rng same(10);
    const PmfEstimate mc = recover_pmf_mc(p, n, same);
    CHECK((mean_hard - mc.pmf.probs).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("mean recovery")
{
    Rng rng(11);
    const IgrParams p{vec({0.2, -0.1}), vec({1.0, 0.8}), 0.4, TransformSpec::softmax_pp()};
    const PmfEstimate m = recover_pmf_mean(p, 50000, rng);
    CHECK(m.pmf.probs.sum() + m.pmf.tail_mass == doctest::Approx(1.0).epsilon(1e-12));

    Rng again(11);
    Vector expected = Vector::Zero(3);
    for (int i = 0; i < 50000; ++i)
        expected += igr_sample(p, again).z.completed();
    expected /= 50000.0;
    CHECK((m.pmf.probs - expected).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("pmf validation")
{
    CHECK_NOTHROW((DiscretePmf{vec({0.5, 0.5})}).validate());
    CHECK_THROWS_AS((DiscretePmf{vec({0.5, 0.6})}).validate(), InvalidInputError);
    CHECK_THROWS_AS((DiscretePmf{vec({1.1, -0.1})}).validate(), InvalidInputError);
    CHECK_NOTHROW((DiscretePmf{vec({0.5, 0.4}), SupportKind::TruncatedInfinite, 0.1}).validate());
}
