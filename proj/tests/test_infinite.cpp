#include "igr/infinite.hpp"
#include "igr/serialization.hpp"

#include <doctest.h>

#include <cmath>

using namespace igr;

namespace {

double prefix_mass(const Vector& w, Eigen::Index count)
{
    double s = 0.0;
    for (Eigen::Index k = 0; k < count; ++k)
        s += w[k];
    return s;
}

} // namespace

TEST_CASE("stopping rule holds for every draw")
{
    for (double rho : {0.5, 0.9, 0.99, 0.999}) {
        for (auto spec : {TransformSpec::sb_softmax_pp(), TransformSpec::sb_identity()}) {
            GrowableIgrParams p(0.3, rho, spec);
            Rng rng(1);
            for (int i = 0; i < 2000; ++i) {
                const TruncatedTrace t = sample_truncated(p, rng);
                const Vector& w = *t.trace.w;
                REQUIRE(static_cast<std::size_t>(w.size()) == t.k_used);
                const auto k = static_cast<Eigen::Index>(t.k_used);
                CHECK(prefix_mass(w, k - 1) <= rho);
                CHECK(prefix_mass(w, k) > rho);
                CHECK(t.captured_mass() > rho);
                CHECK(t.trace.z.dim() == k);
            }
        }
    }
}

TEST_CASE("captured mass exceeds rho")
{
    GrowableIgrParams p(0.5, 0.99, TransformSpec::sb_identity());
    Rng rng(2);
    for (int i = 0; i < 5000; ++i) {
        const TruncatedTrace t = sample_truncated(p, rng);
        // With the identity terminal stage the emitted point is the stick itself.
        CHECK(1.0 - t.trace.z.remainder() > 0.99);
        CHECK(t.captured_mass() > 0.99);
    }
}

TEST_CASE("tiny rho stops after one coordinate")
{
    GrowableIgrParams p(0.5, 1e-13, TransformSpec::sb_softmax_pp());
    Rng rng(3);
    for (int i = 0; i < 1000; ++i)
        CHECK(sample_truncated(p, rng).k_used == 1);
}

TEST_CASE("large locations from coordinate 5 on end the stick quickly")
{
    // Each fraction is sigmoid(y), so it is the positive locations that make
    // coordinate 5 take nearly all of what is left of the stick.
    GrowableIgrParams p(0.5, 0.99, TransformSpec::sb_softmax_pp());
    for (std::size_t k = 5; k < 8; ++k)
        p.set(k, 8.0, 0.5);
    Rng rng(4);
    int short_draws = 0;
    const int n = 10000;
    for (int i = 0; i < n; ++i)
        short_draws += sample_truncated(p, rng).k_used <= 6;
    CHECK(short_draws >= 0.99 * n);
}

TEST_CASE("mean cost grows with rho")
{
    auto mean_k = [](double rho) {
        GrowableIgrParams p(0.5, rho, TransformSpec::sb_softmax_pp());
        Rng rng(5);
        double s = 0.0;
        for (int i = 0; i < 1000; ++i)
            s += static_cast<double>(sample_truncated(p, rng).k_used);
        return s / 1000.0;
    };
    CHECK(mean_k(0.9) <= mean_k(0.999));
}

TEST_CASE("hard cap turns runaway sampling into an error")
{
    // sigmoid(-30) is about 1e-13, so each coordinate takes almost nothing.
    GrowableIgrParams p(0.5, 0.5, TransformSpec::sb_softmax_pp());
    for (std::size_t k = 0; k < 200; ++k)
        p.set(k, -30.0, 1e-3);
    p.set_hard_cap(150);
    Rng rng(6);
    CHECK_THROWS_AS(sample_truncated(p, rng), RunawayTruncationError);
}

TEST_CASE("defaults and materialization")
{
    GrowableIgrParams p(0.5, 0.9, TransformSpec::sb_softmax_pp());
    CHECK(p.high_water() == 0);
    CHECK(p.mu(17) == 0.0);
    CHECK(p.sigma(17) == 1.0);
    CHECK(p.hard_cap() == 10000);

    Rng rng(7);
    const TruncatedTrace t = sample_truncated_and_materialize(p, rng);
    CHECK(p.high_water() == t.k_used);
    p.materialize(1);
    CHECK(p.high_water() == t.k_used);
    p.set(20, 1.0, 2.0);
    CHECK(p.high_water() == 21);
    CHECK(p.mu(20) == 1.0);
    CHECK(p.sigma(19) == 1.0);

    CHECK_THROWS_AS(GrowableIgrParams(0.5, 1.0, TransformSpec::sb_softmax_pp()), InvalidInputError);
    CHECK_THROWS_AS(GrowableIgrParams(0.5, 0.0, TransformSpec::sb_softmax_pp()), InvalidInputError);
    CHECK_THROWS_AS(GrowableIgrParams(0.5, 0.9, TransformSpec::softmax_pp()), InvalidInputError);
    CHECK_THROWS_AS(p.set(0, 0.0, 0.0), InvalidInputError);
}

TEST_CASE("same seed gives the same trace")
{
    GrowableIgrParams p(0.2, 0.99, TransformSpec::sb_softmax_pp());
    Rng a(8);
    Rng b(8);
    for (int i = 0; i < 200; ++i) {
        const TruncatedTrace x = sample_truncated(p, a);
        const TruncatedTrace y = sample_truncated(p, b);
        CHECK(x.k_used == y.k_used);
        CHECK((x.trace.y - y.trace.y).norm() == 0.0);
        CHECK((x.trace.z.coords() - y.trace.z.coords()).norm() == 0.0);
    }
}

TEST_CASE("gradients touch only the coordinates a draw used")
{
    GrowableIgrParams p(0.4, 0.95, TransformSpec::sb_softmax_pp());
    Rng rng(9);
    const TruncatedTrace t = sample_truncated(p, rng);
    const auto coords = gradient_coords(t);
    REQUIRE(coords.size() == t.k_used);
    for (std::size_t k = 0; k < coords.size(); ++k)
        CHECK(coords[k] == k);
    const Vector c = rng.normal_vector(static_cast<Eigen::Index>(t.k_used));
    const MuSigma g = truncated_pullback(p, t, c);
    CHECK(static_cast<std::size_t>(g.mu.size()) == t.k_used);

    // Finite differences in mu through the fixed noise.
    const double h = 1e-6;
    for (Eigen::Index k = 0; k < g.mu.size(); ++k) {
        Vector yp = t.trace.y;
        Vector ym = t.trace.y;
        yp[k] += h;
        ym[k] -= h;
        const double fd = (c.dot(forward(p.spec(), yp, p.tau()).z.coords()) -
                           c.dot(forward(p.spec(), ym, p.tau()).z.coords())) /
                          (2 * h);
        CHECK(g.mu[k] == doctest::Approx(fd).epsilon(1e-5));
        CHECK(g.sigma[k] == doctest::Approx(fd * t.trace.epsilon[k]).epsilon(1e-5));
    }
}

TEST_CASE("truncated recovery")
{
    GrowableIgrParams p(0.3, 0.99, TransformSpec::sb_softmax_pp());
    // A small first stick and a large second one put the category at index 1.
    p.set(0, -6.0, 0.05);
    p.set(1, 6.0, 0.05);
    Rng rng(10);
    const PmfEstimate r = recover_pmf_truncated(p, 5000, rng);
    CHECK(r.pmf.support == SupportKind::TruncatedInfinite);
    CHECK(r.pmf.probs[1] == 1.0);
    CHECK(r.pmf.tail_mass == 0.0);

    GrowableIgrParams q(0.5, 0.99, TransformSpec::sb_softmax_pp());
    const PmfEstimate s = recover_pmf_truncated(q, 20000, rng, 3);
    CHECK(s.pmf.size() <= 3);
    CHECK(s.pmf.probs.sum() + s.pmf.tail_mass == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(s.pmf.tail_mass > 0.0);

    const PmfEstimate m = recover_pmf_truncated_mean(q, 20000, rng, 3);
    CHECK(m.pmf.probs.sum() + m.pmf.tail_mass == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("serialization keeps the materialized prefix")
{
    GrowableIgrParams p(0.4, 0.95, TransformSpec::sb_softmax_pp());
    p.set(0, 0.5, 1.5);
    p.set(2, -1.0, 0.3);
    const Json j = growable_to_json(p);
    CHECK(j.at("high_water").get<std::size_t>() == 3);
    const GrowableIgrParams back = growable_from_json(j);
    CHECK(back.mu_prefix() == p.mu_prefix());
    CHECK(back.sigma_prefix() == p.sigma_prefix());
    CHECK(back.rho() == p.rho());
    CHECK(back.tau() == p.tau());
}
