#include "igr/gradcheck.hpp"
#include "igr/transforms.hpp"

#include <doctest.h>

#include <algorithm>
#include <chrono>

using namespace igr;

TEST_CASE("every registered pullback passes the finite-difference check")
{
    const auto start = std::chrono::steady_clock::now();
    const auto results = run_registered_checks(20, 1);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    CHECK(results.size() == registered_pullbacks().size());
    for (const auto& r : results) {
        INFO(r.name, " max error ", r.max_error);
        CHECK(r.points == 20);
        CHECK(r.max_error <= 1e-5);
    }
    CHECK(seconds < 60.0);
}

TEST_CASE("registry covers every pullback family")
{
    std::vector<std::string> names;
    for (const auto& c : registered_pullbacks())
        names.push_back(c.name);
    for (const char* expected : {"softmax++", "sigmoid-stick-breaking", "vertex-interpolation", "planar-layer-input",
                                 "planar-layer-params", "clamp-params", "quadrature-recovery", "gumbel-softmax",
                                 "moment-match-softmax++", "moment-match-truncated"})
        CHECK(std::find(names.begin(), names.end(), expected) != names.end());
}

TEST_CASE("affine maps are checked to rounding error")
{
    Rng rng(2);
    const Matrix a = Matrix::Random(4, 3);
    const Vector b = Vector::Random(4);
    for (int i = 0; i < 20; ++i) {
        const Vector x = rng.normal_vector(3);
        const Vector c = rng.normal_vector(4);
        const double err = fd_check([&](const Vector& v) { return Vector(a * v + b); }, x, c,
                                    [&](const Vector&, const Vector& cot) { return Vector(a.transpose() * cot); });
        CHECK(err <= 1e-10);
    }
}

TEST_CASE("softmax++ self-test")
{
    Rng rng(3);
    const Vector y = rng.normal_vector(5);
    const Vector c = rng.normal_vector(5);
    const double err = fd_check([](const Vector& v) { return Vector(softmax_pp(v, 0.5, 1.0).coords()); }, y, c,
                                [](const Vector& v, const Vector& cot) { return softmax_pp_pullback(v, 0.5, 1.0, cot); });
    CHECK(err <= 1e-5);
}

TEST_CASE("a corrupted pullback is detected")
{
    Rng rng(4);
    for (int i = 0; i < 20; ++i) {
        const Vector y = rng.normal_vector(4);
        const Vector c = rng.normal_vector(4);
        auto broken = [](const Vector& v, const Vector& cot) {
            Vector g = softmax_pp_pullback(v, 1.0, 1.0, cot);
            g[1] = -g[1];
            return g;
        };
        const Vector g = softmax_pp_pullback(y, 1.0, 1.0, c);
        // A flipped sign is only visible when the entry is not negligible.
        if (std::abs(g[1]) < 0.05)
            continue;
        CHECK(fd_check([](const Vector& v) { return Vector(softmax_pp(v, 1.0, 1.0).coords()); }, y, c, broken) >= 0.1);
    }
}

TEST_CASE("finite-difference Jacobian")
{
    const Matrix a = Matrix::Random(2, 3);
    const Matrix j = fd_jacobian([&](const Vector& v) { return Vector(a * v); }, Vector::Ones(3));
    CHECK((j - a).norm() < 1e-9);
}
