#include "igr/gradcheck.hpp"

#include "igr/distributions.hpp"
#include "igr/estimators.hpp"
#include "igr/infinite.hpp"
#include "igr/recovery.hpp"
#include "igr/transforms.hpp"

#include <algorithm>
#include <cmath>

namespace igr {

double fd_check(const VectorFn& fun, const Vector& point, const Vector& cotangent, const PullbackFn& pullback)
{
    const Vector analytic = pullback(point, cotangent);
    if (analytic.size() != point.size())
        throw InvalidInputError("fd_check: pullback returned the wrong dimension");
    Vector x = point;
    double worst = 0.0;
    for (Eigen::Index k = 0; k < x.size(); ++k) {
        const double h = 1e-5 * (1.0 + std::abs(x[k]));
        const double orig = x[k];
        x[k] = orig + h;
        const double fp = cotangent.dot(fun(x));
        x[k] = orig - h;
        const double fm = cotangent.dot(fun(x));
        x[k] = orig;
        const double fd = (fp - fm) / (2.0 * h);
        const double scale = std::max({1.0, std::abs(fd), std::abs(analytic[k])});
        worst = std::max(worst, std::abs(fd - analytic[k]) / scale);
    }
    return worst;
}

Matrix fd_jacobian(const VectorFn& fun, const Vector& point)
{
    const Vector f0 = fun(point);
    Matrix jac(f0.size(), point.size());
    Vector x = point;
    for (Eigen::Index k = 0; k < x.size(); ++k) {
        const double h = 1e-5 * (1.0 + std::abs(x[k]));
        const double orig = x[k];
        x[k] = orig + h;
        const Vector fp = fun(x);
        x[k] = orig - h;
        const Vector fm = fun(x);
        x[k] = orig;
        jac.col(k) = (fp - fm) / (2.0 * h);
    }
    return jac;
}

namespace {

double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * rng.uniform(); }

Vector uniform_vector(Rng& rng, Eigen::Index n, double lo, double hi)
{
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i)
        v[i] = uniform(rng, lo, hi);
    return v;
}

Eigen::Index random_dim(Rng& rng, Eigen::Index lo, Eigen::Index hi)
{
    return lo + static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(hi - lo + 1)));
}

double check_transform(const TransformSpec& spec, Rng& rng, Eigen::Index n, double tau)
{
    const Vector y = uniform_vector(rng, n, -3.0, 3.0);
    const Vector c = rng.normal_vector(n);
    return fd_check([&](const Vector& x) { return forward(spec, x, tau).z.coords(); }, y, c,
                    [&](const Vector& x, const Vector& cot) { return pullback(spec, x, tau, cot); });
}

// Flattened planar layer parameters [w, u, b].
Vector flatten(const PlanarLayer& layer)
{
    const Eigen::Index n = layer.w.size();
    Vector out(2 * n + 1);
    out << layer.w, layer.u, layer.b;
    return out;
}

PlanarLayer unflatten(const Vector& theta, Eigen::Index n)
{
    return PlanarLayer{theta.head(n), theta.segment(n, n), theta[2 * n]};
}

Vector flatten(const PlanarLayerGrad& g)
{
    Vector out(2 * g.w.size() + 1);
    out << g.w, g.u, g.b;
    return out;
}

// Moment-matching loss over (mu, log sigma, flow...) with the noise held fixed.
double check_moment_match(TransformSpec spec, Rng& rng, Eigen::Index n, double tau)
{
    const int batch = 4;
    std::vector<Vector> noise;
    for (int b = 0; b < batch; ++b)
        noise.push_back(rng.normal_vector(n));
    Vector target = uniform_vector(rng, n + 1, 0.05, 1.0);
    target /= target.sum();
    const Eigen::Index flow_size = static_cast<Eigen::Index>(spec.flow.size()) * (2 * n + 1);
    Vector theta(2 * n + flow_size);
    theta.head(n) = uniform_vector(rng, n, -1.5, 1.5);
    theta.segment(n, n) = uniform_vector(rng, n, -0.7, 0.5);
    for (std::size_t l = 0; l < spec.flow.size(); ++l)
        theta.segment(2 * n + static_cast<Eigen::Index>(l) * (2 * n + 1), 2 * n + 1) = flatten(spec.flow[l]);

    auto params_at = [spec, n, tau](const Vector& th) {
        IgrParams p{th.head(n), th.segment(n, n).array().exp().matrix(), tau, spec};
        for (std::size_t l = 0; l < p.spec.flow.size(); ++l)
            p.spec.flow[l] = unflatten(th.segment(2 * n + static_cast<Eigen::Index>(l) * (2 * n + 1), 2 * n + 1), n);
        return p;
    };
    const Vector c = Vector::Constant(1, uniform(rng, 0.5, 2.0));
    return fd_check(
        [&](const Vector& th) { return Vector::Constant(1, moment_match_grad(params_at(th), target, noise).loss); },
        theta, c, [&](const Vector& th, const Vector& cot) {
            const MomentMatchGrad g = moment_match_grad(params_at(th), target, noise);
            Vector out(th.size());
            out.head(n) = g.mu;
            out.segment(n, n) = g.log_sigma;
            for (std::size_t l = 0; l < g.flow.size(); ++l)
                out.segment(2 * n + static_cast<Eigen::Index>(l) * (2 * n + 1), 2 * n + 1) = flatten(g.flow[l]);
            return Vector(cot[0] * out);
        });
}

std::vector<GradCheckCase> build_registry()
{
    std::vector<GradCheckCase> cases;

    cases.push_back({"softmax++", [](Rng& rng) {
                         const Eigen::Index n = random_dim(rng, 1, 9);
                         const double tau = uniform(rng, 0.3, 1.5);
                         return check_transform(TransformSpec::softmax_pp(uniform(rng, 0.5, 2.0)), rng, n, tau);
                     }});
    cases.push_back({"sigmoid-stick-breaking", [](Rng& rng) {
                         const Eigen::Index n = random_dim(rng, 1, 9);
                         return check_transform(TransformSpec::sb_identity(), rng, n, 1.0);
                     }});
    cases.push_back({"sigmoid-stick-breaking-softmax++", [](Rng& rng) {
                         const Eigen::Index n = random_dim(rng, 1, 9);
                         return check_transform(TransformSpec::sb_softmax_pp(), rng, n, uniform(rng, 0.1, 1.0));
                     }});
    cases.push_back({"vertex-interpolation", [](Rng& rng) {
                         const Eigen::Index n = random_dim(rng, 1, 9);
                         return check_transform(TransformSpec::sb_interp(), rng, n, uniform(rng, 0.05, 1.0));
                     }});
    cases.push_back({"planar-layer-input", [](Rng& rng) {
                         const Eigen::Index n = random_dim(rng, 1, 9);
                         const PlanarLayer layer{rng.normal_vector(n), rng.normal_vector(n), rng.normal()};
                         const Vector y = rng.normal_vector(n);
                         return fd_check([&](const Vector& x) { return planar_layer(x, layer).y; }, y,
                                         rng.normal_vector(n), [&](const Vector& x, const Vector& c) {
                                             return planar_layer_pullback(x, layer, c);
                                         });
                     }});
    cases.push_back({"planar-layer-params", [](Rng& rng) {
                         const Eigen::Index n = random_dim(rng, 1, 9);
                         const PlanarLayer layer{rng.normal_vector(n), rng.normal_vector(n), rng.normal()};
                         const Vector y = rng.normal_vector(n);
                         return fd_check([&](const Vector& th) { return planar_layer(y, unflatten(th, n)).y; },
                                         flatten(layer), rng.normal_vector(n), [&](const Vector& th, const Vector& c) {
                                             return flatten(planar_layer_param_pullback(y, unflatten(th, n), c));
                                         });
                     }});
    cases.push_back({"planar-softmax++", [](Rng& rng) {
                         const Eigen::Index n = random_dim(rng, 1, 9);
                         const TransformSpec spec = TransformSpec::planar(n, 2, rng, 0.7);
                         return check_transform(spec, rng, n, uniform(rng, 0.3, 1.5));
                     }});
    cases.push_back({"clamp-params", [](Rng& rng) {
                         const Eigen::Index n = random_dim(rng, 1, 9);
                         const Vector raw = uniform_vector(rng, 2 * n, -2.5, 2.5);
                         auto split = [n](const Vector& r) { return ClampedParams{r.head(n), r.tail(n)}; };
                         return fd_check(
                             [&](const Vector& r) {
                                 const MuSigma ms = clamp_params(split(r));
                                 Vector out(2 * n);
                                 out << ms.mu, ms.sigma;
                                 return out;
                             },
                             raw, rng.normal_vector(2 * n), [&](const Vector& r, const Vector& c) {
                                 const ClampedParams g = clamp_params_pullback(split(r), c.head(n), c.tail(n));
                                 Vector out(2 * n);
                                 out << g.mu_raw, g.sigma_raw;
                                 return out;
                             });
                     }});
    cases.push_back({"quadrature-recovery", [](Rng& rng) {
                         const Eigen::Index n = random_dim(rng, 1, 9);
                         const MuSigma ms = clamp_params({uniform_vector(rng, n, -1.5, 1.5), uniform_vector(rng, n, -3, 3)});
                         Vector point(2 * n);
                         point << ms.mu, ms.sigma;
                         auto raw_probs = [n](const Vector& p) {
                             const QuadratureRecovery q = recover_pmf_quad(p.head(n), p.tail(n));
                             return Vector(q.renormalized ? Vector(q.pmf.probs * q.raw_sum) : q.pmf.probs);
                         };
                         return fd_check(raw_probs, point, rng.normal_vector(n + 1), [n](const Vector& p, const Vector& c) {
                             const MuSigma g = recover_pmf_quad_pullback(p.head(n), p.tail(n), c);
                             Vector out(2 * n);
                             out << g.mu, g.sigma;
                             return out;
                         });
                     }});
    cases.push_back({"gumbel-softmax", [](Rng& rng) {
                         const Eigen::Index k = random_dim(rng, 2, 10);
                         const double tau = uniform(rng, 0.3, 1.5);
                         const Vector gumbel = gumbel_noise(k, rng);
                         const Vector log_alpha = uniform_vector(rng, k, -2.0, 2.0);
                         auto params = [tau](const Vector& la) { return GsParams{la.array().exp().matrix(), tau}; };
                         return fd_check([&](const Vector& la) { return gs_from_noise(params(la), gumbel); }, log_alpha,
                                         rng.normal_vector(k), [&](const Vector& la, const Vector& c) {
                                             return gs_pullback_log_alpha(params(la), gumbel, c);
                                         });
                     }});
    cases.push_back({"moment-match-softmax++", [](Rng& rng) {
                         return check_moment_match(TransformSpec::softmax_pp(), rng, random_dim(rng, 1, 9),
                                                   uniform(rng, 0.3, 1.0));
                     }});
    cases.push_back({"moment-match-stick-breaking", [](Rng& rng) {
                         return check_moment_match(TransformSpec::sb_softmax_pp(), rng, random_dim(rng, 1, 9),
                                                   uniform(rng, 0.1, 1.0));
                     }});
    cases.push_back({"moment-match-planar", [](Rng& rng) {
                         const Eigen::Index n = random_dim(rng, 1, 9);
                         return check_moment_match(TransformSpec::planar(n, 2, rng, 0.7), rng, n, uniform(rng, 0.3, 1.0));
                     }});
    cases.push_back({"moment-match-truncated", [](Rng& rng) {
                         GrowableIgrParams params(uniform(rng, 0.1, 1.0), 0.95, TransformSpec::sb_softmax_pp());
                         for (std::size_t k = 0; k < 6; ++k)
                             params.set(k, uniform(rng, -2.0, 1.0), std::exp(uniform(rng, -0.7, 0.3)));
                         std::vector<TruncatedTrace> traces;
                         for (int b = 0; b < 3; ++b)
                             traces.push_back(sample_truncated_and_materialize(params, rng));
                         std::size_t kmax = 0;
                         for (const auto& t : traces)
                             kmax = std::max(kmax, t.k_used);
                         params.materialize(kmax);
                         const auto n = static_cast<Eigen::Index>(kmax);
                         Vector target = uniform_vector(rng, n + 2, 0.05, 1.0);
                         target /= target.sum();
                         // Re-evaluate the same draws (same noise, same k) at perturbed parameters.
                         auto loss_at = [&](const Vector& th) {
                             GrowableIgrParams p = params;
                             for (Eigen::Index j = 0; j < n; ++j)
                                 p.set(static_cast<std::size_t>(j), th[j], std::exp(th[n + j]));
                             std::vector<TruncatedTrace> moved;
                             for (const auto& t : traces) {
                                 const auto k = static_cast<Eigen::Index>(t.k_used);
                                 Vector y(k);
                                 for (Eigen::Index j = 0; j < k; ++j)
                                     y[j] = th[j] + std::exp(th[n + j]) * t.trace.epsilon[j];
                                 Forwarded f = forward(p.spec(), y, p.tau());
                                 moved.push_back({t.k_used, SampleTrace{t.trace.epsilon, y, f.w, f.z, f.log_det_jac}});
                             }
                             return truncated_moment_match_grad(p, target, moved);
                         };
                         Vector theta(2 * n);
                         for (Eigen::Index j = 0; j < n; ++j) {
                             theta[j] = params.mu(static_cast<std::size_t>(j));
                             theta[n + j] = std::log(params.sigma(static_cast<std::size_t>(j)));
                         }
                         return fd_check([&](const Vector& th) { return Vector::Constant(1, loss_at(th).loss); }, theta,
                                         Vector::Ones(1), [&](const Vector& th, const Vector& c) {
                                             const auto g = loss_at(th);
                                             Vector out = Vector::Zero(2 * n);
                                             for (std::size_t j = 0; j < g.max_k_used; ++j) {
                                                 out[static_cast<Eigen::Index>(j)] = g.mu[j];
                                                 out[n + static_cast<Eigen::Index>(j)] = g.log_sigma[j];
                                             }
                                             return Vector(c[0] * out);
                                         });
                     }});
    return cases;
}

} // namespace

const std::vector<GradCheckCase>& registered_pullbacks()
{
    static const std::vector<GradCheckCase> cases = build_registry();
    return cases;
}

std::vector<GradCheckResult> run_registered_checks(int points, std::uint64_t seed)
{
    std::vector<GradCheckResult> out;
    Rng root(seed);
    std::uint64_t index = 0;
    for (const auto& c : registered_pullbacks()) {
        GradCheckResult r{c.name, 0.0, points};
        for (int i = 0; i < points; ++i) {
            Rng rng = root.substream(index++);
            r.max_error = std::max(r.max_error, c.run(rng));
        }
        out.push_back(std::move(r));
    }
    return out;
}

} // namespace igr
