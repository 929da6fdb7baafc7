#include "igr/transforms.hpp"

#include <algorithm>
#include <cmath>

namespace igr {

namespace {

constexpr double kSigmoidClamp = 1e-12;
constexpr int kPlanarBisectionSteps = 50;

void check_tau(double tau)
{
    if (!(tau > 0.0) || !std::isfinite(tau))
        throw InvalidInputError("temperature must be positive and finite");
}

void check_delta(double delta)
{
    if (!(delta > 0.0) || !std::isfinite(delta))
        throw InvalidInputError("softmax++ delta must be positive and finite");
}

void check_cotangent(const Vector& cotangent, Eigen::Index dim)
{
    if (cotangent.size() != dim)
        throw InvalidInputError("pullback: cotangent has dimension " + std::to_string(cotangent.size()) +
                                ", expected " + std::to_string(dim));
}

// Sigmoid output together with its complement, each computed without
// cancellation.
struct SigmoidPair {
    Vector u;
    Vector comp;
};

SigmoidPair sigmoid_pair(const Vector& y)
{
    SigmoidPair out{Vector(y.size()), Vector(y.size())};
    for (Eigen::Index k = 0; k < y.size(); ++k) {
        out.u[k] = std::clamp(sigmoid(y[k]), kSigmoidClamp, 1.0 - kSigmoidClamp);
        out.comp[k] = std::clamp(sigmoid(-y[k]), kSigmoidClamp, 1.0 - kSigmoidClamp);
    }
    return out;
}

// Stick-breaking from (u, 1 - u).
SimplexInterior stick_break_pair(const Vector& u, const Vector& comp)
{
    Vector v(u.size());
    double stick = 1.0;
    for (Eigen::Index k = 0; k < u.size(); ++k) {
        v[k] = u[k] * stick;
        stick *= comp[k];
    }
    return SimplexInterior::from_map(std::move(v), stick);
}

double stick_break_logdet_pair(const Vector& comp)
{
    const Eigen::Index n = comp.size();
    double out = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
        out += static_cast<double>(n - 1 - i) * std::log(comp[i]);
    return out;
}

Vector stick_break_pullback_pair(const Vector& u, const Vector& comp, const Vector& cotangent)
{
    const Eigen::Index n = u.size();
    Vector stick(n);
    Vector v(n);
    double running = 1.0;
    for (Eigen::Index k = 0; k < n; ++k) {
        stick[k] = running;
        v[k] = u[k] * running;
        running *= comp[k];
    }
    Vector out(n);
    double tail = 0.0; // sum_{k>i} c_k v_k
    for (Eigen::Index i = n - 1; i >= 0; --i) {
        out[i] = cotangent[i] * stick[i] - tail / comp[i];
        tail += cotangent[i] * v[i];
    }
    return out;
}

// logit(u_k) with u = SB^{-1}(v), computed as log v_k - log(tail mass after k)
// so the complement never goes through a subtraction.
Vector stick_break_inverse_logit(const SimplexInterior& v)
{
    const Eigen::Index n = v.dim();
    Vector y(n);
    double after = v.remainder(); // remainder + sum_{i>k} v_i
    for (Eigen::Index k = n - 1; k >= 0; --k) {
        if (!(v[k] > 0.0) || !(after > 0.0))
            throw DomainError("stick-breaking inverse: depleted stick");
        y[k] = std::log(v[k]) - std::log(after);
        after += v[k];
    }
    return y;
}

Eigen::Index terminal_argmax(const SimplexInterior& w)
{
    const Eigen::Index n = w.dim();
    Eigen::Index best = argmax_lowest(w.coords());
    if (n == 0 || w.remainder() > w[best])
        best = n;
    return best;
}

} // namespace

// ---------------------------------------------------------------- spec

std::string_view to_string(TransformKind kind)
{
    switch (kind) {
    case TransformKind::SoftmaxPP: return "SoftmaxPP";
    case TransformKind::SbSoftmaxPP: return "SbSoftmaxPP";
    case TransformKind::SbInterp: return "SbInterp";
    case TransformKind::PlanarSoftmaxPP: return "PlanarSoftmaxPP";
    case TransformKind::SbIdentity: return "SbIdentity";
    }
    return "unknown";
}

TransformKind transform_kind_from_string(std::string_view name)
{
    for (auto kind : {TransformKind::SoftmaxPP, TransformKind::SbSoftmaxPP, TransformKind::SbInterp,
                      TransformKind::PlanarSoftmaxPP, TransformKind::SbIdentity}) {
        if (to_string(kind) == name)
            return kind;
    }
    throw InvalidInputError("unknown transform kind '" + std::string(name) + "'");
}

bool is_stick_breaking(TransformKind kind)
{
    return kind == TransformKind::SbSoftmaxPP || kind == TransformKind::SbInterp || kind == TransformKind::SbIdentity;
}

Vector PlanarLayer::u_hat() const
{
    const double norm2 = w.squaredNorm();
    if (!(norm2 > 0.0))
        throw InvalidInputError("planar layer: direction vector w has zero norm");
    const double wu = w.dot(u);
    const double m = -1.0 + softplus(wu);
    return u + ((m - wu) / norm2) * w;
}

PlanarLayer PlanarLayer::identity(Vector w)
{
    const double norm2 = w.squaredNorm();
    if (!(norm2 > 0.0))
        throw InvalidInputError("planar layer: direction vector w has zero norm");
    // u = lambda w with softplus(lambda |w|^2) = 1 makes u_hat vanish.
    const double lambda = std::log(std::exp(1.0) - 1.0) / norm2;
    Vector u = lambda * w;
    return PlanarLayer{std::move(w), std::move(u), 0.0};
}

TransformSpec TransformSpec::planar(Eigen::Index dim, int layers, Rng& rng, double scale, double delta)
{
    TransformSpec spec{TransformKind::PlanarSoftmaxPP, delta, {}};
    for (int l = 0; l < layers; ++l) {
        PlanarLayer layer;
        layer.w = scale * rng.normal_vector(dim);
        layer.u = scale * rng.normal_vector(dim);
        layer.b = 0.0;
        spec.flow.push_back(std::move(layer));
    }
    return spec;
}

void TransformSpec::validate(Eigen::Index dim) const
{
    check_delta(delta);
    if (kind != TransformKind::PlanarSoftmaxPP)
        return;
    for (const auto& layer : flow) {
        if (layer.w.size() != dim || layer.u.size() != dim)
            throw InvalidInputError("planar layer dimension does not match the location vector");
        if (!layer.w.allFinite() || !layer.u.allFinite() || !std::isfinite(layer.b))
            throw InvalidInputError("planar layer has non-finite parameters");
        if (!(layer.w.squaredNorm() > 0.0))
            throw InvalidInputError("planar layer: direction vector w has zero norm");
    }
}

bool operator==(const PlanarLayer& a, const PlanarLayer& b) { return a.w == b.w && a.u == b.u && a.b == b.b; }

bool operator==(const TransformSpec& a, const TransformSpec& b)
{
    return a.kind == b.kind && a.delta == b.delta && a.flow == b.flow;
}

// ---------------------------------------------------------------- softmax++

SimplexInterior softmax_pp(const Vector& y, double tau, double delta)
{
    check_tau(tau);
    check_delta(delta);
    require_finite(y, "softmax++");
    const Vector scaled = y / tau;
    const double shift = std::max(scaled.size() ? scaled.maxCoeff() : 0.0, 0.0);
    const Vector e = (scaled.array() - shift).exp().matrix();
    const double d = delta * std::exp(-shift);
    const double s = e.sum() + d;
    return SimplexInterior::from_map(e / s, d / s);
}

Vector softmax_pp_inverse(const SimplexInterior& z, double tau, double delta)
{
    check_tau(tau);
    check_delta(delta);
    if (!(z.remainder() > 0.0))
        throw DomainError("softmax++ inverse: remainder is not positive");
    const double log_rem = std::log(z.remainder());
    Vector y(z.dim());
    for (Eigen::Index k = 0; k < z.dim(); ++k) {
        if (!(z[k] > 0.0))
            throw DomainError("softmax++ inverse: coordinate is not positive");
        y[k] = tau * (std::log(delta) + std::log(z[k]) - log_rem);
    }
    return y;
}

double softmax_pp_logdet(const Vector& y, double tau, double delta)
{
    check_tau(tau);
    check_delta(delta);
    require_finite(y, "softmax++ logdet");
    const Vector scaled = y / tau;
    const double shift = std::max(scaled.size() ? scaled.maxCoeff() : 0.0, 0.0);
    const double s = (scaled.array() - shift).exp().sum() + delta * std::exp(-shift);
    const double log_s = shift + std::log(s);
    const auto k = static_cast<double>(y.size() + 1);
    return std::log(delta) + scaled.sum() - (k - 1.0) * std::log(tau) - k * log_s;
}

Vector softmax_pp_pullback(const Vector& y, double tau, double delta, const Vector& cotangent)
{
    check_cotangent(cotangent, y.size());
    const Vector z = softmax_pp(y, tau, delta).coords();
    const double zc = z.dot(cotangent);
    return (z.cwiseProduct(cotangent) - zc * z) / tau;
}

// ---------------------------------------------------------------- sigmoid / stick-breaking

Vector clamped_sigmoid(const Vector& y) { return sigmoid_pair(y).u; }

double sigmoid_logdet(const Vector& y)
{
    const auto p = sigmoid_pair(y);
    return p.u.array().log().sum() + p.comp.array().log().sum();
}

Vector sigmoid_pullback(const Vector& y, const Vector& cotangent)
{
    check_cotangent(cotangent, y.size());
    const auto p = sigmoid_pair(y);
    return cotangent.cwiseProduct(p.u).cwiseProduct(p.comp);
}

SimplexInterior stick_break(const Vector& u)
{
    require_finite(u, "stick-breaking");
    for (Eigen::Index k = 0; k < u.size(); ++k) {
        if (!(u[k] > 0.0 && u[k] < 1.0))
            throw DomainError("stick-breaking: fractions must lie strictly inside (0, 1)");
    }
    const Vector comp = (1.0 - u.array()).matrix();
    return stick_break_pair(u, comp);
}

Vector stick_break_inverse(const SimplexInterior& v)
{
    const Eigen::Index n = v.dim();
    Vector u(n);
    double after = v.remainder();
    for (Eigen::Index k = n - 1; k >= 0; --k) {
        const double denom = after + v[k];
        if (!(denom > 0.0) || !(v[k] > 0.0))
            throw DomainError("stick-breaking inverse: depleted stick");
        u[k] = v[k] / denom;
        after = denom;
    }
    return u;
}

double stick_break_logdet(const Vector& u) { return stick_break_logdet_pair((1.0 - u.array()).matrix()); }

Vector stick_break_pullback(const Vector& u, const Vector& cotangent)
{
    check_cotangent(cotangent, u.size());
    return stick_break_pullback_pair(u, (1.0 - u.array()).matrix(), cotangent);
}

double sb_chain_logdet(const Vector& y, double tau, const TransformSpec& spec)
{
    if (!is_stick_breaking(spec.kind))
        throw ContractError("sb_chain_logdet: transform is not a stick-breaking chain");
    check_tau(tau);
    require_finite(y, "stick-breaking chain");
    const auto p = sigmoid_pair(y);
    double out = p.u.array().log().sum() + p.comp.array().log().sum();
    out += stick_break_logdet_pair(p.comp);
    switch (spec.kind) {
    case TransformKind::SbSoftmaxPP:
        out += softmax_pp_logdet(stick_break_pair(p.u, p.comp).coords(), tau, spec.delta);
        break;
    case TransformKind::SbInterp: out += vertex_interp_logdet(y.size(), tau); break;
    default: break;
    }
    return out;
}

// ---------------------------------------------------------------- vertex interpolation

SimplexInterior vertex_interp(const SimplexInterior& w, double tau)
{
    if (!(tau > 0.0 && tau <= 1.0))
        throw InvalidInputError("vertex interpolation: temperature must lie in (0, 1]");
    const Eigen::Index n = w.dim();
    const Eigen::Index vertex = terminal_argmax(w);
    Vector z = tau * w.coords();
    double rem = tau * w.remainder();
    if (vertex < n)
        z[vertex] += 1.0 - tau;
    else
        rem += 1.0 - tau;
    return SimplexInterior::from_map(std::move(z), rem);
}

SimplexInterior vertex_interp_inverse(const SimplexInterior& z, double tau)
{
    if (!(tau > 0.0 && tau <= 1.0))
        throw InvalidInputError("vertex interpolation: temperature must lie in (0, 1]");
    const Eigen::Index n = z.dim();
    const Eigen::Index vertex = terminal_argmax(z);
    Vector w = z.coords();
    double rem = z.remainder();
    if (vertex < n)
        w[vertex] -= 1.0 - tau;
    else
        rem -= 1.0 - tau;
    w /= tau;
    rem /= tau;
    if ((w.array() <= 0.0).any() || !(rem > 0.0))
        throw DomainError("vertex interpolation inverse: point outside the image");
    return SimplexInterior::from_map(std::move(w), rem);
}

double vertex_interp_logdet(Eigen::Index dim, double tau) { return static_cast<double>(dim) * std::log(tau); }

Vector vertex_interp_pullback(double tau, const Vector& cotangent) { return tau * cotangent; }

// ---------------------------------------------------------------- planar flow

PlanarOutput planar_layer(const Vector& y, const PlanarLayer& layer)
{
    const Vector u_hat = layer.u_hat();
    const double t = std::tanh(layer.w.dot(y) + layer.b);
    const double slope = 1.0 - t * t;
    return {y + t * u_hat, std::log(std::abs(1.0 + slope * u_hat.dot(layer.w)))};
}

Vector planar_layer_inverse(const Vector& out, const PlanarLayer& layer)
{
    const Vector u_hat = layer.u_hat();
    const double wu = layer.w.dot(u_hat);
    const double target = layer.w.dot(out) + layer.b;
    // a + wu * tanh(a) = target is monotone in a because wu >= -1.
    double lo = target - std::abs(wu);
    double hi = target + std::abs(wu);
    for (int i = 0; i < kPlanarBisectionSteps && hi > lo; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (mid + wu * std::tanh(mid) < target)
            lo = mid;
        else
            hi = mid;
    }
    const double a = 0.5 * (lo + hi);
    return out - std::tanh(a) * u_hat;
}

Vector planar_layer_pullback(const Vector& y, const PlanarLayer& layer, const Vector& cotangent)
{
    check_cotangent(cotangent, y.size());
    const Vector u_hat = layer.u_hat();
    const double t = std::tanh(layer.w.dot(y) + layer.b);
    return cotangent + ((1.0 - t * t) * u_hat.dot(cotangent)) * layer.w;
}

PlanarLayerGrad planar_layer_param_pullback(const Vector& y, const PlanarLayer& layer, const Vector& cotangent)
{
    check_cotangent(cotangent, y.size());
    const Vector& w = layer.w;
    const Vector& u = layer.u;
    const double norm2 = w.squaredNorm();
    const Vector u_hat = layer.u_hat();
    const double t = std::tanh(w.dot(y) + layer.b);
    const double slope = 1.0 - t * t;
    const double uc = u_hat.dot(cotangent);

    const Vector d_uhat = t * cotangent;
    const double wu = w.dot(u);
    const double beta = -1.0 + softplus(wu) - wu;
    const double dbeta = sigmoid(wu) - 1.0;
    const double w_duhat = w.dot(d_uhat);

    PlanarLayerGrad g;
    g.b = slope * uc;
    g.u = d_uhat + (w_duhat * dbeta / norm2) * w;
    g.w = (slope * uc) * y + (beta / norm2) * d_uhat + w_duhat * ((dbeta / norm2) * u - (2.0 * beta / (norm2 * norm2)) * w);
    return g;
}

// ---------------------------------------------------------------- composed maps

Forwarded forward(const TransformSpec& spec, const Vector& y, double tau)
{
    check_tau(tau);
    require_finite(y, "forward");
    spec.validate(y.size());
    switch (spec.kind) {
    case TransformKind::SoftmaxPP:
        return {softmax_pp(y, tau, spec.delta), std::nullopt, softmax_pp_logdet(y, tau, spec.delta)};
    case TransformKind::PlanarSoftmaxPP: {
        Vector cur = y;
        double log_det = 0.0;
        for (const auto& layer : spec.flow) {
            auto step = planar_layer(cur, layer);
            cur = std::move(step.y);
            log_det += step.log_det;
        }
        log_det += softmax_pp_logdet(cur, tau, spec.delta);
        return {softmax_pp(cur, tau, spec.delta), std::nullopt, log_det};
    }
    case TransformKind::SbSoftmaxPP:
    case TransformKind::SbInterp:
    case TransformKind::SbIdentity: {
        const auto p = sigmoid_pair(y);
        SimplexInterior w = stick_break_pair(p.u, p.comp);
        double log_det = p.u.array().log().sum() + p.comp.array().log().sum();
        log_det += stick_break_logdet_pair(p.comp);
        Forwarded out{w, w.coords(), 0.0};
        if (spec.kind == TransformKind::SbSoftmaxPP) {
            out.z = softmax_pp(w.coords(), tau, spec.delta);
            log_det += softmax_pp_logdet(w.coords(), tau, spec.delta);
        } else if (spec.kind == TransformKind::SbInterp) {
            out.z = vertex_interp(w, tau);
            log_det += vertex_interp_logdet(y.size(), tau);
        }
        out.log_det_jac = log_det;
        return out;
    }
    }
    throw InvalidInputError("forward: unknown transform kind");
}

Vector inverse(const TransformSpec& spec, const SimplexInterior& z, double tau)
{
    check_tau(tau);
    spec.validate(z.dim());
    switch (spec.kind) {
    case TransformKind::SoftmaxPP: return softmax_pp_inverse(z, tau, spec.delta);
    case TransformKind::PlanarSoftmaxPP: {
        Vector cur = softmax_pp_inverse(z, tau, spec.delta);
        for (auto it = spec.flow.rbegin(); it != spec.flow.rend(); ++it)
            cur = planar_layer_inverse(cur, *it);
        return cur;
    }
    case TransformKind::SbSoftmaxPP: {
        const Vector w = softmax_pp_inverse(z, tau, spec.delta);
        if ((w.array() <= 0.0).any() || !(w.sum() < 1.0))
            throw DomainError("inverse: point is outside the image of the stick-breaking softmax++ map");
        return stick_break_inverse_logit(SimplexInterior::from_map(w, 1.0 - w.sum()));
    }
    case TransformKind::SbInterp: return stick_break_inverse_logit(vertex_interp_inverse(z, tau));
    case TransformKind::SbIdentity: return stick_break_inverse_logit(z);
    }
    throw InvalidInputError("inverse: unknown transform kind");
}

FullPullback pullback_with_params(const TransformSpec& spec, const Vector& y, double tau, const Vector& cotangent)
{
    check_tau(tau);
    require_finite(y, "pullback");
    check_cotangent(cotangent, y.size());
    spec.validate(y.size());
    FullPullback out;
    switch (spec.kind) {
    case TransformKind::SoftmaxPP: out.y = softmax_pp_pullback(y, tau, spec.delta, cotangent); break;
    case TransformKind::PlanarSoftmaxPP: {
        std::vector<Vector> inputs;
        inputs.reserve(spec.flow.size());
        Vector cur = y;
        for (const auto& layer : spec.flow) {
            inputs.push_back(cur);
            cur = planar_layer(cur, layer).y;
        }
        Vector grad = softmax_pp_pullback(cur, tau, spec.delta, cotangent);
        out.flow.resize(spec.flow.size());
        for (std::size_t l = spec.flow.size(); l-- > 0;) {
            out.flow[l] = planar_layer_param_pullback(inputs[l], spec.flow[l], grad);
            grad = planar_layer_pullback(inputs[l], spec.flow[l], grad);
        }
        out.y = std::move(grad);
        break;
    }
    case TransformKind::SbSoftmaxPP:
    case TransformKind::SbInterp:
    case TransformKind::SbIdentity: {
        const auto p = sigmoid_pair(y);
        Vector grad = cotangent;
        if (spec.kind == TransformKind::SbSoftmaxPP)
            grad = softmax_pp_pullback(stick_break_pair(p.u, p.comp).coords(), tau, spec.delta, grad);
        else if (spec.kind == TransformKind::SbInterp)
            grad = vertex_interp_pullback(tau, grad);
        grad = stick_break_pullback_pair(p.u, p.comp, grad);
        out.y = grad.cwiseProduct(p.u).cwiseProduct(p.comp);
        break;
    }
    }
    return out;
}

Vector pullback(const TransformSpec& spec, const Vector& y, double tau, const Vector& cotangent)
{
    return pullback_with_params(spec, y, tau, cotangent).y;
}

} // namespace igr
