#pragma once

// Invertible maps from R^(K-1) onto the open simplex, with inverses,
// log|det J| and vector-Jacobian products (pullbacks).
//
// Every stage follows the same shape: a forward evaluation, an inverse,
// a log-det and a pullback taking the cotangent of the stage output and
// returning the cotangent of its input. The composed maps selected by
// TransformSpec chain these stages.

#include "igr/common.hpp"
#include "igr/simplex.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace igr {

enum class TransformKind {
    SoftmaxPP,       // softmax++(y, tau)
    SbSoftmaxPP,     // softmax++(SB(sigmoid(y)), tau)
    SbInterp,        // tau * w + (1 - tau) * P(w), w = SB(sigmoid(y))
    PlanarSoftmaxPP, // softmax++(planar_L(...planar_1(y)), tau)
    SbIdentity,      // SB(sigmoid(y)); tau unused
};

std::string_view to_string(TransformKind kind);
TransformKind transform_kind_from_string(std::string_view name);

bool is_stick_breaking(TransformKind kind);

/// One planar flow layer f(y) = y + u_hat * tanh(w.y + b). `u` is the raw
/// update vector; the invertibility projection u -> u_hat is applied on use.
struct PlanarLayer {
    Vector w;
    Vector u;
    double b = 0.0;

    /// u_hat = u + (m(w.u) - w.u) w / |w|^2 with m(x) = -1 + softplus(x),
    /// so that w.u_hat >= -1.
    Vector u_hat() const;

    /// A layer whose projected update is exactly zero, i.e. the identity map.
    static PlanarLayer identity(Vector w);
};

struct TransformSpec {
    TransformKind kind = TransformKind::SoftmaxPP;
    double delta = 1.0;
    std::vector<PlanarLayer> flow; // PlanarSoftmaxPP only

    static TransformSpec softmax_pp(double delta = 1.0) { return {TransformKind::SoftmaxPP, delta, {}}; }
    static TransformSpec sb_softmax_pp(double delta = 1.0) { return {TransformKind::SbSoftmaxPP, delta, {}}; }
    static TransformSpec sb_interp() { return {TransformKind::SbInterp, 1.0, {}}; }
    static TransformSpec sb_identity() { return {TransformKind::SbIdentity, 1.0, {}}; }
    /// Planar chain with `layers` layers of dimension `dim`, parameters drawn
    /// N(0, scale^2). The chain depth used throughout is 2.
    static TransformSpec planar(Eigen::Index dim, int layers, Rng& rng, double scale = 0.1, double delta = 1.0);

    /// Throws InvalidInputError when the spec is unusable at dimension `dim`.
    void validate(Eigen::Index dim) const;
};

bool operator==(const PlanarLayer& a, const PlanarLayer& b);
bool operator==(const TransformSpec& a, const TransformSpec& b);

/// Forward evaluation of a composed map.
struct Forwarded {
    SimplexInterior z;
    std::optional<Vector> w; // stick-breaking intermediate, SB kinds only
    double log_det_jac = 0.0;
};

/// One reparameterized draw with its intermediates.
struct SampleTrace {
    Vector epsilon;
    Vector y;
    std::optional<Vector> w;
    SimplexInterior z;
    double log_det_jac = 0.0;
};

// ---------------------------------------------------------------- softmax++

/// coords_k = exp(y_k/tau) / (sum_j exp(y_j/tau) + delta), evaluated with the
/// exponents shifted by max(max_k y_k/tau, 0).
SimplexInterior softmax_pp(const Vector& y, double tau, double delta);

/// y_k = tau * log(delta * z_k / remainder).
Vector softmax_pp_inverse(const SimplexInterior& z, double tau, double delta);

/// log|det J| = log delta + sum_k y_k/tau - (K-1) log tau - K log s,
/// s = sum_k exp(y_k/tau) + delta.
double softmax_pp_logdet(const Vector& y, double tau, double delta);

/// J^T c with J = (diag(z) - z z^T) / tau.
Vector softmax_pp_pullback(const Vector& y, double tau, double delta, const Vector& cotangent);

// ---------------------------------------------------------------- sigmoid / stick-breaking

/// Elementwise sigmoid clamped to [1e-12, 1 - 1e-12].
Vector clamped_sigmoid(const Vector& y);
double sigmoid_logdet(const Vector& y);
Vector sigmoid_pullback(const Vector& y, const Vector& cotangent);

/// v_k = u_k * prod_{i<k} (1 - u_i).
SimplexInterior stick_break(const Vector& u);

/// u_k = v_k / (1 - sum_{i<k} v_i).
Vector stick_break_inverse(const SimplexInterior& v);

/// sum_k sum_{i<k} log(1 - u_i): the Jacobian is lower triangular.
double stick_break_logdet(const Vector& u);

Vector stick_break_pullback(const Vector& u, const Vector& cotangent);

/// Log-det of sigmoid -> stick-break -> terminal stage for the SB kinds.
double sb_chain_logdet(const Vector& y, double tau, const TransformSpec& spec);

// ---------------------------------------------------------------- vertex interpolation

/// tau * w + (1 - tau) * P(w), P the vertex at the argmax of the completed
/// vector (lowest index on ties) with the K-th coordinate dropped.
SimplexInterior vertex_interp(const SimplexInterior& w, double tau);
SimplexInterior vertex_interp_inverse(const SimplexInterior& z, double tau);
/// Almost-everywhere value (K-1) log tau.
double vertex_interp_logdet(Eigen::Index dim, double tau);
Vector vertex_interp_pullback(double tau, const Vector& cotangent);

// ---------------------------------------------------------------- planar flow

struct PlanarOutput {
    Vector y;
    double log_det = 0.0;
};

PlanarOutput planar_layer(const Vector& y, const PlanarLayer& layer);
/// Bisection on the scalar a = w.y + b (50 halvings).
Vector planar_layer_inverse(const Vector& out, const PlanarLayer& layer);
Vector planar_layer_pullback(const Vector& y, const PlanarLayer& layer, const Vector& cotangent);

/// Cotangents of a planar layer's raw parameters (w, u, b), including the
/// dependence of u_hat on w and u.
struct PlanarLayerGrad {
    Vector w;
    Vector u;
    double b = 0.0;
};
PlanarLayerGrad planar_layer_param_pullback(const Vector& y, const PlanarLayer& layer, const Vector& cotangent);

// ---------------------------------------------------------------- composed maps

Forwarded forward(const TransformSpec& spec, const Vector& y, double tau);

/// Inverse of forward. Throws DomainError when z is outside the image.
Vector inverse(const TransformSpec& spec, const SimplexInterior& z, double tau);

/// J^T c for the composed map at y. `cotangent` has length K-1.
Vector pullback(const TransformSpec& spec, const Vector& y, double tau, const Vector& cotangent);

/// Pullback that also returns the cotangents of the planar flow parameters
/// (empty for the other kinds).
struct FullPullback {
    Vector y;
    std::vector<PlanarLayerGrad> flow;
};
FullPullback pullback_with_params(const TransformSpec& spec, const Vector& y, double tau, const Vector& cotangent);

} // namespace igr
