#pragma once

#include <cstddef>
#include <vector>

#include "bfnflow/geometry.hpp"
#include "bfnflow/rng.hpp"

namespace bfnflow::fisher {

// Isotropic Matrix Fisher distribution on SO(3): density proportional to
// exp(lambda * tr(mode^T R)) with respect to the Haar measure.
struct IsoMatrixFisher {
    geo::Rotation mode;
    double lambda = 0.0;  // concentration, >= 0

    IsoMatrixFisher(geo::Rotation mode_, double lambda_);
};

// Unconstrained 3x3 natural parameter of a (generally anisotropic) Matrix
// Fisher distribution. Only the isotropic case has samplers and KL here.
struct MatrixFisherParam {
    geo::Mat3 theta = geo::Mat3::Zero();
};

/// Concentration above which sampling switches from rejection against
/// Uniform(SO(3)) to the tangent-space Gaussian approximation.
inline constexpr double kSamplerBranchLambda = 26.0;

/// Proposal batch size of the rejection branch.
inline constexpr int kRejectionBatch = 4096;

/// Draw n rotations from mf. lambda = 0 degenerates to Haar-uniform.
std::vector<geo::Rotation> sample(const IsoMatrixFisher& mf, std::size_t n, Rng& rng);

/// First-moment coefficient approximation: a(lambda) ~= 1 - 1/(2*lambda + 1),
/// with E[Q] = a(lambda) I for Q ~ M(lambda I).
double a_lambda(double lambda);

/// Monte Carlo estimate (1/3) tr(E[Q]) of the same coefficient.
double a_lambda_mc(double lambda, std::size_t n_samples, Rng& rng);

/// Closed-form KL divergence between M(r1 * lambda I) and M(r2 * lambda I):
/// lambda * a(lambda) * (3 - tr(r1^T r2)). Uses the a_lambda approximation.
double kl_isotropic(double lambda, const geo::Rotation& r1, const geo::Rotation& r2);

/// Conjugate Bayesian update of the natural parameter: theta_b = theta_a + lambda * y.
MatrixFisherParam conjugate_update(const MatrixFisherParam& prior, const geo::Rotation& y,
                                   double lambda);

/// Concentration schedule lambda(t) = lambda1 * (e^{2t} - 1) / (e^2 - 1),
/// so lambda(0) = 0 and lambda(1) = lambda1.
double lambda_schedule(double t, double lambda1 = 10.0);

/// One draw from the Bayesian flow of the auxiliary rotation variable at
/// time t: T ~ M(o_true * lambda(t)^2 I).
geo::Rotation flow_sample(const geo::Rotation& o_true, double t, Rng& rng, double lambda1 = 10.0);

/// Per-step rotation loss n * lambda * a(lambda) * (3 - tr(o_hat^T o_true)).
double rotation_loss(const geo::Rotation& o_hat, const geo::Rotation& o_true, double lambda,
                     int n_steps);

}  // namespace bfnflow::fisher
