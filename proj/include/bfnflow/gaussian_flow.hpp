#pragma once

#include "bfnflow/geometry.hpp"
#include "bfnflow/rng.hpp"

namespace bfnflow::centroid {

// Isotropic Gaussian over one residue centroid in normalized coordinates.
struct GaussianParams {
    geo::Vec3 mu = geo::Vec3::Zero();
    double rho = 1.0;  // precision, > 0
};

// Accuracy schedule of the Euclidean flow, gamma(t) = 1 - sigma1^{2t}.
struct PosScheduler {
    double sigma1;
    int n;

    PosScheduler(double sigma1_, int n_);

    double gamma(double t) const;
    /// beta(t) = sigma1^{-2t} - 1, so that beta/(1+beta) = gamma.
    double beta_at(double t) const;
    /// alpha_i = sigma1^{-2i/n} (1 - sigma1^{2/n}), i in 1..n.
    double alpha_at(int i) const;
};

/// Draw from the position flow at time t: mu ~ N(gamma(t) x_true,
/// gamma(t)(1-gamma(t)) I); rho is the accumulated precision 1/(1-gamma(t)).
GaussianParams flow_sample_pos(const geo::Vec3& x_true, const PosScheduler& s, double t, Rng& rng);

/// Per-step position loss (n/2) * alpha_pos * |x - x_hat|^2.
double pos_loss(const geo::Vec3& x_true, const geo::Vec3& x_hat, double alpha_pos, int n_steps);

}  // namespace bfnflow::centroid
