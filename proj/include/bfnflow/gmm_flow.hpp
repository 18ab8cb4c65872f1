#pragma once

#include <iosfwd>
#include <vector>

#include "bfnflow/rng.hpp"

namespace bfnflow::gmm {

struct Component {
    double mu = 0.0;   // mean, radians
    double rho = 1.0;  // precision, > 0
    double pi = 1.0;   // mixture weight
};

// K-component Gaussian mixture over one torsion angle, the flow state of the
// angle modality.
struct GmmParams {
    std::vector<Component> comps;

    std::size_t size() const { return comps.size(); }
    /// Throws std::invalid_argument when weights do not sum to 1 (1e-9),
    /// any precision is non-positive, or the mixture is empty.
    void validate() const;
    /// Mixture mean sum_k pi_k mu_k.
    double mean() const;
    /// Mixture density at x.
    double density(double x) const;
};

/// Three equally weighted components at the gauche+/trans/gauche- rotamer
/// positions (pi/3, pi, 5*pi/3) with shared precision rho0.
GmmParams rotamer_prior(double rho0 = 0.01, int k = 3);

// Precision schedule: rho_t = rho0^{1-t} * rho1^t interpolates geometrically
// so that the shared-variance entropy bound decays linearly in t.
struct AngleScheduler {
    double rho0;
    double rho1;
    int n;

    AngleScheduler(double rho0_, double rho1_, int n_);

    double rho_at(double t) const;
    /// Accumulated precision beta(t) = rho0^{1-t} rho1^t - rho0.
    double beta_at(double t) const;
    /// Step increment alpha_i = beta(i/n) - beta((i-1)/n), i in 1..n.
    double alpha_at(int i) const;
};

/// One conjugate Bayesian update with observation y at precision alpha.
/// Weights are renormalized in log space; never fails on underflow.
GmmParams posterior_update(const GmmParams& g, double y, double alpha);

/// Draw one sample of the closed-form mean flow: mu_i ~ N((beta chi +
/// mu0 rho0) / rho_i, beta / rho_i^2) with rho_i = rho0 + beta.
double flow_mean_sample(double chi, double mu0, double rho0, double beta, Rng& rng);

/// Simulate the full parameter flow: iterate y_i ~ N(chi, 1/alpha_i) and
/// posterior_update over all n steps. Returns the n intermediate states.
std::vector<GmmParams> simulate_flow(double chi, const GmmParams& g0, const AngleScheduler& s,
                                     Rng& rng);

/// Shared-precision entropy bound sum_k pi_k (-log pi_k + 0.5 log(2 pi e /
/// rho)). Throws when component precisions differ.
double entropy_upper_bound(const GmmParams& g);

/// Max deviation of H_u(t_i) = (K/2) log(2 pi e / rho_t) from the straight
/// line through its endpoints, over t_i = i/n, i = 0..n.
double check_linear_entropy_schedule(const AngleScheduler& s, int k = 3);

/// Per-step angle loss (n/2) * alpha * r^2 where r is the raw residual
/// chi - chi_hat, or the wrapped residual when wrap_residual is set.
double angle_loss(double chi_true, double chi_hat, double alpha, int n_steps,
                  bool wrap_residual = false);

/// CSV trajectory {step, t, mu_k..., rho_k..., pi_k...} of a simulated flow.
void write_trajectory_csv(std::ostream& os, const std::vector<GmmParams>& traj,
                          const AngleScheduler& s);

}  // namespace bfnflow::gmm
