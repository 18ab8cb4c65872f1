#include "bfnflow/gaussian_flow.hpp"

#include <cmath>
#include <stdexcept>

namespace bfnflow::centroid {

PosScheduler::PosScheduler(double sigma1_, int n_) : sigma1(sigma1_), n(n_) {
    if (!(sigma1 > 0.0) || !(sigma1 < 1.0)) {
        throw std::invalid_argument("PosScheduler: requires 0 < sigma1 < 1");
    }
    if (n < 1) {
        throw std::invalid_argument("PosScheduler: requires n >= 1");
    }
}

double PosScheduler::gamma(double t) const {
    return 1.0 - std::pow(sigma1, 2.0 * t);
}

double PosScheduler::beta_at(double t) const {
    return std::pow(sigma1, -2.0 * t) - 1.0;
}

double PosScheduler::alpha_at(int i) const {
    if (i < 1 || i > n) {
        throw std::invalid_argument("PosScheduler::alpha_at: step index out of range");
    }
    const double ti = static_cast<double>(i) / n;
    return std::pow(sigma1, -2.0 * ti) * (1.0 - std::pow(sigma1, 2.0 / n));
}

GaussianParams flow_sample_pos(const geo::Vec3& x_true, const PosScheduler& s, double t, Rng& rng) {
    const double g = s.gamma(t);
    const double sd = std::sqrt(g * (1.0 - g));
    GaussianParams p;
    p.mu = g * x_true + sd * geo::Vec3(normal01(rng), normal01(rng), normal01(rng));
    p.rho = 1.0 / (1.0 - g);
    return p;
}

double pos_loss(const geo::Vec3& x_true, const geo::Vec3& x_hat, double alpha_pos, int n_steps) {
    if (!(alpha_pos > 0.0)) {
        throw std::invalid_argument("pos_loss: alpha_pos must be > 0");
    }
    if (n_steps < 1) {
        throw std::invalid_argument("pos_loss: n_steps must be >= 1");
    }
    return 0.5 * n_steps * alpha_pos * (x_true - x_hat).squaredNorm();
}

}  // namespace bfnflow::centroid
