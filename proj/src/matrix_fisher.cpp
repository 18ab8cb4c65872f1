#include "bfnflow/matrix_fisher.hpp"

#include <cmath>
#include <stdexcept>

namespace bfnflow::fisher {

IsoMatrixFisher::IsoMatrixFisher(geo::Rotation mode_, double lambda_)
    : mode(std::move(mode_)), lambda(lambda_) {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
        throw std::invalid_argument("IsoMatrixFisher: lambda must be finite and >= 0");
    }
}

namespace {

// One Haar-uniform quaternion; the rotation trace is 4*qw^2 - 1, so the
// rejection test does not require building the matrix.
struct Quat {
    double x, y, z, w;
    double trace() const { return 4.0 * w * w - 1.0; }
    geo::Rotation rotation() const {
        geo::Mat3 m;
        m << 1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w),
             2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w),
             2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y);
        return geo::Rotation::from_matrix_unchecked(m);
    }
};

Quat uniform_quat(Rng& rng) {
    const double u1 = uniform01(rng);
    const double u2 = uniform01(rng);
    const double u3 = uniform01(rng);
    const double s1 = std::sqrt(1.0 - u1);
    const double s2 = std::sqrt(u1);
    return Quat{s1 * std::sin(geo::kTwoPi * u2), s1 * std::cos(geo::kTwoPi * u2),
                s2 * std::sin(geo::kTwoPi * u3), s2 * std::cos(geo::kTwoPi * u3)};
}

}  // namespace

std::vector<geo::Rotation> sample(const IsoMatrixFisher& mf, std::size_t n, Rng& rng) {
    std::vector<geo::Rotation> out;
    out.reserve(n);
    const double lam = mf.lambda;
    const geo::Mat3& mode = mf.mode.matrix();

    if (lam <= kSamplerBranchLambda) {
        // Rejection against Uniform(SO(3)); acceptance exp(lambda (tr R - 3))
        // relative to the density maximum exp(3 lambda).
        while (out.size() < n) {
            for (int b = 0; b < kRejectionBatch && out.size() < n; ++b) {
                const Quat q = uniform_quat(rng);
                const double accept = std::exp(lam * (q.trace() - 3.0));
                if (uniform01(rng) < accept) {
                    out.push_back(geo::Rotation::from_matrix_unchecked(mode * q.rotation().matrix()));
                }
            }
        }
    } else {
        const double sigma = 1.0 / std::sqrt(2.0 * lam);
        for (std::size_t i = 0; i < n; ++i) {
            const geo::Vec3 omega(normal(rng, 0.0, sigma), normal(rng, 0.0, sigma),
                                  normal(rng, 0.0, sigma));
            out.push_back(geo::Rotation::from_matrix_unchecked(mode * geo::exp_so3(omega).matrix()));
        }
    }
    return out;
}

double a_lambda(double lambda) {
    if (!(lambda >= 0.0)) {
        throw std::invalid_argument("a_lambda: lambda must be >= 0");
    }
    return 1.0 - 1.0 / (2.0 * lambda + 1.0);
}

double a_lambda_mc(double lambda, std::size_t n_samples, Rng& rng) {
    const IsoMatrixFisher mf(geo::Rotation::identity(), lambda);
    const auto rots = sample(mf, n_samples, rng);
    double acc = 0.0;
    for (const auto& r : rots) acc += r.matrix().trace();
    return acc / (3.0 * static_cast<double>(n_samples));
}

double kl_isotropic(double lambda, const geo::Rotation& r1, const geo::Rotation& r2) {
    if (!(lambda >= 0.0)) {
        throw std::invalid_argument("kl_isotropic: lambda must be >= 0");
    }
    const double tr = (r1.matrix().transpose() * r2.matrix()).trace();
    return lambda * a_lambda(lambda) * (3.0 - tr);
}

MatrixFisherParam conjugate_update(const MatrixFisherParam& prior, const geo::Rotation& y,
                                   double lambda) {
    if (!(lambda >= 0.0)) {
        throw std::invalid_argument("conjugate_update: lambda must be >= 0");
    }
    return MatrixFisherParam{prior.theta + lambda * y.matrix()};
}

double lambda_schedule(double t, double lambda1) {
    return lambda1 * std::expm1(2.0 * t) / std::expm1(2.0);
}

geo::Rotation flow_sample(const geo::Rotation& o_true, double t, Rng& rng, double lambda1) {
    const double lam = lambda_schedule(t, lambda1);
    const IsoMatrixFisher mf(o_true, lam * lam);
    return sample(mf, 1, rng).front();
}

double rotation_loss(const geo::Rotation& o_hat, const geo::Rotation& o_true, double lambda,
                     int n_steps) {
    if (n_steps < 1) {
        throw std::invalid_argument("rotation_loss: n_steps must be >= 1");
    }
    return static_cast<double>(n_steps) * kl_isotropic(lambda, o_true, o_hat);
}

}  // namespace bfnflow::fisher
