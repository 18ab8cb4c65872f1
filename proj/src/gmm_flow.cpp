#include "bfnflow/gmm_flow.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "bfnflow/geometry.hpp"

namespace bfnflow::gmm {

namespace {
constexpr double kLog2Pi = 1.8378770664093454835606594728112;
}

void GmmParams::validate() const {
    if (comps.empty()) {
        throw std::invalid_argument("GmmParams: mixture must have K >= 1 components");
    }
    double sum = 0.0;
    for (const auto& c : comps) {
        if (!(c.rho > 0.0) || !std::isfinite(c.rho)) {
            throw std::invalid_argument("GmmParams: precisions must be positive");
        }
        if (c.pi < 0.0 || !std::isfinite(c.pi) || !std::isfinite(c.mu)) {
            throw std::invalid_argument("GmmParams: invalid component");
        }
        sum += c.pi;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
        throw std::invalid_argument("GmmParams: weights must sum to 1");
    }
}

double GmmParams::mean() const {
    double m = 0.0;
    for (const auto& c : comps) m += c.pi * c.mu;
    return m;
}

double GmmParams::density(double x) const {
    double d = 0.0;
    for (const auto& c : comps) {
        d += c.pi * std::sqrt(c.rho / geo::kTwoPi) * std::exp(-0.5 * c.rho * (x - c.mu) * (x - c.mu));
    }
    return d;
}

GmmParams rotamer_prior(double rho0, int k) {
    if (k < 1) throw std::invalid_argument("rotamer_prior: k must be >= 1");
    GmmParams g;
    if (k == 1) {
        g.comps = {{geo::kPi, rho0, 1.0}};
    } else if (k == 3) {
        g.comps = {{geo::kPi / 3.0, rho0, 1.0 / 3.0},
                   {geo::kPi, rho0, 1.0 / 3.0},
                   {5.0 * geo::kPi / 3.0, rho0, 1.0 / 3.0}};
    } else {
        for (int j = 0; j < k; ++j) {
            g.comps.push_back({geo::kTwoPi * (j + 0.5) / k, rho0, 1.0 / k});
        }
    }
    return g;
}

AngleScheduler::AngleScheduler(double rho0_, double rho1_, int n_)
    : rho0(rho0_), rho1(rho1_), n(n_) {
    if (!(rho0 > 0.0) || !(rho1 > rho0)) {
        throw std::invalid_argument("AngleScheduler: requires 0 < rho0 < rho1");
    }
    if (n < 1) {
        throw std::invalid_argument("AngleScheduler: requires n >= 1");
    }
}

double AngleScheduler::rho_at(double t) const {
    return std::pow(rho0, 1.0 - t) * std::pow(rho1, t);
}

double AngleScheduler::beta_at(double t) const {
    return rho_at(t) - rho0;
}

double AngleScheduler::alpha_at(int i) const {
    if (i < 1 || i > n) {
        throw std::invalid_argument("AngleScheduler::alpha_at: step index out of range");
    }
    const double ti = static_cast<double>(i) / n;
    return rho_at(ti) * (1.0 - std::pow(rho0 / rho1, 1.0 / n));
}

GmmParams posterior_update(const GmmParams& g, double y, double alpha) {
    if (!(alpha > 0.0)) {
        throw std::invalid_argument("posterior_update: alpha must be > 0");
    }
    GmmParams out = g;
    std::vector<double> logw(g.comps.size());
    for (std::size_t k = 0; k < g.comps.size(); ++k) {
        const auto& c = g.comps[k];
        const double var = 1.0 / alpha + 1.0 / c.rho;  // marginal likelihood variance
        logw[k] = std::log(std::max(c.pi, 0.0)) - 0.5 * (kLog2Pi + std::log(var)) -
                  (y - c.mu) * (y - c.mu) / (2.0 * var);
        out.comps[k].rho = c.rho + alpha;
        out.comps[k].mu = (c.rho * c.mu + alpha * y) / out.comps[k].rho;
    }
    const double mx = *std::max_element(logw.begin(), logw.end());
    double sum = 0.0;
    for (std::size_t k = 0; k < logw.size(); ++k) {
        out.comps[k].pi = std::exp(logw[k] - mx);
        sum += out.comps[k].pi;
    }
    for (auto& c : out.comps) c.pi /= sum;
    return out;
}

double flow_mean_sample(double chi, double mu0, double rho0, double beta, Rng& rng) {
    if (beta < 0.0) {
        throw std::invalid_argument("flow_mean_sample: beta must be >= 0");
    }
    const double rho = rho0 + beta;
    const double mean = (beta * chi + mu0 * rho0) / rho;
    const double sd = std::sqrt(beta) / rho;
    return normal(rng, mean, sd);
}

std::vector<GmmParams> simulate_flow(double chi, const GmmParams& g0, const AngleScheduler& s,
                                     Rng& rng) {
    g0.validate();
    std::vector<GmmParams> traj;
    traj.reserve(s.n);
    GmmParams g = g0;
    for (int i = 1; i <= s.n; ++i) {
        const double alpha = s.alpha_at(i);
        const double y = normal(rng, chi, 1.0 / std::sqrt(alpha));
        g = posterior_update(g, y, alpha);
        traj.push_back(g);
    }
    return traj;
}

double entropy_upper_bound(const GmmParams& g) {
    g.validate();
    const double rho = g.comps.front().rho;
    for (const auto& c : g.comps) {
        if (std::abs(c.rho - rho) > 1e-12 * std::max(1.0, rho)) {
            throw std::invalid_argument("entropy_upper_bound: bound requires shared precision");
        }
    }
    double h = 0.0;
    for (const auto& c : g.comps) {
        if (c.pi <= 0.0) continue;
        h += c.pi * (-std::log(c.pi) + 0.5 * (kLog2Pi + 1.0 - std::log(rho)));
    }
    return h;
}

double check_linear_entropy_schedule(const AngleScheduler& s, int k) {
    auto hu = [&](double t) {
        return 0.5 * k * (kLog2Pi + 1.0 - std::log(s.rho_at(t)));
    };
    const double h0 = hu(0.0);
    const double h1 = hu(1.0);
    double dev = 0.0;
    for (int i = 0; i <= s.n; ++i) {
        const double t = static_cast<double>(i) / s.n;
        dev = std::max(dev, std::abs(hu(t) - ((1.0 - t) * h0 + t * h1)));
    }
    return dev;
}

double angle_loss(double chi_true, double chi_hat, double alpha, int n_steps, bool wrap_residual) {
    if (!(alpha > 0.0)) {
        throw std::invalid_argument("angle_loss: alpha must be > 0");
    }
    if (n_steps < 1) {
        throw std::invalid_argument("angle_loss: n_steps must be >= 1");
    }
    double r = chi_true - chi_hat;
    if (wrap_residual) {
        r = geo::wrap_angle(r);
        if (r > geo::kPi) r -= geo::kTwoPi;
    }
    return 0.5 * n_steps * alpha * r * r;
}

void write_trajectory_csv(std::ostream& os, const std::vector<GmmParams>& traj,
                          const AngleScheduler& s) {
    if (traj.empty()) return;
    const std::size_t k = traj.front().size();
    os << "step,t,alpha";
    for (std::size_t j = 0; j < k; ++j) os << ",mu" << j + 1;
    for (std::size_t j = 0; j < k; ++j) os << ",rho" << j + 1;
    for (std::size_t j = 0; j < k; ++j) os << ",pi" << j + 1;
    os << "\n";
    os.precision(17);
    for (std::size_t i = 0; i < traj.size(); ++i) {
        os << i + 1 << "," << static_cast<double>(i + 1) / s.n << "," << s.alpha_at(static_cast<int>(i) + 1);
        for (const auto& c : traj[i].comps) os << "," << c.mu;
        for (const auto& c : traj[i].comps) os << "," << c.rho;
        for (const auto& c : traj[i].comps) os << "," << c.pi;
        os << "\n";
    }
}

}  // namespace bfnflow::gmm
