#include "bfnflow/categorical_flow.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace bfnflow::restype {

namespace {

constexpr std::array<std::string_view, kNumClasses> kThree = {
    "ALA", "ARG", "ASN", "ASP", "CYS", "GLN", "GLU", "GLY", "HIS", "ILE",
    "LEU", "LYS", "MET", "PHE", "PRO", "SER", "THR", "TRP", "TYR", "VAL"};

constexpr std::array<char, kNumClasses> kOne = {'A', 'R', 'N', 'D', 'C', 'Q', 'E', 'G', 'H', 'I',
                                                'L', 'K', 'M', 'F', 'P', 'S', 'T', 'W', 'Y', 'V'};

void check_class(int c, int k) {
    if (c < 1 || c > k) {
        throw std::invalid_argument("residue class index out of range");
    }
}

}  // namespace

void SimplexParams::validate() const {
    if (theta.empty()) {
        throw std::invalid_argument("SimplexParams: empty probability vector");
    }
    double sum = 0.0;
    for (double p : theta) {
        if (!(p >= 0.0) || !std::isfinite(p)) {
            throw std::invalid_argument("SimplexParams: probabilities must be >= 0");
        }
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
        throw std::invalid_argument("SimplexParams: probabilities must sum to 1");
    }
}

int SimplexParams::argmax_class() const {
    return static_cast<int>(std::max_element(theta.begin(), theta.end()) - theta.begin()) + 1;
}

SimplexParams uniform_simplex(int k) {
    return SimplexParams{std::vector<double>(k, 1.0 / k)};
}

SimplexParams one_hot(int c, int k) {
    check_class(c, k);
    SimplexParams s{std::vector<double>(k, 0.0)};
    s.theta[c - 1] = 1.0;
    return s;
}

TypeScheduler::TypeScheduler(double beta1_, int n_) : beta1(beta1_), n(n_) {
    if (!(beta1 > 0.0)) {
        throw std::invalid_argument("TypeScheduler: beta1 must be > 0");
    }
    if (n < 1) {
        throw std::invalid_argument("TypeScheduler: n must be >= 1");
    }
}

double TypeScheduler::beta_at(double t) const { return beta1 * t * t; }

double TypeScheduler::alpha_at(int i) const {
    if (i < 1 || i > n) {
        throw std::invalid_argument("TypeScheduler::alpha_at: step index out of range");
    }
    const double ti = static_cast<double>(i) / n;
    const double tp = static_cast<double>(i - 1) / n;
    return beta_at(ti) - beta_at(tp);
}

std::vector<double> sender_sample_type(int c, double alpha, int k, Rng& rng) {
    check_class(c, k);
    if (alpha < 0.0) {
        throw std::invalid_argument("sender_sample_type: alpha must be >= 0");
    }
    std::vector<double> y(k);
    const double sd = std::sqrt(alpha * k);
    for (int j = 0; j < k; ++j) {
        const double mean = alpha * (k * (j == c - 1 ? 1.0 : 0.0) - 1.0);
        y[j] = sd > 0.0 ? normal(rng, mean, sd) : mean;
    }
    return y;
}

namespace {

SimplexParams softmax(const std::vector<double>& y) {
    const double mx = *std::max_element(y.begin(), y.end());
    SimplexParams s{std::vector<double>(y.size())};
    double sum = 0.0;
    for (std::size_t j = 0; j < y.size(); ++j) {
        s.theta[j] = std::exp(y[j] - mx);
        sum += s.theta[j];
    }
    for (auto& p : s.theta) p /= sum;
    return s;
}

}  // namespace

SimplexParams flow_sample_type(int c, double beta, int k, Rng& rng) {
    return softmax(sender_sample_type(c, beta, k, rng));
}

SimplexParams flow_sample_type_probs(const SimplexParams& probs, double beta, Rng& rng) {
    probs.validate();
    if (beta < 0.0) {
        throw std::invalid_argument("flow_sample_type_probs: beta must be >= 0");
    }
    const int k = probs.size();
    const double sd = std::sqrt(beta * k);
    std::vector<double> y(k);
    for (int j = 0; j < k; ++j) {
        const double mean = beta * (k * probs.theta[j] - 1.0);
        y[j] = sd > 0.0 ? normal(rng, mean, sd) : mean;
    }
    return softmax(y);
}

double type_loss(int c_true, const SimplexParams& probs_hat, double alpha, int k, int n_steps,
                 Rng& rng, int m_draws) {
    check_class(c_true, k);
    probs_hat.validate();
    if (probs_hat.size() != k) {
        throw std::invalid_argument("type_loss: probability vector has wrong length");
    }
    if (!(alpha > 0.0)) {
        throw std::invalid_argument("type_loss: alpha must be > 0");
    }
    if (n_steps < 1 || m_draws < 1) {
        throw std::invalid_argument("type_loss: n_steps and m_draws must be >= 1");
    }

    // estimate = -E_y[ln sum_c p_hat(c) exp(ln N(y|m_c) - ln N(y|m_true))],
    // the shared Gaussian normalizers cancel inside the ratio.
    const double var = alpha * k;
    double acc = 0.0;
    for (int d = 0; d < m_draws; ++d) {
        const auto y = sender_sample_type(c_true, alpha, k, rng);
        std::vector<double> expo(k);
        double mx = -std::numeric_limits<double>::infinity();
        for (int c = 1; c <= k; ++c) {
            double delta = 0.0;  // quadratic-form difference vs the true class mean
            for (int j = 0; j < k; ++j) {
                const double mc = alpha * (k * (j == c - 1 ? 1.0 : 0.0) - 1.0);
                const double mt = alpha * (k * (j == c_true - 1 ? 1.0 : 0.0) - 1.0);
                delta += (y[j] - mt) * (y[j] - mt) - (y[j] - mc) * (y[j] - mc);
            }
            expo[c - 1] = probs_hat.theta[c - 1] > 0.0
                              ? std::log(probs_hat.theta[c - 1]) + delta / (2.0 * var)
                              : -std::numeric_limits<double>::infinity();
            mx = std::max(mx, expo[c - 1]);
        }
        double sum = 0.0;
        for (double e : expo) sum += std::exp(e - mx);
        acc += -(mx + std::log(sum));
    }
    return n_steps * acc / m_draws;
}

std::string_view aa_three_letter(int c) {
    check_class(c, kNumClasses);
    return kThree[c - 1];
}

char aa_one_letter(int c) {
    check_class(c, kNumClasses);
    return kOne[c - 1];
}

int aa_class_from_three(std::string_view name) {
    for (int j = 0; j < kNumClasses; ++j) {
        if (kThree[j] == name) return j + 1;
    }
    return 0;
}

}  // namespace bfnflow::restype
