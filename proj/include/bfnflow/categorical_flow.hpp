#pragma once

#include <string_view>
#include <vector>

#include "bfnflow/rng.hpp"

namespace bfnflow::restype {

inline constexpr int kNumClasses = 20;

// Point on the probability simplex over residue classes.
struct SimplexParams {
    std::vector<double> theta;

    int size() const { return static_cast<int>(theta.size()); }
    /// Throws std::invalid_argument unless all entries are >= 0 and sum to 1
    /// within 1e-9.
    void validate() const;
    /// 1-based class index of the largest probability.
    int argmax_class() const;
};

SimplexParams uniform_simplex(int k = kNumClasses);
SimplexParams one_hot(int c, int k = kNumClasses);

// Quadratic accuracy schedule beta(t) = beta1 * t^2 for the discrete modality.
struct TypeScheduler {
    double beta1;
    int n;

    TypeScheduler(double beta1_, int n_);

    double beta_at(double t) const;
    /// alpha_i = beta(i/n) - beta((i-1)/n), i in 1..n.
    double alpha_at(int i) const;
};

/// Sender draw y ~ N(alpha (K e_c - 1), alpha K I), c 1-based.
std::vector<double> sender_sample_type(int c, double alpha, int k, Rng& rng);

/// Flow draw: theta = softmax(y), y ~ N(beta (K e_c - 1), beta K I).
/// beta = 0 deterministically yields the uniform simplex.
SimplexParams flow_sample_type(int c, double beta, int k, Rng& rng);

/// Same flow with a probability vector in place of the one-hot class
/// (noise-reduced inference update around a soft prediction).
SimplexParams flow_sample_type_probs(const SimplexParams& probs, double beta, Rng& rng);

/// Monte Carlo estimate (m_draws sender samples) of the per-step discrete
/// loss n * KL(p_S || p_R) for one residue.
double type_loss(int c_true, const SimplexParams& probs_hat, double alpha, int k, int n_steps,
                 Rng& rng, int m_draws = 8);

// Fixed class ordering, 1-based: alphabetical by three-letter code.
std::string_view aa_three_letter(int c);
char aa_one_letter(int c);
/// 1..20, or 0 when the name is not one of the canonical residues.
int aa_class_from_three(std::string_view name);

}  // namespace bfnflow::restype
