#pragma once

#include <iosfwd>
#include <optional>

#include "bfnflow/denoiser.hpp"
#include "bfnflow/matrix_fisher.hpp"

namespace bfnflow::engine {

struct LossWeights {
    double pos = 1.0;
    double ori = 0.1;
    double type = 1.0;
    double ang = 1.0;
};

struct EngineConfig {
    int n_train = 1000;
    int n_sample = 100;

    double ang_rho0 = 0.01;
    double ang_rho1 = 5.0;
    double pos_sigma1 = 0.17320508075688773;  // sqrt(0.03)
    double type_beta1 = 1.2;
    double rot_lambda1 = 10.0;

    LossWeights weights;

    /// Positions are centered on the context centroid and divided by this
    /// scale (angstrom) before any flow math; inverted on output.
    double pos_scale = 10.0;

    int type_loss_draws = 8;
    int ang_components = 3;
};

// Ground-truth peptide in normalized engine coordinates.
struct Target {
    std::vector<geo::Vec3> x;
    std::vector<geo::Rotation> o;
    std::vector<int> c;  // 1..20
    std::vector<std::array<double, pdbio::kNumAngleSlots>> chi;
    std::vector<std::array<bool, pdbio::kNumAngleSlots>> chi_present;

    std::size_t size() const { return x.size(); }
};

/// Centroid of the context frames; zero when the context is empty.
geo::Vec3 context_center(const denoise::Context& ctx);

/// Build a normalized target from frames: x -> (x - center) / scale.
Target normalized_target(const pdbio::Peptide& frames, const geo::Vec3& center, double scale);

/// Oracle prediction (normalized coordinates) for a target.
denoise::PeptidePrediction target_as_prediction(const Target& t);

struct LossBreakdown {
    double total = 0.0;
    double pos = 0.0;
    double ori = 0.0;
    double type = 0.0;
    double ang = 0.0;
    int step = 0;  // the sampled step index i in 1..n
};

/// One Monte Carlo evaluation of the discrete-time training loss: draw a
/// step index, draw flow parameters for every modality at t_{i-1}, run the
/// predictor, and score each modality against the step-i sender.
LossBreakdown discrete_time_loss(const Target& target, const denoise::Context& ctx,
                                 const denoise::Denoiser& den, const EngineConfig& cfg, Rng& rng);

struct SampleResult {
    pdbio::Peptide peptide;                       // final readout, denormalized
    std::vector<denoise::FlowState> trajectory;   // n_sample + 1 states
    geo::Vec3 center = geo::Vec3::Zero();
    double scale = 1.0;
};

/// Full inference loop: initialize priors, then per step predict, apply the
/// native conjugate update to the angle mixtures with a fresh sender draw,
/// and redraw position/rotation/type parameters from their flows around the
/// prediction (noise-reduced update). The returned peptide is one extra
/// predictor call on the final state.
SampleResult sample(const denoise::Context& ctx, int n_res, const denoise::Denoiser& den,
                    const EngineConfig& cfg, Rng& rng);

/// JSON-lines trajectory dump, one FlowState per line.
void write_trajectory_jsonl(std::ostream& os, const SampleResult& result);

/// Per-step CSV summary: angle mixture means/weights of residue 0 plus, when
/// a target is given, the rotation geodesic distance to it.
void write_trajectory_csv(std::ostream& os, const SampleResult& result,
                          const Target* target = nullptr);

}  // namespace bfnflow::engine
