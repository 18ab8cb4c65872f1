#pragma once

#include <array>
#include <memory>
#include <vector>

#include "bfnflow/categorical_flow.hpp"
#include "bfnflow/frames.hpp"
#include "bfnflow/gaussian_flow.hpp"
#include "bfnflow/gmm_flow.hpp"

namespace bfnflow::denoise {

// Joint per-residue parameter bundle threaded through training and sampling.
struct FlowState {
    std::vector<centroid::GaussianParams> pos;
    std::vector<geo::Rotation> rot;
    std::vector<restype::SimplexParams> type;
    std::vector<std::array<gmm::GmmParams, pdbio::kNumAngleSlots>> ang;
    double t = 0.0;

    std::size_t size() const { return pos.size(); }
    /// Throws std::invalid_argument when residue counts disagree across
    /// modalities, t is outside [0,1], or any member invariant fails.
    void validate() const;
};

// Denoised peptide estimate: positions are in the engine's normalized frame.
struct PeptidePrediction {
    std::vector<geo::Vec3> x;
    std::vector<geo::Rotation> o;
    std::vector<restype::SimplexParams> c;
    std::vector<std::array<double, pdbio::kNumAngleSlots>> chi;

    std::size_t size() const { return x.size(); }
    void validate() const;
};

// Protein context the prediction is conditioned on.
struct Context {
    std::vector<pdbio::ResidueFrame> frames;
};

class Denoiser {
  public:
    virtual ~Denoiser() = default;
    /// Pure function of (state, ctx, t) for deterministic implementations;
    /// throws std::invalid_argument on residue-count mismatch.
    virtual PeptidePrediction predict(const FlowState& state, const Context& ctx,
                                      double t) const = 0;
};

/// Returns a fixed target regardless of the state; verifies that the
/// inference loop converges to it.
class OracleDenoiser : public Denoiser {
  public:
    explicit OracleDenoiser(PeptidePrediction target);
    PeptidePrediction predict(const FlowState& state, const Context& ctx, double t) const override;

  private:
    PeptidePrediction target_;
};

struct NoisyOracleConfig {
    double pos_sd = 0.0;    // normalized units
    double rot_sd = 0.0;    // tangent-space radians
    double ang_sd = 0.0;    // radians
    double type_mix = 0.0;  // mix toward the uniform simplex, in [0,1]
};

/// Oracle whose output is perturbed per call. Not deterministic; holds its
/// own seeded stream so whole-pipeline runs stay reproducible. Single-chain
/// use only.
class NoisyOracle : public Denoiser {
  public:
    NoisyOracle(PeptidePrediction target, NoisyOracleConfig cfg, std::uint64_t seed);
    PeptidePrediction predict(const FlowState& state, const Context& ctx, double t) const override;

  private:
    PeptidePrediction target_;
    NoisyOracleConfig cfg_;
    mutable Rng rng_;
};

struct NnMetricWeights {
    double pos = 1.0;
    double rot = 1.0;
    double ang = 1.0;
    double type = 1.0;
};

/// Returns the training peptide nearest to the current state summary
/// (position means, per-slot GMM mixture means, rotation, simplex) under a
/// weighted sum of L2 / geodesic / wrapped-angle / total-variation
/// distances. Demonstrates multimodal recovery with no learned parameters.
class NearestNeighborDenoiser : public Denoiser {
  public:
    explicit NearestNeighborDenoiser(std::vector<PeptidePrediction> dataset,
                                     NnMetricWeights weights = {});
    PeptidePrediction predict(const FlowState& state, const Context& ctx, double t) const override;

    /// Distance between a state and one dataset item (exposed for tests).
    double distance(const FlowState& state, std::size_t item) const;

  private:
    std::vector<PeptidePrediction> dataset_;
    NnMetricWeights weights_;
};

/// Convert frames into a prediction (positions unchanged, one-hot classes);
/// absent chi slots are read as 0.
PeptidePrediction prediction_from_frames(const pdbio::Peptide& frames);

/// Load a synthetic dataset (frames JSON schema) into predictions.
NearestNeighborDenoiser make_knn_from_frames(const std::vector<pdbio::Peptide>& peptides,
                                             NnMetricWeights weights = {});

}  // namespace bfnflow::denoise
