#include "bfnflow/denoiser.hpp"

#include <cmath>
#include <stdexcept>

namespace bfnflow::denoise {

void FlowState::validate() const {
    const std::size_t n = pos.size();
    if (rot.size() != n || type.size() != n || ang.size() != n) {
        throw std::invalid_argument("FlowState: residue counts differ across modalities");
    }
    if (!(t >= 0.0 && t <= 1.0)) {
        throw std::invalid_argument("FlowState: t must lie in [0, 1]");
    }
    for (const auto& p : pos) {
        if (!(p.rho > 0.0) || !p.mu.allFinite()) {
            throw std::invalid_argument("FlowState: invalid position parameters");
        }
    }
    for (const auto& r : rot) {
        if (!geo::is_rotation(r.matrix())) {
            throw std::invalid_argument("FlowState: invalid rotation");
        }
    }
    for (const auto& s : type) s.validate();
    for (const auto& slots : ang) {
        for (const auto& g : slots) g.validate();
    }
}

void PeptidePrediction::validate() const {
    const std::size_t n = x.size();
    if (o.size() != n || c.size() != n || chi.size() != n) {
        throw std::invalid_argument("PeptidePrediction: residue counts differ across modalities");
    }
    for (const auto& s : c) s.validate();
}

namespace {

void check_counts(const FlowState& state, std::size_t target_size) {
    if (state.size() != target_size) {
        throw std::invalid_argument("predict: state and target residue counts differ");
    }
}

}  // namespace

OracleDenoiser::OracleDenoiser(PeptidePrediction target) : target_(std::move(target)) {
    target_.validate();
}

PeptidePrediction OracleDenoiser::predict(const FlowState& state, const Context&, double) const {
    check_counts(state, target_.size());
    return target_;
}

NoisyOracle::NoisyOracle(PeptidePrediction target, NoisyOracleConfig cfg, std::uint64_t seed)
    : target_(std::move(target)), cfg_(cfg), rng_(seed) {
    target_.validate();
}

PeptidePrediction NoisyOracle::predict(const FlowState& state, const Context&, double) const {
    check_counts(state, target_.size());
    PeptidePrediction p = target_;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (cfg_.pos_sd > 0.0) {
            p.x[i] += cfg_.pos_sd * geo::Vec3(normal01(rng_), normal01(rng_), normal01(rng_));
        }
        if (cfg_.rot_sd > 0.0) {
            const geo::Vec3 w(normal(rng_, 0.0, cfg_.rot_sd), normal(rng_, 0.0, cfg_.rot_sd),
                              normal(rng_, 0.0, cfg_.rot_sd));
            p.o[i] = p.o[i] * geo::exp_so3(w);
        }
        if (cfg_.ang_sd > 0.0) {
            for (auto& a : p.chi[i]) a = geo::wrap_angle(a + normal(rng_, 0.0, cfg_.ang_sd));
        }
        if (cfg_.type_mix > 0.0) {
            const double u = 1.0 / p.c[i].size();
            for (auto& q : p.c[i].theta) q = (1.0 - cfg_.type_mix) * q + cfg_.type_mix * u;
        }
    }
    return p;
}

NearestNeighborDenoiser::NearestNeighborDenoiser(std::vector<PeptidePrediction> dataset,
                                                 NnMetricWeights weights)
    : dataset_(std::move(dataset)), weights_(weights) {
    if (dataset_.empty()) {
        throw std::invalid_argument("NearestNeighborDenoiser: empty dataset");
    }
    for (auto& d : dataset_) d.validate();
}

double NearestNeighborDenoiser::distance(const FlowState& state, std::size_t item) const {
    const auto& d = dataset_.at(item);
    if (d.size() != state.size()) {
        return std::numeric_limits<double>::infinity();
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < state.size(); ++i) {
        acc += weights_.pos * (state.pos[i].mu - d.x[i]).norm();
        acc += weights_.rot * geo::geodesic_angle(state.rot[i], d.o[i]);
        for (int s = 0; s < pdbio::kNumAngleSlots; ++s) {
            const double w = geo::wrap_angle(state.ang[i][s].mean() - d.chi[i][s]);
            acc += weights_.ang * std::min(w, geo::kTwoPi - w);
        }
        double tv = 0.0;
        for (int k = 0; k < state.type[i].size(); ++k) {
            tv += std::abs(state.type[i].theta[k] - d.c[i].theta[k]);
        }
        acc += weights_.type * 0.5 * tv;
    }
    return acc;
}

PeptidePrediction NearestNeighborDenoiser::predict(const FlowState& state, const Context&,
                                                   double) const {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < dataset_.size(); ++j) {
        const double d = distance(state, j);
        if (d < best_d) {
            best_d = d;
            best = j;
        }
    }
    if (!std::isfinite(best_d)) {
        throw std::invalid_argument("predict: no dataset item matches the state residue count");
    }
    return dataset_[best];
}

PeptidePrediction prediction_from_frames(const pdbio::Peptide& frames) {
    PeptidePrediction p;
    for (const auto& f : frames) {
        p.x.push_back(f.x);
        p.o.push_back(f.o);
        p.c.push_back(restype::one_hot(f.c));
        std::array<double, pdbio::kNumAngleSlots> chi{};
        for (int s = 0; s < pdbio::kNumAngleSlots; ++s) {
            chi[s] = f.chi_present[s] ? f.chi[s] : 0.0;
        }
        p.chi.push_back(chi);
    }
    return p;
}

NearestNeighborDenoiser make_knn_from_frames(const std::vector<pdbio::Peptide>& peptides,
                                             NnMetricWeights weights) {
    std::vector<PeptidePrediction> preds;
    for (const auto& pep : peptides) preds.push_back(prediction_from_frames(pep));
    return NearestNeighborDenoiser(std::move(preds), weights);
}

}  // namespace bfnflow::denoise
