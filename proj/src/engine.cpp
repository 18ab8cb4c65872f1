#include "bfnflow/engine.hpp"

#include <json.hpp>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace bfnflow::engine {

geo::Vec3 context_center(const denoise::Context& ctx) {
    if (ctx.frames.empty()) return geo::Vec3::Zero();
    geo::Vec3 c = geo::Vec3::Zero();
    for (const auto& f : ctx.frames) c += f.x;
    return c / static_cast<double>(ctx.frames.size());
}

Target normalized_target(const pdbio::Peptide& frames, const geo::Vec3& center, double scale) {
    if (!(scale > 0.0)) {
        throw std::invalid_argument("normalized_target: scale must be > 0");
    }
    Target t;
    for (const auto& f : frames) {
        t.x.push_back((f.x - center) / scale);
        t.o.push_back(f.o);
        t.c.push_back(f.c);
        std::array<double, pdbio::kNumAngleSlots> chi{};
        for (int s = 0; s < pdbio::kNumAngleSlots; ++s) chi[s] = f.chi_present[s] ? f.chi[s] : 0.0;
        t.chi.push_back(chi);
        t.chi_present.push_back(f.chi_present);
    }
    return t;
}

denoise::PeptidePrediction target_as_prediction(const Target& t) {
    denoise::PeptidePrediction p;
    p.x = t.x;
    p.o = t.o;
    for (int c : t.c) p.c.push_back(restype::one_hot(c));
    p.chi = t.chi;
    return p;
}

namespace {

denoise::FlowState draw_flow_state(const Target& target, const EngineConfig& cfg,
                                   const gmm::AngleScheduler& ang_sched,
                                   const centroid::PosScheduler& pos_sched,
                                   const restype::TypeScheduler& type_sched, int upto_step,
                                   Rng& rng) {
    // State distributed as p_F(. | target; t) at t = upto_step / n. The angle
    // mixture has no closed-form weight flow, so it is simulated exactly by
    // iterating the conjugate update.
    const double t = static_cast<double>(upto_step) / ang_sched.n;
    denoise::FlowState state;
    state.t = t;
    const gmm::GmmParams prior = gmm::rotamer_prior(cfg.ang_rho0, cfg.ang_components);
    for (std::size_t i = 0; i < target.size(); ++i) {
        state.pos.push_back(centroid::flow_sample_pos(target.x[i], pos_sched, t, rng));
        state.rot.push_back(fisher::flow_sample(target.o[i], t, rng, cfg.rot_lambda1));
        state.type.push_back(restype::flow_sample_type(target.c[i], type_sched.beta_at(t),
                                                       restype::kNumClasses, rng));
        std::array<gmm::GmmParams, pdbio::kNumAngleSlots> slots;
        for (int s = 0; s < pdbio::kNumAngleSlots; ++s) {
            gmm::GmmParams g = prior;
            for (int j = 1; j <= upto_step; ++j) {
                const double alpha = ang_sched.alpha_at(j);
                const double y = normal(rng, target.chi[i][s], 1.0 / std::sqrt(alpha));
                g = gmm::posterior_update(g, y, alpha);
            }
            slots[s] = std::move(g);
        }
        state.ang.push_back(std::move(slots));
    }
    return state;
}

}  // namespace

LossBreakdown discrete_time_loss(const Target& target, const denoise::Context& ctx,
                                 const denoise::Denoiser& den, const EngineConfig& cfg, Rng& rng) {
    if (target.size() == 0) {
        throw std::invalid_argument("discrete_time_loss: empty target");
    }
    const int n = cfg.n_train;
    const gmm::AngleScheduler ang_sched(cfg.ang_rho0, cfg.ang_rho1, n);
    const centroid::PosScheduler pos_sched(cfg.pos_sigma1, n);
    const restype::TypeScheduler type_sched(cfg.type_beta1, n);

    LossBreakdown out;
    out.step = static_cast<int>(uniform_index(rng, 1, n));
    const double t_prev = static_cast<double>(out.step - 1) / n;
    const double t_i = static_cast<double>(out.step) / n;

    denoise::FlowState state =
        draw_flow_state(target, cfg, ang_sched, pos_sched, type_sched, out.step - 1, rng);
    const denoise::PeptidePrediction pred = den.predict(state, ctx, t_prev);
    if (pred.size() != target.size()) {
        throw std::invalid_argument("discrete_time_loss: prediction size mismatch");
    }

    const double alpha_pos = pos_sched.alpha_at(out.step);
    const double alpha_ang = ang_sched.alpha_at(out.step);
    const double alpha_type = type_sched.alpha_at(out.step);
    const double lambda_i = fisher::lambda_schedule(t_i, cfg.rot_lambda1);

    for (std::size_t i = 0; i < target.size(); ++i) {
        out.pos += centroid::pos_loss(target.x[i], pred.x[i], alpha_pos, n);
        out.ori += fisher::rotation_loss(pred.o[i], target.o[i], lambda_i, n);
        out.type += restype::type_loss(target.c[i], pred.c[i], alpha_type, restype::kNumClasses, n,
                                       rng, cfg.type_loss_draws);
        for (int s = 0; s < pdbio::kNumAngleSlots; ++s) {
            if (!target.chi_present[i][s]) continue;
            out.ang += gmm::angle_loss(target.chi[i][s], pred.chi[i][s], alpha_ang, n);
        }
    }
    out.total = cfg.weights.pos * out.pos + cfg.weights.ori * out.ori +
                cfg.weights.type * out.type + cfg.weights.ang * out.ang;
    return out;
}

SampleResult sample(const denoise::Context& ctx, int n_res, const denoise::Denoiser& den,
                    const EngineConfig& cfg, Rng& rng) {
    if (n_res < 1) {
        throw std::invalid_argument("sample: n_res must be >= 1");
    }
    const int n = cfg.n_sample;
    const gmm::AngleScheduler ang_sched(cfg.ang_rho0, cfg.ang_rho1, n);
    const centroid::PosScheduler pos_sched(cfg.pos_sigma1, n);
    const restype::TypeScheduler type_sched(cfg.type_beta1, n);

    SampleResult result;
    result.center = context_center(ctx);
    result.scale = cfg.pos_scale;

    // Priors: zero-mean unit-precision positions, Haar-uniform rotation,
    // uniform simplex, rotamer mixture.
    denoise::FlowState state;
    state.t = 0.0;
    const gmm::GmmParams ang_prior = gmm::rotamer_prior(cfg.ang_rho0, cfg.ang_components);
    for (int i = 0; i < n_res; ++i) {
        state.pos.push_back(centroid::GaussianParams{geo::Vec3::Zero(), 1.0});
        state.rot.push_back(geo::sample_uniform_so3(rng));
        state.type.push_back(restype::uniform_simplex());
        std::array<gmm::GmmParams, pdbio::kNumAngleSlots> slots;
        slots.fill(ang_prior);
        state.ang.push_back(std::move(slots));
    }
    result.trajectory.push_back(state);

    denoise::PeptidePrediction pred;
    for (int i = 1; i <= n; ++i) {
        const double t_prev = static_cast<double>(i - 1) / n;
        const double t_i = static_cast<double>(i) / n;
        pred = den.predict(state, ctx, t_prev);
        if (pred.size() != static_cast<std::size_t>(n_res)) {
            throw std::invalid_argument("sample: prediction size mismatch");
        }

        const double alpha_ang = ang_sched.alpha_at(i);
        for (int r = 0; r < n_res; ++r) {
            // Native conjugate update for the angle mixtures.
            for (int s = 0; s < pdbio::kNumAngleSlots; ++s) {
                const double y = normal(rng, pred.chi[r][s], 1.0 / std::sqrt(alpha_ang));
                state.ang[r][s] = gmm::posterior_update(state.ang[r][s], y, alpha_ang);
            }
            // Noise-reduced updates: redraw from the flow around the
            // prediction instead of accumulating sender noise.
            state.pos[r] = centroid::flow_sample_pos(pred.x[r], pos_sched, t_i, rng);
            state.rot[r] = fisher::flow_sample(pred.o[r], t_i, rng, cfg.rot_lambda1);
            state.type[r] = restype::flow_sample_type_probs(pred.c[r], type_sched.beta_at(t_i), rng);
        }
        state.t = t_i;
        result.trajectory.push_back(state);
    }

    // Final readout is one extra predictor call on the terminal state.
    pred = den.predict(state, ctx, 1.0);
    for (int r = 0; r < n_res; ++r) {
        pdbio::ResidueFrame f;
        f.x = pred.x[r] * result.scale + result.center;
        f.o = pred.o[r];
        f.c = pred.c[r].argmax_class();
        for (int s = 0; s < pdbio::kNumAngleSlots; ++s) {
            f.chi[s] = geo::wrap_angle(pred.chi[r][s]);
            f.chi_present[s] = true;
        }
        f.chain = "A";
        f.resnum = r + 1;
        result.peptide.push_back(std::move(f));
    }
    return result;
}

namespace {

nlohmann::json state_to_json(const denoise::FlowState& s) {
    nlohmann::json j;
    j["t"] = s.t;
    auto& jpos = j["pos"] = nlohmann::json::array();
    for (const auto& p : s.pos) {
        jpos.push_back({{"mu", {p.mu.x(), p.mu.y(), p.mu.z()}}, {"rho", p.rho}});
    }
    auto& jrot = j["rot"] = nlohmann::json::array();
    for (const auto& r : s.rot) {
        nlohmann::json m = nlohmann::json::array();
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) m.push_back(r.matrix()(a, b));
        jrot.push_back(std::move(m));
    }
    auto& jtype = j["type"] = nlohmann::json::array();
    for (const auto& tp : s.type) jtype.push_back(tp.theta);
    auto& jang = j["ang"] = nlohmann::json::array();
    for (const auto& slots : s.ang) {
        nlohmann::json js = nlohmann::json::array();
        for (const auto& g : slots) {
            nlohmann::json jg;
            for (const auto& c : g.comps) {
                jg["mu"].push_back(c.mu);
                jg["rho"].push_back(c.rho);
                jg["pi"].push_back(c.pi);
            }
            js.push_back(std::move(jg));
        }
        jang.push_back(std::move(js));
    }
    return j;
}

}  // namespace

void write_trajectory_jsonl(std::ostream& os, const SampleResult& result) {
    for (const auto& s : result.trajectory) {
        os << state_to_json(s).dump() << "\n";
    }
}

void write_trajectory_csv(std::ostream& os, const SampleResult& result, const Target* target) {
    if (result.trajectory.empty() || result.trajectory.front().size() == 0) return;
    const auto& slots0 = result.trajectory.front().ang[0][0];
    const std::size_t k = slots0.size();
    os << "step,t";
    for (std::size_t j = 0; j < k; ++j) os << ",ang0_mu" << j + 1;
    for (std::size_t j = 0; j < k; ++j) os << ",ang0_pi" << j + 1;
    os << ",pos0_x,pos0_y,pos0_z,pos0_rho";
    if (target) os << ",rot0_geodesic";
    os << "\n";
    os.precision(17);
    for (std::size_t i = 0; i < result.trajectory.size(); ++i) {
        const auto& s = result.trajectory[i];
        os << i << "," << s.t;
        for (const auto& c : s.ang[0][0].comps) os << "," << c.mu;
        for (const auto& c : s.ang[0][0].comps) os << "," << c.pi;
        os << "," << s.pos[0].mu.x() << "," << s.pos[0].mu.y() << "," << s.pos[0].mu.z() << ","
           << s.pos[0].rho;
        if (target) os << "," << geo::geodesic_angle(s.rot[0], target->o[0]);
        os << "\n";
    }
}

}  // namespace bfnflow::engine
