#include <doctest.h>

#include "bfnflow/denoiser.hpp"
#include "bfnflow/engine.hpp"
#include "testutil.hpp"

using namespace bfnflow;
using geo::Vec3;

namespace {

denoise::FlowState prior_state(int n_res, Rng& rng, double ang_rho0 = 0.01) {
    denoise::FlowState s;
    s.t = 0.0;
    for (int i = 0; i < n_res; ++i) {
        s.pos.push_back(centroid::GaussianParams{Vec3::Zero(), 1.0});
        s.rot.push_back(geo::sample_uniform_so3(rng));
        s.type.push_back(restype::uniform_simplex());
        std::array<gmm::GmmParams, pdbio::kNumAngleSlots> slots;
        slots.fill(gmm::rotamer_prior(ang_rho0));
        s.ang.push_back(std::move(slots));
    }
    return s;
}

denoise::PeptidePrediction random_prediction(int n_res, Rng& rng) {
    const auto pep = testutil::random_peptide(n_res, rng);
    return denoise::prediction_from_frames(pep);
}

}  // namespace

TEST_SUITE("denoiser") {

TEST_CASE("OracleDenoiser returns the target independent of state and t") {
    Rng rng(601);
    const auto target = random_prediction(4, rng);
    const denoise::OracleDenoiser oracle(target);
    const denoise::Context ctx;
    for (double t : {0.0, 0.3, 1.0}) {
        auto state = prior_state(4, rng);
        state.t = t;
        const auto pred = oracle.predict(state, ctx, t);
        for (int i = 0; i < 4; ++i) {
            CHECK((pred.x[i] - target.x[i]).norm() == 0.0);
            CHECK((pred.o[i].matrix() - target.o[i].matrix()).norm() == 0.0);
            CHECK(pred.c[i].theta == target.c[i].theta);
            CHECK(pred.chi[i] == target.chi[i]);
        }
    }
}

TEST_CASE("predict rejects residue-count mismatch") {
    Rng rng(602);
    const denoise::OracleDenoiser oracle(random_prediction(4, rng));
    auto state = prior_state(3, rng);
    CHECK_THROWS_AS((void)oracle.predict(state, denoise::Context{}, 0.5), std::invalid_argument);
}

TEST_CASE("NoisyOracle at zero noise equals the oracle") {
    Rng rng(603);
    const auto target = random_prediction(3, rng);
    const denoise::OracleDenoiser oracle(target);
    const denoise::NoisyOracle noisy(target, denoise::NoisyOracleConfig{}, 42);
    const auto state = prior_state(3, rng);
    const auto a = oracle.predict(state, denoise::Context{}, 0.5);
    const auto b = noisy.predict(state, denoise::Context{}, 0.5);
    for (int i = 0; i < 3; ++i) {
        CHECK((a.x[i] - b.x[i]).norm() == 0.0);
        CHECK((a.o[i].matrix() - b.o[i].matrix()).norm() == 0.0);
        CHECK(a.chi[i] == b.chi[i]);
    }
}

TEST_CASE("NoisyOracle perturbations respect their configured scales") {
    Rng rng(604);
    const auto target = random_prediction(2, rng);
    denoise::NoisyOracleConfig cfg;
    cfg.pos_sd = 0.05;
    cfg.rot_sd = 0.02;
    cfg.ang_sd = 0.03;
    cfg.type_mix = 0.2;
    const denoise::NoisyOracle noisy(target, cfg, 43);
    const auto state = prior_state(2, rng);

    std::vector<double> dx, drot;
    for (int i = 0; i < 2000; ++i) {
        const auto p = noisy.predict(state, denoise::Context{}, 0.2);
        p.c[0].validate();  // still a simplex after mixing
        dx.push_back((p.x[0] - target.x[0]).norm());
        drot.push_back(geo::geodesic_angle(p.o[0], target.o[0]));
    }
    // mean norm of a 3d gaussian is sd * 2 sqrt(2/pi)... compare loosely
    const auto sx = testutil::stats(dx);
    CHECK(sx.mean > 0.5 * cfg.pos_sd);
    CHECK(sx.mean < 3.0 * cfg.pos_sd);
    const auto sr = testutil::stats(drot);
    CHECK(sr.mean > 0.5 * cfg.rot_sd);
    CHECK(sr.mean < 4.0 * cfg.rot_sd);
}

TEST_CASE("NearestNeighborDenoiser retrieves the datum the state sits on") {
    Rng rng(605);
    std::vector<denoise::PeptidePrediction> dataset;
    for (int j = 0; j < 3; ++j) dataset.push_back(random_prediction(2, rng));
    const denoise::NearestNeighborDenoiser knn{std::vector<denoise::PeptidePrediction>(dataset)};

    for (int pick = 0; pick < 3; ++pick) {
        // build a state whose summary sits exactly on dataset[pick]
        denoise::FlowState state = prior_state(2, rng);
        for (int i = 0; i < 2; ++i) {
            state.pos[i].mu = dataset[pick].x[i];
            state.rot[i] = dataset[pick].o[i];
            state.type[i] = dataset[pick].c[i];
            for (int s = 0; s < pdbio::kNumAngleSlots; ++s) {
                gmm::GmmParams g;
                g.comps = {{dataset[pick].chi[i][s], 5.0, 1.0}};
                state.ang[i][s] = g;
            }
        }
        // brute-force oracle over the documented metric
        double best = std::numeric_limits<double>::infinity();
        std::size_t best_j = 99;
        for (std::size_t j = 0; j < dataset.size(); ++j) {
            const double d = knn.distance(state, j);
            if (d < best) {
                best = d;
                best_j = j;
            }
        }
        CHECK(best_j == static_cast<std::size_t>(pick));
        // geodesic_angle(r, r) picks up ~1e-8 from acos near 1
        CHECK(knn.distance(state, pick) < 1e-6);

        const auto pred = knn.predict(state, denoise::Context{}, 0.5);
        for (int i = 0; i < 2; ++i) {
            CHECK((pred.x[i] - dataset[pick].x[i]).norm() == 0.0);
        }
    }
}

TEST_CASE("NearestNeighborDenoiser is deterministic") {
    Rng rng(606);
    std::vector<denoise::PeptidePrediction> dataset;
    for (int j = 0; j < 4; ++j) dataset.push_back(random_prediction(3, rng));
    const denoise::NearestNeighborDenoiser knn{std::move(dataset)};
    const auto state = prior_state(3, rng);
    const auto a = knn.predict(state, denoise::Context{}, 0.4);
    const auto b = knn.predict(state, denoise::Context{}, 0.4);
    for (int i = 0; i < 3; ++i) CHECK((a.x[i] - b.x[i]).norm() == 0.0);
}

TEST_CASE("FlowState validation catches mismatched modalities") {
    Rng rng(607);
    auto state = prior_state(3, rng);
    CHECK_NOTHROW(state.validate());
    state.rot.pop_back();
    CHECK_THROWS_AS(state.validate(), std::invalid_argument);

    auto state2 = prior_state(2, rng);
    state2.t = 1.5;
    CHECK_THROWS_AS(state2.validate(), std::invalid_argument);
}

TEST_CASE("dataset JSON round trip feeds the knn constructor") {
    Rng rng(608);
    std::vector<pdbio::Peptide> peptides;
    for (int j = 0; j < 3; ++j) peptides.push_back(testutil::random_peptide(2, rng));
    const std::string text = pdbio::frames_to_json(peptides);
    const auto parsed = pdbio::json_to_frames(text);
    REQUIRE(parsed.size() == 3);
    const auto knn = denoise::make_knn_from_frames(parsed);
    const auto state = prior_state(2, rng);
    CHECK_NOTHROW((void)knn.predict(state, denoise::Context{}, 0.1));
}

}  // TEST_SUITE
