#include <doctest.h>

#include <sstream>

#include "bfnflow/gmm_flow.hpp"
#include "testutil.hpp"

using namespace bfnflow;

namespace {

// Independent Bayes oracle: normalize prior(x) * N(y | x, 1/alpha) by
// Simpson quadrature over a domain wide enough to hold all the mass.
struct QuadPosterior {
    gmm::GmmParams prior;
    double y, alpha, z;

    QuadPosterior(const gmm::GmmParams& g, double y_, double alpha_) : prior(g), y(y_), alpha(alpha_) {
        double lo = y, hi = y, max_sd = 1.0 / std::sqrt(alpha);
        for (const auto& c : g.comps) {
            lo = std::min(lo, c.mu);
            hi = std::max(hi, c.mu);
            max_sd = std::max(max_sd, 1.0 / std::sqrt(c.rho));
        }
        lo -= 14.0 * max_sd;
        hi += 14.0 * max_sd;
        const int n = std::max(20000, static_cast<int>((hi - lo) / 1e-3));
        z = testutil::simpson([&](double x) { return unnormalized(x); }, lo, hi, n);
    }

    double unnormalized(double x) const {
        return prior.density(x) *
               std::sqrt(alpha / geo::kTwoPi) * std::exp(-0.5 * alpha * (x - y) * (x - y));
    }

    double density(double x) const { return unnormalized(x) / z; }
};

gmm::GmmParams random_mixture(Rng& rng, int kmax = 3) {
    const int k = static_cast<int>(uniform_index(rng, 1, kmax));
    gmm::GmmParams g;
    double wsum = 0.0;
    for (int j = 0; j < k; ++j) {
        gmm::Component c;
        c.mu = uniform(rng, 0.0, geo::kTwoPi);
        c.rho = uniform(rng, 0.05, 3.0);
        c.pi = uniform(rng, 0.1, 1.0);
        wsum += c.pi;
        g.comps.push_back(c);
    }
    for (auto& c : g.comps) c.pi /= wsum;
    return g;
}

}  // namespace

TEST_SUITE("gmm_flow") {

TEST_CASE("alpha_at single step telescopes to rho1 - rho0") {
    const gmm::AngleScheduler s(0.5, 4.0, 1);
    CHECK(s.alpha_at(1) == doctest::Approx(3.5).epsilon(1e-12));
}

TEST_CASE("alpha sum telescopes for random schedulers") {
    Rng rng(301);
    for (int trial = 0; trial < 50; ++trial) {
        const double rho0 = uniform(rng, 1e-3, 2.0);
        const double rho1 = rho0 + uniform(rng, 0.1, 20.0);
        const int n = static_cast<int>(uniform_index(rng, 1, 500));
        const gmm::AngleScheduler s(rho0, rho1, n);
        double sum = 0.0;
        for (int i = 1; i <= n; ++i) sum += s.alpha_at(i);
        CHECK(std::abs(sum - (rho1 - rho0)) < 1e-10);
    }
}

TEST_CASE("alpha_at equals a direct beta difference") {
    const gmm::AngleScheduler s(0.01, 5.0, 100);
    CHECK(s.alpha_at(50) == doctest::Approx(s.beta_at(0.50) - s.beta_at(0.49)).epsilon(1e-10));
}

TEST_CASE("posterior_update single Gaussian closed form") {
    gmm::GmmParams g;
    g.comps = {{0.0, 1.0, 1.0}};
    const auto p = gmm::posterior_update(g, 2.0, 1.0);
    CHECK(p.comps[0].mu == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(p.comps[0].rho == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(p.comps[0].pi == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("posterior_update large-alpha weights reach the analytic limit") {
    // As alpha grows the posterior weight of component k tends to
    // pi_k N(y | mu_k, 1/rho_k) renormalized; discrimination between the
    // rotamer modes is therefore set by the prior precision.
    auto analytic_trans_weight = [](double rho) {
        const double d = 2.0 * geo::kPi / 3.0;
        const double side = std::exp(-0.5 * rho * d * d);
        return 1.0 / (1.0 + 2.0 * side);
    };
    for (double rho : {4.0, 0.01}) {
        const auto post = gmm::posterior_update(gmm::rotamer_prior(rho), geo::kPi, 1e12);
        CHECK(post.comps[1].pi == doctest::Approx(analytic_trans_weight(rho)).epsilon(1e-6));
    }
    // with an informative prior the trans mode takes essentially all weight
    CHECK(analytic_trans_weight(4.0) > 0.999);
}

TEST_CASE("posterior_update matches the quadrature Bayes oracle") {
    Rng rng(302);
    for (int trial = 0; trial < 20; ++trial) {
        const gmm::GmmParams g = random_mixture(rng);
        const double y = uniform(rng, -geo::kPi, 3.0 * geo::kPi);
        const double alpha = uniform(rng, 0.05, 20.0);
        const auto post = gmm::posterior_update(g, y, alpha);
        const QuadPosterior oracle(g, y, alpha);
        double linf = 0.0;
        for (double x = -4.0 * geo::kPi; x <= 4.0 * geo::kPi; x += 1e-3) {
            linf = std::max(linf, std::abs(post.density(x) - oracle.density(x)));
        }
        CHECK(linf < 1e-6);
    }
}

TEST_CASE("posterior_update survives extreme underflow in log space") {
    gmm::GmmParams g = gmm::rotamer_prior(50.0);
    const auto p = gmm::posterior_update(g, 1e4, 1e8);
    double sum = 0.0;
    for (const auto& c : p.comps) {
        CHECK(std::isfinite(c.pi));
        CHECK(std::isfinite(c.mu));
        sum += c.pi;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("posterior_update keeps weights normalized and raises rho by alpha") {
    Rng rng(303);
    for (int trial = 0; trial < 100; ++trial) {
        const gmm::GmmParams g = random_mixture(rng);
        const double alpha = uniform(rng, 0.01, 10.0);
        const auto p = gmm::posterior_update(g, uniform(rng, -10.0, 10.0), alpha);
        double sum = 0.0;
        for (std::size_t k = 0; k < p.comps.size(); ++k) {
            sum += p.comps[k].pi;
            CHECK(p.comps[k].rho == doctest::Approx(g.comps[k].rho + alpha).epsilon(1e-12));
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("sequential updates equal one precision-weighted aggregate update") {
    Rng rng(304);
    for (int trial = 0; trial < 30; ++trial) {
        const gmm::GmmParams g0 = random_mixture(rng);
        gmm::GmmParams seq = g0;
        double asum = 0.0, ysum = 0.0;
        for (int i = 0; i < 8; ++i) {
            const double a = uniform(rng, 0.05, 2.0);
            const double y = uniform(rng, -5.0, 5.0);
            seq = gmm::posterior_update(seq, y, a);
            asum += a;
            ysum += a * y;
        }
        const auto agg = gmm::posterior_update(g0, ysum / asum, asum);
        for (std::size_t k = 0; k < g0.comps.size(); ++k) {
            CHECK(std::abs(seq.comps[k].mu - agg.comps[k].mu) < 1e-9);
            CHECK(std::abs(seq.comps[k].rho - agg.comps[k].rho) < 1e-9);
        }
    }
}

TEST_CASE("flow_mean_sample at beta = 0 returns mu0 deterministically") {
    Rng rng(305);
    for (int i = 0; i < 10; ++i) {
        CHECK(gmm::flow_mean_sample(1.0, 2.5, 0.7, 0.0, rng) == 2.5);
    }
}

TEST_CASE("flow_mean_sample asymptote: huge beta pins the data value") {
    Rng rng(306);
    const double chi = 4.1;
    std::vector<double> xs;
    for (int i = 0; i < 10000; ++i) xs.push_back(gmm::flow_mean_sample(chi, 1.0, 0.01, 1e6, rng));
    CHECK(std::abs(testutil::stats(xs).mean - chi) < 1e-3);
}

TEST_CASE("flow_mean_sample moments match the closed form") {
    Rng rng(307);
    const double chi = 2.0, mu0 = 5.5, rho0 = 0.4, beta = 3.0;
    std::vector<double> xs;
    for (int i = 0; i < 100000; ++i) xs.push_back(gmm::flow_mean_sample(chi, mu0, rho0, beta, rng));
    const auto s = testutil::stats(xs);
    const double rho = rho0 + beta;
    const double mean = (beta * chi + mu0 * rho0) / rho;
    const double var = beta / (rho * rho);
    CHECK(std::abs(s.mean - mean) < 3.0 * s.sem);
    CHECK(std::abs(s.var - var) < 3.0 * var * std::sqrt(2.0 / (xs.size() - 1)));
}

TEST_CASE("simulate_flow terminal means follow the closed-form flow (K=1)") {
    Rng rng(308);
    const gmm::AngleScheduler s(0.5, 6.0, 50);
    gmm::GmmParams g0;
    g0.comps = {{2.0, s.rho0, 1.0}};
    const double chi = 4.0;
    std::vector<double> finals;
    for (int run = 0; run < 4000; ++run) {
        finals.push_back(gmm::simulate_flow(chi, g0, s, rng).back().comps[0].mu);
    }
    const auto st = testutil::stats(finals);
    const double beta = s.rho1 - s.rho0;
    const double mean = (beta * chi + g0.comps[0].mu * s.rho0) / s.rho1;
    const double var = beta / (s.rho1 * s.rho1);
    CHECK(std::abs(st.mean - mean) < 3.0 * st.sem);
    CHECK(std::abs(st.var - var) < 3.0 * var * std::sqrt(2.0 / (finals.size() - 1)));
}

TEST_CASE("simulate_flow locks weight onto the data component when rho1 >> rho0") {
    // informative prior keeps the modes distinguishable; see the analytic
    // large-alpha weight limit above
    Rng rng(309);
    const gmm::AngleScheduler s(25.0, 2500.0, 200);
    const gmm::GmmParams prior = gmm::rotamer_prior(25.0);
    for (int run = 0; run < 50; ++run) {
        const auto traj = gmm::simulate_flow(geo::kPi, prior, s, rng);
        CHECK(traj.back().comps[1].pi >= 0.99);
    }
}

TEST_CASE("simulate_flow means are convex combinations of the inputs") {
    // replay the observation stream and check every mean stays inside the
    // running hull of {mu0, y_1..y_i}; with all inputs in [0, 2pi] the means
    // stay in [0, 2pi]
    Rng rng(310);
    const gmm::AngleScheduler s(0.5, 10.0, 60);
    gmm::GmmParams g = gmm::rotamer_prior(0.5);
    double lo = geo::kPi / 3.0, hi = 5.0 * geo::kPi / 3.0;  // prior mean range
    for (int i = 1; i <= s.n; ++i) {
        const double y = uniform(rng, 0.0, geo::kTwoPi);  // inputs kept in range
        lo = std::min(lo, y);
        hi = std::max(hi, y);
        g = gmm::posterior_update(g, y, s.alpha_at(i));
        for (const auto& c : g.comps) {
            CHECK(c.mu >= lo - 1e-12);
            CHECK(c.mu <= hi + 1e-12);
            CHECK(c.mu >= 0.0);
            CHECK(c.mu <= geo::kTwoPi);
        }
    }
}

TEST_CASE("entropy_upper_bound frozen values") {
    gmm::GmmParams g1;
    g1.comps = {{0.0, 1.0, 1.0}};
    CHECK(gmm::entropy_upper_bound(g1) == doctest::Approx(1.4189385332046727).epsilon(1e-12));

    const auto g3 = gmm::rotamer_prior(1.0);
    CHECK(gmm::entropy_upper_bound(g3) ==
          doctest::Approx(std::log(3.0) + 1.4189385332046727).epsilon(1e-12));
}

TEST_CASE("entropy_upper_bound requires a shared precision") {
    gmm::GmmParams g;
    g.comps = {{0.0, 1.0, 0.5}, {1.0, 2.0, 0.5}};
    CHECK_THROWS_WITH_AS(gmm::entropy_upper_bound(g),
                         doctest::Contains("bound requires shared precision"),
                         std::invalid_argument);
}

TEST_CASE("entropy_upper_bound dominates the quadrature entropy") {
    Rng rng(311);
    for (int trial = 0; trial < 20; ++trial) {
        gmm::GmmParams g = random_mixture(rng);
        const double rho = g.comps.front().rho;
        for (auto& c : g.comps) c.rho = rho;  // bound needs equal precisions
        const double sd = 1.0 / std::sqrt(rho);
        double lo = g.comps.front().mu, hi = lo;
        for (const auto& c : g.comps) {
            lo = std::min(lo, c.mu);
            hi = std::max(hi, c.mu);
        }
        const double h_quad = testutil::simpson(
            [&](double x) {
                const double d = g.density(x);
                return d > 0.0 ? -d * std::log(d) : 0.0;
            },
            lo - 14.0 * sd, hi + 14.0 * sd, 60000);
        CHECK(gmm::entropy_upper_bound(g) >= h_quad - 1e-9);
    }
}

TEST_CASE("entropy bound decays linearly along the schedule") {
    Rng rng(312);
    for (int trial = 0; trial < 20; ++trial) {
        const double rho0 = uniform(rng, 1e-3, 1.0);
        const gmm::AngleScheduler s(rho0, rho0 + uniform(rng, 0.5, 30.0),
                                    static_cast<int>(uniform_index(rng, 2, 400)));
        CHECK(gmm::check_linear_entropy_schedule(s) < 1e-9);
    }
    // n = 2: the midpoint lies exactly on the chord
    CHECK(gmm::check_linear_entropy_schedule(gmm::AngleScheduler(0.1, 7.0, 2)) < 1e-12);
}

TEST_CASE("constant schedule is rejected at construction") {
    CHECK_THROWS_AS(gmm::AngleScheduler(5.0, 5.0, 10), std::invalid_argument);
    CHECK_THROWS_AS(gmm::AngleScheduler(5.0, 1.0, 10), std::invalid_argument);
    CHECK_THROWS_AS(gmm::AngleScheduler(0.1, 5.0, 0), std::invalid_argument);
}

TEST_CASE("angle_loss values and Gaussian KL identity") {
    CHECK(gmm::angle_loss(1.3, 1.3, 2.0, 5) == 0.0);
    CHECK(gmm::angle_loss(2.0, 1.0, 1.0, 2) == doctest::Approx(1.0).epsilon(1e-12));

    Rng rng(313);
    for (int i = 0; i < 20; ++i) {
        const double chi = uniform(rng, 0.0, geo::kTwoPi);
        const double hat = uniform(rng, 0.0, geo::kTwoPi);
        const double alpha = uniform(rng, 0.1, 5.0);
        // KL(N(chi, 1/a) || N(hat, 1/a)) = a (chi - hat)^2 / 2
        const double kl = 0.5 * alpha * (chi - hat) * (chi - hat);
        CHECK(gmm::angle_loss(chi, hat, alpha, 7) == doctest::Approx(7.0 * kl).epsilon(1e-12));
    }
}

TEST_CASE("angle_loss wrapped residual variant") {
    const double chi = 0.1, hat = geo::kTwoPi - 0.1;
    CHECK(gmm::angle_loss(chi, hat, 1.0, 1, false) ==
          doctest::Approx(0.5 * (chi - hat) * (chi - hat)));
    CHECK(gmm::angle_loss(chi, hat, 1.0, 1, true) == doctest::Approx(0.5 * 0.2 * 0.2).epsilon(1e-9));
}

TEST_CASE("trajectory CSV has one row per step") {
    Rng rng(314);
    const gmm::AngleScheduler s(0.01, 5.0, 10);
    const auto traj = gmm::simulate_flow(geo::kPi, gmm::rotamer_prior(), s, rng);
    std::ostringstream os;
    gmm::write_trajectory_csv(os, traj, s);
    const std::string text = os.str();
    CHECK(std::count(text.begin(), text.end(), '\n') == 11);  // header + 10 steps
    CHECK(text.rfind("step,t,alpha,mu1,mu2,mu3,", 0) == 0);
}

TEST_CASE("GmmParams validation") {
    gmm::GmmParams bad;
    bad.comps = {{0.0, 1.0, 0.5}, {1.0, 1.0, 0.6}};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad.comps = {{0.0, -1.0, 1.0}};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad.comps.clear();
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    CHECK_NOTHROW(gmm::rotamer_prior().validate());
}

}  // TEST_SUITE
