#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "bfnflow/config.hpp"
#include "bfnflow/engine.hpp"
#include "bfnflow/metrics.hpp"
#include "bfnflow/pdb.hpp"

namespace {

using namespace bfnflow;

struct Common {
    std::uint64_t seed = 0;
    std::string config_path;
    std::string out_path;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--seed", c.seed, "RNG seed");
    cmd->add_option("--config", c.config_path, "key = value config file");
    cmd->add_option("--out", c.out_path, "output path (stdout when omitted)");
}

config::Settings load_settings(const Common& c) {
    if (c.config_path.empty()) return {};
    return config::load_file(c.config_path);
}

void write_output(const Common& c, const std::string& text) {
    if (c.out_path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(c.out_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open output file " + c.out_path);
    out << text;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int env_threads() {
    if (const char* v = std::getenv("BFNFLOW_THREADS")) {
        const int n = std::atoi(v);
        if (n >= 1) return n;
    }
    return 1;
}

// ---- flow-sim-angles ------------------------------------------------------

int run_flow_sim_angles(const Common& c, double chi_deg, int k, double rho0, double rho1,
                        int steps) {
    Rng rng(c.seed);
    const gmm::AngleScheduler sched(rho0, rho1, steps);
    const gmm::GmmParams prior = gmm::rotamer_prior(rho0, k);
    const double chi = chi_deg * geo::kPi / 180.0;
    const auto traj = gmm::simulate_flow(chi, prior, sched, rng);
    std::ostringstream os;
    gmm::write_trajectory_csv(os, traj, sched);
    write_output(c, os.str());
    return 0;
}

// ---- flow-sim-rot ---------------------------------------------------------

int run_flow_sim_rot(const Common& c, int steps) {
    const auto settings = load_settings(c);
    Rng rng(c.seed);
    const geo::Rotation target = geo::sample_uniform_so3(rng);
    std::ostringstream os;
    os.precision(17);
    os << "step,t,lambda,lambda_sq,geodesic\n";
    for (int i = 0; i <= steps; ++i) {
        const double t = static_cast<double>(i) / steps;
        const double lam = fisher::lambda_schedule(t, settings.engine.rot_lambda1);
        const geo::Rotation ti = fisher::flow_sample(target, t, rng, settings.engine.rot_lambda1);
        os << i << "," << t << "," << lam << "," << lam * lam << ","
           << geo::geodesic_angle(ti, target) << "\n";
    }
    write_output(c, os.str());
    return 0;
}

// ---- sample ---------------------------------------------------------------

int run_sample(const Common& c, const std::string& context_path, int len,
               const std::string& denoiser_name, int steps, const std::string& target_path,
               const std::string& dataset_path, const std::string& traj_path) {
    auto settings = load_settings(c);
    settings.engine.n_sample = steps;
    Rng rng(c.seed);

    denoise::Context ctx;
    if (!context_path.empty() && context_path != "none") {
        const auto peps = pdbio::json_to_frames(read_file(context_path));
        for (const auto& p : peps) {
            ctx.frames.insert(ctx.frames.end(), p.begin(), p.end());
        }
    }
    const geo::Vec3 center = engine::context_center(ctx);

    std::unique_ptr<denoise::Denoiser> den;
    int n_res = len;
    if (denoiser_name == "oracle" || denoiser_name == "noisy") {
        if (target_path.empty()) {
            throw std::runtime_error("denoiser '" + denoiser_name + "' requires --target");
        }
        const auto peps = pdbio::json_to_frames(read_file(target_path));
        if (peps.empty() || peps.front().empty()) {
            throw std::runtime_error("target file holds no residues");
        }
        const engine::Target target =
            engine::normalized_target(peps.front(), center, settings.engine.pos_scale);
        if (n_res == 0) n_res = static_cast<int>(target.size());
        if (n_res != static_cast<int>(target.size())) {
            throw std::runtime_error("--len disagrees with the target length");
        }
        if (denoiser_name == "oracle") {
            den = std::make_unique<denoise::OracleDenoiser>(engine::target_as_prediction(target));
        } else {
            den = std::make_unique<denoise::NoisyOracle>(engine::target_as_prediction(target),
                                                         settings.noisy, c.seed ^ 0x6e6f697379ULL);
        }
    } else if (denoiser_name == "knn") {
        if (dataset_path.empty()) {
            throw std::runtime_error("denoiser 'knn' requires --dataset");
        }
        auto peps = pdbio::json_to_frames(read_file(dataset_path));
        // kNN items live in the same normalized frame as the engine state
        for (auto& pep : peps) {
            for (auto& f : pep) f.x = (f.x - center) / settings.engine.pos_scale;
        }
        den = std::make_unique<denoise::NearestNeighborDenoiser>(
            denoise::make_knn_from_frames(peps, settings.knn));
        if (n_res == 0 && !peps.empty()) n_res = static_cast<int>(peps.front().size());
    } else {
        throw std::runtime_error("unknown denoiser '" + denoiser_name + "'");
    }
    if (n_res < 1) throw std::runtime_error("--len is required for this denoiser");

    const auto result = engine::sample(ctx, n_res, *den, settings.engine, rng);
    write_output(c, pdbio::frames_to_json({result.peptide}));

    std::string tp = traj_path;
    if (tp.empty() && !c.out_path.empty()) tp = c.out_path + ".traj.jsonl";
    if (!tp.empty()) {
        std::ofstream ts(tp, std::ios::binary);
        if (!ts) throw std::runtime_error("cannot open trajectory file " + tp);
        engine::write_trajectory_jsonl(ts, result);
        std::ofstream cs(tp + ".summary.csv", std::ios::binary);
        engine::write_trajectory_csv(cs, result);
    }
    return 0;
}

// ---- loss-eval ------------------------------------------------------------

int run_loss_eval(const Common& c, const std::string& target_path,
                  const std::string& denoiser_name, int trials, const std::string& context_path,
                  const std::string& dataset_path) {
    auto settings = load_settings(c);
    Rng rng(c.seed);

    denoise::Context ctx;
    if (!context_path.empty() && context_path != "none") {
        const auto peps = pdbio::json_to_frames(read_file(context_path));
        for (const auto& p : peps) ctx.frames.insert(ctx.frames.end(), p.begin(), p.end());
    }
    const geo::Vec3 center = engine::context_center(ctx);

    const auto peps = pdbio::json_to_frames(read_file(target_path));
    if (peps.empty() || peps.front().empty()) {
        throw std::runtime_error("target file holds no residues");
    }
    const engine::Target target =
        engine::normalized_target(peps.front(), center, settings.engine.pos_scale);

    std::unique_ptr<denoise::Denoiser> den;
    if (denoiser_name == "oracle") {
        den = std::make_unique<denoise::OracleDenoiser>(engine::target_as_prediction(target));
    } else if (denoiser_name == "noisy") {
        den = std::make_unique<denoise::NoisyOracle>(engine::target_as_prediction(target),
                                                     settings.noisy, c.seed ^ 0x6e6f697379ULL);
    } else if (denoiser_name == "knn") {
        if (dataset_path.empty()) throw std::runtime_error("denoiser 'knn' requires --dataset");
        auto dpeps = pdbio::json_to_frames(read_file(dataset_path));
        for (auto& pep : dpeps) {
            for (auto& f : pep) f.x = (f.x - center) / settings.engine.pos_scale;
        }
        den = std::make_unique<denoise::NearestNeighborDenoiser>(
            denoise::make_knn_from_frames(dpeps, settings.knn));
    } else {
        throw std::runtime_error("unknown denoiser '" + denoiser_name + "'");
    }

    struct Acc {
        double sum = 0.0, sq = 0.0;
        double mn = std::numeric_limits<double>::infinity();
        double mx = -std::numeric_limits<double>::infinity();
        void add(double v) {
            sum += v;
            sq += v * v;
            mn = std::min(mn, v);
            mx = std::max(mx, v);
        }
    };
    Acc acc[5];
    for (int t = 0; t < trials; ++t) {
        const auto l = engine::discrete_time_loss(target, ctx, *den, settings.engine, rng);
        acc[0].add(l.total);
        acc[1].add(l.pos);
        acc[2].add(l.ori);
        acc[3].add(l.type);
        acc[4].add(l.ang);
    }
    const char* names[5] = {"total", "pos", "ori", "type", "ang"};
    std::ostringstream os;
    os.precision(17);
    os << "modality,mean,std,min,max\n";
    for (int j = 0; j < 5; ++j) {
        const double mean = acc[j].sum / trials;
        const double var = std::max(0.0, acc[j].sq / trials - mean * mean);
        os << names[j] << "," << mean << "," << std::sqrt(var) << "," << acc[j].mn << ","
           << acc[j].mx << "\n";
    }
    write_output(c, os.str());
    return 0;
}

// ---- ingest ---------------------------------------------------------------

int run_ingest(const Common& c, const std::string& pdb_path, const std::string& chain) {
    const auto parsed = pdbio::parse_pdb(read_file(pdb_path));
    std::vector<pdbio::AtomRecord> atoms;
    for (const auto& a : parsed.atoms) {
        if (chain.empty() || a.chain == chain) atoms.push_back(a);
    }
    const auto built = pdbio::build_frames(atoms);
    for (const auto& w : parsed.warnings) std::cerr << "warning: " << w << "\n";
    for (const auto& w : built.warnings) std::cerr << "warning: " << w << "\n";
    write_output(c, pdbio::frames_to_json({built.frames}));
    return 0;
}

// ---- eval -----------------------------------------------------------------

int run_eval(const Common& c, const std::string& pred_path, const std::string& true_path) {
    const auto preds = pdbio::json_to_frames(read_file(pred_path));
    const auto trues = pdbio::json_to_frames(read_file(true_path));
    if (preds.empty() || trues.empty()) {
        throw std::runtime_error("eval: empty prediction or reference file");
    }
    if (trues.size() != 1 && trues.size() != preds.size()) {
        throw std::runtime_error("eval: reference must hold one peptide or match predictions");
    }

    static const char* slot_names[pdbio::kNumAngleSlots] = {"psi", "chi1", "chi2", "chi3", "chi4"};
    std::ostringstream os;
    os.precision(12);
    os << "structure,metric,slot,value\n";

    std::vector<double> micro_pred[pdbio::kNumAngleSlots], micro_true[pdbio::kNumAngleSlots];
    std::vector<double> macro_correct;
    std::vector<double> aar_values, rmsd_values;
    std::vector<std::vector<int>> pred_seqs;

    for (std::size_t p = 0; p < preds.size(); ++p) {
        const auto& pred = preds[p];
        const auto& ref = trues.size() == 1 ? trues.front() : trues[p];
        const std::string id = "pep" + std::to_string(p);
        if (pred.size() != ref.size()) {
            throw std::runtime_error("eval: peptide " + std::to_string(p) + " length mismatch");
        }

        std::vector<double> all_pred, all_true;
        for (int s = 0; s < pdbio::kNumAngleSlots; ++s) {
            std::vector<double> sp, st;
            for (std::size_t r = 0; r < pred.size(); ++r) {
                if (pred[r].chi_present[s] && ref[r].chi_present[s]) {
                    sp.push_back(pred[r].chi[s]);
                    st.push_back(ref[r].chi[s]);
                }
            }
            if (sp.empty()) continue;
            os << id << ",mae_deg," << slot_names[s] << "," << metrics::wrapped_mae(sp, st) << "\n";
            os << id << ",correct_frac," << slot_names[s] << ","
               << metrics::correct_fraction(sp, st) << "\n";
            micro_pred[s].insert(micro_pred[s].end(), sp.begin(), sp.end());
            micro_true[s].insert(micro_true[s].end(), st.begin(), st.end());
            all_pred.insert(all_pred.end(), sp.begin(), sp.end());
            all_true.insert(all_true.end(), st.begin(), st.end());
        }
        if (!all_pred.empty()) {
            macro_correct.push_back(metrics::correct_fraction(all_pred, all_true));
        }

        std::vector<int> sp, st;
        std::vector<geo::Vec3> xp, xt;
        for (std::size_t r = 0; r < pred.size(); ++r) {
            sp.push_back(pred[r].c);
            st.push_back(ref[r].c);
            xp.push_back(pred[r].x);
            xt.push_back(ref[r].x);
        }
        pred_seqs.push_back(sp);
        const double a = metrics::aar(sp, st);
        const double rmsd = geo::kabsch_rmsd(xp, xt);
        aar_values.push_back(a);
        rmsd_values.push_back(rmsd);
        os << id << ",aar,," << a << "\n";
        os << id << ",rmsd,," << rmsd << "\n";
    }

    std::vector<double> all_p, all_t;
    for (int s = 0; s < pdbio::kNumAngleSlots; ++s) {
        if (micro_pred[s].empty()) continue;
        os << "all,mae_deg," << slot_names[s] << ","
           << metrics::wrapped_mae(micro_pred[s], micro_true[s]) << "\n";
        all_p.insert(all_p.end(), micro_pred[s].begin(), micro_pred[s].end());
        all_t.insert(all_t.end(), micro_true[s].begin(), micro_true[s].end());
    }
    if (!all_p.empty()) {
        os << "all,correct_micro,," << metrics::correct_fraction(all_p, all_t) << "\n";
        double m = 0.0;
        for (double v : macro_correct) m += v;
        os << "all,correct_macro,," << m / macro_correct.size() << "\n";
    }
    double am = 0.0, rm = 0.0;
    for (double v : aar_values) am += v;
    for (double v : rmsd_values) rm += v;
    os << "all,aar_mean,," << am / aar_values.size() << "\n";
    os << "all,rmsd_mean,," << rm / rmsd_values.size() << "\n";
    if (pred_seqs.size() >= 2) {
        os << "all,hamming_diversity,," << metrics::hamming_diversity(pred_seqs) << "\n";
    }
    write_output(c, os.str());
    return 0;
}

// ---- mf-check -------------------------------------------------------------

int run_mf_check(const Common& c, const std::string& grid, std::size_t samples) {
    std::vector<double> lambdas;
    std::stringstream ss(grid);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (!tok.empty()) lambdas.push_back(std::stod(tok));
    }
    if (lambdas.empty()) throw std::runtime_error("mf-check: empty lambda grid");

    std::vector<double> mc(lambdas.size());
    const int threads = std::min<int>(env_threads(), static_cast<int>(lambdas.size()));
    std::vector<std::thread> pool;
    std::atomic<std::size_t> next{0};
    for (int w = 0; w < threads; ++w) {
        pool.emplace_back([&] {
            for (std::size_t j = next.fetch_add(1); j < lambdas.size(); j = next.fetch_add(1)) {
                Rng rng(c.seed ^ (0x9E3779B97F4A7C15ULL * (j + 1)));
                mc[j] = fisher::a_lambda_mc(lambdas[j], samples, rng);
            }
        });
    }
    for (auto& t : pool) t.join();

    std::ostringstream os;
    os.precision(12);
    os << "lambda,mc_estimate,approx,abs_error\n";
    for (std::size_t j = 0; j < lambdas.size(); ++j) {
        const double ap = fisher::a_lambda(lambdas[j]);
        os << lambdas[j] << "," << mc[j] << "," << ap << "," << std::abs(mc[j] - ap) << "\n";
    }
    write_output(c, os.str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bayesian flow engine over peptide residue frames"};
    app.require_subcommand(1);

    Common common[7];

    auto* sim_ang = app.add_subcommand("flow-sim-angles", "simulate the angle mixture flow");
    double chi_deg = 180.0;
    int k = 3, sim_steps = 100;
    double rho0 = 0.01, rho1 = 5.0;
    sim_ang->add_option("--chi", chi_deg, "target angle, degrees");
    sim_ang->add_option("--k", k, "mixture components");
    sim_ang->add_option("--rho0", rho0, "initial precision");
    sim_ang->add_option("--rho1", rho1, "final precision");
    sim_ang->add_option("--steps", sim_steps, "step count");
    add_common(sim_ang, common[0]);

    auto* sim_rot = app.add_subcommand("flow-sim-rot", "sample the rotation flow schedule");
    int rot_steps = 100;
    sim_rot->add_option("--steps", rot_steps, "step count");
    add_common(sim_rot, common[1]);

    auto* sample_cmd = app.add_subcommand("sample", "run the inference loop");
    std::string context_path = "none", denoiser_name = "oracle", target_path, dataset_path,
                traj_path;
    int len = 0, sample_steps = 100;
    sample_cmd->add_option("--context", context_path, "context frames JSON or 'none'");
    sample_cmd->add_option("--len", len, "residue count (defaults to the target length)");
    sample_cmd->add_option("--denoiser", denoiser_name, "oracle|noisy|knn");
    sample_cmd->add_option("--steps", sample_steps, "sampling steps");
    sample_cmd->add_option("--target", target_path, "target frames JSON (oracle/noisy)");
    sample_cmd->add_option("--dataset", dataset_path, "dataset frames JSON (knn)");
    sample_cmd->add_option("--traj", traj_path, "trajectory JSON-lines path");
    add_common(sample_cmd, common[2]);

    auto* loss_cmd = app.add_subcommand("loss-eval", "Monte Carlo loss statistics");
    std::string loss_target, loss_denoiser = "oracle", loss_context = "none", loss_dataset;
    int trials = 1000;
    loss_cmd->add_option("--target", loss_target, "target frames JSON")->required();
    loss_cmd->add_option("--denoiser", loss_denoiser, "oracle|noisy|knn");
    loss_cmd->add_option("--trials", trials, "number of loss draws");
    loss_cmd->add_option("--context", loss_context, "context frames JSON or 'none'");
    loss_cmd->add_option("--dataset", loss_dataset, "dataset frames JSON (knn)");
    add_common(loss_cmd, common[3]);

    auto* ingest_cmd = app.add_subcommand("ingest", "PDB to frames JSON");
    std::string pdb_path, chain;
    ingest_cmd->add_option("--pdb", pdb_path, "PDB file")->required();
    ingest_cmd->add_option("--chain", chain, "chain id filter");
    add_common(ingest_cmd, common[4]);

    auto* eval_cmd = app.add_subcommand("eval", "metrics between frame files");
    std::string pred_path, true_path;
    eval_cmd->add_option("--pred", pred_path, "predicted frames JSON")->required();
    eval_cmd->add_option("--true", true_path, "reference frames JSON")->required();
    add_common(eval_cmd, common[5]);

    auto* mf_cmd = app.add_subcommand("mf-check", "Monte Carlo check of a(lambda)");
    std::string grid = "1,5,10,26,50";
    std::size_t samples = 100000;
    mf_cmd->add_option("--lambda-grid", grid, "comma-separated concentrations");
    mf_cmd->add_option("--samples", samples, "samples per concentration");
    add_common(mf_cmd, common[6]);

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim_ang->parsed()) return run_flow_sim_angles(common[0], chi_deg, k, rho0, rho1, sim_steps);
        if (sim_rot->parsed()) return run_flow_sim_rot(common[1], rot_steps);
        if (sample_cmd->parsed()) {
            return run_sample(common[2], context_path, len, denoiser_name, sample_steps,
                              target_path, dataset_path, traj_path);
        }
        if (loss_cmd->parsed()) {
            return run_loss_eval(common[3], loss_target, loss_denoiser, trials, loss_context,
                                 loss_dataset);
        }
        if (ingest_cmd->parsed()) return run_ingest(common[4], pdb_path, chain);
        if (eval_cmd->parsed()) return run_eval(common[5], pred_path, true_path);
        if (mf_cmd->parsed()) return run_mf_check(common[6], grid, samples);
    } catch (const std::exception& e) {
        std::string msg = e.what();
        for (auto& ch : msg) {
            if (ch == '\n') ch = ' ';
        }
        std::cerr << "error: " << msg << "\n";
        return 1;
    }
    return 0;
}
