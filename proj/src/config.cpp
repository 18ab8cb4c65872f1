#include "bfnflow/config.hpp"

#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

namespace bfnflow::config {

namespace {

std::map<std::string, std::function<void(Settings&, double)>, std::less<>> setters() {
    return {
        {"n_train", [](Settings& s, double v) { s.engine.n_train = static_cast<int>(v); }},
        {"n_sample", [](Settings& s, double v) { s.engine.n_sample = static_cast<int>(v); }},
        {"ang_rho0", [](Settings& s, double v) { s.engine.ang_rho0 = v; }},
        {"ang_rho1", [](Settings& s, double v) { s.engine.ang_rho1 = v; }},
        {"ang_components", [](Settings& s, double v) { s.engine.ang_components = static_cast<int>(v); }},
        {"pos_sigma1", [](Settings& s, double v) { s.engine.pos_sigma1 = v; }},
        {"type_beta1", [](Settings& s, double v) { s.engine.type_beta1 = v; }},
        {"rot_lambda1", [](Settings& s, double v) { s.engine.rot_lambda1 = v; }},
        {"loss_w_pos", [](Settings& s, double v) { s.engine.weights.pos = v; }},
        {"loss_w_ori", [](Settings& s, double v) { s.engine.weights.ori = v; }},
        {"loss_w_type", [](Settings& s, double v) { s.engine.weights.type = v; }},
        {"loss_w_ang", [](Settings& s, double v) { s.engine.weights.ang = v; }},
        {"pos_scale", [](Settings& s, double v) { s.engine.pos_scale = v; }},
        {"type_loss_draws", [](Settings& s, double v) { s.engine.type_loss_draws = static_cast<int>(v); }},
        {"noisy_pos_sd", [](Settings& s, double v) { s.noisy.pos_sd = v; }},
        {"noisy_rot_sd", [](Settings& s, double v) { s.noisy.rot_sd = v; }},
        {"noisy_ang_sd", [](Settings& s, double v) { s.noisy.ang_sd = v; }},
        {"noisy_type_mix", [](Settings& s, double v) { s.noisy.type_mix = v; }},
        {"knn_w_pos", [](Settings& s, double v) { s.knn.pos = v; }},
        {"knn_w_rot", [](Settings& s, double v) { s.knn.rot = v; }},
        {"knn_w_ang", [](Settings& s, double v) { s.knn.ang = v; }},
        {"knn_w_type", [](Settings& s, double v) { s.knn.type = v; }},
    };
}

}  // namespace

Settings parse(const std::string& text) {
    Settings s;
    const auto table = setters();
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::runtime_error("config line " + std::to_string(lineno) + ": expected key = value");
        }
        auto trim = [](std::string v) {
            const auto b = v.find_first_not_of(" \t\r");
            const auto e = v.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string{} : v.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        const auto it = table.find(key);
        if (it == table.end()) {
            throw std::runtime_error("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
        }
        try {
            std::size_t pos = 0;
            const double v = std::stod(val, &pos);
            if (pos != val.size()) throw std::invalid_argument("trailing characters");
            it->second(s, v);
        } catch (const std::exception&) {
            throw std::runtime_error("config line " + std::to_string(lineno) + ": bad value '" + val + "'");
        }
    }
    return s;
}

Settings load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("config: cannot open " + path);
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

std::string dump(const Settings& s) {
    std::ostringstream os;
    os.precision(17);
    os << "n_train = " << s.engine.n_train << "\n"
       << "n_sample = " << s.engine.n_sample << "\n"
       << "ang_rho0 = " << s.engine.ang_rho0 << "\n"
       << "ang_rho1 = " << s.engine.ang_rho1 << "\n"
       << "ang_components = " << s.engine.ang_components << "\n"
       << "pos_sigma1 = " << s.engine.pos_sigma1 << "\n"
       << "type_beta1 = " << s.engine.type_beta1 << "\n"
       << "rot_lambda1 = " << s.engine.rot_lambda1 << "\n"
       << "loss_w_pos = " << s.engine.weights.pos << "\n"
       << "loss_w_ori = " << s.engine.weights.ori << "\n"
       << "loss_w_type = " << s.engine.weights.type << "\n"
       << "loss_w_ang = " << s.engine.weights.ang << "\n"
       << "pos_scale = " << s.engine.pos_scale << "\n"
       << "type_loss_draws = " << s.engine.type_loss_draws << "\n"
       << "noisy_pos_sd = " << s.noisy.pos_sd << "\n"
       << "noisy_rot_sd = " << s.noisy.rot_sd << "\n"
       << "noisy_ang_sd = " << s.noisy.ang_sd << "\n"
       << "noisy_type_mix = " << s.noisy.type_mix << "\n"
       << "knn_w_pos = " << s.knn.pos << "\n"
       << "knn_w_rot = " << s.knn.rot << "\n"
       << "knn_w_ang = " << s.knn.ang << "\n"
       << "knn_w_type = " << s.knn.type << "\n";
    return os.str();
}

}  // namespace bfnflow::config
