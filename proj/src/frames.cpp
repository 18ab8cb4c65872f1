#include "bfnflow/frames.hpp"

#include <json.hpp>
#include <stdexcept>

#include "bfnflow/categorical_flow.hpp"

namespace bfnflow::pdbio {

using nlohmann::json;

namespace {

json frame_to_json(const ResidueFrame& f) {
    json jr;
    jr["x"] = {f.x.x(), f.x.y(), f.x.z()};
    json jo = json::array();
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) jo.push_back(f.o.matrix()(r, c));
    }
    jr["o"] = std::move(jo);

    json jchi = json::array();
    json jslots = json::array();
    int present = 0;
    bool prefix = true;
    for (int s = 0; s < kNumAngleSlots; ++s) {
        if (f.chi_present[s]) {
            if (s != present) prefix = false;
            jchi.push_back(f.chi[s]);
            jslots.push_back(s);
            ++present;
        }
    }
    jr["chi"] = std::move(jchi);
    if (!prefix) jr["chi_slots"] = std::move(jslots);
    jr["c"] = f.c;
    jr["chain"] = f.chain;
    jr["resnum"] = f.resnum;
    return jr;
}

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw std::runtime_error("frames schema violation at " + path + ": " + what);
}

double need_number(const json& j, const std::string& path) {
    if (!j.is_number()) fail(path, "expected a number");
    return j.get<double>();
}

ResidueFrame frame_from_json(const json& jr, const std::string& path) {
    if (!jr.is_object()) fail(path, "expected a residue object");
    ResidueFrame f;

    if (!jr.contains("x") || !jr["x"].is_array() || jr["x"].size() != 3) {
        fail(path + ".x", "expected an array of 3 coordinates");
    }
    for (int i = 0; i < 3; ++i) f.x[i] = need_number(jr["x"][i], path + ".x");

    if (!jr.contains("o") || !jr["o"].is_array() || jr["o"].size() != 9) {
        fail(path + ".o", "expected an array of 9 row-major entries");
    }
    geo::Mat3 m;
    for (int i = 0; i < 9; ++i) m(i / 3, i % 3) = need_number(jr["o"][i], path + ".o");
    try {
        f.o = geo::Rotation::from_matrix(m);
    } catch (const std::exception& e) {
        fail(path + ".o", e.what());
    }

    if (!jr.contains("chi") || !jr["chi"].is_array() ||
        jr["chi"].size() > static_cast<std::size_t>(kNumAngleSlots)) {
        fail(path + ".chi", "expected an array of at most 5 angles");
    }
    std::vector<int> slots;
    if (jr.contains("chi_slots")) {
        if (!jr["chi_slots"].is_array() || jr["chi_slots"].size() != jr["chi"].size()) {
            fail(path + ".chi_slots", "expected slot indices matching chi length");
        }
        for (const auto& js : jr["chi_slots"]) {
            if (!js.is_number_integer()) fail(path + ".chi_slots", "expected integer slot index");
            const int s = js.get<int>();
            if (s < 0 || s >= kNumAngleSlots) fail(path + ".chi_slots", "slot index out of range");
            slots.push_back(s);
        }
    } else {
        for (std::size_t s = 0; s < jr["chi"].size(); ++s) slots.push_back(static_cast<int>(s));
    }
    for (std::size_t i = 0; i < slots.size(); ++i) {
        const double a = need_number(jr["chi"][i], path + ".chi");
        f.chi[slots[i]] = a;
        f.chi_present[slots[i]] = true;
    }

    if (!jr.contains("c") || !jr["c"].is_number_integer()) {
        fail(path + ".c", "expected an integer residue class");
    }
    f.c = jr["c"].get<int>();
    if (f.c < 1 || f.c > restype::kNumClasses) fail(path + ".c", "class out of range 1..20");

    if (jr.contains("chain")) {
        if (!jr["chain"].is_string()) fail(path + ".chain", "expected a string");
        f.chain = jr["chain"].get<std::string>();
    }
    if (jr.contains("resnum")) {
        if (!jr["resnum"].is_number_integer()) fail(path + ".resnum", "expected an integer");
        f.resnum = jr["resnum"].get<int>();
    }
    return f;
}

}  // namespace

std::string frames_to_json(const std::vector<Peptide>& peptides) {
    json out = json::array();
    for (const auto& pep : peptides) {
        json jp = json::array();
        for (const auto& f : pep) jp.push_back(frame_to_json(f));
        out.push_back(std::move(jp));
    }
    return out.dump(2) + "\n";
}

std::vector<Peptide> json_to_frames(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::runtime_error(std::string("frames schema violation at $: ") + e.what());
    }
    if (!root.is_array()) fail("$", "expected a list of peptides");
    std::vector<Peptide> peptides;
    for (std::size_t p = 0; p < root.size(); ++p) {
        const std::string ppath = "$[" + std::to_string(p) + "]";
        if (!root[p].is_array()) fail(ppath, "expected a list of residues");
        Peptide pep;
        for (std::size_t r = 0; r < root[p].size(); ++r) {
            pep.push_back(frame_from_json(root[p][r], ppath + "[" + std::to_string(r) + "]"));
        }
        peptides.push_back(std::move(pep));
    }
    return peptides;
}

}  // namespace bfnflow::pdbio
