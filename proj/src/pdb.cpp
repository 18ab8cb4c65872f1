#include "bfnflow/pdb.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

#include "bfnflow/categorical_flow.hpp"

namespace bfnflow::pdbio {

namespace {

std::string strip(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

bool parse_double(std::string_view s, double& out) {
    const std::string t = strip(s);
    if (t.empty()) return false;
    try {
        std::size_t pos = 0;
        out = std::stod(t, &pos);
        return pos == t.size();
    } catch (...) {
        return false;
    }
}

bool parse_int(std::string_view s, int& out) {
    const std::string t = strip(s);
    if (t.empty()) return false;
    try {
        std::size_t pos = 0;
        out = std::stoi(t, &pos);
        return pos == t.size();
    } catch (...) {
        return false;
    }
}

std::string_view field(std::string_view line, std::size_t begin1, std::size_t end1) {
    // 1-based inclusive column range per the PDB format description
    if (line.size() < begin1) return {};
    return line.substr(begin1 - 1, std::min(end1, line.size()) - begin1 + 1);
}

}  // namespace

ParseResult parse_pdb(std::string_view text) {
    ParseResult res;
    std::size_t lineno = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        const std::size_t nl = text.find('\n', start);
        const std::string_view line =
            text.substr(start, nl == std::string_view::npos ? text.size() - start : nl - start);
        start = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++lineno;
        if (line.substr(0, 6) != "ATOM  ") continue;

        AtomRecord a;
        a.name = strip(field(line, 13, 16));
        const std::string_view alt = field(line, 17, 17);
        a.altloc = alt.empty() ? ' ' : alt[0];
        a.resname = strip(field(line, 18, 20));
        a.chain = strip(field(line, 22, 22));
        if (a.chain.empty()) a.chain = " ";

        bool ok = parse_int(field(line, 23, 26), a.resseq);
        ok = ok && parse_double(field(line, 31, 38), a.xyz.x());
        ok = ok && parse_double(field(line, 39, 46), a.xyz.y());
        ok = ok && parse_double(field(line, 47, 54), a.xyz.z());
        if (!ok || a.name.empty() || a.resname.empty()) {
            res.warnings.push_back("line " + std::to_string(lineno) + ": malformed ATOM record, skipped");
            continue;
        }
        if (a.altloc != ' ' && a.altloc != 'A') continue;  // stated altloc policy
        if (!parse_double(field(line, 55, 60), a.occupancy)) a.occupancy = 1.0;
        res.atoms.push_back(std::move(a));
    }
    return res;
}

namespace {

// Chi-defining quadruples (Dunbrack-style side-chain torsion definitions).
// Order 1..20 matches the residue class table: ALA ARG ASN ASP CYS GLN GLU
// GLY HIS ILE LEU LYS MET PHE PRO SER THR TRP TYR VAL.
const std::vector<ChiQuad> kChiTables[restype::kNumClasses] = {
    /* ALA */ {},
    /* ARG */ {{{"N", "CA", "CB", "CG"}}, {{"CA", "CB", "CG", "CD"}}, {{"CB", "CG", "CD", "NE"}}, {{"CG", "CD", "NE", "CZ"}}},
    /* ASN */ {{{"N", "CA", "CB", "CG"}}, {{"CA", "CB", "CG", "OD1"}}},
    /* ASP */ {{{"N", "CA", "CB", "CG"}}, {{"CA", "CB", "CG", "OD1"}}},
    /* CYS */ {{{"N", "CA", "CB", "SG"}}},
    /* GLN */ {{{"N", "CA", "CB", "CG"}}, {{"CA", "CB", "CG", "CD"}}, {{"CB", "CG", "CD", "OE1"}}},
    /* GLU */ {{{"N", "CA", "CB", "CG"}}, {{"CA", "CB", "CG", "CD"}}, {{"CB", "CG", "CD", "OE1"}}},
    /* GLY */ {},
    /* HIS */ {{{"N", "CA", "CB", "CG"}}, {{"CA", "CB", "CG", "ND1"}}},
    /* ILE */ {{{"N", "CA", "CB", "CG1"}}, {{"CA", "CB", "CG1", "CD1"}}},
    /* LEU */ {{{"N", "CA", "CB", "CG"}}, {{"CA", "CB", "CG", "CD1"}}},
    /* LYS */ {{{"N", "CA", "CB", "CG"}}, {{"CA", "CB", "CG", "CD"}}, {{"CB", "CG", "CD", "CE"}}, {{"CG", "CD", "CE", "NZ"}}},
    /* MET */ {{{"N", "CA", "CB", "CG"}}, {{"CA", "CB", "CG", "SD"}}, {{"CB", "CG", "SD", "CE"}}},
    /* PHE */ {{{"N", "CA", "CB", "CG"}}, {{"CA", "CB", "CG", "CD1"}}},
    /* PRO */ {{{"N", "CA", "CB", "CG"}}, {{"CA", "CB", "CG", "CD"}}},
    /* SER */ {{{"N", "CA", "CB", "OG"}}},
    /* THR */ {{{"N", "CA", "CB", "OG1"}}},
    /* TRP */ {{{"N", "CA", "CB", "CG"}}, {{"CA", "CB", "CG", "CD1"}}},
    /* TYR */ {{{"N", "CA", "CB", "CG"}}, {{"CA", "CB", "CG", "CD1"}}},
    /* VAL */ {{{"N", "CA", "CB", "CG1"}}},
};

// Idealized internal coordinates used only for reconstruction.
constexpr double kBondCaC = 1.522;
constexpr double kBondNCa = 1.458;
constexpr double kBondSide = 1.52;
constexpr double kAngleNCaC = 111.0 * geo::kPi / 180.0;
constexpr double kAngleSide = 112.0 * geo::kPi / 180.0;
constexpr double kChiCbPseudo = 237.4 * geo::kPi / 180.0;  // dihedral C-N-CA-CB

struct ResidueAtoms {
    std::string chain;
    int resseq = 0;
    std::string resname;
    std::map<std::string, geo::Vec3> pos;
};

const geo::Vec3* find_atom(const ResidueAtoms& r, std::string_view name) {
    const auto it = r.pos.find(std::string(name));
    return it == r.pos.end() ? nullptr : &it->second;
}

}  // namespace

std::span<const ChiQuad> chi_table(int c) {
    if (c < 1 || c > restype::kNumClasses) {
        throw std::invalid_argument("chi_table: residue class out of range");
    }
    return kChiTables[c - 1];
}

FramesResult build_frames(const std::vector<AtomRecord>& atoms) {
    FramesResult res;

    // Group atoms into residues preserving file order.
    std::vector<ResidueAtoms> residues;
    for (const auto& a : atoms) {
        if (residues.empty() || residues.back().chain != a.chain ||
            residues.back().resseq != a.resseq) {
            residues.push_back({a.chain, a.resseq, a.resname, {}});
        }
        residues.back().pos.emplace(a.name, a.xyz);
    }

    for (std::size_t i = 0; i < residues.size(); ++i) {
        const auto& r = residues[i];
        const std::string tag = r.chain + "/" + std::to_string(r.resseq) + " " + r.resname;

        const int cls = restype::aa_class_from_three(r.resname);
        if (cls == 0) {
            res.warnings.push_back(tag + ": non-canonical residue dropped");
            continue;
        }
        const geo::Vec3* n = find_atom(r, "N");
        const geo::Vec3* ca = find_atom(r, "CA");
        const geo::Vec3* c = find_atom(r, "C");
        if (!n || !ca || !c) {
            res.warnings.push_back(tag + ": missing backbone atom, residue dropped");
            continue;
        }

        ResidueFrame f;
        f.chain = r.chain;
        f.resnum = r.resseq;
        f.c = cls;
        f.x = *ca;

        const geo::Vec3 e1 = (*c - *ca).normalized();
        geo::Vec3 u = *n - *ca;
        u -= u.dot(e1) * e1;
        if (u.norm() < 1e-9) {
            res.warnings.push_back(tag + ": degenerate backbone geometry, residue dropped");
            continue;
        }
        const geo::Vec3 e2 = u.normalized();
        const geo::Vec3 e3 = e1.cross(e2);
        geo::Mat3 m;
        m.col(0) = e1;
        m.col(1) = e2;
        m.col(2) = e3;
        f.o = geo::Rotation::from_matrix_unchecked(m);

        // psi needs the next residue's N within the same chain
        if (i + 1 < residues.size() && residues[i + 1].chain == r.chain) {
            if (const geo::Vec3* n_next = find_atom(residues[i + 1], "N")) {
                try {
                    f.chi[0] = geo::dihedral(*n, *ca, *c, *n_next);
                    f.chi_present[0] = true;
                } catch (const std::invalid_argument&) {
                    res.warnings.push_back(tag + ": collinear psi atoms, slot absent");
                }
            }
        }

        const auto quads = chi_table(cls);
        for (std::size_t q = 0; q < quads.size(); ++q) {
            const auto& quad = quads[q].atoms;
            const geo::Vec3* p[4];
            bool have = true;
            for (int j = 0; j < 4; ++j) {
                p[j] = find_atom(r, quad[j]);
                have = have && p[j] != nullptr;
            }
            if (!have) continue;  // missing side-chain atom: slot stays absent
            try {
                f.chi[q + 1] = geo::dihedral(*p[0], *p[1], *p[2], *p[3]);
                f.chi_present[q + 1] = true;
            } catch (const std::invalid_argument&) {
                res.warnings.push_back(tag + ": collinear chi" + std::to_string(q + 1) +
                                       " atoms, slot absent");
            }
        }
        res.frames.push_back(std::move(f));
    }
    return res;
}

namespace {

/// Place d with |c-d| = bond, angle(b,c,d) = angle, dihedral(a,b,c,d) = chi.
geo::Vec3 nerf(const geo::Vec3& a, const geo::Vec3& b, const geo::Vec3& c, double bond,
               double angle, double chi) {
    const geo::Vec3 bc = (c - b).normalized();
    const geo::Vec3 nplane = (b - a).cross(bc).normalized();
    const geo::Vec3 m = nplane.cross(bc);
    // Components chosen so that geo::dihedral(a, b, c, d) returns chi.
    return c + bond * (-std::cos(angle) * bc + std::sin(angle) * std::cos(chi) * m +
                       std::sin(angle) * std::sin(chi) * nplane);
}

struct Backbone {
    geo::Vec3 n, ca, c;
};

Backbone ideal_backbone(const ResidueFrame& f) {
    const geo::Vec3 e1 = f.o.matrix().col(0);
    const geo::Vec3 e2 = f.o.matrix().col(1);
    return Backbone{f.x + kBondNCa * (std::cos(kAngleNCaC) * e1 + std::sin(kAngleNCaC) * e2), f.x,
                    f.x + kBondCaC * e1};
}

}  // namespace

void recompute_psi(Peptide& frames) {
    for (std::size_t i = 0; i < frames.size(); ++i) {
        auto& f = frames[i];
        if (i + 1 < frames.size() && frames[i + 1].chain == f.chain) {
            const Backbone b = ideal_backbone(f);
            const Backbone bn = ideal_backbone(frames[i + 1]);
            f.chi[0] = geo::dihedral(b.n, b.ca, b.c, bn.n);
            f.chi_present[0] = true;
        } else {
            f.chi[0] = 0.0;
            f.chi_present[0] = false;
        }
    }
}

std::vector<AtomRecord> frames_to_ideal_atoms(const Peptide& frames) {
    std::vector<AtomRecord> atoms;
    auto emit = [&](const ResidueFrame& f, std::string name, const geo::Vec3& p) {
        AtomRecord a;
        a.name = std::move(name);
        a.resname = std::string(restype::aa_three_letter(f.c));
        a.chain = f.chain;
        a.resseq = f.resnum;
        a.xyz = p;
        atoms.push_back(std::move(a));
    };

    for (const auto& f : frames) {
        const Backbone bb = ideal_backbone(f);
        std::map<std::string, geo::Vec3, std::less<>> pos;
        pos["CA"] = bb.ca;
        pos["C"] = bb.c;
        pos["N"] = bb.n;

        const std::string_view resname = restype::aa_three_letter(f.c);
        if (resname != "GLY") {
            pos["CB"] = nerf(pos["C"], pos["N"], pos["CA"], 1.53, 110.5 * geo::kPi / 180.0,
                             kChiCbPseudo);
        }
        const auto quads = chi_table(f.c);
        for (std::size_t q = 0; q < quads.size(); ++q) {
            if (!f.chi_present[q + 1]) break;  // chain atoms depend on earlier ones
            const auto& quad = quads[q].atoms;
            pos[std::string(quad[3])] = nerf(pos.at(std::string(quad[0])), pos.at(std::string(quad[1])),
                                             pos.at(std::string(quad[2])), kBondSide, kAngleSide,
                                             f.chi[q + 1]);
        }

        emit(f, "N", pos["N"]);
        emit(f, "CA", pos["CA"]);
        emit(f, "C", pos["C"]);
        if (pos.count("CB")) emit(f, "CB", pos["CB"]);
        for (const auto& q : quads) {
            const auto it = pos.find(std::string(q.atoms[3]));
            if (it != pos.end()) emit(f, std::string(q.atoms[3]), it->second);
        }
    }
    return atoms;
}

}  // namespace bfnflow::pdbio
