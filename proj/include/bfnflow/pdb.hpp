#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bfnflow/frames.hpp"

namespace bfnflow::pdbio {

struct AtomRecord {
    std::string name;     // e.g. "CA"
    std::string resname;  // e.g. "ALA"
    std::string chain;
    int resseq = 0;
    char altloc = ' ';
    geo::Vec3 xyz = geo::Vec3::Zero();
    double occupancy = 1.0;
};

struct ParseResult {
    std::vector<AtomRecord> atoms;
    std::vector<std::string> warnings;
};

/// Fixed-column wwPDB v3.3 ATOM reader. Keeps altloc 'A' or blank; malformed
/// lines are skipped with a warning, never aborting.
ParseResult parse_pdb(std::string_view text);

struct FramesResult {
    Peptide frames;
    std::vector<std::string> warnings;
};

/// Build residue frames from atoms: orientation columns e1 =
/// normalize(C-CA), e2 = orthonormalized N-CA, e3 = e1 x e2; x = CA; psi
/// from N-CA-C-N(next); chi slots from the canonical quadruples. Residues
/// missing a backbone atom, or of non-canonical type, are dropped with a
/// warning; a missing side-chain atom only leaves that chi slot absent.
FramesResult build_frames(const std::vector<AtomRecord>& atoms);

/// Emit idealized backbone + side-chain atoms that reproduce the frames:
/// (x, o) exactly and the present chi slots to 1e-6 rad when rebuilt with
/// build_frames. psi of the last residue in a chain is not recoverable (it
/// needs the successor's N) and is ignored here.
std::vector<AtomRecord> frames_to_ideal_atoms(const Peptide& frames);

/// Overwrite each psi slot with the torsion implied by the idealized
/// backbones of consecutive frames; the last residue of a chain loses the
/// slot. Makes arbitrary frames consistent for an exact round trip through
/// frames_to_ideal_atoms + build_frames.
void recompute_psi(Peptide& frames);

// Chi-defining atom quadruple; the fourth atom is the one the angle places.
struct ChiQuad {
    std::array<std::string_view, 4> atoms;
};

/// Canonical chi quadruples for class c (1..20); empty for ALA/GLY.
std::span<const ChiQuad> chi_table(int c);

}  // namespace bfnflow::pdbio
