#pragma once

#include <array>
#include <string>
#include <vector>

#include "bfnflow/geometry.hpp"

namespace bfnflow::pdbio {

inline constexpr int kNumAngleSlots = 5;  // psi, chi1..chi4

// Local rigid frame of one residue: Calpha position, orientation built from
// the backbone, up to five torsion angles with per-slot presence, and the
// residue class.
struct ResidueFrame {
    geo::Vec3 x = geo::Vec3::Zero();              // Calpha, angstrom
    geo::Rotation o;                              // backbone orientation
    std::array<double, kNumAngleSlots> chi{};     // radians, canonicalized to [0, 2*pi)
    std::array<bool, kNumAngleSlots> chi_present{};
    int c = 1;                                    // residue class, 1..20
    std::string chain = "A";
    int resnum = 1;
};

using Peptide = std::vector<ResidueFrame>;

/// Serialize peptides to the dataset schema: a JSON list of peptides, each a
/// list of residues {x:[3], o:[9 row-major], chi:[<=5], c:int}. Slots absent
/// in a non-prefix pattern additionally carry "chi_slots" (0-based indices).
/// Numeric fields survive a round trip bit-exactly.
std::string frames_to_json(const std::vector<Peptide>& peptides);

/// Parse the schema above. Throws std::runtime_error naming the JSON path of
/// the first violation.
std::vector<Peptide> json_to_frames(const std::string& text);

}  // namespace bfnflow::pdbio
