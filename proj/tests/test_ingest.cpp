#include <doctest.h>

#include "bfnflow/categorical_flow.hpp"
#include "bfnflow/pdb.hpp"
#include "testutil.hpp"

using namespace bfnflow;
using geo::Vec3;

namespace {

// two residues (GLY then SER) with idealized-ish coordinates
const char* kTinyPdb =
    "HEADER    SYNTHETIC PEPTIDE\n"
    "ATOM      1  N   GLY A   1      -0.522   1.361   0.000  1.00  0.00           N\n"
    "ATOM      2  CA  GLY A   1       0.000   0.000   0.000  1.00  0.00           C\n"
    "ATOM      3  C   GLY A   1       1.522   0.000   0.000  1.00  0.00           C\n"
    "ATOM      4  N   SER A   2       2.200   1.100   0.000  1.00  0.00           N\n"
    "ATOM      5  CA  SER A   2       3.600   1.300   0.200  1.00  0.00           C\n"
    "ATOM      6  C   SER A   2       4.300   2.500   0.900  1.00  0.00           C\n"
    "ATOM      7  CB  SER A   2       4.100   1.100  -1.200  1.00  0.00           C\n"
    "ATOM      8  OG  SER A   2       5.400   0.600  -1.300  1.00  0.00           O\n"
    "TER\n"
    "END\n";

}  // namespace

TEST_SUITE("ingest") {

TEST_CASE("parse_pdb reads a canonical ATOM line") {
    const auto res = pdbio::parse_pdb(
        "ATOM    123  CA  ALA B  17      11.104  13.207   9.100  1.00 20.00           C\n");
    REQUIRE(res.atoms.size() == 1);
    const auto& a = res.atoms[0];
    CHECK(a.name == "CA");
    CHECK(a.resname == "ALA");
    CHECK(a.chain == "B");
    CHECK(a.resseq == 17);
    CHECK(a.xyz.x() == doctest::Approx(11.104));
    CHECK(a.xyz.y() == doctest::Approx(13.207));
    CHECK(a.xyz.z() == doctest::Approx(9.1));
    CHECK(res.warnings.empty());
}

TEST_CASE("parse_pdb on empty input yields nothing") {
    const auto res = pdbio::parse_pdb("");
    CHECK(res.atoms.empty());
    CHECK(res.warnings.empty());
}

TEST_CASE("parse_pdb altloc policy keeps blank and 'A' only") {
    const std::string text =
        "ATOM      1  CA AALA A   1       1.000   2.000   3.000  1.00  0.00           C\n"
        "ATOM      2  CA BALA A   1       9.000   9.000   9.000  0.50  0.00           C\n"
        "ATOM      3  CA  GLY A   2       4.000   5.000   6.000  1.00  0.00           C\n";
    const auto res = pdbio::parse_pdb(text);
    REQUIRE(res.atoms.size() == 2);
    CHECK(res.atoms[0].altloc == 'A');
    CHECK(res.atoms[1].resname == "GLY");
}

TEST_CASE("parse_pdb skips malformed lines with a warning") {
    const std::string text =
        "ATOM      1  CA  ALA A   1       1.000   2.000   bogus  1.00  0.00           C\n"
        "ATOM      2  CA  GLY A   2       4.000   5.000   6.000  1.00  0.00           C\n";
    const auto res = pdbio::parse_pdb(text);
    REQUIRE(res.atoms.size() == 1);
    CHECK(res.atoms[0].resname == "GLY");
    REQUIRE(res.warnings.size() == 1);
    CHECK(res.warnings[0].find("line 1") != std::string::npos);
}

TEST_CASE("build_frames on the tiny PDB: GLY has no chi slots, SER has chi1") {
    const auto parsed = pdbio::parse_pdb(kTinyPdb);
    const auto built = pdbio::build_frames(parsed.atoms);
    REQUIRE(built.frames.size() == 2);

    const auto& gly = built.frames[0];
    CHECK(gly.c == restype::aa_class_from_three("GLY"));
    CHECK(gly.chi_present[0]);  // psi from SER's N
    for (int s = 1; s < pdbio::kNumAngleSlots; ++s) CHECK(!gly.chi_present[s]);

    const auto& ser = built.frames[1];
    CHECK(ser.chi_present[1]);   // chi1 from N-CA-CB-OG
    CHECK(!ser.chi_present[0]);  // last residue: no successor N
    CHECK(!ser.chi_present[2]);
    CHECK(geo::is_rotation(gly.o.matrix()));
    CHECK(geo::is_rotation(ser.o.matrix()));
}

TEST_CASE("build_frames orientation is the identity for axis-aligned atoms") {
    // C - CA along +x, N in the upper xy half-plane: e1 = x, e2 = y, e3 = z
    const auto parsed = pdbio::parse_pdb(kTinyPdb);
    const auto built = pdbio::build_frames(parsed.atoms);
    REQUIRE(!built.frames.empty());
    CHECK((built.frames[0].o.matrix() - geo::Mat3::Identity()).norm() < 1e-9);
    CHECK(built.frames[0].x.norm() == 0.0);
}

TEST_CASE("build_frames drops residues with missing backbone and foreign residues") {
    const std::string text =
        "ATOM      1  N   ALA A   1       0.000   0.000   0.000  1.00  0.00           N\n"
        "ATOM      2  CA  ALA A   1       1.458   0.000   0.000  1.00  0.00           C\n"
        "ATOM      3  CA  HOH A   2       8.000   8.000   8.000  1.00  0.00           C\n"
        "ATOM      4  N   GLY A   3       2.000   1.000   0.000  1.00  0.00           N\n"
        "ATOM      5  CA  GLY A   3       3.400   1.200   0.100  1.00  0.00           C\n"
        "ATOM      6  C   GLY A   3       4.100   2.400   0.800  1.00  0.00           C\n";
    const auto built = pdbio::build_frames(pdbio::parse_pdb(text).atoms);
    REQUIRE(built.frames.size() == 1);
    CHECK(built.frames[0].c == restype::aa_class_from_three("GLY"));
    REQUIRE(built.frames.size() == 1);
    CHECK(built.warnings.size() == 2);
}

TEST_CASE("chi tables cover every residue with the right arity") {
    // GLY and ALA carry no chi angles; LYS and ARG carry four
    CHECK(pdbio::chi_table(restype::aa_class_from_three("GLY")).empty());
    CHECK(pdbio::chi_table(restype::aa_class_from_three("ALA")).empty());
    CHECK(pdbio::chi_table(restype::aa_class_from_three("ARG")).size() == 4);
    CHECK(pdbio::chi_table(restype::aa_class_from_three("LYS")).size() == 4);
    CHECK(pdbio::chi_table(restype::aa_class_from_three("MET")).size() == 3);
    CHECK(pdbio::chi_table(restype::aa_class_from_three("SER")).size() == 1);
    CHECK(pdbio::chi_table(restype::aa_class_from_three("VAL")).size() == 1);
    CHECK(pdbio::chi_table(restype::aa_class_from_three("PRO")).size() == 2);
    for (int c = 1; c <= 20; ++c) {
        for (const auto& q : pdbio::chi_table(c)) {
            CHECK(q.atoms[0] == "N");  // every chain starts N-CA-CB-...
            CHECK(!q.atoms[3].empty());
            break;
        }
    }
}

TEST_CASE("frames -> idealized atoms -> frames round trip") {
    Rng rng(801);
    for (int trial = 0; trial < 10; ++trial) {
        auto pep = testutil::random_peptide(6, rng);
        pdbio::recompute_psi(pep);  // psi must agree with the successor frame

        const auto atoms = pdbio::frames_to_ideal_atoms(pep);
        const auto rebuilt = pdbio::build_frames(atoms);
        REQUIRE(rebuilt.frames.size() == pep.size());
        CHECK(rebuilt.warnings.empty());

        for (std::size_t i = 0; i < pep.size(); ++i) {
            const auto& a = pep[i];
            const auto& b = rebuilt.frames[i];
            CHECK((a.x - b.x).norm() < 1e-9);
            CHECK((a.o.matrix() - b.o.matrix()).norm() < 1e-9);
            CHECK(a.c == b.c);
            const auto quads = pdbio::chi_table(a.c);
            for (std::size_t s = 0; s <= quads.size(); ++s) {
                CHECK(a.chi_present[s] == b.chi_present[s]);
                if (a.chi_present[s]) {
                    CHECK(testutil::wrapped_dist(a.chi[s], b.chi[s]) < 1e-6);
                }
            }
        }
    }
}

TEST_CASE("frames are equivariant under rigid motions") {
    Rng rng(802);
    auto pep = testutil::random_peptide(5, rng);
    pdbio::recompute_psi(pep);
    const auto atoms = pdbio::frames_to_ideal_atoms(pep);
    const auto base = pdbio::build_frames(atoms).frames;

    for (int trial = 0; trial < 100; ++trial) {
        const geo::Rotation r = geo::sample_uniform_so3(rng);
        const Vec3 t(normal01(rng), normal01(rng), normal01(rng));
        auto moved = atoms;
        for (auto& a : moved) a.xyz = r.matrix() * a.xyz + t;
        const auto got = pdbio::build_frames(moved).frames;
        REQUIRE(got.size() == base.size());
        for (std::size_t i = 0; i < base.size(); ++i) {
            CHECK((got[i].x - (r.matrix() * base[i].x + t)).norm() < 1e-9);
            CHECK((got[i].o.matrix() - r.matrix() * base[i].o.matrix()).norm() < 1e-9);
            for (int s = 0; s < pdbio::kNumAngleSlots; ++s) {
                REQUIRE(got[i].chi_present[s] == base[i].chi_present[s]);
                if (base[i].chi_present[s]) {
                    CHECK(testutil::wrapped_dist(got[i].chi[s], base[i].chi[s]) < 1e-9);
                }
            }
        }
    }
}

TEST_CASE("frames JSON round trip is bit exact") {
    Rng rng(803);
    std::vector<pdbio::Peptide> peps;
    for (int j = 0; j < 3; ++j) peps.push_back(testutil::random_peptide(4, rng));
    // punch a hole in the chi pattern to exercise chi_slots
    peps[0][1].chi_present[2] = false;

    const std::string text = pdbio::frames_to_json(peps);
    const auto back = pdbio::json_to_frames(text);
    REQUIRE(back.size() == peps.size());
    for (std::size_t p = 0; p < peps.size(); ++p) {
        REQUIRE(back[p].size() == peps[p].size());
        for (std::size_t i = 0; i < peps[p].size(); ++i) {
            const auto& a = peps[p][i];
            const auto& b = back[p][i];
            CHECK(a.x == b.x);  // bit equality via shortest-round-trip dump
            CHECK(a.o.matrix() == b.o.matrix());
            CHECK(a.c == b.c);
            CHECK(a.chain == b.chain);
            CHECK(a.resnum == b.resnum);
            for (int s = 0; s < pdbio::kNumAngleSlots; ++s) {
                CHECK(a.chi_present[s] == b.chi_present[s]);
                if (a.chi_present[s]) CHECK(a.chi[s] == b.chi[s]);
            }
        }
    }
}

TEST_CASE("empty frame list serializes to an empty JSON array") {
    CHECK(pdbio::frames_to_json({}) == "[]\n");
    CHECK(pdbio::json_to_frames("[]").empty());
}

TEST_CASE("json_to_frames reports the path of a schema violation") {
    CHECK_THROWS_WITH_AS(pdbio::json_to_frames("{}"), doctest::Contains("$"), std::runtime_error);
    CHECK_THROWS_WITH_AS(pdbio::json_to_frames("[[{\"x\":[1,2],\"o\":[],\"chi\":[],\"c\":1}]]"),
                         doctest::Contains("$[0][0].x"), std::runtime_error);
    CHECK_THROWS_WITH_AS(
        pdbio::json_to_frames(
            "[[{\"x\":[1,2,3],\"o\":[1,0,0,0,1,0,0,0,1],\"chi\":[],\"c\":21}]]"),
        doctest::Contains(".c"), std::runtime_error);
}

}  // TEST_SUITE
