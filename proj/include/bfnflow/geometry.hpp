#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "bfnflow/rng.hpp"

namespace bfnflow::geo {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 6.28318530717958647692;

/// Wrap an angle to the canonical interval [0, 2*pi).
double wrap_angle(double a);

/// |m^T m - I|_F and det checked against this tolerance on construction.
inline constexpr double kRotationTol = 1e-9;

bool is_rotation(const Mat3& m, double tol = kRotationTol);

// Proper rotation matrix. Construction through from_matrix() enforces the
// orthonormality and det(+1) invariants; samplers and closed-form maps that
// produce rotations by construction use the unchecked path internally.
class Rotation {
  public:
    Rotation() : m_(Mat3::Identity()) {}

    /// Validates invariants; throws std::invalid_argument on failure.
    static Rotation from_matrix(const Mat3& m);

    /// No validation. Caller guarantees m is a proper rotation.
    static Rotation from_matrix_unchecked(const Mat3& m) { return Rotation(m, Unchecked{}); }

    static Rotation identity() { return Rotation(); }

    const Mat3& matrix() const { return m_; }

    Rotation transposed() const { return Rotation(m_.transpose(), Unchecked{}); }

    Rotation operator*(const Rotation& rhs) const { return Rotation(m_ * rhs.m_, Unchecked{}); }

  private:
    struct Unchecked {};
    Rotation(const Mat3& m, Unchecked) : m_(m) {}
    Mat3 m_;
};

/// Rodrigues map so(3) -> SO(3). Zero vector yields the identity.
Rotation exp_so3(const Vec3& omega);

/// Principal axis-angle of r, |omega| in [0, pi]. Near-pi rotations are
/// resolved through the symmetric part (r + I)/2 rather than the singular
/// Rodrigues inverse.
Vec3 log_so3(const Rotation& r);

/// Rotation angle of a^T b (geodesic metric on SO(3)).
double geodesic_angle(const Rotation& a, const Rotation& b);

/// Nearest rotation to z in Frobenius norm (orthogonal Procrustes via SVD
/// with determinant sign fix). Throws std::invalid_argument on
/// rank-deficient input.
Rotation proj_so3(const Mat3& z);

/// Signed torsion of p4 about the p2-p3 axis relative to p1, mapped to
/// [0, 2*pi). Sign convention: clockwise positive looking from p2 to p3
/// (IUPAC). Throws std::invalid_argument when either atom triple is
/// collinear.
double dihedral(const Vec3& p1, const Vec3& p2, const Vec3& p3, const Vec3& p4);

/// Minimal RMSD of b onto a over rigid superposition (Kabsch). Throws on
/// size mismatch or empty input.
double kabsch_rmsd(std::span<const Vec3> a, std::span<const Vec3> b);

/// Haar-uniform rotation (Shoemake quaternion method).
Rotation sample_uniform_so3(Rng& rng);

}  // namespace bfnflow::geo
