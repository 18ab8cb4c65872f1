#include "bfnflow/geometry.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <stdexcept>

namespace bfnflow::geo {

double wrap_angle(double a) {
    double w = std::fmod(a, kTwoPi);
    if (w < 0.0) w += kTwoPi;
    if (w >= kTwoPi) w = 0.0;  // fmod can land exactly on 2*pi after the add
    return w;
}

bool is_rotation(const Mat3& m, double tol) {
    if (!m.allFinite()) return false;
    const double ortho = (m.transpose() * m - Mat3::Identity()).norm();
    return ortho <= tol && std::abs(m.determinant() - 1.0) <= tol;
}

Rotation Rotation::from_matrix(const Mat3& m) {
    if (!is_rotation(m)) {
        throw std::invalid_argument("Rotation::from_matrix: matrix is not a proper rotation");
    }
    return Rotation(m, Unchecked{});
}

namespace {

Mat3 skew(const Vec3& w) {
    Mat3 s;
    s << 0.0, -w.z(), w.y(),
         w.z(), 0.0, -w.x(),
        -w.y(), w.x(), 0.0;
    return s;
}

Vec3 vee(const Mat3& s) {
    return Vec3(s(2, 1) - s(1, 2), s(0, 2) - s(2, 0), s(1, 0) - s(0, 1));
}

}  // namespace

Rotation exp_so3(const Vec3& omega) {
    const double theta2 = omega.squaredNorm();
    const double theta = std::sqrt(theta2);
    const Mat3 w = skew(omega);
    Mat3 m;
    if (theta < 1e-8) {
        // second-order Taylor keeps orthogonality error below 1e-16 here
        m = Mat3::Identity() + w + 0.5 * w * w;
    } else {
        m = Mat3::Identity() + std::sin(theta) / theta * w +
            (1.0 - std::cos(theta)) / theta2 * w * w;
    }
    return Rotation::from_matrix_unchecked(m);
}

Vec3 log_so3(const Rotation& r) {
    const Mat3& m = r.matrix();
    const double tr = m.trace();
    const double c = std::clamp(0.5 * (tr - 1.0), -1.0, 1.0);
    const double theta = std::acos(c);

    if (theta < 1e-7) {
        return 0.5 * vee(m);
    }
    if (tr < -1.0 + 1e-6) {
        // Near theta = pi the skew part vanishes; recover the axis from the
        // symmetric part, (m + I)/2 -> n n^T at exactly pi.
        const Mat3 b = 0.5 * (m + Mat3::Identity());
        int k = 0;
        b.diagonal().maxCoeff(&k);
        Vec3 n;
        n[k] = std::sqrt(std::max(b(k, k), 0.0));
        for (int j = 0; j < 3; ++j) {
            if (j != k) n[j] = b(k, j) / n[k];
        }
        n.normalize();
        // Resolve the +-n ambiguity: align with the residual skew part when
        // it is nonzero, otherwise pick the first nonzero component positive.
        const Vec3 v = vee(m);
        double s = n.dot(v);
        if (s == 0.0) {
            for (int j = 0; j < 3; ++j) {
                if (n[j] != 0.0) { s = n[j]; break; }
            }
        }
        if (s < 0.0) n = -n;
        return theta * n;
    }
    return theta / (2.0 * std::sin(theta)) * vee(m);
}

double geodesic_angle(const Rotation& a, const Rotation& b) {
    const double tr = (a.matrix().transpose() * b.matrix()).trace();
    return std::acos(std::clamp(0.5 * (tr - 1.0), -1.0, 1.0));
}

Rotation proj_so3(const Mat3& z) {
    if (!z.allFinite()) {
        throw std::invalid_argument("proj_so3: non-finite input");
    }
    Eigen::JacobiSVD<Mat3> svd(z, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    if (sv(2) <= 1e-12 * std::max(sv(0), 1.0)) {
        throw std::invalid_argument("proj_so3: degenerate projection input");
    }
    const Mat3 u = svd.matrixU();
    const Mat3 v = svd.matrixV();
    const double d = (u * v.transpose()).determinant();
    Mat3 m = u * Eigen::DiagonalMatrix<double, 3>(1.0, 1.0, d) * v.transpose();
    return Rotation::from_matrix_unchecked(m);
}

double dihedral(const Vec3& p1, const Vec3& p2, const Vec3& p3, const Vec3& p4) {
    const Vec3 b1 = p2 - p1;
    const Vec3 b2 = p3 - p2;
    const Vec3 b3 = p4 - p3;
    const Vec3 n1 = b1.cross(b2);
    const Vec3 n2 = b2.cross(b3);
    const double scale = std::max({b1.norm() * b2.norm(), b2.norm() * b3.norm(), 1e-300});
    if (n1.norm() <= 1e-10 * scale || n2.norm() <= 1e-10 * scale) {
        throw std::invalid_argument("dihedral: undefined dihedral (collinear points)");
    }
    const double x = n1.dot(n2);
    const double y = n1.cross(n2).dot(b2.normalized());
    return wrap_angle(std::atan2(y, x));
}

double kabsch_rmsd(std::span<const Vec3> a, std::span<const Vec3> b) {
    if (a.size() != b.size()) {
        throw std::invalid_argument("kabsch_rmsd: point lists differ in length");
    }
    if (a.empty()) {
        throw std::invalid_argument("kabsch_rmsd: empty point lists");
    }
    const double n = static_cast<double>(a.size());
    Vec3 ca = Vec3::Zero(), cb = Vec3::Zero();
    for (const auto& p : a) ca += p;
    for (const auto& p : b) cb += p;
    ca /= n;
    cb /= n;

    Mat3 h = Mat3::Zero();
    for (std::size_t i = 0; i < a.size(); ++i) {
        h += (a[i] - ca) * (b[i] - cb).transpose();
    }
    Eigen::JacobiSVD<Mat3> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Mat3 u = svd.matrixU();
    const Mat3 v = svd.matrixV();
    const double d = (v * u.transpose()).determinant();
    const Mat3 r = v * Eigen::DiagonalMatrix<double, 3>(1.0, 1.0, d) * u.transpose();

    double ss = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ss += (r * (a[i] - ca) - (b[i] - cb)).squaredNorm();
    }
    return std::sqrt(ss / n);
}

Rotation sample_uniform_so3(Rng& rng) {
    // Shoemake's uniform quaternion construction.
    const double u1 = uniform01(rng);
    const double u2 = uniform01(rng);
    const double u3 = uniform01(rng);
    const double s1 = std::sqrt(1.0 - u1);
    const double s2 = std::sqrt(u1);
    const double qx = s1 * std::sin(kTwoPi * u2);
    const double qy = s1 * std::cos(kTwoPi * u2);
    const double qz = s2 * std::sin(kTwoPi * u3);
    const double qw = s2 * std::cos(kTwoPi * u3);
    Mat3 m;
    m << 1 - 2 * (qy * qy + qz * qz), 2 * (qx * qy - qz * qw), 2 * (qx * qz + qy * qw),
         2 * (qx * qy + qz * qw), 1 - 2 * (qx * qx + qz * qz), 2 * (qy * qz - qx * qw),
         2 * (qx * qz - qy * qw), 2 * (qy * qz + qx * qw), 1 - 2 * (qx * qx + qy * qy);
    return Rotation::from_matrix_unchecked(m);
}

}  // namespace bfnflow::geo
