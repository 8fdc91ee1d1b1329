#include "punctual/linalg.hpp"

#include "punctual/error.hpp"

#include <algorithm>
#include <string>

namespace punctual {

namespace {

using Solver = Eigen::SelfAdjointEigenSolver<Mat>;

void require_square(const Mat& a, const char* what) {
    if (a.rows() != a.cols()) {
        throw DimensionMismatch(std::string(what) + ": matrix is not square");
    }
}

}  // namespace

Mat sqrt_psd(const Mat& a) {
    require_square(a, "sqrt_psd");
    const int n = static_cast<int>(a.rows());
    if (n == 0) return a;
    const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
    if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-8 * scale) {
        throw DomainError("sqrt_psd: matrix is not symmetric");
    }
    const Mat sym = 0.5 * (a + a.transpose());
    Solver es(sym);
    Vec ev = es.eigenvalues();
    for (int i = 0; i < n; ++i) {
        if (ev[i] < -kPsdClamp) {
            throw DomainError("sqrt_psd: negative eigenvalue " + std::to_string(ev[i]));
        }
        ev[i] = std::sqrt(std::max(ev[i], 0.0));
    }
    const Mat& q = es.eigenvectors();
    Mat s = q * ev.asDiagonal() * q.transpose();
    return 0.5 * (s + s.transpose());
}

Mat psd_inverse(const Mat& a, double floor_rel) {
    require_square(a, "psd_inverse");
    const int n = static_cast<int>(a.rows());
    Solver es(0.5 * (a + a.transpose()));
    const double floor = std::max(floor_rel * a.trace(), std::numeric_limits<double>::min());
    Vec inv(n);
    for (int i = 0; i < n; ++i) inv[i] = 1.0 / std::max(es.eigenvalues()[i], floor);
    const Mat& q = es.eigenvectors();
    return q * inv.asDiagonal() * q.transpose();
}

Mat basis_with_first(const Vec& u) {
    const int n = static_cast<int>(u.size());
    const double norm = u.norm();
    if (norm == 0.0) throw DegenerateError("basis_with_first: zero vector");
    // Householder reflection mapping e_0 to u/|u|; its columns are orthonormal.
    Vec w = u / norm;
    Vec e0 = Vec::Zero(n);
    e0[0] = 1.0;
    Vec diff = e0 - w;
    const double dn = diff.norm();
    if (dn < 1e-15) return Mat::Identity(n, n);
    diff /= dn;
    return Mat::Identity(n, n) - 2.0 * diff * diff.transpose();
}

double min_eigenvalue(const Mat& symmetric) {
    require_square(symmetric, "min_eigenvalue");
    if (symmetric.rows() == 0) return 0.0;
    Solver es(0.5 * (symmetric + symmetric.transpose()), Eigen::EigenvaluesOnly);
    return es.eigenvalues()[0];
}

}  // namespace punctual
