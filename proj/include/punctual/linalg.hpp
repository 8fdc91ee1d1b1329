#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <vector>

namespace punctual {

/// Largest trait-space dimension supported. Vectors and matrices are
/// dynamically sized but stack-allocated up to this bound, so the simulation
/// and optimization hot loops never touch the heap.
inline constexpr int kMaxDim = 8;

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;

/// Axis-aligned box [lo, hi] in R^d.
struct Box {
    Vec lo;
    Vec hi;

    int dim() const { return static_cast<int>(lo.size()); }
    bool contains(const Vec& x, double slack = 0.0) const {
        for (int i = 0; i < dim(); ++i) {
            if (x[i] < lo[i] - slack || x[i] > hi[i] + slack) return false;
        }
        return true;
    }
    double diameter() const { return (hi - lo).norm(); }
};

inline Vec make_vec(std::initializer_list<double> values) {
    Vec v(static_cast<Eigen::Index>(values.size()));
    Eigen::Index i = 0;
    for (double x : values) v[i++] = x;
    return v;
}

inline Vec to_vec(const std::vector<double>& values) {
    Vec v(static_cast<Eigen::Index>(values.size()));
    for (std::size_t i = 0; i < values.size(); ++i) v[static_cast<Eigen::Index>(i)] = values[i];
    return v;
}

inline std::vector<double> to_std(const Vec& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
}

/// Eigenvalue clamp used for PSD square roots: eigenvalues in [-kPsdClamp, 0)
/// are treated as 0.
inline constexpr double kPsdClamp = 1e-10;

/// Symmetric PSD square root via eigendecomposition with eigenvalue clamping.
/// Throws DomainError if `a` is asymmetric beyond 1e-8 (relative to its scale)
/// or has an eigenvalue below -kPsdClamp.
Mat sqrt_psd(const Mat& a);

/// Pseudo-inverse of a symmetric PSD matrix with eigenvalue floor
/// `floor_rel * trace(a)`; eigenvalues below the floor are lifted to it.
Mat psd_inverse(const Mat& a, double floor_rel = 1e-14);

/// Orthonormal basis whose first column is `u / |u|`.
Mat basis_with_first(const Vec& u);

double min_eigenvalue(const Mat& symmetric);

}  // namespace punctual
