#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <limits>
#include <random>
#include <stdexcept>

namespace heatlab {

using Matrix = Eigen::MatrixXd;
using CMatrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXd;
using CVector = Eigen::VectorXcd;

/// Induced 1->1 norm between uniformly weighted discrete L^1 spaces:
/// the weights cancel, leaving the max column absolute sum.
template <class Derived>
inline double induced_norm_1(const Eigen::MatrixBase<Derived>& T) {
    double best = 0.0;
    for (Eigen::Index j = 0; j < T.cols(); ++j)
        best = std::max(best, double(T.col(j).cwiseAbs().sum()));
    return best;
}

/// Induced inf->inf norm: max row absolute sum.
template <class Derived>
inline double induced_norm_inf(const Eigen::MatrixBase<Derived>& T) {
    double best = 0.0;
    for (Eigen::Index i = 0; i < T.rows(); ++i)
        best = std::max(best, double(T.row(i).cwiseAbs().sum()));
    return best;
}

namespace detail {

// Deterministic symmetry-breaking start vector for power iteration. A fixed
// pattern like all-ones can be exactly orthogonal to the top singular space
// on symmetric grids.
inline Vector power_start(Eigen::Index n) {
    std::mt19937_64 rng(0x9e3779b97f4a7c15ull);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = unif(rng);
    double norm = v.norm();
    return norm > 0 ? Vector(v / norm) : Vector(Vector::Ones(n).normalized());
}

}  // namespace detail

/// Largest singular value by power iteration on T^H T. apply_gram must map
/// y -> T^H (T y) for a real m-vector y (m = cols of T). Deterministic.
template <class ApplyGram>
inline double power_sigma_max(Eigen::Index m, ApplyGram&& apply_gram,
                              double rel_tol = 1e-13, int max_iter = 20000) {
    if (m == 0) return 0.0;
    Vector y = detail::power_start(m);
    double s2 = 0.0;
    int stable = 0;
    for (int it = 0; it < max_iter; ++it) {
        Vector w = apply_gram(y);
        double s2_new = y.dot(w);  // Rayleigh quotient for T^H T
        double wn = w.norm();
        if (wn <= std::numeric_limits<double>::min()) return 0.0;
        y = w / wn;
        if (std::abs(s2_new - s2) <= rel_tol * std::max(std::abs(s2_new), 1e-300)) {
            if (++stable >= 3 && it >= 30) {
                s2 = s2_new;
                break;
            }
        } else {
            stable = 0;
        }
        s2 = s2_new;
    }
    return std::sqrt(std::max(s2, 0.0));
}

/// Induced 2->2 norm (largest singular value), real matrices.
inline double induced_norm_2(const Matrix& T) {
    return power_sigma_max(T.cols(), [&](const Vector& y) -> Vector {
        Vector z = T * y;
        return T.transpose() * z;
    });
}

/// Induced 2->2 norm, complex matrices. The Gram iteration stays real-valued
/// on the Hermitian form by splitting real and imaginary parts.
inline double induced_norm_2(const CMatrix& T) {
    const Eigen::Index m = T.cols();
    return power_sigma_max(2 * m, [&](const Vector& y) -> Vector {
        CVector yc(m);
        for (Eigen::Index i = 0; i < m; ++i) yc[i] = {y[i], y[m + i]};
        CVector z = T * yc;
        CVector w = T.adjoint() * z;
        Vector out(2 * m);
        for (Eigen::Index i = 0; i < m; ++i) {
            out[i] = w[i].real();
            out[m + i] = w[i].imag();
        }
        return out;
    });
}

/// Induced p->p norm for p in {1, 2, inf}.
template <class MatrixT>
inline double induced_norm(const MatrixT& T, double p) {
    if (p == 1.0) return induced_norm_1(T);
    if (p == 2.0) return induced_norm_2(T);
    if (std::isinf(p)) return induced_norm_inf(T);
    throw std::invalid_argument("induced_norm: p must be 1, 2 or inf");
}

inline double frobenius_residual(const Matrix& lhs, const Matrix& rhs) {
    return (lhs - rhs).norm() / std::max(1.0, lhs.norm());
}

inline double frobenius_residual(const CMatrix& lhs, const CMatrix& rhs) {
    return (lhs - rhs).norm() / std::max(1.0, lhs.norm());
}

}  // namespace heatlab
