#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <map>
#include <stdexcept>
#include <vector>

#include "heatlab/linalg.hpp"

namespace heatlab {

/// Exact integer binomial coefficient; 0 outside 0 <= k <= n.
inline long long binomial_int(int n, int k) {
    if (k < 0 || k > n || n < 0) return 0;
    k = std::min(k, n - k);
    long long r = 1;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

inline double multinomial3(int k, int k1, int k2, int k3) {
    auto fact = [](int n) {
        double f = 1;
        for (int i = 2; i <= n; ++i) f *= i;
        return f;
    };
    return fact(k) / (fact(k1) * fact(k2) * fact(k3));
}

/// Iterated commutator with the diagonal position operator X = diag(x):
/// Ad^0(L) = L, Ad^k(L) = X Ad^{k-1}(L) - Ad^{k-1}(L) X. Because X is
/// diagonal each level is the exact entrywise map L_ij -> (x_i - x_j) L_ij.
template <class Scalar>
inline Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> ad(
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& L, const Vector& x, int k) {
    if (k < 0) throw std::invalid_argument("ad: level must be >= 0");
    if (L.rows() != L.cols() || L.rows() != x.size())
        throw std::invalid_argument("ad: dimension mismatch");
    auto out = L;
    for (int level = 0; level < k; ++level)
        for (Eigen::Index j = 0; j < out.cols(); ++j)
            for (Eigen::Index i = 0; i < out.rows(); ++i) out(i, j) *= x[i] - x[j];
    return out;
}

/// Shared eigenbasis calculus for functions of a symmetric matrix A:
/// resolvent powers R_{m,t} = (1+tA)^{-m} and the group e^{-i s R_{M,t}}.
class ResolventCalculus {
  public:
    ResolventCalculus(const Matrix& A, double t) : t_(t) {
        if (A.rows() != A.cols()) throw std::invalid_argument("ResolventCalculus: square only");
        Eigen::SelfAdjointEigenSolver<Matrix> solver(A);
        if (solver.info() != Eigen::Success)
            throw std::runtime_error("ResolventCalculus: eigensolver failed");
        lambda_ = solver.eigenvalues();
        modes_ = solver.eigenvectors();
        for (int i = 0; i < lambda_.size(); ++i)
            if (std::abs(1.0 + t_ * lambda_[i]) <= 1e-10)
                throw std::invalid_argument("ResolventCalculus: 1 + tA is numerically singular");
    }

    Matrix resolvent(int m) const {
        Vector d(lambda_.size());
        for (int i = 0; i < lambda_.size(); ++i) d[i] = std::pow(1.0 + t_ * lambda_[i], -double(m));
        return modes_ * d.asDiagonal() * modes_.transpose();
    }

    /// e^{-i s R_{M,t}} computed exactly in the eigenbasis.
    CMatrix exp_group(double s, int M) const {
        CVector d(lambda_.size());
        for (int i = 0; i < lambda_.size(); ++i) {
            double r = std::pow(1.0 + t_ * lambda_[i], -double(M));
            d[i] = std::exp(std::complex<double>(0.0, -s * r));
        }
        return modes_.cast<std::complex<double>>() * d.asDiagonal() *
               modes_.transpose().cast<std::complex<double>>();
    }

    double t() const { return t_; }

  private:
    double t_;
    Vector lambda_;
    Matrix modes_;
};

struct LemmaA1Result {
    double residual;   // |LHS - RHS_direct|_F / max(1, |LHS|_F)
    double route_gap;  // direct RHS vs fully recursive RHS
};

namespace detail {

// Ad^k(R_{m,t}) expanded recursively through the same resolvent identity,
// bottoming out at Ad^0(R_m) = R_m.
inline Matrix ad_resolvent_recursive(const ResolventCalculus& calc, const Matrix& tA,
                                     const Vector& x, int m, int k,
                                     std::map<std::pair<int, int>, Matrix>& memo) {
    if (k == 0) return calc.resolvent(m);
    auto it = memo.find({m, k});
    if (it != memo.end()) return it->second;
    Matrix acc = Matrix::Zero(x.size(), x.size());
    for (int kp = 0; kp <= k - 1; ++kp)
        for (int m1 = 1; m1 <= m; ++m1) {
            int m2 = m + 1 - m1;
            acc += double(binomial_int(k, kp)) *
                   ad_resolvent_recursive(calc, tA, x, m1, kp, memo) * ad(tA, x, k - kp) *
                   calc.resolvent(m2);
        }
    memo.emplace(std::make_pair(m, k), acc);
    return acc;
}

}  // namespace detail

/// Verifies Ad^ell(R_{M,t}) = sum_{k=0}^{ell-1} sum_{m1+m2=M+1}
/// C(ell,k) Ad^k(R_{m1,t}) Ad^{ell-k}(tA) R_{m2,t} on an arbitrary symmetric
/// matrix. Pure operator algebra, so generic fuzzing is the strongest test.
inline LemmaA1Result verify_lemma_a1(const Matrix& A, const Vector& x, int M, int ell,
                                     double t) {
    if (M < 1 || ell < 1) throw std::invalid_argument("verify_lemma_a1: need M >= 1, ell >= 1");
    if (t <= 0) throw std::invalid_argument("verify_lemma_a1: need t > 0");
    ResolventCalculus calc(A, t);
    const Matrix tA = t * A;
    Matrix lhs = ad(calc.resolvent(M), x, ell);

    Matrix rhs_direct = Matrix::Zero(x.size(), x.size());
    for (int k = 0; k <= ell - 1; ++k)
        for (int m1 = 1; m1 <= M; ++m1) {
            int m2 = M + 1 - m1;
            rhs_direct += double(binomial_int(ell, k)) * ad(calc.resolvent(m1), x, k) *
                          ad(tA, x, ell - k) * calc.resolvent(m2);
        }

    std::map<std::pair<int, int>, Matrix> memo;
    Matrix rhs_recursive = Matrix::Zero(x.size(), x.size());
    for (int k = 0; k <= ell - 1; ++k)
        for (int m1 = 1; m1 <= M; ++m1) {
            int m2 = M + 1 - m1;
            rhs_recursive += double(binomial_int(ell, k)) *
                             detail::ad_resolvent_recursive(calc, tA, x, m1, k, memo) *
                             ad(tA, x, ell - k) * calc.resolvent(m2);
        }

    return {frobenius_residual(lhs, rhs_direct),
            frobenius_residual(rhs_direct, rhs_recursive)};
}

/// Duhamel identity for the commutators of the unitary group
/// (tau-consistent reading):
///   Ad^{k+1}(e^{-i tau R}) = -i int_0^tau sum_{k1+k2+k3=k} k!/(k1!k2!k3!)
///       Ad^{k1}(e^{-i s R}) Ad^{k2+1}(R) Ad^{k3}(e^{-i (tau-s) R}) ds,
/// with the right side evaluated by composite Simpson quadrature. The left
/// side is a genuine nested commutator of dense complex matrices.
inline double verify_lemma_a2(const Matrix& A, const Vector& x, int M, double t, double tau,
                              int k, int n_quad) {
    if (M < 0) throw std::invalid_argument("verify_lemma_a2: M must be >= 0");
    if (k < 0) throw std::invalid_argument("verify_lemma_a2: k must be >= 0");
    if (n_quad < 16) throw std::invalid_argument("verify_lemma_a2: n_quad must be >= 16");
    if (n_quad % 2 != 0) ++n_quad;

    ResolventCalculus calc(A, t);
    const Eigen::Index n = x.size();
    CMatrix lhs = ad(calc.exp_group(tau, M), x, k + 1);
    if (tau == 0.0) return frobenius_residual(lhs, CMatrix(CMatrix::Zero(n, n)));

    // Ad powers of R needed on the right side.
    std::vector<CMatrix> adR(k + 2);
    {
        Matrix R = calc.resolvent(M);
        for (int j = 1; j <= k + 1; ++j) adR[j] = ad(R, x, j).cast<std::complex<double>>();
    }

    const double hs = tau / n_quad;
    std::vector<CMatrix> group(n_quad + 1);
    for (int q = 0; q <= n_quad; ++q) group[q] = calc.exp_group(q * hs, M);

    CMatrix integral = CMatrix::Zero(n, n);
    for (int q = 0; q <= n_quad; ++q) {
        std::vector<CMatrix> adU(k + 1), adUrev(k + 1);
        adU[0] = group[q];
        adUrev[0] = group[n_quad - q];  // e^{-i (tau - s) R}
        for (int j = 1; j <= k; ++j) {
            adU[j] = ad(adU[j - 1], x, 1);
            adUrev[j] = ad(adUrev[j - 1], x, 1);
        }
        CMatrix f = CMatrix::Zero(n, n);
        for (int k1 = 0; k1 <= k; ++k1)
            for (int k2 = 0; k2 <= k - k1; ++k2) {
                int k3 = k - k1 - k2;
                f += multinomial3(k, k1, k2, k3) * adU[k1] * adR[k2 + 1] * adUrev[k3];
            }
        double w = (q == 0 || q == n_quad) ? 1.0 : (q % 2 == 1 ? 4.0 : 2.0);
        integral += w * f;
    }
    CMatrix rhs = std::complex<double>(0.0, -1.0) * (hs / 3.0) * integral;
    return frobenius_residual(lhs, rhs);
}

/// k = 0 specialization: Ad^1(e^{-i tau R}) as a single Duhamel integral.
inline double ad1_exponential_identity(const Matrix& A, const Vector& x, int M, double t,
                                       double tau, int n_quad) {
    return verify_lemma_a2(A, x, M, t, tau, 0, n_quad);
}

}  // namespace heatlab
