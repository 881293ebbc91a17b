#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>

#include "heatlab/dirichlet.hpp"
#include "heatlab/grid.hpp"
#include "heatlab/linalg.hpp"

namespace heatlab {

/// Scalar multiplier lambda -> f(lambda) applied through the eigenbasis.
struct SpectralMultiplier {
    std::string name;
    std::map<std::string, double> params;
    std::function<double(double)> eval;

    double operator()(double lam) const { return eval(lam); }
};

// -- smooth cutoff machinery ------------------------------------------------

/// Normalized exp(-1/x) mollifier ramp: 0 for x <= 0, 1 for x >= 1, smooth.
inline double mollifier_ramp(double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double a = std::exp(-1.0 / x);
    const double b = std::exp(-1.0 / (1.0 - x));
    return a / (a + b);
}

/// Smooth cutoff chi with chi = 1 on (-inf, 1] and supp chi in (-inf, 2).
inline double smooth_cutoff_chi(double xi) { return mollifier_ramp(2.0 - xi); }

// -- multiplier families ----------------------------------------------------

inline SpectralMultiplier identity_multiplier() {
    return {"identity", {}, [](double) { return 1.0; }};
}

inline SpectralMultiplier heat_multiplier(double t) {
    if (t < 0) throw std::invalid_argument("heat_multiplier: t must be >= 0");
    return {"heat", {{"t", t}}, [t](double lam) { return std::exp(-t * lam); }};
}

/// exp(-t lambda^(alpha/2)). The alpha == 2 branch reuses the heat evaluation
/// so that the two paths agree bit for bit.
inline SpectralMultiplier fractional_multiplier(double t, double alpha) {
    if (t < 0) throw std::invalid_argument("fractional_multiplier: t must be >= 0");
    if (alpha <= 0) throw std::invalid_argument("fractional_multiplier: alpha must be > 0");
    SpectralMultiplier m;
    m.name = "frac";
    m.params = {{"t", t}, {"alpha", alpha}};
    if (alpha == 2.0)
        m.eval = [t](double lam) { return std::exp(-t * lam); };
    else
        m.eval = [t, alpha](double lam) {
            return std::exp(-t * std::pow(std::max(lam, 0.0), 0.5 * alpha));
        };
    return m;
}

/// (1 + t lambda)^(-M)
inline SpectralMultiplier resolvent_multiplier(double t, int M) {
    if (t < 0) throw std::invalid_argument("resolvent_multiplier: t must be >= 0");
    if (M < 0) throw std::invalid_argument("resolvent_multiplier: M must be >= 0");
    return {"resolvent",
            {{"t", t}, {"M", double(M)}},
            [t, M](double lam) { return std::pow(1.0 + t * lam, -double(M)); }};
}

/// Base profile phi(lambda) = exp(-lambda) for the multiplier identities.
inline SpectralMultiplier phi_profile() {
    return {"phi", {}, [](double lam) { return std::exp(-lam); }};
}

/// phi_tilde(lambda) = (1 + lambda)^beta phi(lambda).
inline SpectralMultiplier phi_tilde_multiplier(int beta) {
    if (beta < 0) throw std::invalid_argument("phi_tilde_multiplier: beta must be >= 0");
    return {"phi_tilde", {{"beta", double(beta)}}, [beta](double lam) {
                return std::pow(1.0 + lam, double(beta)) * std::exp(-lam);
            }};
}

/// Compactly supported plateau rho: 1 on [0, 2], 0 outside (-1, 3).
inline SpectralMultiplier rho_multiplier() {
    return {"rho", {}, [](double mu) { return mollifier_ramp(mu + 1.0) * mollifier_ramp(3.0 - mu); }};
}

/// psi(mu) = rho(mu) mu^{-1} phi_tilde(mu^{-1/M} - 1), the reparametrized
/// multiplier satisfying phi_tilde(t lambda) = r psi(r) at r = (1+t lambda)^{-M}.
inline SpectralMultiplier psi_multiplier(int beta, int M) {
    if (M < 1) throw std::invalid_argument("psi_multiplier: M must be >= 1");
    SpectralMultiplier rho = rho_multiplier();
    SpectralMultiplier phit = phi_tilde_multiplier(beta);
    return {"psi", {{"beta", double(beta)}, {"M", double(M)}},
            [rho, phit, M](double mu) {
                if (mu <= 0.0) return 0.0;
                return rho(mu) / mu * phit(std::pow(mu, -1.0 / M) - 1.0);
            }};
}

// -- applying multipliers ---------------------------------------------------

/// f(A) u = Q m(Lambda) Q^T W u through the eigenbasis.
inline GridFunction apply_multiplier(const SpectralDecomposition& S,
                                     const SpectralMultiplier& m, const GridFunction& u) {
    if (u.values.size() != S.size())
        throw std::invalid_argument("apply_multiplier: dimension mismatch");
    Eigen::VectorXd coef = S.modes.transpose() * u.values;
    for (int i = 0; i < S.size(); ++i) {
        double v = m(S.lambda[i]);
        if (!std::isfinite(v))
            throw std::invalid_argument("apply_multiplier: multiplier not finite on spectrum");
        coef[i] *= v;
    }
    return GridFunction(S.grid, S.modes * coef);
}

/// Materialized f(A); symmetric for real multipliers.
inline Matrix multiplier_matrix(const SpectralDecomposition& S, const SpectralMultiplier& m) {
    Eigen::VectorXd diag(S.size());
    for (int i = 0; i < S.size(); ++i) {
        diag[i] = m(S.lambda[i]);
        if (!std::isfinite(diag[i]))
            throw std::invalid_argument("multiplier_matrix: multiplier not finite on spectrum");
    }
    return S.modes * diag.asDiagonal() * S.modes.transpose();
}

inline Matrix heat_semigroup(const SpectralDecomposition& S, double t) {
    return multiplier_matrix(S, heat_multiplier(t));
}

inline Matrix fractional_semigroup(const SpectralDecomposition& S, double t, double alpha) {
    return multiplier_matrix(S, fractional_multiplier(t, alpha));
}

inline Matrix resolvent_power(const SpectralDecomposition& S, double t, int M) {
    return multiplier_matrix(S, resolvent_multiplier(t, M));
}

/// e^{i tau R_{M,t}}, unitary in the weighted inner product.
inline CMatrix unitary_group(const SpectralDecomposition& S, double tau, double t, int M) {
    SpectralMultiplier r = resolvent_multiplier(t, M);
    CVector diag(S.size());
    for (int i = 0; i < S.size(); ++i)
        diag[i] = std::exp(std::complex<double>(0.0, tau * r(S.lambda[i])));
    return S.modes.cast<std::complex<double>>() * diag.asDiagonal() *
           S.modes.transpose().cast<std::complex<double>>();
}

// -- dyadic partition of unity ----------------------------------------------

/// Littlewood-Paley family on xi = sqrt(lambda): interior blocks are
/// phi_j(xi) = phi_0(2^{-j} xi) with supp in [2^{j-1}, 2^{j+1}], built from
/// phi_0(xi) = chi(xi) - chi(2 xi); the two end blocks absorb the cumulative
/// tails so the finite family sums to 1 exactly on the whole axis.
struct DyadicPartition {
    int j_min = 0;
    int j_max = 0;
    double xi_lo = 0.0;
    double xi_hi = 0.0;

    bool interior(int j) const { return j > j_min && j < j_max; }

    double block(int j, double xi) const {
        if (j < j_min || j > j_max) throw std::invalid_argument("DyadicPartition: j out of range");
        if (j_min == j_max) return 1.0;
        auto chi_scaled = [&](int jj, double x) { return smooth_cutoff_chi(std::ldexp(x, -jj)); };
        if (j == j_min) return chi_scaled(j, xi);
        if (j == j_max) return 1.0 - chi_scaled(j - 1, xi);
        return chi_scaled(j, xi) - chi_scaled(j - 1, xi);
    }

    /// Block as a multiplier in lambda: lambda -> phi_j(sqrt(lambda)).
    SpectralMultiplier block_multiplier(int j) const {
        DyadicPartition self = *this;
        return {"dyadic_block", {{"j", double(j)}}, [self, j](double lam) {
                    return self.block(j, std::sqrt(std::max(lam, 0.0)));
                }};
    }
};

inline DyadicPartition dyadic_partition(double lambda_min, double lambda_max) {
    if (lambda_min <= 0 || lambda_max < lambda_min)
        throw std::invalid_argument("dyadic_partition: need 0 < lambda_min <= lambda_max");
    DyadicPartition p;
    p.xi_lo = std::sqrt(lambda_min);
    p.xi_hi = std::sqrt(lambda_max);
    p.j_min = static_cast<int>(std::floor(std::log2(p.xi_lo)));
    p.j_max = static_cast<int>(std::ceil(std::log2(p.xi_hi)));
    if (p.j_max <= p.j_min) p.j_max = p.j_min + 1;
    return p;
}

}  // namespace heatlab
