#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <tuple>
#include <vector>

#include "heatlab/derivatives.hpp"
#include "heatlab/grid.hpp"
#include "heatlab/linalg.hpp"

namespace heatlab {

/// Discrete Dirichlet Laplacian A = -Delta_h with zero extension:
/// 5-point stencil (3-point for dim 1), diagonal 2d/h^2, off-diagonal -1/h^2
/// per interior lattice neighbor. Symmetric positive definite M-matrix.
inline SparseMatrix assemble_laplacian(const Grid& grid) {
    const int n = grid.size();
    const double h2 = grid.h * grid.h;
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<size_t>(n) * (2 * grid.dim + 1));
    for (int i = 0; i < n; ++i) {
        trip.emplace_back(i, i, 2.0 * grid.dim / h2);
        for (int axis = 0; axis < grid.dim; ++axis)
            for (int step : {-1, +1}) {
                int ix = grid.lattice[i][0] + (axis == 0 ? step : 0);
                int iy = grid.lattice[i][1] + (axis == 1 ? step : 0);
                int j = grid.index_of(ix, iy);
                if (j >= 0) trip.emplace_back(i, j, -1.0 / h2);
            }
    }
    SparseMatrix A(n, n);
    A.setFromTriplets(trip.begin(), trip.end());
    return A;
}

/// Full eigensystem of the discrete Dirichlet Laplacian. Eigenvalues ascend;
/// `modes` columns are orthonormal in the Euclidean inner product, so the
/// weighted-orthonormal eigenvectors are modes / sqrt(weight).
struct SpectralDecomposition {
    GridPtr grid;
    Eigen::VectorXd lambda;
    Matrix modes;

    int size() const { return static_cast<int>(lambda.size()); }
    double weight() const { return grid->weight(); }
    double lambda_min() const { return lambda[0]; }
    double lambda_max() const { return lambda[size() - 1]; }
    Matrix weighted_modes() const { return modes / std::sqrt(weight()); }

    /// Max deviation of Q^T W Q from the identity.
    double orthonormality_residual() const {
        Matrix gram = modes.transpose() * modes;
        gram.diagonal().array() -= 1.0;
        return gram.cwiseAbs().maxCoeff();
    }
};

/// Residual of A against its spectral reconstruction Q Lambda Q^T W,
/// normalized by max |lambda|.
inline double reconstruction_residual(const SparseMatrix& A, const SpectralDecomposition& S) {
    Matrix rebuilt = S.modes * S.lambda.asDiagonal() * S.modes.transpose();
    double diff = (Matrix(A) - rebuilt).cwiseAbs().maxCoeff();
    return diff / S.lambda.cwiseAbs().maxCoeff();
}

/// Dense symmetric eigensolve of the assembled operator.
inline SpectralDecomposition eigendecompose(const SparseMatrix& A, GridPtr grid) {
    Matrix Ad(A);
    if ((Ad - Ad.transpose()).cwiseAbs().maxCoeff() > 1e-12 * Ad.cwiseAbs().maxCoeff())
        throw std::invalid_argument("eigendecompose: operator is not symmetric");
    Eigen::SelfAdjointEigenSolver<Matrix> solver(Ad);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("eigendecompose: eigensolver failed");
    SpectralDecomposition S{std::move(grid), solver.eigenvalues(), solver.eigenvectors()};
    if (S.lambda[0] <= 0)
        throw std::runtime_error("eigendecompose: Dirichlet positivity violated");
    if (S.orthonormality_residual() > 1e-10)
        throw std::runtime_error("eigendecompose: eigenvector orthonormality residual too large");
    if (reconstruction_residual(A, S) > 1e-8)
        throw std::runtime_error("eigendecompose: spectral reconstruction residual too large");
    return S;
}

inline SpectralDecomposition eigendecompose(const Grid& grid) {
    auto g = std::make_shared<Grid>(grid);
    return eigendecompose(assemble_laplacian(*g), g);
}

/// Analytic eigensystem on rectangle grids: discrete sine modes
/// s_{m,k}(i,j) = sin(m pi i / nx) sin(k pi j / ny) with
/// lambda_{m,k} = (4/h^2)(sin^2(m pi h / (2 Lx)) + sin^2(k pi h / (2 Ly))).
/// Exact and independent of the dense eigensolver.
inline SpectralDecomposition dst_oracle_rectangle(GridPtr grid) {
    const Grid& g = *grid;
    if (g.kind != DomainKind::Rectangle)
        throw std::invalid_argument("dst_oracle_rectangle: rectangle grids only");
    const double h2 = g.h * g.h;
    const int nx = g.subdivisions[0];
    const int ny = g.dim == 2 ? g.subdivisions[1] : 1;
    const int n = g.size();

    std::vector<std::tuple<double, int, int>> spectrum;  // (lambda, m, k)
    spectrum.reserve(n);
    auto lambda_1d = [&](int m, int nn) {
        double s = std::sin(0.5 * m * std::numbers::pi / nn);
        return 4.0 / h2 * s * s;
    };
    if (g.dim == 1) {
        for (int m = 1; m < nx; ++m) spectrum.emplace_back(lambda_1d(m, nx), m, 0);
    } else {
        for (int m = 1; m < nx; ++m)
            for (int k = 1; k < ny; ++k)
                spectrum.emplace_back(lambda_1d(m, nx) + lambda_1d(k, ny), m, k);
    }
    std::sort(spectrum.begin(), spectrum.end());

    SpectralDecomposition S;
    S.grid = grid;
    S.lambda.resize(n);
    S.modes.resize(n, n);
    // Euclidean normalization: sum_i sin^2(m pi i / n) = n/2 exactly.
    const double scale =
        g.dim == 1 ? std::sqrt(2.0 / nx) : std::sqrt(4.0 / (double(nx) * ny));
    for (int col = 0; col < n; ++col) {
        auto [lam, m, k] = spectrum[col];
        S.lambda[col] = lam;
        for (int i = 0; i < n; ++i) {
            int ix = g.lattice[i][0], iy = g.lattice[i][1];
            double v = std::sin(m * std::numbers::pi * ix / double(nx));
            if (g.dim == 2) v *= std::sin(k * std::numbers::pi * iy / double(ny));
            S.modes(i, col) = scale * v;
        }
    }
    return S;
}

/// Groups an ascending eigenvalue list into clusters of (numerically)
/// degenerate eigenvalues.
inline std::vector<std::pair<int, int>> eigenvalue_clusters(const Eigen::VectorXd& lambda,
                                                            double rel_gap = 1e-7) {
    std::vector<std::pair<int, int>> clusters;
    int begin = 0;
    for (int i = 1; i <= lambda.size(); ++i) {
        if (i == lambda.size() ||
            lambda[i] - lambda[i - 1] > rel_gap * std::max(1.0, std::abs(lambda[i]))) {
            clusters.emplace_back(begin, i);
            begin = i;
        }
    }
    return clusters;
}

/// Largest principal angle (radians) between corresponding invariant
/// subspaces of two decompositions, pairing eigenvalues by shared clusters.
/// Handles degeneracies that make vector-by-vector comparison meaningless.
inline double max_subspace_angle(const SpectralDecomposition& a,
                                 const SpectralDecomposition& b, double rel_gap = 1e-7) {
    if (a.size() != b.size())
        throw std::invalid_argument("max_subspace_angle: dimension mismatch");
    // Cluster on the merged spectrum so both sides split identically.
    Eigen::VectorXd avg = 0.5 * (a.lambda + b.lambda);
    auto clusters = eigenvalue_clusters(avg, rel_gap);
    double worst = 0.0;
    for (auto [lo, hi] : clusters) {
        int m = hi - lo;
        Matrix cross = a.modes.middleCols(lo, m).transpose() * b.modes.middleCols(lo, m);
        Eigen::JacobiSVD<Matrix> svd(cross);
        double cos_min = std::clamp(svd.singularValues().minCoeff(), -1.0, 1.0);
        worst = std::max(worst, std::acos(cos_min));
    }
    return worst;
}

/// Poisson solver bundling the assembled operator with its factorization,
/// for the elliptic regularity ratio over ensembles of right-hand sides.
class EllipticChecker {
  public:
    explicit EllipticChecker(GridPtr grid)
        : grid_(std::move(grid)), A_(assemble_laplacian(*grid_)) {
        ldlt_.compute(A_);
        if (ldlt_.info() != Eigen::Success)
            throw std::runtime_error("EllipticChecker: factorization failed");
    }

    /// Solves Delta u = f (i.e. A u = -f) and returns
    /// ||u||_{W^{ell+2,p}} / (||u||_p + ||f||_{W^{ell,p}}); 0 for f == 0.
    double ratio(const GridFunction& f, int ell, double p,
                 double* solve_residual = nullptr) const {
        if (ell < 0) throw std::invalid_argument("elliptic ratio: ell must be >= 0");
        if (f.values.cwiseAbs().maxCoeff() == 0.0) {
            if (solve_residual) *solve_residual = 0.0;
            return 0.0;
        }
        Eigen::VectorXd u = ldlt_.solve(-f.values);
        double res = (A_ * u + f.values).norm() / f.values.norm();
        if (solve_residual) *solve_residual = res;
        if (res > 1e-8) throw std::runtime_error("elliptic ratio: solver residual too large");
        GridFunction uf(f.grid, std::move(u));
        double num = sobolev_norm(uf, ell + 2, p);
        double den = lp_norm(uf, p) + sobolev_norm(f, ell, p);
        return num / den;
    }

    const SparseMatrix& op() const { return A_; }

  private:
    GridPtr grid_;
    SparseMatrix A_;
    Eigen::SimplicialLDLT<SparseMatrix> ldlt_;
};

}  // namespace heatlab
