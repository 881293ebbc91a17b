#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "heatlab/grid.hpp"
#include "heatlab/linalg.hpp"

namespace heatlab {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Two first-derivative discretizations with distinct roles:
///  - ZeroExtension: pure centered difference treating every non-interior
///    lattice value as 0. This is the unique partner for which the position
///    commutator identities with the 5-point Laplacian hold exactly.
///  - BoundaryAware: centered in the interior, second-order one-sided at
///    boundary-adjacent nodes, so sampled smooth functions differentiate at
///    O(h^2) without the O(1/h) jump the zero extension produces when the
///    normal derivative does not vanish.
enum class StencilFlavor { BoundaryAware, ZeroExtension };

inline SparseMatrix first_derivative_matrix(const Grid& grid, int axis,
                                            StencilFlavor flavor) {
    if (axis < 0 || axis >= grid.dim)
        throw std::invalid_argument("first_derivative_matrix: axis out of range");
    const int n = grid.size();
    const double h = grid.h;
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<size_t>(n) * 3);

    auto neighbor = [&](int node, int step) {
        int ix = grid.lattice[node][0] + (axis == 0 ? step : 0);
        int iy = grid.lattice[node][1] + (axis == 1 ? step : 0);
        return grid.index_of(ix, iy);
    };

    for (int i = 0; i < n; ++i) {
        int prev = neighbor(i, -1);
        int next = neighbor(i, +1);
        if (flavor == StencilFlavor::ZeroExtension) {
            if (next >= 0) trip.emplace_back(i, next, 1.0 / (2.0 * h));
            if (prev >= 0) trip.emplace_back(i, prev, -1.0 / (2.0 * h));
            continue;
        }
        if (prev >= 0 && next >= 0) {
            trip.emplace_back(i, next, 1.0 / (2.0 * h));
            trip.emplace_back(i, prev, -1.0 / (2.0 * h));
        } else if (next >= 0) {
            int next2 = neighbor(next, +1);
            int next3 = next2 >= 0 ? neighbor(next2, +1) : -1;
            if (next3 >= 0) {
                // One-sided, exact on quadratics, with the h^2 truncation
                // coefficient matched to the centered stencil so that
                // compositions keep second order up to the boundary:
                // (-2 f_i + 3.5 f_{i+1} - 2 f_{i+2} + 0.5 f_{i+3}) / h.
                trip.emplace_back(i, i, -2.0 / h);
                trip.emplace_back(i, next, 3.5 / h);
                trip.emplace_back(i, next2, -2.0 / h);
                trip.emplace_back(i, next3, 0.5 / h);
            } else if (next2 >= 0) {
                // (-3 f_i + 4 f_{i+1} - f_{i+2}) / (2h)
                trip.emplace_back(i, i, -3.0 / (2.0 * h));
                trip.emplace_back(i, next, 4.0 / (2.0 * h));
                trip.emplace_back(i, next2, -1.0 / (2.0 * h));
            } else {
                trip.emplace_back(i, i, -1.0 / h);
                trip.emplace_back(i, next, 1.0 / h);
            }
        } else if (prev >= 0) {
            int prev2 = neighbor(prev, -1);
            int prev3 = prev2 >= 0 ? neighbor(prev2, -1) : -1;
            if (prev3 >= 0) {
                trip.emplace_back(i, i, 2.0 / h);
                trip.emplace_back(i, prev, -3.5 / h);
                trip.emplace_back(i, prev2, 2.0 / h);
                trip.emplace_back(i, prev3, -0.5 / h);
            } else if (prev2 >= 0) {
                trip.emplace_back(i, i, 3.0 / (2.0 * h));
                trip.emplace_back(i, prev, -4.0 / (2.0 * h));
                trip.emplace_back(i, prev2, 1.0 / (2.0 * h));
            } else {
                trip.emplace_back(i, i, 1.0 / h);
                trip.emplace_back(i, prev, -1.0 / h);
            }
        }
        // Isolated node along this axis: the row stays zero.
    }
    SparseMatrix D(n, n);
    D.setFromTriplets(trip.begin(), trip.end());
    return D;
}

/// Discrete partial derivative for a multi-index, built as the composition of
/// first-derivative matrices in coordinate order.
inline SparseMatrix derivative_matrix(const Grid& grid, const MultiIndex& gamma,
                                      StencilFlavor flavor) {
    if (gamma.dim() != grid.dim)
        throw std::invalid_argument("derivative_matrix: multi-index dimension mismatch");
    if (grid.n_ref < gamma.order() + 3)
        throw std::invalid_argument("derivative_matrix: stencil overflow, need n >= |gamma|+3");
    const int n = grid.size();
    SparseMatrix result(n, n);
    result.setIdentity();
    for (int axis = 0; axis < grid.dim; ++axis) {
        if (gamma.gamma[axis] == 0) continue;
        SparseMatrix D = first_derivative_matrix(grid, axis, flavor);
        for (int rep = 0; rep < gamma.gamma[axis]; ++rep) result = (D * result).pruned();
    }
    return result;
}

/// Pointwise magnitude of the s-th gradient stack,
/// |grad^s u|(x) = sqrt(sum_{|gamma|=s} (s!/gamma!) (D^gamma u)(x)^2).
inline Eigen::VectorXd gradient_stack(const GridFunction& u, int s, StencilFlavor flavor) {
    if (s < 0) throw std::invalid_argument("gradient_stack: order must be >= 0");
    const Grid& grid = *u.grid;
    if (s == 0) return u.values.cwiseAbs();
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(grid.size());
    for (const MultiIndex& g : multi_indices_of_order(grid.dim, s)) {
        Eigen::VectorXd d = derivative_matrix(grid, g, flavor) * u.values;
        acc += multi_index_multiplicity(g) * d.cwiseProduct(d);
    }
    return acc.cwiseSqrt();
}

inline double gradient_stack_norm(const GridFunction& u, int s, double p,
                                  StencilFlavor flavor = StencilFlavor::BoundaryAware) {
    return lp_norm(GridFunction(u.grid, gradient_stack(u, s, flavor)), p);
}

/// Discrete W^{s,p} norm: (sum_{|gamma|<=s} ||D^gamma f||_p^p)^{1/p},
/// max over gamma when p = inf.
inline double sobolev_norm(const GridFunction& f, int s, double p,
                           StencilFlavor flavor = StencilFlavor::BoundaryAware) {
    if (s < 0) throw std::invalid_argument("sobolev_norm: order must be >= 0");
    if (!std::isinf(p) && p < 1.0) throw std::invalid_argument("sobolev_norm: p out of range");
    if (f.grid->n_ref < s + 3)
        throw std::invalid_argument("sobolev_norm: stencil overflow, need n >= s+3");
    double acc = 0.0;
    for (int order = 0; order <= s; ++order) {
        for (const MultiIndex& g : multi_indices_of_order(f.grid->dim, order)) {
            Eigen::VectorXd d = derivative_matrix(*f.grid, g, flavor) * f.values;
            double nrm = lp_norm(GridFunction(f.grid, std::move(d)), p);
            if (std::isinf(p))
                acc = std::max(acc, nrm);
            else
                acc += std::pow(nrm, p);
        }
    }
    return std::isinf(p) ? acc : std::pow(acc, 1.0 / p);
}

/// N_ell[u](t,x) = sum_{s=0}^{ell} t^{s/2} |grad^s u(t,x)| for a fixed-time
/// snapshot u = u(t).
inline GridFunction n_ell(const GridFunction& u_at_t, double t, int ell,
                          StencilFlavor flavor = StencilFlavor::BoundaryAware) {
    if (t <= 0) throw std::invalid_argument("n_ell: t must be > 0");
    if (ell < 0) throw std::invalid_argument("n_ell: ell must be >= 0");
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(u_at_t.grid->size());
    for (int s = 0; s <= ell; ++s)
        acc += std::pow(t, 0.5 * s) * gradient_stack(u_at_t, s, flavor);
    return GridFunction(u_at_t.grid, std::move(acc));
}

/// Trajectory form: evaluates the trajectory at t and reduces the snapshot.
inline GridFunction n_ell(const std::function<GridFunction(double)>& trajectory, double t,
                          int ell, StencilFlavor flavor = StencilFlavor::BoundaryAware) {
    return n_ell(trajectory(t), t, ell, flavor);
}

}  // namespace heatlab
