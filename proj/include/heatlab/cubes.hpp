#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <vector>

#include "heatlab/grid.hpp"
#include "heatlab/linalg.hpp"

namespace heatlab {

/// Partition of the interior nodes into half-open cubes of side sqrt(t)
/// anchored on the lattice sqrt(t) Z^d. Every node belongs to exactly one
/// cube; cubes with no nodes are skipped.
struct CubeDecomposition {
    GridPtr grid;
    double t = 0.0;
    double side = 0.0;
    std::vector<std::array<int, 2>> cube_index;    // integer cube coordinates n
    std::vector<std::vector<int>> cube_nodes;      // node ids per nonempty cube
    std::vector<int> cube_of_node;

    int cube_count() const { return static_cast<int>(cube_nodes.size()); }

    std::array<double, 2> center(int c) const {
        return {side * (cube_index[c][0] + 0.5),
                grid->dim == 2 ? side * (cube_index[c][1] + 0.5) : 0.0};
    }

    double node_center_distance(int node, int c) const {
        auto ctr = center(c);
        double dx = grid->nodes[node][0] - ctr[0];
        double dy = grid->dim == 2 ? grid->nodes[node][1] - ctr[1] : 0.0;
        return std::hypot(dx, dy);
    }
};

inline CubeDecomposition cube_partition(GridPtr grid, double t) {
    if (t <= 0) throw std::invalid_argument("cube_partition: t must be > 0");
    const double side = std::sqrt(t);
    if (side < 2.0 * grid->h)
        throw std::invalid_argument("cube_partition: unresolvable cubes, need sqrt(t) >= 2h");
    CubeDecomposition D;
    D.grid = grid;
    D.t = t;
    D.side = side;
    D.cube_of_node.resize(grid->size());
    std::map<std::array<int, 2>, int> seen;  // ordered => deterministic cube order
    for (int i = 0; i < grid->size(); ++i) {
        std::array<int, 2> n{};
        for (int axis = 0; axis < grid->dim; ++axis)
            n[axis] = static_cast<int>(std::floor(grid->nodes[i][axis] / side));
        auto [it, inserted] = seen.try_emplace(n, -1);
        if (inserted) {
            it->second = D.cube_count();
            D.cube_index.push_back(n);
            D.cube_nodes.emplace_back();
        }
        D.cube_of_node[i] = it->second;
        D.cube_nodes[it->second].push_back(i);
    }
    return D;
}

/// l^1(L^2)_t norm: sum over cubes of the local weighted L^2 norms.
inline double l1l2_norm(const Eigen::VectorXd& u, const CubeDecomposition& D) {
    const double w = D.grid->weight();
    double acc = 0.0;
    for (const auto& nodes : D.cube_nodes) {
        double block = 0.0;
        for (int i : nodes) block += w * u[i] * u[i];
        acc += std::sqrt(block);
    }
    return acc;
}

inline double l1l2_norm(const GridFunction& u, double t) {
    return l1l2_norm(u.values, cube_partition(u.grid, t));
}

struct HolderCubeCheck {
    double lhs = 0.0;   // ||u||_{L^1}
    double rhs = 0.0;   // t^{d/4} ||u||_{l^1(L^2)_t}
    double tol = 0.0;   // grid quantization allowance 4h/sqrt(t)
    bool pass = false;
};

/// Discrete form of the cube Hoelder inequality
/// ||u||_{L^1} <= t^{d/4} ||u||_{l^1(L^2)_t}; the tolerance covers the
/// quantization of cube volumes when sqrt(t) is not a lattice multiple.
inline HolderCubeCheck holder_cube_check(const GridFunction& u, double t) {
    CubeDecomposition D = cube_partition(u.grid, t);
    HolderCubeCheck out;
    out.lhs = lp_norm(u, 1.0);
    out.rhs = std::pow(t, 0.25 * u.grid->dim) * l1l2_norm(u.values, D);
    out.tol = 4.0 * u.grid->h / D.side;
    out.pass = out.lhs <= out.rhs * (1.0 + out.tol);
    return out;
}

namespace detail {

template <class MatrixT>
inline double cube_weighted_block_norm(const MatrixT& T, const CubeDecomposition& D, int c,
                                       int alpha) {
    const auto& nodes = D.cube_nodes[c];
    const Eigen::Index rows = T.rows();
    const Eigen::Index m = static_cast<Eigen::Index>(nodes.size());
    MatrixT sub(rows, m);
    for (Eigen::Index j = 0; j < m; ++j) sub.col(j) = T.col(nodes[j]);
    Vector dist_pow(rows);
    for (Eigen::Index i = 0; i < rows; ++i)
        dist_pow[i] = std::pow(D.node_center_distance(static_cast<int>(i), c), alpha);
    if (alpha == 0) dist_pow.setOnes();
    MatrixT weighted = dist_pow.asDiagonal() * sub;
    return induced_norm_2(weighted);
}

}  // namespace detail

/// sup over nonempty cubes of || |x - c_n|^alpha T chi_{C_t(n)} ||_{2->2}.
/// alpha = 0 reduces to max over cubes of the plain restricted 2-norm.
template <class MatrixT>
inline double weighted_operator_norm(const MatrixT& T, int alpha, const CubeDecomposition& D) {
    if (alpha < 0) throw std::invalid_argument("weighted_operator_norm: alpha must be >= 0");
    if (T.rows() != D.grid->size() || T.cols() != D.grid->size())
        throw std::invalid_argument("weighted_operator_norm: dimension mismatch");
    double best = 0.0;
    for (int c = 0; c < D.cube_count(); ++c)
        best = std::max(best, detail::cube_weighted_block_norm(T, D, c, alpha));
    return best;
}

}  // namespace heatlab
