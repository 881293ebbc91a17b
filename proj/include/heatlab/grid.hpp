#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <unordered_map>
#include <vector>

namespace heatlab {

inline constexpr double inf_p = std::numeric_limits<double>::infinity();

enum class DomainKind { Rectangle, Disk, LShape };

inline std::string to_string(DomainKind k) {
    switch (k) {
        case DomainKind::Rectangle: return "rectangle";
        case DomainKind::Disk: return "disk";
        case DomainKind::LShape: return "l_shape";
    }
    return "?";
}

/// Geometry parameters for build_grid. Only the fields relevant to the kind
/// are read: rectangle uses lx/ly, disk uses radius, l_shape uses side and
/// the two arm widths.
struct GridGeometry {
    double lx = 1.0;
    double ly = 1.0;
    double radius = 1.0;
    double side = 1.0;
    double arm_x = 0.5;
    double arm_y = 0.5;
};

/// Uniform-lattice discretization of a bounded domain, interior nodes only.
/// The Dirichlet condition is structural: grid functions are implicitly zero
/// at every lattice point that is not an interior node.
struct Grid {
    DomainKind kind = DomainKind::Rectangle;
    int dim = 2;
    double h = 0.0;
    int n_ref = 0;  // subdivisions per reference side, as passed to build_grid
    GridGeometry geometry;
    // Subintervals per axis; meaningful for rectangle (and dim==1 interval).
    std::array<int, 2> subdivisions{0, 0};
    // Integer lattice coordinates; node position = lattice * h.
    std::vector<std::array<int, 2>> lattice;
    std::vector<std::array<double, 2>> nodes;
    std::unordered_map<std::int64_t, int> index_map;

    int size() const { return static_cast<int>(nodes.size()); }
    double weight() const { return dim == 1 ? h : h * h; }

    static std::int64_t key(int ix, int iy) {
        return (static_cast<std::int64_t>(ix) << 32) ^
               (static_cast<std::int64_t>(iy) & 0xffffffffll);
    }
    /// Linear index of lattice point (ix, iy), or -1 if not interior.
    int index_of(int ix, int iy) const {
        auto it = index_map.find(key(ix, iy));
        return it == index_map.end() ? -1 : it->second;
    }
    double coord(int node, int axis) const { return nodes[node][axis]; }
};

using GridPtr = std::shared_ptr<const Grid>;

/// Scalar field on the interior nodes of a grid.
struct GridFunction {
    GridPtr grid;
    Eigen::VectorXd values;

    GridFunction() = default;
    GridFunction(GridPtr g, Eigen::VectorXd v) : grid(std::move(g)), values(std::move(v)) {
        if (grid && values.size() != grid->size())
            throw std::invalid_argument("GridFunction: value count != node count");
    }
    static GridFunction zero(GridPtr g) {
        return GridFunction(g, Eigen::VectorXd::Zero(g->size()));
    }
};

/// Per-coordinate derivative orders; |gamma| is the total order.
struct MultiIndex {
    std::vector<int> gamma;

    explicit MultiIndex(std::vector<int> g) : gamma(std::move(g)) {
        for (int v : gamma)
            if (v < 0) throw std::invalid_argument("MultiIndex: negative entry");
    }
    int order() const {
        int s = 0;
        for (int v : gamma) s += v;
        return s;
    }
    int dim() const { return static_cast<int>(gamma.size()); }
};

/// All multi-indices of dimension dim with |gamma| == order, lexicographic.
inline std::vector<MultiIndex> multi_indices_of_order(int dim, int order) {
    std::vector<MultiIndex> out;
    if (dim == 1) {
        out.push_back(MultiIndex({order}));
    } else if (dim == 2) {
        for (int gx = order; gx >= 0; --gx) out.push_back(MultiIndex({gx, order - gx}));
    } else {
        throw std::invalid_argument("multi_indices_of_order: dim must be 1 or 2");
    }
    return out;
}

/// Multiplicity s!/gamma! of a multi-index inside the s-th derivative tensor.
inline double multi_index_multiplicity(const MultiIndex& g) {
    auto fact = [](int n) {
        double f = 1;
        for (int i = 2; i <= n; ++i) f *= i;
        return f;
    };
    double m = fact(g.order());
    for (int v : g.gamma) m /= fact(v);
    return m;
}

namespace detail {

inline bool inside_lshape(double x, double y, const GridGeometry& geo) {
    const double s = geo.side;
    const bool in_bottom = x > 0 && x < s && y > 0 && y < geo.arm_y;
    const bool in_left = x > 0 && x < geo.arm_x && y > 0 && y < s;
    return in_bottom || in_left;
}

}  // namespace detail

/// Builds the interior-node grid for one of the supported domains.
/// n is the number of lattice subdivisions per reference side.
inline GridPtr build_grid(DomainKind kind, int n, const GridGeometry& geometry = {},
                          int dim = 2) {
    if (n < 4) throw std::invalid_argument("build_grid: n must be >= 4");
    if (dim != 1 && dim != 2) throw std::invalid_argument("build_grid: dim must be 1 or 2");
    if (dim == 1 && kind != DomainKind::Rectangle)
        throw std::invalid_argument("build_grid: dim 1 supports rectangle (interval) only");

    auto g = std::make_shared<Grid>();
    g->kind = kind;
    g->dim = dim;
    g->n_ref = n;
    g->geometry = geometry;

    auto push = [&g](int ix, int iy) {
        g->index_map.emplace(Grid::key(ix, iy), g->size());
        g->lattice.push_back({ix, iy});
        g->nodes.push_back({ix * g->h, iy * g->h});
    };

    switch (kind) {
        case DomainKind::Rectangle: {
            if (geometry.lx <= 0 || geometry.ly <= 0)
                throw std::invalid_argument("build_grid: rectangle sides must be > 0");
            g->h = geometry.lx / n;
            if (dim == 1) {
                g->subdivisions = {n, 0};
                for (int i = 1; i < n; ++i) push(i, 0);
            } else {
                int ny = static_cast<int>(std::lround(geometry.ly / g->h));
                if (ny < 4) throw std::invalid_argument("build_grid: rectangle too thin for h");
                g->subdivisions = {n, ny};
                g->geometry.ly = ny * g->h;  // snap to the lattice
                for (int iy = 1; iy < ny; ++iy)
                    for (int ix = 1; ix < n; ++ix) push(ix, iy);
            }
            break;
        }
        case DomainKind::Disk: {
            if (geometry.radius <= 0)
                throw std::invalid_argument("build_grid: disk radius must be > 0");
            g->h = 2.0 * geometry.radius / n;
            const double r2 = geometry.radius * geometry.radius;
            const int span = n / 2 + 1;
            for (int iy = -span; iy <= span; ++iy)
                for (int ix = -span; ix <= span; ++ix) {
                    double x = ix * g->h, y = iy * g->h;
                    if (x * x + y * y < r2) push(ix, iy);
                }
            break;
        }
        case DomainKind::LShape: {
            if (geometry.side <= 0 || geometry.arm_x <= 0 || geometry.arm_y <= 0)
                throw std::invalid_argument("build_grid: l_shape parameters must be > 0");
            g->h = geometry.side / n;
            for (int iy = 1; iy < n; ++iy)
                for (int ix = 1; ix < n; ++ix) {
                    double x = ix * g->h, y = iy * g->h;
                    if (detail::inside_lshape(x, y, g->geometry)) push(ix, iy);
                }
            break;
        }
    }
    if (g->size() == 0) throw std::invalid_argument("build_grid: empty grid");
    return g;
}

/// Discrete L^p norm with uniform quadrature weight h^d per node.
/// p = inf gives the max norm; p must satisfy p >= 1.
inline double lp_norm(const GridFunction& f, double p) {
    if (std::isinf(p)) {
        return f.values.size() == 0 ? 0.0 : f.values.cwiseAbs().maxCoeff();
    }
    if (p < 1.0) throw std::invalid_argument("lp_norm: p must be >= 1 or inf");
    const double w = f.grid->weight();
    double acc = 0.0;
    for (int i = 0; i < f.values.size(); ++i) acc += w * std::pow(std::abs(f.values[i]), p);
    return std::pow(acc, 1.0 / p);
}

/// Weighted inner product <f, g> = sum h^d f_i g_i.
inline double weighted_dot(const GridFunction& f, const GridFunction& g) {
    return f.grid->weight() * f.values.dot(g.values);
}

namespace detail {

inline bool ball_inside_domain(const Grid& g, const std::array<double, 2>& c, double r) {
    const GridGeometry& geo = g.geometry;
    switch (g.kind) {
        case DomainKind::Rectangle:
            if (g.dim == 1) return c[0] - r > 0 && c[0] + r < geo.lx;
            return c[0] - r > 0 && c[0] + r < geo.lx && c[1] - r > 0 && c[1] + r < geo.ly;
        case DomainKind::Disk:
            return std::hypot(c[0], c[1]) + r < geo.radius;
        case DomainKind::LShape: {
            // A ball inside either arm rectangle is inside the L.
            bool in_bottom = c[0] - r > 0 && c[0] + r < geo.side && c[1] - r > 0 &&
                             c[1] + r < geo.arm_y;
            bool in_left = c[0] - r > 0 && c[0] + r < geo.arm_x && c[1] - r > 0 &&
                           c[1] + r < geo.side;
            return in_bottom || in_left;
        }
    }
    return false;
}

}  // namespace detail

/// Smooth compactly supported bump exp(-1/(1 - |x-c|^2/R^2)) sampled on the
/// grid; zero outside the open ball. The closed support ball must sit
/// strictly inside the domain.
inline GridFunction bump_initial_data(GridPtr grid, const std::array<double, 2>& center,
                                      double radius) {
    if (radius <= 0) throw std::invalid_argument("bump_initial_data: radius must be > 0");
    if (!detail::ball_inside_domain(*grid, center, radius))
        throw std::invalid_argument("bump_initial_data: support touches the boundary");
    Eigen::VectorXd v(grid->size());
    for (int i = 0; i < grid->size(); ++i) {
        double dx = grid->nodes[i][0] - center[0];
        double dy = grid->dim == 2 ? grid->nodes[i][1] - center[1] : 0.0;
        double q = (dx * dx + dy * dy) / (radius * radius);
        v[i] = q < 1.0 ? std::exp(-1.0 / (1.0 - q)) : 0.0;
    }
    return GridFunction(grid, std::move(v));
}

/// Bump value at a point, for quadrature oracles.
inline double bump_value(const std::array<double, 2>& x, const std::array<double, 2>& c,
                         double radius, int dim = 2) {
    double dx = x[0] - c[0];
    double dy = dim == 2 ? x[1] - c[1] : 0.0;
    double q = (dx * dx + dy * dy) / (radius * radius);
    return q < 1.0 ? std::exp(-1.0 / (1.0 - q)) : 0.0;
}

/// Samples a scalar function of the node coordinates. Accepts f(x) or f(x, y).
template <class F>
inline GridFunction sample(GridPtr grid, F&& f) {
    Eigen::VectorXd v(grid->size());
    for (int i = 0; i < grid->size(); ++i) {
        if constexpr (std::is_invocable_v<F, double, double>)
            v[i] = f(grid->nodes[i][0], grid->nodes[i][1]);
        else
            v[i] = f(grid->nodes[i][0]);
    }
    return GridFunction(grid, std::move(v));
}

}  // namespace heatlab
