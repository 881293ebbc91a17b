#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "heatlab/derivatives.hpp"
#include "heatlab/dirichlet.hpp"

using namespace heatlab;

namespace {
constexpr double pi = std::numbers::pi;

GridFunction sinsin(GridPtr g) {
    return sample(g, [](double x, double y) { return std::sin(pi * x) * std::sin(pi * y); });
}
}  // namespace

TEST_CASE("derivative_matrix: order zero is the identity") {
    auto g = build_grid(DomainKind::Rectangle, 8);
    Matrix D = Matrix(derivative_matrix(*g, MultiIndex({0, 0}), StencilFlavor::BoundaryAware));
    CHECK((D - Matrix::Identity(g->size(), g->size())).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("boundary-aware first derivative is exact on linear and quadratic data") {
    auto g = build_grid(DomainKind::Rectangle, 8);
    SparseMatrix D = derivative_matrix(*g, MultiIndex({1, 0}), StencilFlavor::BoundaryAware);
    GridFunction fx = sample(g, [](double x, double) { return x; });
    Eigen::VectorXd d = D * fx.values;
    CHECK((d.array() - 1.0).abs().maxCoeff() < 1e-12);

    GridFunction fq = sample(g, [](double x, double y) { return x * x + 0.5 * x * y; });
    Eigen::VectorXd dq = D * fq.values;
    for (int i = 0; i < g->size(); ++i) {
        double expect = 2.0 * g->nodes[i][0] + 0.5 * g->nodes[i][1];
        CHECK(std::abs(dq[i] - expect) < 1e-11);
    }
}

TEST_CASE("second derivative converges at order two in L2") {
    // gamma = (2,0) on sin sin: error vs -pi^2 f drops by ~4 per halving.
    double prev_err = 0.0;
    for (int n : {16, 32, 64}) {
        auto g = build_grid(DomainKind::Rectangle, n);
        GridFunction f = sinsin(g);
        SparseMatrix D = derivative_matrix(*g, MultiIndex({2, 0}), StencilFlavor::BoundaryAware);
        Eigen::VectorXd err = D * f.values + pi * pi * f.values;
        double l2 = lp_norm(GridFunction(g, err), 2.0);
        if (prev_err > 0) {
            double ratio = prev_err / l2;
            CHECK(ratio > 3.5);
            CHECK(ratio < 4.5);
        }
        prev_err = l2;
    }
}

TEST_CASE("first derivative order-two convergence, boundary-aware") {
    double prev_err = 0.0;
    for (int n : {16, 32, 64}) {
        auto g = build_grid(DomainKind::Rectangle, n);
        GridFunction f = sample(g, [](double x, double y) { return std::exp(x) * std::cos(y); });
        SparseMatrix D = derivative_matrix(*g, MultiIndex({1, 0}), StencilFlavor::BoundaryAware);
        GridFunction expect =
            sample(g, [](double x, double y) { return std::exp(x) * std::cos(y); });
        Eigen::VectorXd err = D * f.values - expect.values;
        double l2 = lp_norm(GridFunction(g, err), 2.0);
        if (prev_err > 0) {
            double ratio = prev_err / l2;
            CHECK(ratio > 3.5);
            CHECK(ratio < 4.5);
        }
        prev_err = l2;
    }
}

TEST_CASE("stencil overflow and unknown axis are rejected") {
    auto g = build_grid(DomainKind::Rectangle, 4);
    CHECK_THROWS_AS(derivative_matrix(*g, MultiIndex({2, 0}), StencilFlavor::BoundaryAware),
                    std::invalid_argument);
    CHECK_THROWS_AS(first_derivative_matrix(*g, 2, StencilFlavor::BoundaryAware),
                    std::invalid_argument);
}

TEST_CASE("zero-extension commutator identity with the 5-point Laplacian") {
    // X (tA) - (tA) X = 2t D_zero holds entrywise at machine precision.
    for (int n : {8, 16}) {
        auto g = build_grid(DomainKind::Rectangle, n);
        const double t = 0.7;
        Matrix A = Matrix(assemble_laplacian(*g));
        Matrix D = Matrix(first_derivative_matrix(*g, 0, StencilFlavor::ZeroExtension));
        Eigen::VectorXd x(g->size());
        for (int i = 0; i < g->size(); ++i) x[i] = g->nodes[i][0];
        Matrix lhs = x.asDiagonal() * (t * A) - (t * A) * x.asDiagonal();
        Matrix rhs = 2.0 * t * D;
        double scale = rhs.cwiseAbs().maxCoeff();
        CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-13 * scale);
    }
}

TEST_CASE("zero-extension flavor is antisymmetric") {
    auto g = build_grid(DomainKind::Rectangle, 10);
    Matrix D = Matrix(first_derivative_matrix(*g, 1, StencilFlavor::ZeroExtension));
    CHECK((D + D.transpose()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("gradient stack: constants, linear field, sin sin curvature") {
    auto g = build_grid(DomainKind::Rectangle, 32);
    GridFunction c = sample(g, [](double, double) { return 3.0; });
    CHECK(gradient_stack_norm(c, 1, inf_p) < 1e-11);

    GridFunction lin = sample(g, [](double x, double y) { return x + 2.0 * y; });
    CHECK(gradient_stack_norm(lin, 1, inf_p) ==
          Catch::Approx(std::sqrt(5.0)).epsilon(1e-10));

    // ||grad^2 (sin sin)||_{L^2} -> pi^2: the multinomial-weighted magnitude
    // integrates to pi^4 over the unit square. The quadrature deficit is
    // O(h) because |grad^2 u| does not vanish on the boundary.
    double v32 = gradient_stack_norm(sinsin(g), 2, 2.0);
    CHECK(std::abs(v32 - pi * pi) / (pi * pi) < 0.05);
    auto g64 = build_grid(DomainKind::Rectangle, 64);
    double v64 = gradient_stack_norm(sinsin(g64), 2, 2.0);
    CHECK(std::abs(v64 - pi * pi) < 0.6 * std::abs(v32 - pi * pi));
}

TEST_CASE("gradient stack norm is a seminorm") {
    auto g = build_grid(DomainKind::Rectangle, 12);
    std::mt19937_64 rng(5);
    std::normal_distribution<double> gauss;
    for (int trial = 0; trial < 10; ++trial) {
        Eigen::VectorXd a(g->size()), b(g->size());
        for (int i = 0; i < g->size(); ++i) {
            a[i] = gauss(rng);
            b[i] = gauss(rng);
        }
        GridFunction fa(g, a), fb(g, b), fsum(g, a + b);
        for (int s : {1, 2})
            CHECK(gradient_stack_norm(fsum, s, 2.0) <=
                  gradient_stack_norm(fa, s, 2.0) + gradient_stack_norm(fb, s, 2.0) + 1e-11);
    }
}

TEST_CASE("sobolev norm: zero function, order collapse, sine value") {
    auto g = build_grid(DomainKind::Rectangle, 32);
    GridFunction zero = GridFunction::zero(g);
    for (int s : {0, 1, 2})
        for (double p : {1.0, 2.0, inf_p}) CHECK(sobolev_norm(zero, s, p) == 0.0);

    GridFunction f = sinsin(g);
    for (double p : {1.0, 2.0, inf_p})
        CHECK(sobolev_norm(f, 0, p) == Catch::Approx(lp_norm(f, p)).epsilon(1e-14));

    // s = 1, p = 2 limit: sqrt(1/4 + pi^2/2). O(h) quadrature deficit from
    // the gradient terms that do not vanish on the boundary.
    double expect = std::sqrt(0.25 + pi * pi / 2.0);
    double e32 = std::abs(sobolev_norm(f, 1, 2.0) - expect) / expect;
    CHECK(e32 < 0.04);
    auto g64 = build_grid(DomainKind::Rectangle, 64);
    double e64 = std::abs(sobolev_norm(sinsin(g64), 1, 2.0) - expect) / expect;
    CHECK(e64 < 0.6 * e32);

    CHECK(sobolev_norm(f, 2, 2.0) >= sobolev_norm(f, 1, 2.0));
    CHECK(sobolev_norm(f, 1, 2.0) >= sobolev_norm(f, 0, 2.0));
    CHECK_THROWS_AS(sobolev_norm(f, 40, 2.0), std::invalid_argument);
}

TEST_CASE("n_ell: single term, zero data, monotone in ell") {
    auto g = build_grid(DomainKind::Rectangle, 16);
    GridFunction u = sample(g, [](double x, double y) { return x * (1 - x) * y * (1 - y); });
    GridFunction n0 = n_ell(u, 0.3, 0);
    CHECK((n0.values - u.values.cwiseAbs()).cwiseAbs().maxCoeff() == 0.0);

    GridFunction zero = GridFunction::zero(g);
    CHECK(lp_norm(n_ell(zero, 0.5, 3), inf_p) == 0.0);

    std::mt19937_64 rng(17);
    std::normal_distribution<double> gauss;
    Eigen::VectorXd v(g->size());
    for (int i = 0; i < g->size(); ++i) v[i] = gauss(rng);
    GridFunction randu(g, v);
    GridFunction prev = n_ell(randu, 0.2, 0);
    for (int ell = 1; ell <= 3; ++ell) {
        GridFunction cur = n_ell(randu, 0.2, ell);
        CHECK((cur.values - prev.values).minCoeff() >= -1e-13);
        prev = cur;
    }

    CHECK_THROWS_AS(n_ell(u, 0.0, 1), std::invalid_argument);
}

TEST_CASE("n_ell trajectory wrapper evaluates at the requested time") {
    auto g = build_grid(DomainKind::Rectangle, 12);
    auto traj = [g](double t) {
        return sample(g, [t](double x, double y) { return t * x * y; });
    };
    GridFunction direct = n_ell(traj(0.5), 0.5, 1);
    GridFunction wrapped = n_ell(traj, 0.5, 1);
    CHECK((direct.values - wrapped.values).cwiseAbs().maxCoeff() == 0.0);
}
