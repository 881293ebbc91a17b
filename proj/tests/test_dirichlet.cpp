#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "heatlab/dirichlet.hpp"

using namespace heatlab;

namespace {
constexpr double pi = std::numbers::pi;
}

TEST_CASE("5-point Laplacian stencil entries on the unit square") {
    auto g = build_grid(DomainKind::Rectangle, 4);
    Matrix A = Matrix(assemble_laplacian(*g));
    // h = 1/4: diagonal 4/h^2 = 64, neighbors -1/h^2 = -16.
    for (int i = 0; i < g->size(); ++i) CHECK(A(i, i) == Catch::Approx(64.0).epsilon(1e-15));
    int c = g->index_of(2, 2);
    int e = g->index_of(3, 2);
    REQUIRE(c >= 0);
    REQUIRE(e >= 0);
    CHECK(A(c, e) == Catch::Approx(-16.0).epsilon(1e-15));
    CHECK((A - A.transpose()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("Laplacian is an M-matrix and positive definite") {
    for (auto kind : {DomainKind::Rectangle, DomainKind::Disk, DomainKind::LShape}) {
        auto g = build_grid(kind, 10);
        Matrix A = Matrix(assemble_laplacian(*g));
        for (int i = 0; i < A.rows(); ++i)
            for (int j = 0; j < A.cols(); ++j)
                if (i != j) CHECK(A(i, j) <= 0.0);
        Eigen::SelfAdjointEigenSolver<Matrix> es(A);
        CHECK(es.eigenvalues()[0] > 0.0);
    }
}

TEST_CASE("discrete sine mode is an exact eigenvector of the assembled operator") {
    const int n = 16;
    auto g = build_grid(DomainKind::Rectangle, n);
    auto A = assemble_laplacian(*g);
    GridFunction s = sample(g, [](double x, double y) {
        return std::sin(pi * x) * std::sin(pi * y);
    });
    const double h = g->h;
    const double lam = 8.0 / (h * h) * std::pow(std::sin(pi * h / 2.0), 2);
    Eigen::VectorXd res = A * s.values - lam * s.values;
    CHECK(res.cwiseAbs().maxCoeff() <= 1e-10 * lam);
}

TEST_CASE("eigendecompose satisfies the spectral invariants") {
    auto g = build_grid(DomainKind::Rectangle, 16);
    auto A = assemble_laplacian(*g);
    SpectralDecomposition S = eigendecompose(A, g);
    CHECK(S.size() == g->size());
    CHECK(S.lambda[0] > 0.0);
    CHECK(S.orthonormality_residual() <= 1e-10);
    CHECK(reconstruction_residual(A, S) <= 1e-8);

    const double h = g->h;
    const double lam1 = 8.0 / (h * h) * std::pow(std::sin(pi * h / 2.0), 2);
    CHECK(S.lambda[0] == Catch::Approx(lam1).epsilon(1e-10));
    // continuum limit 2 pi^2
    CHECK(std::abs(S.lambda[0] - 2 * pi * pi) / (2 * pi * pi) < 0.01);
}

TEST_CASE("eigendecompose rejects asymmetric input") {
    auto g = build_grid(DomainKind::Rectangle, 4);
    SparseMatrix A = assemble_laplacian(*g);
    SparseMatrix B = A;
    B.coeffRef(0, 1) += 5.0;
    CHECK_THROWS_AS(eigendecompose(B, g), std::invalid_argument);
}

TEST_CASE("dst oracle: lowest eigenvalue and orthonormal Gram") {
    auto g = build_grid(DomainKind::Rectangle, 4);
    SpectralDecomposition S = dst_oracle_rectangle(g);
    // lambda_{1,1} = (8/h^2) sin^2(pi h / 2) = 128 sin^2(pi/8) at h = 1/4.
    CHECK(S.lambda[0] ==
          Catch::Approx(128.0 * std::pow(std::sin(pi / 8.0), 2)).epsilon(1e-14));
    Matrix gram = S.modes.transpose() * S.modes;
    gram.diagonal().array() -= 1.0;
    CHECK(gram.cwiseAbs().maxCoeff() <= 1e-12);
    CHECK_THROWS_AS(dst_oracle_rectangle(build_grid(DomainKind::Disk, 8)),
                    std::invalid_argument);
}

TEST_CASE("dst oracle eigenvalues are sorted and match (m^2 + k^2) ordering") {
    auto g = build_grid(DomainKind::Rectangle, 12);
    SpectralDecomposition S = dst_oracle_rectangle(g);
    for (int i = 1; i < S.size(); ++i) CHECK(S.lambda[i] >= S.lambda[i - 1]);
    // first three distinct levels: (1,1) < (1,2)=(2,1) < (2,2)
    CHECK(S.lambda[1] == Catch::Approx(S.lambda[2]).epsilon(1e-13));
    CHECK(S.lambda[0] < S.lambda[1]);
    CHECK(S.lambda[2] < S.lambda[3]);
}

TEST_CASE("oracle equivalence: dense eigensolver vs discrete sine modes") {
    for (int n : {8, 16}) {
        auto g = build_grid(DomainKind::Rectangle, n);
        SpectralDecomposition solver = eigendecompose(assemble_laplacian(*g), g);
        SpectralDecomposition oracle = dst_oracle_rectangle(g);
        for (int i = 0; i < solver.size(); ++i)
            CHECK(std::abs(solver.lambda[i] - oracle.lambda[i]) <= 1e-9 * oracle.lambda[i]);
        CHECK(max_subspace_angle(solver, oracle) <= 1e-6);
    }
}

TEST_CASE("oracle equivalence holds on a non-square rectangle") {
    auto g = build_grid(DomainKind::Rectangle, 12, {.lx = 1.0, .ly = 0.5});
    SpectralDecomposition solver = eigendecompose(assemble_laplacian(*g), g);
    SpectralDecomposition oracle = dst_oracle_rectangle(g);
    for (int i = 0; i < solver.size(); ++i)
        CHECK(std::abs(solver.lambda[i] - oracle.lambda[i]) <= 1e-9 * oracle.lambda[i]);
    CHECK(max_subspace_angle(solver, oracle) <= 1e-6);
}

TEST_CASE("elliptic regularity ratio: eigenmode case against the closed form") {
    const int n = 32;
    auto g = build_grid(DomainKind::Rectangle, n);
    EllipticChecker checker(g);
    GridFunction s = sample(g, [](double x, double y) {
        return std::sin(pi * x) * std::sin(pi * y);
    });
    const double h = g->h;
    const double lam = 8.0 / (h * h) * std::pow(std::sin(pi * h / 2.0), 2);
    GridFunction f(g, -lam * s.values);

    double residual = 0.0;
    double ratio = checker.ratio(f, 0, 2.0, &residual);
    CHECK(residual <= 1e-8);
    // u = s exactly; continuum sine-mode Sobolev norms give the target.
    double w2 = std::sqrt(0.25 + pi * pi / 2.0 + 0.75 * std::pow(pi, 4));
    double expect = w2 / (0.5 + 0.5 * lam);
    CHECK(std::abs(ratio - expect) / expect < 0.05);
}

TEST_CASE("elliptic regularity ratio: zero forcing gives zero by convention") {
    auto g = build_grid(DomainKind::Rectangle, 8);
    EllipticChecker checker(g);
    CHECK(checker.ratio(GridFunction::zero(g), 1, 2.0) == 0.0);
}

TEST_CASE("elliptic regularity ratio is stable through refinement on an ensemble") {
    std::array<double, 2> max_ratio{0.0, 0.0};
    int idx = 0;
    for (int n : {16, 32}) {
        auto g = build_grid(DomainKind::Rectangle, n);
        EllipticChecker checker(g);
        std::mt19937_64 rng(42);
        std::normal_distribution<double> gauss;
        for (int trial = 0; trial < 50; ++trial) {
            Eigen::VectorXd v(g->size());
            for (int i = 0; i < g->size(); ++i) v[i] = gauss(rng);
            max_ratio[idx] = std::max(max_ratio[idx], checker.ratio(GridFunction(g, v), 0, 2.0));
        }
        ++idx;
    }
    double spread = max_ratio[1] / max_ratio[0];
    CHECK(spread < 2.0);
    CHECK(spread > 0.5);
}
