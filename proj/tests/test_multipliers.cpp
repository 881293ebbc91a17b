#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "heatlab/multipliers.hpp"

using namespace heatlab;

namespace {

SpectralDecomposition square_spectrum(int n) {
    return dst_oracle_rectangle(build_grid(DomainKind::Rectangle, n));
}

GridFunction random_function(GridPtr g, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;
    Eigen::VectorXd v(g->size());
    for (int i = 0; i < g->size(); ++i) v[i] = gauss(rng);
    return GridFunction(g, v);
}

}  // namespace

TEST_CASE("identity multiplier reproduces the input") {
    SpectralDecomposition S = square_spectrum(12);
    GridFunction u = random_function(S.grid, 1);
    GridFunction v = apply_multiplier(S, identity_multiplier(), u);
    CHECK((v.values - u.values).cwiseAbs().maxCoeff() <= 1e-12 * u.values.cwiseAbs().maxCoeff());
}

TEST_CASE("eigenvector equivariance across multiplier families") {
    SpectralDecomposition S = square_spectrum(10);
    std::vector<SpectralMultiplier> ms = {heat_multiplier(0.3), fractional_multiplier(0.2, 1.5),
                                          resolvent_multiplier(0.4, 3), phi_tilde_multiplier(2)};
    for (int i : {0, 3, S.size() - 1}) {
        GridFunction q(S.grid, S.modes.col(i));
        for (const auto& m : ms) {
            GridFunction out = apply_multiplier(S, m, q);
            Eigen::VectorXd expect = m(S.lambda[i]) * q.values;
            CHECK((out.values - expect).cwiseAbs().maxCoeff() <= 1e-11);
        }
    }
}

TEST_CASE("alpha = 2 fractional semigroup coincides bitwise with the heat semigroup") {
    SpectralDecomposition S = square_spectrum(8);
    Matrix H = heat_semigroup(S, 0.17);
    Matrix F = fractional_semigroup(S, 0.17, 2.0);
    CHECK((H - F).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("multiplier matrices: identity, semigroup law, resolvent power law") {
    SpectralDecomposition S = square_spectrum(8);
    Matrix I = multiplier_matrix(S, identity_multiplier());
    CHECK((I - Matrix::Identity(S.size(), S.size())).cwiseAbs().maxCoeff() <= 1e-12);

    Matrix Hs = heat_semigroup(S, 0.1), Ht = heat_semigroup(S, 0.25);
    Matrix Hsum = heat_semigroup(S, 0.35);
    CHECK((Hs * Ht - Hsum).cwiseAbs().maxCoeff() <= 1e-10);

    Matrix R1 = resolvent_power(S, 0.3, 1);
    Matrix R3 = resolvent_power(S, 0.3, 3);
    CHECK(((R1 * R1 * R1) - R3).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("t = 0 gives the identity for all three families") {
    SpectralDecomposition S = square_spectrum(6);
    Matrix I = Matrix::Identity(S.size(), S.size());
    CHECK((heat_semigroup(S, 0.0) - I).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((fractional_semigroup(S, 0.0, 1.5) - I).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((resolvent_power(S, 0.0, 4) - I).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("spectral norms of the semigroup families") {
    SpectralDecomposition S = square_spectrum(12);
    const double t = 0.05;
    CHECK(induced_norm_2(heat_semigroup(S, t)) ==
          Catch::Approx(std::exp(-t * S.lambda_min())).epsilon(1e-9));
    CHECK(induced_norm_2(fractional_semigroup(S, t, 1.0)) ==
          Catch::Approx(std::exp(-t * std::sqrt(S.lambda_min()))).epsilon(1e-9));
    CHECK(induced_norm_2(resolvent_power(S, t, 2)) ==
          Catch::Approx(std::pow(1 + t * S.lambda_min(), -2.0)).epsilon(1e-9));
}

TEST_CASE("unitary group is unitary in the weighted inner product") {
    SpectralDecomposition S = square_spectrum(10);
    for (double tau : {0.0, 1.0, 4.0, -2.5}) {
        CMatrix U = unitary_group(S, tau, 0.2, 2);
        CMatrix gram = U.adjoint() * U;
        gram.diagonal().array() -= 1.0;
        CHECK(gram.cwiseAbs().maxCoeff() <= 1e-10);
        CHECK(induced_norm_2(U) == Catch::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("heat matrices inherit M-matrix positivity and substochastic rows") {
    auto g = build_grid(DomainKind::Rectangle, 12);
    SpectralDecomposition S = eigendecompose(assemble_laplacian(*g), g);
    for (double t : {0.01, 0.1, 0.5}) {
        Matrix H = heat_semigroup(S, t);
        CHECK(H.minCoeff() >= -1e-12);
        for (int i = 0; i < H.rows(); ++i) CHECK(H.row(i).sum() <= 1.0 + 1e-12);
    }
}

TEST_CASE("multiplier matrices commute") {
    SpectralDecomposition S = square_spectrum(8);
    Matrix A = heat_semigroup(S, 0.2);
    Matrix B = resolvent_power(S, 0.7, 2);
    CHECK((A * B - B * A).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("invalid multiplier parameters are rejected") {
    SpectralDecomposition S = square_spectrum(6);
    CHECK_THROWS_AS(fractional_multiplier(0.1, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(fractional_multiplier(0.1, -1.0), std::invalid_argument);
    CHECK_THROWS_AS(resolvent_multiplier(0.1, -2), std::invalid_argument);
    CHECK_THROWS_AS(heat_multiplier(-0.1), std::invalid_argument);

    SpectralMultiplier bad{"bad", {}, [](double) { return std::nan(""); }};
    GridFunction u = GridFunction::zero(S.grid);
    CHECK_THROWS_AS(apply_multiplier(S, bad, u), std::invalid_argument);
    CHECK_THROWS_AS(multiplier_matrix(S, bad), std::invalid_argument);
}

TEST_CASE("dyadic partition: exact partition of unity and block structure") {
    DyadicPartition part = dyadic_partition(4.0, 4.0e4);
    // sum over blocks is 1 everywhere in the covered range
    for (int i = 0; i < 1000; ++i) {
        double xi = part.xi_lo + (part.xi_hi - part.xi_lo) * i / 999.0;
        double sum = 0.0;
        for (int j = part.j_min; j <= part.j_max; ++j) sum += part.block(j, xi);
        CHECK(std::abs(sum - 1.0) <= 1e-12);
    }
    // interior support condition and scale invariance
    for (int j = part.j_min + 1; j < part.j_max; ++j) {
        CHECK(part.block(j, std::ldexp(1.0, j - 1) * 0.999) == 0.0);
        CHECK(part.block(j, std::ldexp(1.0, j + 1) * 1.001) == 0.0);
        CHECK(part.block(j, std::ldexp(1.0, j)) ==
              Catch::Approx(part.block(part.j_min + 1, std::ldexp(1.0, part.j_min + 1)))
                  .epsilon(1e-13));
    }
    CHECK_THROWS_AS(dyadic_partition(0.0, 10.0), std::invalid_argument);
}

TEST_CASE("dyadic partition reconstructs the identity on the spectrum") {
    SpectralDecomposition S = square_spectrum(10);
    DyadicPartition part = dyadic_partition(S.lambda_min(), S.lambda_max());
    Matrix sum = Matrix::Zero(S.size(), S.size());
    for (int j = part.j_min; j <= part.j_max; ++j)
        sum += multiplier_matrix(S, part.block_multiplier(j));
    CHECK((sum - Matrix::Identity(S.size(), S.size())).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("reparametrized multiplier identity phi_tilde(t lambda) = r psi(r)") {
    SpectralDecomposition S = square_spectrum(12);
    const int beta = 2;
    for (int M : {2, 3}) {
        SpectralMultiplier phit = phi_tilde_multiplier(beta);
        SpectralMultiplier psi = psi_multiplier(beta, M);
        for (double t : {0.01, 0.1, 0.9}) {
            for (int i = 0; i < S.size(); ++i) {
                double lam = S.lambda[i];
                double r = std::pow(1.0 + t * lam, -double(M));
                double lhs = phit(t * lam);
                double rhs = r * psi(r);
                CHECK(std::abs(lhs - rhs) <= 1e-10 * std::max(1.0, std::abs(lhs)));
            }
        }
    }
}
