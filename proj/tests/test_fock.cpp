#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "fcs/fock.hpp"

using namespace fcs;

namespace {
ModelParams fig_params() {
    ModelParams p;
    p.beta = std::sqrt(10.0);
    return p;
}

Matrix random_matrix(int dim, std::mt19937& rng) {
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Matrix m(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) m(i, j) = Complex(dist(rng), dist(rng));
    return m;
}
}  // namespace

TEST_CASE("annihilation operator") {
    CHECK_THROWS_AS(annihilation(0), InvalidDimension);

    const Matrix a1 = annihilation(1);
    CHECK(a1(0, 1) == Complex(1.0));
    CHECK(a1(0, 0) == Complex(0.0));
    CHECK(a1(1, 0) == Complex(0.0));
    CHECK(a1(1, 1) == Complex(0.0));

    const Matrix a2 = annihilation(2);
    CHECK(a2(1, 2).real() == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));

    // a^dag a as a product reproduces the number operator
    const int n_max = 6;
    const Matrix a = annihilation(n_max);
    CHECK((a.adjoint() * a - number_operator(n_max)).cwiseAbs().maxCoeff() < 1e-14);

    // truncation artifact: [a, a^dag] = I except the last diagonal entry
    const Matrix comm = a * a.adjoint() - a.adjoint() * a;
    for (int n = 0; n < n_max; ++n) CHECK(std::abs(comm(n, n) - Complex(1.0)) < 1e-14);
    CHECK(comm(n_max, n_max).real() == doctest::Approx(-n_max));
}

TEST_CASE("kerr hamiltonian") {
    const Matrix h = kerr_hamiltonian(5, 1e-3);
    CHECK(h(0, 0) == Complex(0.0));
    CHECK(h(1, 1) == Complex(0.0));
    CHECK(h(2, 2).real() == doctest::Approx(1e-3).epsilon(1e-15));
    CHECK(h(4, 4).real() == doctest::Approx(6e-3).epsilon(1e-15));
    CHECK_THROWS_AS(kerr_hamiltonian(5, -1.0), InvalidParameter);
}

TEST_CASE("jump operators") {
    const int n_max = 4;
    SUBCASE("unsqueezed, no local oscillator: pure decay") {
        ModelParams p;
        p.gamma = 1.0;
        const Matrix j = jump_operator(p, 1, n_max);
        CHECK((j - annihilation(n_max)).cwiseAbs().maxCoeff() < 1e-15);
    }
    SUBCASE("port structure at figure parameters") {
        const ModelParams p = fig_params().with_r(1.0);
        const Matrix j1 = jump_operator(p, 1, n_max);
        const Matrix j2 = jump_operator(p, 2, n_max);
        CHECK(std::abs(j1(0, 0)) == doctest::Approx(std::sqrt(10.0)).epsilon(1e-14));
        CHECK(j1(0, 0) == Complex(0.0, -std::sqrt(10.0)));
        CHECK(j2(0, 0) == Complex(0.0, std::sqrt(10.0)));
        // the local oscillator cancels in the sum
        const Matrix sum = j1 + j2;
        const Matrix expected =
            2.0 * std::sqrt(p.gamma) *
            (p.u() * annihilation(n_max) - p.v() * annihilation(n_max).adjoint());
        CHECK((sum - expected).cwiseAbs().maxCoeff() < 1e-13);
        CHECK_THROWS_AS(jump_operator(p, 3, n_max), InvalidParameter);
    }
}

TEST_CASE("displaced operators") {
    const int n_max = 8;
    const Complex alpha(0.7, -0.4);

    const Matrix a_disp = displace_operator(
        [](const Matrix& a, const Matrix&) { return a; }, n_max, alpha);
    CHECK((a_disp - annihilation(n_max)).cwiseAbs().maxCoeff() ==
          doctest::Approx(std::abs(alpha)).epsilon(1e-14));

    const Matrix n_disp = displace_operator(
        [](const Matrix& a, const Matrix& ad) { return Matrix(ad * a); }, n_max, alpha);
    CHECK(n_disp(0, 0).real() == doctest::Approx(std::norm(alpha)).epsilon(1e-14));

    // quartic term picks up a linear a^dag coefficient u2 |alpha|^2 alpha
    const double u2 = 1e-3;
    const Matrix kerr_disp = displace_operator(
        [u2](const Matrix& a, const Matrix& ad) { return Matrix(0.5 * u2 * ad * ad * a * a); },
        n_max, alpha);
    // coefficient on a^dag alone is the (1,0) entry (sqrt(1) ladder factor)
    const Complex lin = kerr_disp(1, 0);
    CHECK(lin.real() == doctest::Approx((u2 * std::norm(alpha) * alpha).real()).epsilon(1e-12));
    CHECK(lin.imag() == doctest::Approx((u2 * std::norm(alpha) * alpha).imag()).epsilon(1e-12));
}

TEST_CASE("vectorization and superoperator maps") {
    const int dim = 4;
    std::mt19937 rng(1234);
    const Matrix a = random_matrix(dim, rng);
    const Matrix b = random_matrix(dim, rng);
    const Matrix x = random_matrix(dim, rng);

    const Vector vx = vectorize(x);
    CHECK((unvectorize(vx, dim) - x).cwiseAbs().maxCoeff() == 0.0);

    CHECK((unvectorize(left_mult(a) * vx, dim) - a * x).cwiseAbs().maxCoeff() < 1e-13);
    CHECK((unvectorize(right_mult(b) * vx, dim) - x * b).cwiseAbs().maxCoeff() < 1e-13);

    // left and right multiplication commute as superoperators
    const Matrix lr = left_mult(a) * right_mult(b);
    const Matrix rl = right_mult(b) * left_mult(a);
    CHECK((lr - rl).cwiseAbs().maxCoeff() < 1e-13);

    // sandwich map
    const Matrix sandwich = kron(b.conjugate(), a);
    CHECK((unvectorize(sandwich * vx, dim) - a * x * b.adjoint()).cwiseAbs().maxCoeff() < 1e-13);
}
