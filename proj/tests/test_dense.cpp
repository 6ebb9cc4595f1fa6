#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "core/dense.hpp"
#include "test_util.hpp"

#include <algorithm>
#include <cmath>
#include <random>

using namespace soprbt;
using namespace soprbt::testutil;

TEST_CASE("symmetrized averages a matrix with its transpose") {
    Matrix a(2, 2);
    a << 1.0, 2.0, 4.0, 3.0;
    const Matrix s = symmetrized(a);
    CHECK(s(0, 1) == doctest::Approx(3.0));
    CHECK(s(1, 0) == doctest::Approx(3.0));
    CHECK((s - s.transpose()).norm() == 0.0);
}

TEST_CASE("symmetric eigenvalue helpers agree with a known spectrum") {
    std::mt19937_64 rng(41);
    // Conjugate a known diagonal spectrum with a random orthogonal factor.
    const Vector diag = (Vector(4) << -3.0, -0.5, 1.25, 7.0).finished();
    Eigen::HouseholderQR<Matrix> qr(random_gaussian(4, 4, rng));
    const Matrix q = qr.householderQ();
    const Matrix a = q * diag.asDiagonal() * q.transpose();

    CHECK(max_eig_sym(a) == doctest::Approx(7.0).epsilon(1e-12));
    CHECK(min_eig_sym(a) == doctest::Approx(-3.0).epsilon(1e-12));
    const Vector ev = eigvals_sym(a);
    REQUIRE(ev.size() == 4);
    for (Eigen::Index i = 0; i < 4; ++i) CHECK(ev(i) == doctest::Approx(diag(i)).epsilon(1e-12));
    CHECK(std::is_sorted(ev.data(), ev.data() + ev.size()));
    CHECK(spectral_norm(a) == doctest::Approx(7.0).epsilon(1e-12));
}

TEST_CASE("spectral norm of a diagonal matrix is the largest magnitude") {
    Matrix a = Matrix::Zero(2, 2);
    a(0, 0) = 3.0;
    a(1, 1) = -7.0;
    CHECK(spectral_norm(a) == doctest::Approx(7.0));
}

TEST_CASE("solve_lyapunov solves the scalar equation") {
    Matrix a(1, 1), q(1, 1);
    a << -2.0;
    q << 4.0;
    const Matrix x = solve_lyapunov(a, q);
    CHECK(x(0, 0) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("solve_lyapunov residual vanishes for a random stable pencil") {
    std::mt19937_64 rng(7);
    const Eigen::Index n = 6;
    Matrix a = random_gaussian(n, n, rng);
    a -= (spectral_norm(a) + 0.5) * Matrix::Identity(n, n);  // push spectrum left
    const Matrix q = random_spd(n, rng);
    const Matrix x = solve_lyapunov(a, q);
    CHECK((x - x.transpose()).norm() <= 1e-12 * x.norm());
    const Matrix res = a.transpose() * x + x * a + q;
    CHECK(res.norm() <= 1e-10 * std::max(1.0, x.norm() * a.norm()));
    CHECK(min_eig_sym(x) > 0.0);  // stable A, Q > 0 force X > 0
}

TEST_CASE("solve_lyapunov rejects a singular Lyapunov operator") {
    // Eigenvalues +1 and -1 sum to zero, so T^H Y + Y T is singular.
    Matrix a = Matrix::Identity(2, 2);
    a(1, 1) = -1.0;
    CHECK_THROWS_AS(solve_lyapunov(a, Matrix::Identity(2, 2)), SolverError);
    // Dimension mismatch is rejected up front.
    CHECK_THROWS_AS(solve_lyapunov(Matrix::Identity(2, 2), Matrix::Identity(3, 3)), SolverError);
}

TEST_CASE("ordered_stable_qz separates the stable invariant subspace") {
    // Eigenvalues -1 (stable) and +2 (unstable) with known eigenvectors.
    Matrix m(2, 2);
    m << -1.0, 3.0, 0.0, 2.0;
    const Matrix e = Matrix::Identity(2, 2);
    const OrderedQz qz = ordered_stable_qz(m, e);
    CHECK(qz.sdim == 1);
    CHECK(qz.infinite_count == 0);
    REQUIRE(qz.eigenvalues.size() == 2);
    // The leading Schur vector spans the eigenvector of -1, which is e1.
    const Vector v = qz.vsr.col(0);
    CHECK(std::abs(v(0)) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(v(1)) <= 1e-12);
}

TEST_CASE("ordered_stable_qz counts infinite eigenvalues of a singular E") {
    Matrix m = Matrix::Identity(2, 2);
    m(0, 0) = -3.0;
    Matrix e = Matrix::Zero(2, 2);
    e(0, 0) = 1.0;  // second pencil eigenvalue is infinite
    const OrderedQz qz = ordered_stable_qz(m, e);
    CHECK(qz.infinite_count == 1);
    CHECK(qz.sdim == 1);
    REQUIRE(qz.eigenvalues.size() == 1);
    CHECK(qz.eigenvalues[0].real() == doctest::Approx(-3.0).epsilon(1e-12));
    CHECK(qz.eigenvalues[0].imag() == doctest::Approx(0.0));
}

TEST_CASE("logspace spans the requested decade grid") {
    const std::vector<double> g = logspace(1e-2, 1e2, 5);
    REQUIRE(g.size() == 5);
    CHECK(g.front() == doctest::Approx(1e-2).epsilon(1e-14));
    CHECK(g.back() == doctest::Approx(1e2).epsilon(1e-14));
    CHECK(g[2] == doctest::Approx(1.0).epsilon(1e-14));
    for (std::size_t i = 1; i < g.size(); ++i) {
        CHECK(g[i] / g[i - 1] == doctest::Approx(10.0).epsilon(1e-12));
    }
    const std::vector<double> single = logspace(3.0, 3.0, 1);
    REQUIRE(single.size() == 1);
    CHECK(single[0] == doctest::Approx(3.0));
}
