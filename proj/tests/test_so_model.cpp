#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "core/dense.hpp"
#include "core/so_model.hpp"
#include "test_util.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

using namespace soprbt;
using namespace soprbt::testutil;

namespace {

SecondOrderSystem scalar_system(double m, double d, double k, double b) {
    SecondOrderSystem sys;
    sys.M = Matrix::Constant(1, 1, m);
    sys.D = Matrix::Constant(1, 1, d);
    sys.K = Matrix::Constant(1, 1, k);
    sys.B = Matrix::Constant(1, 1, b);
    return sys;
}

SecondOrderSystem diagonal_system(const Vector& m, const Vector& d, const Vector& k) {
    SecondOrderSystem sys;
    sys.M = m.asDiagonal();
    sys.D = d.asDiagonal();
    sys.K = k.asDiagonal();
    sys.B = Matrix::Ones(m.size(), 1);
    return sys;
}

}  // namespace

TEST_CASE("validate accepts the identity example and reports rank of B") {
    SecondOrderSystem sys;
    sys.M = Matrix::Identity(2, 2);
    sys.K = Matrix::Identity(2, 2);
    sys.D = Matrix::Zero(2, 2);
    sys.B = (Matrix(2, 1) << 1.0, 0.0).finished();
    const ValidationReport rep = validate(sys);
    CHECK(rep.passed);
    CHECK(rep.rank_B == 1);
    CHECK(rep.min_eig_M == doctest::Approx(1.0));
    CHECK(rep.min_eig_K == doctest::Approx(1.0));
    CHECK(rep.failures.empty());
}

TEST_CASE("validate rejects an indefinite stiffness matrix") {
    SecondOrderSystem sys;
    sys.M = Matrix::Identity(2, 2);
    sys.K = (Vector(2) << 1.0, -1.0).finished().asDiagonal();
    sys.D = Matrix::Zero(2, 2);
    sys.B = Matrix::Identity(2, 2);
    const ValidationReport rep = validate(sys);
    CHECK(!rep.passed);
    CHECK(!rep.K_positive_definite);
    bool mentions_K = false;
    for (const auto& f : rep.failures) mentions_K |= f.find("K") != std::string::npos;
    CHECK(mentions_K);
    CHECK_THROWS_AS(ensure_valid(sys), ValidationError);
}

TEST_CASE("validate flags dimension mismatches and non-finite entries") {
    SecondOrderSystem bad;
    bad.M = Matrix::Identity(2, 2);
    bad.D = Matrix::Zero(3, 3);
    bad.K = Matrix::Identity(2, 2);
    bad.B = Matrix::Ones(2, 1);
    const ValidationReport rep = validate(bad);
    CHECK(!rep.dims_ok);
    CHECK(!rep.passed);

    SecondOrderSystem nan_sys;
    nan_sys.M = Matrix::Identity(2, 2);
    nan_sys.M(0, 0) = std::numeric_limits<double>::quiet_NaN();
    nan_sys.D = Matrix::Zero(2, 2);
    nan_sys.K = Matrix::Identity(2, 2);
    nan_sys.B = Matrix::Ones(2, 1);
    const ValidationReport nan_rep = validate(nan_sys);
    CHECK(!nan_rep.passed);
    bool mentions_finite = false;
    for (const auto& f : nan_rep.failures)
        mentions_finite |= f.find("non-finite") != std::string::npos;
    CHECK(mentions_finite);
}

TEST_CASE("validate records asymmetry and rejects gross asymmetry") {
    SecondOrderSystem sys;
    sys.M = Matrix::Identity(3, 3);
    sys.D = Matrix::Zero(3, 3);
    sys.K = 2.0 * Matrix::Identity(3, 3);
    sys.K(0, 1) = 0.5;  // unsymmetric stiffness entry
    sys.B = Matrix::Ones(3, 1);
    const ValidationReport rep = validate(sys);
    CHECK(!rep.symmetry_ok);
    CHECK(rep.sym_residual_K > 0.1);
    CHECK(!rep.passed);
}

TEST_CASE("validate agrees with a dense eigensolver oracle on random instances") {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 10; ++trial) {
        SecondOrderSystem sys = random_system(10, 2, rng);
        const ValidationReport rep = validate(sys);
        CHECK(rep.passed);
        CHECK(rep.min_eig_M == doctest::Approx(eigvals_sym(sys.M).minCoeff()).epsilon(1e-10));
        CHECK(rep.min_eig_K == doctest::Approx(eigvals_sym(sys.K).minCoeff()).epsilon(1e-10));
        CHECK(rep.rank_B == 2);
    }
}

TEST_CASE("transfer function matches the scalar hand evaluation at s = i") {
    const SecondOrderSystem sys = scalar_system(1.0, 1.0, 1.0, 1.0);
    const ComplexMatrix g = transfer_function(sys, Complex(0.0, 1.0));
    REQUIRE(g.rows() == 1);
    CHECK(g(0, 0).real() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(g(0, 0).imag() == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("transfer function vanishes at s = 0") {
    std::mt19937_64 rng(3);
    const SecondOrderSystem sys = random_system(4, 2, rng);
    const ComplexMatrix g = transfer_function(sys, Complex(0.0, 0.0));
    CHECK(g.norm() == 0.0);
}

TEST_CASE("transfer function is symmetric and conjugate-symmetric on a grid") {
    std::mt19937_64 rng(11);
    const SecondOrderSystem sys = random_system(5, 2, rng);
    const double eps = std::numeric_limits<double>::epsilon();
    for (double omega : logspace(1e-2, 1e2, 10)) {
        const ComplexMatrix g = transfer_function(sys, Complex(0.0, omega));
        const ComplexMatrix g_conj = transfer_function(sys, Complex(0.0, -omega));
        const double tol = 100.0 * eps * std::max(1.0, g.norm());
        CHECK((g - g.transpose()).norm() <= tol);
        CHECK((g_conj - g.conjugate()).norm() <= tol);
    }
}

TEST_CASE("transfer function reports a singular pencil and names the point") {
    const SecondOrderSystem sys = scalar_system(1.0, 0.0, 1.0, 1.0);
    // s^2 + 1 = 0 at s = i: the undamped pencil is singular there.
    try {
        transfer_function(sys, Complex(0.0, 1.0));
        FAIL("expected a singular-pencil error");
    } catch (const ValidationError& err) {
        const std::string what = err.what();
        CHECK(what.find("singular") != std::string::npos);
        CHECK(what.find("1i") != std::string::npos);
    }
    // Slightly off the pole the evaluation goes through.
    CHECK_NOTHROW(transfer_function(sys, Complex(0.0, 1.001)));
}

TEST_CASE("overdamping scalar examples") {
    const OverdampingResult strong = is_overdamped(scalar_system(1.0, 3.0, 1.0, 1.0));
    CHECK(strong.overdamped);
    // The witness must certify the definition: Q(witness) negative definite.
    const double q_at_witness =
        strong.witness_mu * strong.witness_mu + 3.0 * strong.witness_mu + 1.0;
    CHECK(q_at_witness < 0.0);
    CHECK(strong.min_value == doctest::Approx(1.0 - 9.0 / 4.0).epsilon(1e-6));

    const OverdampingResult weak = is_overdamped(scalar_system(1.0, 1.0, 1.0, 1.0));
    CHECK(!weak.overdamped);
    CHECK(weak.min_value == doctest::Approx(1.0 - 1.0 / 4.0).epsilon(1e-6));
}

TEST_CASE("lightly damped diagonal system is not overdamped") {
    SecondOrderSystem sys;
    sys.M = Matrix::Identity(2, 2);
    sys.K = Matrix::Identity(2, 2);
    sys.D = 0.1 * Matrix::Identity(2, 2);
    sys.B = Matrix::Ones(2, 1);
    CHECK(!is_overdamped(sys).overdamped);
}

TEST_CASE("overdamping test requires positive definite damping") {
    SecondOrderSystem sys;
    sys.M = Matrix::Identity(2, 2);
    sys.K = Matrix::Identity(2, 2);
    sys.D = Matrix::Zero(2, 2);
    sys.D(0, 0) = 1.0;  // PSD but singular
    sys.B = Matrix::Ones(2, 1);
    CHECK_THROWS_AS(is_overdamped(sys), ValidationError);
}

TEST_CASE("falsifier finds no counterexample for an overdamped scalar") {
    const auto v = overdamping_falsifier(scalar_system(1.0, 3.0, 1.0, 1.0), 1000, 17);
    CHECK(!v.has_value());
}

TEST_CASE("falsifier immediately falsifies an underdamped scalar") {
    const SecondOrderSystem sys = scalar_system(1.0, 1.0, 1.0, 1.0);
    const auto v = overdamping_falsifier(sys, 10, 17);
    REQUIRE(v.has_value());
    const ComplexVector& w = *v;
    const double mv = (w.adjoint() * sys.M.cast<Complex>() * w)(0).real();
    const double dv = (w.adjoint() * sys.D.cast<Complex>() * w)(0).real();
    const double kv = (w.adjoint() * sys.K.cast<Complex>() * w)(0).real();
    CHECK(dv * dv <= 4.0 * mv * kv);
}

TEST_CASE("falsifier catches a mixed overdamped/underdamped diagonal system") {
    const Vector m = Vector::Ones(3);
    const Vector k = Vector::Ones(3);
    Vector d(3);
    d << 5.0, 5.0, 0.4;  // third mode fails the discriminant condition
    const auto v = overdamping_falsifier(diagonal_system(m, d, k), 5000, 99);
    CHECK(v.has_value());
}

TEST_CASE("overdamping test agrees with the falsifier on 50 diagonal systems") {
    std::mt19937_64 rng(505);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    int overdamped_seen = 0;
    int falsified_seen = 0;
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 2 + static_cast<int>(unif(rng) * 3.0);  // 2..4 modes
        Vector m(n), k(n), d(n);
        bool weak_mode = trial % 2 == 1;
        for (int i = 0; i < n; ++i) {
            m(i) = 1.0;
            k(i) = 0.5 + 1.5 * unif(rng);
            // Margin-separated discriminant ratios d / (2 sqrt(m k)): strong
            // modes in [1.5, 2.5] share a common negativity interval, weak
            // modes in [0.2, 0.5] break the scalar condition outright.
            const double ratio = 1.5 + unif(rng);
            d(i) = 2.0 * ratio * std::sqrt(m(i) * k(i));
        }
        if (weak_mode) {
            const int j = static_cast<int>(unif(rng) * n) % n;
            d(j) = 2.0 * (0.2 + 0.3 * unif(rng)) * std::sqrt(m(j) * k(j));
        }
        const SecondOrderSystem sys = diagonal_system(m, d, k);
        const bool over = is_overdamped(sys).overdamped;
        const auto counterexample = overdamping_falsifier(sys, 5000, 1000 + trial);
        if (over) {
            ++overdamped_seen;
            CHECK(!counterexample.has_value());
        }
        if (weak_mode) {
            ++falsified_seen;
            CHECK(!over);
            CHECK(counterexample.has_value());
        }
    }
    CHECK(overdamped_seen >= 20);
    CHECK(falsified_seen == 25);
}

TEST_CASE("triple chain with one mass per row reproduces the reference matrices") {
    const SecondOrderSystem sys = generate_triple_chain(1);
    REQUIRE(sys.n() == 4);
    Matrix k_ref(4, 4);
    k_ref << 20.0, 0.0, 0.0, -10.0,
             0.0, 40.0, 0.0, -20.0,
             0.0, 0.0, 2.0, -1.0,
             -10.0, -20.0, -1.0, 81.0;
    CHECK((sys.K - k_ref).norm() == 0.0);
    Matrix m_ref = Matrix::Zero(4, 4);
    m_ref.diagonal() << 1.0, 2.0, 3.0, 1.0;
    CHECK((sys.M - m_ref).norm() == 0.0);
    CHECK((sys.B - Matrix::Ones(4, 1)).norm() == 0.0);
    CHECK(validate(sys).passed);
}

TEST_CASE("triple chain damping is Rayleigh plus three wall dampers") {
    for (int n : {1, 3, 7}) {
        const TripleChainParams params;
        const SecondOrderSystem sys = generate_triple_chain(n, params);
        Matrix extra = sys.D - params.alpha * sys.M - params.beta * sys.K;
        int nonzeros = 0;
        for (Eigen::Index i = 0; i < extra.rows(); ++i)
            for (Eigen::Index j = 0; j < extra.cols(); ++j)
                if (extra(i, j) != 0.0) ++nonzeros;
        CHECK(nonzeros == 3);
        CHECK(extra(0, 0) == doctest::Approx(params.v));
        CHECK(extra(n, n) == doctest::Approx(params.v));
        CHECK(extra(2 * n, 2 * n) == doctest::Approx(params.v));
    }
}

TEST_CASE("triple chain stiffness is positive definite for several sizes") {
    for (int n : {1, 2, 5, 10}) {
        const SecondOrderSystem sys = generate_triple_chain(n);
        CHECK(sys.n() == 3 * n + 1);
        CHECK((sys.K - sys.K.transpose()).norm() == 0.0);
        CHECK(eigvals_sym(sys.K).minCoeff() > 0.0);
    }
}

TEST_CASE("triple chain passes validation across a parameter sweep") {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> unif(0.1, 10.0);
    for (int trial = 0; trial < 20; ++trial) {
        TripleChainParams params;
        params.k0 = unif(rng);
        params.k1 = unif(rng);
        params.k2 = unif(rng);
        params.k3 = unif(rng);
        params.m0 = unif(rng);
        params.m1 = unif(rng);
        params.m2 = unif(rng);
        params.m3 = unif(rng);
        params.alpha = 0.01 * unif(rng);
        params.beta = 0.01 * unif(rng);
        params.v = unif(rng);
        const SecondOrderSystem sys = generate_triple_chain(1 + trial % 4, params);
        CHECK(validate(sys).passed);
    }
}

TEST_CASE("triple chain rejects nonpositive parameters") {
    TripleChainParams params;
    params.k2 = 0.0;
    CHECK_THROWS_AS(generate_triple_chain(2, params), ValidationError);
    TripleChainParams params2;
    params2.m0 = -1.0;
    CHECK_THROWS_AS(generate_triple_chain(2, params2), ValidationError);
    CHECK_THROWS_AS(generate_triple_chain(0), ValidationError);
}
