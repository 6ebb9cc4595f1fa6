#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "core/dense.hpp"
#include "core/fo_realization.hpp"
#include "core/so_model.hpp"
#include "test_util.hpp"

#include <cmath>
#include <complex>
#include <random>

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

// Companion standard triple of L(s) = s^2 M + s D + K with invertible M:
// Z = [[0, I], [-M^{-1}K, -M^{-1}D]], Y = [0; M^{-1}], X = [I, 0].
struct CompanionTriple {
    Matrix z, y, x;
};

CompanionTriple companion_triple(const Matrix& m, const Matrix& d, const Matrix& k) {
    const Eigen::Index r = m.rows();
    const Matrix minv = m.inverse();
    CompanionTriple t;
    t.z = Matrix::Zero(2 * r, 2 * r);
    t.z.topRightCorner(r, r) = Matrix::Identity(r, r);
    t.z.bottomLeftCorner(r, r) = -minv * k;
    t.z.bottomRightCorner(r, r) = -minv * d;
    t.y = Matrix::Zero(2 * r, r);
    t.y.bottomRows(r) = minv;
    t.x = Matrix::Zero(r, 2 * r);
    t.x.leftCols(r) = Matrix::Identity(r, r);
    return t;
}

}  // namespace

TEST_CASE("lift of the unit oscillator gives the rotation generator") {
    const LiftResult lr = lift(scalar_system(1.0, 0.0, 1.0, 1.0));
    Matrix a_ref(2, 2);
    a_ref << 0.0, 1.0, -1.0, 0.0;
    CHECK((lr.fo.A - a_ref).norm() == 0.0);
    CHECK(lr.fo.B(0, 0) == 0.0);
    CHECK(lr.fo.B(1, 0) == 1.0);
    CHECK((lr.fo.C - lr.fo.B.transpose()).norm() == 0.0);
    CHECK(lr.H(0, 0) == doctest::Approx(1.0));
    CHECK(lr.G(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("lift of a scaled scalar system uses the Cholesky factors") {
    const LiftResult lr = lift(scalar_system(4.0, 2.0, 9.0, 1.0));
    CHECK(lr.H(0, 0) == doctest::Approx(2.0));
    CHECK(lr.G(0, 0) == doctest::Approx(3.0));
    Matrix a_ref(2, 2);
    a_ref << 0.0, 1.5, -1.5, -0.5;
    CHECK((lr.fo.A - a_ref).norm() <= 1e-15);
    CHECK(lr.fo.B(1, 0) == doctest::Approx(0.5));
}

TEST_CASE("lift rejects an indefinite mass matrix") {
    SecondOrderSystem sys;
    sys.M = (Vector(2) << 1.0, -1.0).finished().asDiagonal();
    sys.D = Matrix::Zero(2, 2);
    sys.K = Matrix::Identity(2, 2);
    sys.B = Matrix::Ones(2, 1);
    CHECK_THROWS_AS(lift(sys), ValidationError);
}

TEST_CASE("lift invariants hold on 100 random systems") {
    std::mt19937_64 rng(123);
    const double eps = std::numeric_limits<double>::epsilon();
    for (int trial = 0; trial < 100; ++trial) {
        const Eigen::Index n = 2 + trial % 7;
        const Eigen::Index m = 1 + trial % 2;
        const SecondOrderSystem sys = random_system(n, m, rng);
        const LiftResult lr = lift(sys);
        const Matrix& a = lr.fo.A;
        REQUIRE(a.rows() == 2 * n);

        const Matrix s = signature(n);
        const double tol = 100.0 * eps * std::max(1.0, a.norm());
        CHECK((s * a * s - a.transpose()).norm() <= tol);
        CHECK(lr.fo.B.topRows(n).norm() == 0.0);
        CHECK((lr.fo.C - lr.fo.B.transpose()).norm() == 0.0);
        CHECK(max_eig_sym(a + a.transpose()) <= tol);
        CHECK((s * lr.fo.B - lr.fo.B).norm() == 0.0);

        // Cholesky factors reassemble the original coefficient matrices.
        CHECK((lr.H * lr.H.transpose() - sys.M).norm() <= 1e-12 * std::max(1.0, sys.M.norm()));
        CHECK((lr.G * lr.G.transpose() - sys.K).norm() <= 1e-12 * std::max(1.0, sys.K.norm()));
    }
}

TEST_CASE("fo_transfer matches the hand evaluation at s = 2i") {
    const LiftResult lr = lift(scalar_system(1.0, 0.0, 1.0, 1.0));
    const ComplexMatrix g = fo_transfer(lr.fo, Complex(0.0, 2.0));
    CHECK(g(0, 0).real() == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(g(0, 0).imag() == doctest::Approx(-2.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("fo_transfer vanishes at the origin") {
    std::mt19937_64 rng(5);
    const LiftResult lr = lift(random_system(4, 2, rng));
    CHECK(fo_transfer(lr.fo, Complex(0.0, 0.0)).norm() <= 1e-14);
}

TEST_CASE("fo_transfer reports a singular resolvent") {
    const LiftResult lr = lift(scalar_system(1.0, 0.0, 1.0, 1.0));
    // A has eigenvalues +/- i.
    CHECK_THROWS_AS(fo_transfer(lr.fo, Complex(0.0, 1.0)), ValidationError);
}

TEST_CASE("fo_transfer agrees with the second-order transfer function") {
    const SecondOrderSystem sys = generate_triple_chain(2);
    const LiftResult lr = lift(sys);
    for (double omega : logspace(1e-2, 1e2, 20)) {
        const Complex s(0.0, omega);
        const ComplexMatrix g_fo = fo_transfer(lr.fo, s);
        const ComplexMatrix g_so = transfer_function(sys, s);
        CHECK((g_fo - g_so).norm() <= 1e-10 * std::max(1.0, g_so.norm()));
    }
}

TEST_CASE("zeros of the undamped unit oscillator lift are exactly the origin") {
    const LiftResult lr = lift(scalar_system(1.0, 0.0, 1.0, 1.0));
    const ZeroResult zr = system_zeros(lr.fo);
    REQUIRE(zr.zeros.size() == 1);
    CHECK(std::abs(zr.zeros[0].value) <= 1e-10);
    CHECK(zr.zeros[0].algebraic_multiplicity == 1);
    CHECK(zr.zeros[0].semi_simple);
    CHECK(zr.finite_count == 1);
    CHECK(zr.infinite_count == 2);
}

TEST_CASE("zeros of a damped scalar lift stay on the closed left real axis") {
    const LiftResult lr = lift(scalar_system(1.0, 3.0, 2.0, 1.0));
    const ZeroResult zr = system_zeros(lr.fo);
    REQUIRE(zr.finite_count == 1);
    bool origin_found = false;
    for (const auto& z : zr.zeros) {
        CHECK(z.value.real() <= 1e-10);
        CHECK(std::abs(z.value.imag()) <= 1e-10);
        origin_found |= std::abs(z.value) <= 1e-10;
    }
    CHECK(origin_found);
}

TEST_CASE("zeros are closed under conjugation on the triple chain") {
    const LiftResult lr = lift(generate_triple_chain(2));
    const ZeroResult zr = system_zeros(lr.fo);
    CHECK(zr.finite_count >= 1);
    for (const auto& z : zr.zeros) {
        CHECK(z.value.real() <= 1e-8);
        if (std::abs(z.value.imag()) > 1e-10) {
            // Find the conjugate partner with the same multiplicity.
            bool partner = false;
            for (const auto& w : zr.zeros) {
                if (std::abs(w.value - std::conj(z.value)) <=
                        1e-8 * std::max(1.0, std::abs(z.value)) &&
                    w.algebraic_multiplicity == z.algebraic_multiplicity) {
                    partner = true;
                }
            }
            CHECK(partner);
        }
    }
}

TEST_CASE("zeros of any lift contain the origin with multiplicity at least m") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 5; ++trial) {
        const Eigen::Index m = 1 + trial % 2;
        const SecondOrderSystem sys = random_system(4, m, rng);
        const ZeroResult zr = system_zeros(lift(sys).fo);
        int origin_mult = 0;
        for (const auto& z : zr.zeros)
            if (std::abs(z.value) <= 1e-7) origin_mult += z.algebraic_multiplicity;
        CHECK(origin_mult >= m);
    }
}

TEST_CASE("identity certificate has nonpositive LMI residual and zero coupling") {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 10; ++trial) {
        const LiftResult lr = lift(random_system(3 + trial % 4, 1 + trial % 2, rng));
        const Matrix eye = Matrix::Identity(lr.fo.order(), lr.fo.order());
        const KypResidual res = kyp_residual(lr.fo, eye);
        CHECK(res.lmi_max_eig <= 1e-12 * std::max(1.0, lr.fo.A.norm()));
        CHECK(res.coupling_norm == 0.0);
    }
}

TEST_CASE("a scaled identity is not a certificate: coupling equals the input norm") {
    const LiftResult lr = lift(scalar_system(1.0, 0.0, 1.0, 1.0));
    const KypResidual res = kyp_residual(lr.fo, 2.0 * Matrix::Identity(2, 2));
    CHECK(res.coupling_norm == doctest::Approx(lr.fo.B.norm()).epsilon(1e-14));
    CHECK(res.coupling_norm > 0.5);
}

TEST_CASE("kyp_residual rejects a mismatched certificate size") {
    const LiftResult lr = lift(scalar_system(1.0, 1.0, 1.0, 1.0));
    CHECK_THROWS_AS(kyp_residual(lr.fo, Matrix::Identity(3, 3)), ValidationError);
}

TEST_CASE("moments of the companion triple of s^2 + s + 1") {
    Matrix m = Matrix::Constant(1, 1, 1.0);
    Matrix d = Matrix::Constant(1, 1, 1.0);
    Matrix k = Matrix::Constant(1, 1, 1.0);
    const CompanionTriple t = companion_triple(m, d, k);
    const MomentCoefficients mc = moments_reconstruct(t.z, t.y, t.x);
    CHECK(mc.M(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(mc.D(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(mc.K(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("moments of the companion triple of s^2 + 2s + 3") {
    const CompanionTriple t = companion_triple(Matrix::Constant(1, 1, 1.0),
                                               Matrix::Constant(1, 1, 2.0),
                                               Matrix::Constant(1, 1, 3.0));
    const MomentCoefficients mc = moments_reconstruct(t.z, t.y, t.x);
    CHECK(mc.M(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(mc.D(0, 0) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(mc.K(0, 0) == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("moments are invariant under similarity transformations") {
    std::mt19937_64 rng(55);
    std::uniform_real_distribution<double> unif(0.5, 2.0);
    for (int trial = 0; trial < 10; ++trial) {
        const Matrix m = random_spd(2, rng);
        const Matrix d = random_gaussian(2, 2, rng);
        const Matrix k = random_gaussian(2, 2, rng);
        const CompanionTriple t = companion_triple(m, d, k);

        // Well-conditioned random similarity: orthogonal times diagonal.
        Eigen::HouseholderQR<Matrix> qr(random_gaussian(4, 4, rng));
        Matrix trans = qr.householderQ();
        for (Eigen::Index i = 0; i < 4; ++i) trans.col(i) *= unif(rng);
        const Matrix tinv = trans.inverse();

        const MomentCoefficients base = moments_reconstruct(t.z, t.y, t.x);
        const MomentCoefficients moved =
            moments_reconstruct(tinv * t.z * trans, tinv * t.y, t.x * trans);
        CHECK((base.M - moved.M).norm() <= 1e-10 * std::max(1.0, base.M.norm()));
        CHECK((base.D - moved.D).norm() <= 1e-10 * std::max(1.0, base.D.norm()));
        CHECK((base.K - moved.K).norm() <= 1e-10 * std::max(1.0, base.K.norm()));
    }
}

TEST_CASE("moments recover 50 random quadratic polynomials") {
    std::mt19937_64 rng(600);
    std::uniform_real_distribution<double> unif(0.2, 3.0);
    for (int trial = 0; trial < 50; ++trial) {
        Matrix m, d, k;
        if (trial % 2 == 0) {
            m = Matrix::Constant(1, 1, 1.0);  // monic scalar quadratic
            d = Matrix::Constant(1, 1, unif(rng));
            k = Matrix::Constant(1, 1, unif(rng));
        } else {
            m = random_spd(2, rng);  // invertible leading coefficient
            d = random_gaussian(2, 2, rng);
            k = random_gaussian(2, 2, rng);
        }
        const CompanionTriple t = companion_triple(m, d, k);
        const MomentCoefficients mc = moments_reconstruct(t.z, t.y, t.x);
        CHECK((mc.M - m).norm() <= 1e-9 * std::max(1.0, m.norm()));
        CHECK((mc.D - d).norm() <= 1e-9 * std::max(1.0, d.norm()));
        CHECK((mc.K - k).norm() <= 1e-9 * std::max(1.0, k.norm()));
    }
}

TEST_CASE("moments_reconstruct rejects a triple with X Y != 0") {
    const CompanionTriple t = companion_triple(Matrix::Constant(1, 1, 1.0),
                                               Matrix::Constant(1, 1, 1.0),
                                               Matrix::Constant(1, 1, 1.0));
    Matrix bad_y = t.y;
    bad_y(0, 0) = 1.0;  // breaks X Y = 0
    CHECK_THROWS_AS(moments_reconstruct(t.z, bad_y, t.x), ValidationError);
}

TEST_CASE("moments_reconstruct rejects inconsistent dimensions") {
    const Matrix z = Matrix::Identity(3, 3);  // odd size cannot be 2r x 2r
    const Matrix y = Matrix::Ones(3, 1);
    const Matrix x = Matrix::Ones(1, 3);
    CHECK_THROWS_AS(moments_reconstruct(z, y, x), ValidationError);
}
