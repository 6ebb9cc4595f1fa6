#pragma once

#include "so_model.hpp"
#include "types.hpp"

#include <vector>

namespace soprbt {

// First-order realization y = C (sI - A)^{-1} B u with zero feedthrough.
struct FirstOrderSystem {
    Matrix A;
    Matrix B;
    Matrix C;

    Eigen::Index order() const { return A.rows(); }
    Eigen::Index m() const { return B.cols(); }
};

// Lift of a second-order system through the Cholesky factors M = H H^T and
// K = G G^T (state x = [G^T p; H^T p']):
//   A = [[0, G^T H^{-T}], [-H^{-1} G, -H^{-1} D H^{-T}]],  B = [0; H^{-1} B],
//   C = B^T, so that C (sI - A)^{-1} B equals s B^T (s^2 M + s D + K)^{-1} B.
// The lift is signature-symmetric: S A S = A^T and S B = B for
// S = diag(-I_n, I_n).
struct LiftResult {
    FirstOrderSystem fo;
    Matrix H;  // lower Cholesky factor of M
    Matrix G;  // lower Cholesky factor of K
};

LiftResult lift(const SecondOrderSystem& sys);

ComplexMatrix fo_transfer(const FirstOrderSystem& fo, Complex s);

// Finite invariant zeros of [A, B; C, 0]: generalized eigenvalues of
// ([A, B; C, 0], diag(I, 0)). Values with |z| > 1/sqrt(eps) (or an exactly
// singular beta) count as infinite. Each finite zero carries its clustered
// algebraic multiplicity and a semi-simplicity flag from a rank test of the
// evaluated pencil.
struct SystemZero {
    Complex value;
    int algebraic_multiplicity = 1;
    int geometric_multiplicity = 1;
    bool semi_simple = true;
};

struct ZeroResult {
    std::vector<SystemZero> zeros;  // one entry per distinct finite zero
    int infinite_count = 0;
    int finite_count = 0;  // total with multiplicity
};

ZeroResult system_zeros(const FirstOrderSystem& fo);

// Residuals of the KYP linear matrix inequality
//   W(P) = [[A^T P + P A, P B - C^T], [B^T P - C, 0]] <= 0
// for a candidate P: the largest eigenvalue of W(P) and the Frobenius norm
// of the coupling block P B - C^T.
struct KypResidual {
    double lmi_max_eig = 0.0;
    double coupling_norm = 0.0;
};

KypResidual kyp_residual(const FirstOrderSystem& fo, const Matrix& p);

// Reconstruction of second-order coefficients from a standard triple
// (X, Z, Y) of the quadratic matrix polynomial L(s) = s^2 M + s D + K,
// i.e. L(s)^{-1} = X (sI - Z)^{-1} Y. With the moments Gamma_j = X Z^j Y:
//   M = Gamma_1^{-1},  D = -M Gamma_2 M,  K = -M Gamma_3 M + D Gamma_1 D.
struct MomentCoefficients {
    Matrix M;
    Matrix D;
    Matrix K;
};

MomentCoefficients moments_reconstruct(const Matrix& z, const Matrix& y, const Matrix& x);

}  // namespace soprbt
