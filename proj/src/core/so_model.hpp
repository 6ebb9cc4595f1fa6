#pragma once

#include "types.hpp"

#include <optional>
#include <string>
#include <vector>

namespace soprbt {

// Symmetric second-order system  M p'' + D p' + K p = B u,  y = B^T p',
// with M, K symmetric positive definite, D symmetric positive semidefinite
// and B of full column rank.
struct SecondOrderSystem {
    Matrix M;
    Matrix D;
    Matrix K;
    Matrix B;

    Eigen::Index n() const { return M.rows(); }
    Eigen::Index m() const { return B.cols(); }
};

struct ValidationReport {
    Eigen::Index n = 0;
    Eigen::Index m = 0;

    double sym_residual_M = 0.0;  // ||X - X^T|| / max(1, ||X||), Frobenius
    double sym_residual_D = 0.0;
    double sym_residual_K = 0.0;
    double min_eig_M = 0.0;
    double min_eig_D = 0.0;
    double min_eig_K = 0.0;
    double max_eig_M = 0.0;
    double max_eig_K = 0.0;
    Eigen::Index rank_B = 0;

    bool dims_ok = false;
    bool symmetry_ok = false;
    bool M_positive_definite = false;
    bool D_positive_semidefinite = false;
    bool K_positive_definite = false;
    bool B_full_rank = false;
    bool passed = false;

    std::vector<std::string> failures;
};

// Checks the model-class preconditions. Definiteness is decided against the
// scale-aware tolerance n * eps * lambda_max of the matrix at hand.
ValidationReport validate(const SecondOrderSystem& sys);

// validate() + throw ValidationError when the report fails.
ValidationReport ensure_valid(const SecondOrderSystem& sys);

// Transfer function G(s) = s * B^T (s^2 M + s D + K)^{-1} B  (m x m).
ComplexMatrix transfer_function(const SecondOrderSystem& sys, Complex s);

struct OverdampingResult {
    bool overdamped = false;
    double witness_mu = 0.0;  // minimizer of lambda_max(mu^2 M + mu D + K)
    double min_value = 0.0;   // value at the minimizer
};

// Overdamping test: the system is overdamped iff there is a real mu < 0 with
// mu^2 M + mu D + K negative definite. lambda_max of that matrix pencil is
// convex in mu (pointwise max of convex quadratics with positive leading
// coefficient), so a golden-section scan over (-2*lambda_max(M^{-1} D), 0)
// decides the question. Requires D positive definite.
OverdampingResult is_overdamped(const SecondOrderSystem& sys, double tol = -1.0);

// Randomized falsifier for the pointwise overdamping inequality
// (v* D v)^2 > 4 (v* M v)(v* K v): returns a violating direction if one is
// found within `trials` samples, std::nullopt otherwise.
std::optional<ComplexVector> overdamping_falsifier(const SecondOrderSystem& sys, int trials,
                                                   unsigned seed);

// Triple mass-spring-damper chain: three rows of n masses, each row coupled
// through its last spring to one shared mass that is tied to a wall.
struct TripleChainParams {
    double k0 = 50.0;  // wall spring on the shared mass
    double k1 = 10.0;  // row springs
    double k2 = 20.0;
    double k3 = 1.0;
    double m0 = 1.0;   // shared mass
    double m1 = 1.0;   // row masses
    double m2 = 2.0;
    double m3 = 3.0;
    double alpha = 2e-3;  // Rayleigh damping D = alpha*M + beta*K + dampers
    double beta = 2e-3;
    double v = 5.0;       // discrete wall dampers on the first mass of each row
};

// n_per_row >= 1; the system has 3*n_per_row + 1 positions and input B = ones.
SecondOrderSystem generate_triple_chain(int n_per_row, const TripleChainParams& params = {});

}  // namespace soprbt
