#pragma once

#include "types.hpp"

#include <vector>

namespace soprbt {

// Small shared dense-linear-algebra helpers used across the solver stack.

inline Matrix symmetrized(const Matrix& a) { return 0.5 * (a + a.transpose()); }

// Largest / smallest eigenvalue of a symmetric matrix (input is symmetrized).
double max_eig_sym(const Matrix& a);
double min_eig_sym(const Matrix& a);

// Eigenvalues of a symmetric matrix in ascending order.
Vector eigvals_sym(const Matrix& a);

// Spectral norm via SVD (use .norm() for Frobenius).
double spectral_norm(const Matrix& a);

// Solves the continuous-time Lyapunov equation  A^T X + X A + Q = 0  for
// symmetric Q and Hurwitz A (complex-Schur Bartels-Stewart). Throws
// SolverError when A has an eigenvalue pair summing to ~zero (A not Hurwitz).
Matrix solve_lyapunov(const Matrix& a, const Matrix& q);

// Ordered generalized Schur decomposition of the pencil  lambda*E - M  with
// the stable finite eigenvalues (Re < 0, beta != 0) sorted to the top-left.
// Returns the right Schur basis and the number of selected eigenvalues; the
// leading `sdim` columns of `vsr` span the stable right deflating subspace.
struct OrderedQz {
    Matrix vsr;                  // right Schur vectors (n x n)
    int sdim = 0;                // number of selected (stable, finite) eigenvalues
    std::vector<Complex> eigenvalues;  // finite generalized eigenvalues
    int infinite_count = 0;      // eigenvalues with beta ~ 0
};
OrderedQz ordered_stable_qz(const Matrix& m, const Matrix& e);

// count logarithmically spaced points in [lo, hi] (inclusive), lo, hi > 0.
std::vector<double> logspace(double lo, double hi, int count);

}  // namespace soprbt
