#pragma once

#include "prbt.hpp"
#include "so_model.hpp"
#include "types.hpp"

#include <string>
#include <vector>

namespace soprbt {

struct RecoveryOptions {
    double tol_one = 1e-6;         // sigma = 1 detection
    double pattern_tol = 1e-8;     // balanced-form zero pattern, relative to ||A||
    double coupling_tol = 1e-10;   // rescale activation threshold, relative to ||B||
    double assembly_tol = 1e-8;    // final upper-left residual, relative to ||A||
    double zero_match_tol = 1e-8;  // zero-dynamics spectrum cross-check
    double degenerate_tol = 1e-8;  // sign-characteristic Gram cutoff
    double eig_cond_limit = 1e8;   // eigenvector basis condition bound
    bool check_zero_match = true;  // cross-check Az spectrum against system zeros
    bool store_transforms = false; // keep the dense factor of every similarity
};

// Sizes of the six-block balanced layout (m, ell, p, p, ell, m).
struct BalancedBlocks {
    Eigen::Index m = 0;
    Eigen::Index ell = 0;
    Eigen::Index p = 0;
    Eigen::Index r() const { return m + ell + p; }
};

// Balanced realization after the two orthogonal boundary fixes, with the
// required zero pattern verified and then imposed exactly.
struct IdentifiedSystem {
    Matrix A;
    Matrix B;
    BalancedBlocks blocks;
    double pattern_residual = 0.0;  // worst off-pattern entry before projection
    Matrix Q;                       // accumulated orthogonal factor: A = Q^T A_in Q
};

IdentifiedSystem identify_balanced_blocks(const Matrix& a, const Matrix& b, const Vector& sigma1,
                                          const RecoveryOptions& opts = {});

// Zero dynamics [Az, Bz; Cz, Dz] read out of the identified balanced form.
struct ZeroDynamics {
    Matrix Az, Bz, Cz, Dz;
};

ZeroDynamics zero_dynamics_block(const Matrix& a, const BalancedBlocks& blocks);

struct ZeroDynamicsCheck {
    double stability_margin = 0.0;     // -max Re(eig(Az))
    double zero_match_residual = 0.0;  // worst match against stable system zeros
};

// Asserts that spec(Az) lies in the open left half-plane and coincides with
// the negative-real-part transmission zeros of the reduced realization.
ZeroDynamicsCheck verify_zero_dynamics(const ZeroDynamics& zd, const FirstOrderSystem& reduced,
                                       const RecoveryOptions& opts = {});

struct RealTypedEigen {
    double value = 0.0;
    int type = 0;  // sign of v^T S v for the normalized eigenvector
};

struct ComplexPairEigen {
    double sigma = 0.0;  // real part
    double tau = 0.0;    // imaginary part, > 0
    double nu() const;   // hypot(sigma, tau)
};

// Sign-characteristic eigenstructure of a pair (S, A) with S symmetric
// invertible and S A = A^T S. Real eigenvalues come with |v^T S v| = 1 and a
// type; complex pairs are reduced to 2x2 blocks [[0, nu], [-nu, 2 sigma]]
// whose two basis vectors carry local signature (-1, +1).
struct SignTypedEigen {
    std::vector<RealTypedEigen> reals;
    std::vector<ComplexPairEigen> pairs;
    Matrix T;           // columns: real eigenvectors, then pair bases
    Matrix canon;       // T^{-1} A T
    Vector signature;   // diagonal of T^T S T after snapping to +-1
};

SignTypedEigen sign_typed_diagonalize(const Matrix& s, const Matrix& a,
                                      const RecoveryOptions& opts = {});

struct ConditionCheck {
    bool ok = false;
    std::vector<double> mu_minus;  // ascending
    std::vector<double> mu_plus;   // ascending
};

// Eigenvalue condition: counts equal and mu_minus[i] < mu_plus[i] for all i.
ConditionCheck check_condition(std::vector<double> mu_minus, std::vector<double> mu_plus);

struct PaddingPlan {
    std::vector<double> extra_minus;  // ascending, below every existing value
    std::vector<double> extra_plus;   // ascending, above every existing value
    Eigen::Index pairs_added() const { return static_cast<Eigen::Index>(extra_plus.size()); }
};

// Minimal spectrum extension restoring the eigenvalue condition: d extra
// pairs shift the pairing so that mu_minus[i] < mu_plus[i + d]; the new
// values halve toward zero on the plus side and double away on the minus
// side.
PaddingPlan pad_spectrum(const std::vector<double>& mu_minus, const std::vector<double>& mu_plus);

// 2x2 congruence T = [[a, b], [b, a]], a = sqrt(mu-/(mu- - mu+)),
// b = sqrt(mu+/(mu- - mu+)), mapping diag(mu+, mu-) to
// [[0, sqrt(mu+ mu-)], [-sqrt(mu+ mu-), mu+ + mu-]] while preserving
// diag(-1, 1). Requires mu- < mu+ < 0.
Matrix debalance_pair(double mu_plus, double mu_minus);

struct ReducedSecondOrder {
    Matrix Dred;  // r x r symmetric damping
    Matrix Gred;  // r x r invertible stiffness factor
    Matrix Bred;  // r x m input map
    Matrix Kred() const { return Gred * Gred.transpose(); }
    Eigen::Index order() const { return Dred.rows(); }
};

// One entry per recovery stage. For similarity stages `t` (when stored)
// satisfies A_next = t^{-1} A t, B_next = t^{-1} B; the padding stage is an
// injection instead: states are inserted per the PaddingPlan (extra mu+
// appended to the negative half, extra mu- prepended to the positive half)
// with their values on the diagonal and zero couplings. The pattern
// projection carries no factor; it moves entries by at most the reported
// pattern residual.
struct TransformRecord {
    std::string kind;
    std::string detail;
    Matrix t;  // empty unless RecoveryOptions::store_transforms
};

struct RecoveryReport {
    BalancedBlocks blocks;
    bool condition_ok = false;
    std::vector<double> mu_minus;  // zero-dynamics reals before padding, ascending
    std::vector<double> mu_plus;
    std::vector<ComplexPairEigen> complex_zeros;
    PaddingPlan padding;
    Eigen::Index final_r = 0;
    double pattern_residual = 0.0;
    double assembly_residual = 0.0;
    double stability_margin = 0.0;
    double zero_match_residual = 0.0;
    double max_rescale_deviation = 0.0;  // worst |t - 1| of the coupling rescale
    int negative_damping_eigs = 0;
    std::vector<TransformRecord> transforms;
};

struct RecoveryResult {
    ReducedSecondOrder system;
    RecoveryReport report;
};

// Full structure recovery: balanced-block identification, zero-dynamics
// sign-typed diagonalization, optional spectrum padding, pairwise
// debalancing, and assembly of (I, Dred, Kred = Gred Gred^T, Bred).
RecoveryResult recover_second_order(const ReducedStructured& red, const RecoveryOptions& opts = {});

struct OverdampedCheck {
    bool reduced_overdamped = false;
    bool poles_real = false;
    bool ordering_ok = false;  // max positive-type pole < min negative-type pole
    double pole_gap = 0.0;
};

// Structure-preservation diagnostics for overdamped inputs: the reduced
// model must again be overdamped with real, sign-ordered poles.
OverdampedCheck overdamped_pipeline_check(const ReducedStructured& red,
                                          const ReducedSecondOrder& so,
                                          const RecoveryOptions& opts = {});

}  // namespace soprbt
