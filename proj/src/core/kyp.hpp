#pragma once

#include "fo_realization.hpp"
#include "types.hpp"

#include <vector>

namespace soprbt {

struct KypOptions {
    // Regularization schedule for the singular KYP Riccati; the LMI's
    // feedthrough block is relaxed to -eps*I and eps is driven to zero.
    std::vector<double> epsilon_schedule{1e-4, 1e-6, 1e-8, 1e-10};
    double path_tol = 1e-7;      // monotonicity slack along the path
    double lmi_tol = 1e-6;       // certification: lmi_max_eig <= lmi_tol*||P||
    double coupling_tol = 1e-8;  // certification: ||PB - C^T|| <= coupling_tol*||B||
    double upper_tol = 1e-6;     // certification: lambda_max(P - I) <= upper_tol
    double pbh_tol = 1e-10;      // controllability test, relative to ||A||
    double rank_tol = 1e-12;     // factor rank cut, relative to lambda_max(P)
    // The regularized iterates carry an O(sqrt(eps)) bias; Richardson
    // extrapolation in sqrt(eps) followed by an exact projection onto the
    // coupling constraint P B = C^T removes it. Disabled only in tests that
    // probe the raw path.
    bool extrapolate = true;
    bool project_coupling = true;
};

struct KypResiduals {
    double lmi_max_eig = 0.0;
    double coupling_norm = 0.0;
    double minimality_gap = 0.0;  // last relative path increment
};

// One entry per solved regularization value (diagnostics only).
struct KypPathPoint {
    double epsilon = 0.0;
    double trace = 0.0;
    double increment = 0.0;  // ||P_k - P_{k-1}|| / ||P_k||, 0 for the first
};

struct KypSolution {
    Matrix P;  // minimal KYP certificate, symmetric PSD
    Matrix L;  // rank(P) x 2n factor with L^T L = P
    std::vector<double> epsilon_schedule;
    KypResiduals residuals;
    Eigen::Index rank = 0;

    // Path diagnostics: iterates increase toward the minimal solution as
    // eps decreases (they approach it from below).
    std::vector<KypPathPoint> path;
    bool path_monotone = true;
    double worst_monotonicity_violation = 0.0;  // most negative lambda_min of an increment
    bool coupling_projected = false;
    double clamped_eigenvalue = 0.0;  // most negative eigenvalue clamped to 0
};

// Thrown when the schedule is exhausted without meeting the certification
// tolerances; carries the last iterate for inspection.
class KypConvergenceError : public SolverError {
public:
    KypConvergenceError(const std::string& stage, const std::string& message, Matrix last_iterate,
                        KypResiduals residuals)
        : SolverError(stage, message),
          last_iterate_(std::move(last_iterate)),
          residuals_(residuals) {}

    const Matrix& last_iterate() const { return last_iterate_; }
    const KypResiduals& residuals() const { return residuals_; }

private:
    Matrix last_iterate_;
    KypResiduals residuals_;
};

// Minimal solution of the KYP inequality W(P) <= 0 for a stable realization
// with zero feedthrough. Each schedule point solves the stabilizing solution
// of A^T P + P A + (PB - C^T)(eps I)^{-1}(B^T P - C) = 0 through the ordered
// Schur form of the extended pencil (no 1/eps entries); acceptance is by
// residual certification of the polished iterate.
KypSolution solve_min_kyp(const FirstOrderSystem& fo, const KypOptions& opts = {});

// PSD factor extraction P = L^T L, dropping eigenvalues below
// rank_tol * lambda_max. Rejects P with eigenvalues below the negative
// tolerance.
Matrix factorize(const Matrix& p, double rank_tol);

// Stabilizing solution of one regularized KYP Riccati (exposed for tests).
Matrix solve_regularized_kyp(const FirstOrderSystem& fo, double epsilon);

}  // namespace soprbt
