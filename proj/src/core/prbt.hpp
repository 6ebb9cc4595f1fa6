#pragma once

#include "fo_realization.hpp"
#include "types.hpp"

#include <vector>

namespace soprbt {

// One cluster of positive real characteristic values of a single sign.
struct SpectrumGroup {
    double sigma = 0.0;
    int multiplicity = 0;
};

// Signed eigenstructure of L S_n L^T: eigenvalues are the characteristic
// values with signs, eigenvectors ordered ascending so the layout is
// [negative block (sigma descending) | kernel | positive block (sigma
// ascending)]. With all sigma in (0, 1], the sigma = 1 states sit first on
// the negative side and last on the positive side, which is exactly the
// boundary-block layout of the balanced form.
struct SignedSpectrum {
    std::vector<SpectrumGroup> negatives;  // descending sigma
    std::vector<SpectrumGroup> positives;  // descending sigma
    Matrix U;            // orthogonal, rows(L) x rows(L)
    Vector eigenvalues;  // ascending eigenvalues of L S_n L^T
    Eigen::Index n = 0;  // half-order of the lift
    Eigen::Index neg_count = 0;
    Eigen::Index zero_count = 0;
    Eigen::Index pos_count = 0;
};

SignedSpectrum signed_eigendecomposition(const Matrix& l, Eigen::Index n,
                                         double cluster_tol = 1e-8);

struct TruncationPlan {
    Eigen::Index r = 0;  // retained count per sign (r+ = r- = r)
    std::vector<Eigen::Index> kept_neg;  // U column indices, negative side
    std::vector<Eigen::Index> kept_pos;  // U column indices, positive side
    double truncated_sum_neg = 0.0;
    double truncated_sum_pos = 0.0;
    double error_bound = 0.0;  // 2 * (truncated_sum_neg + truncated_sum_pos)
    std::vector<Eigen::Index> feasible;  // all cluster-respecting r values
};

// Chooses the feasible retained count nearest to target_r (ties prefer the
// larger, i.e. more accurate, side). Feasible counts are common cluster
// boundaries of both signs: no multiplicity group may be split, all
// sigma = 1 groups are kept, zero characteristic values are always
// truncated.
TruncationPlan plan_truncation(const SignedSpectrum& spectrum, Eigen::Index target_r,
                               double cluster_tol = 1e-8, double tol_one = 1e-6);

struct ReducedStructured {
    Matrix Ared;   // 2r x 2r, signature-symmetric
    Matrix Bred;   // 2r x m, zero top block
    Matrix Cred;   // m x 2r, equals Bred^T up to round-off
    Vector Sigma1; // retained sigma, aligned with the state order (r- | r+)
    Eigen::Index r = 0;
    double error_bound = 0.0;

    Matrix sr() const {
        Matrix s = Matrix::Identity(2 * r, 2 * r);
        s.topLeftCorner(r, r) *= -1.0;
        return s;
    }
    FirstOrderSystem fo() const { return FirstOrderSystem{Ared, Bred, Cred}; }
};

// Projection reduction W^T = Sigma1^{-1/2} S_r U1^T L, V = S_n L^T U1
// Sigma1^{-1/2}; the bi-orthonormality defect W^T V - I is measured and, if
// moderate, corrected by V <- V (W^T V)^{-1}.
ReducedStructured reduce(const FirstOrderSystem& fo, const Matrix& l, const TruncationPlan& plan,
                         double cluster_tol = 1e-8);

}  // namespace soprbt
