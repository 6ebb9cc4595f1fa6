#include "kyp.hpp"

#include "dense.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace soprbt {

namespace {

// Stabilizability / controllability-at-the-axis precondition. Marginal or
// unstable modes that the input cannot reach make the minimal certificate
// ill-posed, so they are rejected up front via the PBH rank test.
void check_pbh_preconditions(const FirstOrderSystem& fo, double tol_rel) {
    const Eigen::Index q = fo.order();
    const Eigen::Index m = fo.m();
    const double scale = spectral_norm(fo.A);
    const double tol = tol_rel * std::max(scale, 1e-300);

    Eigen::EigenSolver<Matrix> es(fo.A, /*computeEigenvectors=*/false);
    if (es.info() != Eigen::Success) {
        throw SolverError("solve_min_kyp", "eigenvalue iteration on A failed");
    }
    for (Eigen::Index i = 0; i < q; ++i) {
        const Complex lambda = es.eigenvalues()(i);
        if (lambda.real() < -tol) continue;  // strictly stable mode
        ComplexMatrix pencil(q, q + m);
        pencil.leftCols(q) = lambda * ComplexMatrix::Identity(q, q) - fo.A.cast<Complex>();
        pencil.rightCols(m) = fo.B.cast<Complex>();
        Eigen::JacobiSVD<ComplexMatrix> svd(pencil);
        if (svd.singularValues()(q - 1) <= tol) {
            std::ostringstream msg;
            msg << "uncontrollable mode on or beyond the imaginary axis at lambda = (" << lambda.real()
                << ", " << lambda.imag() << "): stabilizability precondition violated";
            throw ValidationError("solve_min_kyp", msg.str());
        }
    }
}

// Least-norm symmetric correction pinning the coupling constraint P B = C^T
// exactly. Well-defined whenever B^T (C^T - P B) is symmetric, which holds
// for any realization with symmetric C B (true for all structured lifts,
// where C = B^T).
bool project_coupling_exact(Matrix& p, const Matrix& b, const Matrix& ct) {
    const Matrix c_res = ct - p * b;
    const Matrix btc = b.transpose() * c_res;
    const double scale = b.norm() * (c_res.norm() + ct.norm()) + 1e-300;
    if ((btc - btc.transpose()).norm() > 1e-8 * scale) return false;

    Eigen::LLT<Matrix> gram(b.transpose() * b);
    if (gram.info() != Eigen::Success) return false;
    const Matrix cg = gram.solve(c_res.transpose()).transpose();  // c_res (B^T B)^{-1}
    const Matrix bg = gram.solve(b.transpose()).transpose();      // B (B^T B)^{-1}
    p += cg * b.transpose() + bg * c_res.transpose() - bg * btc * bg.transpose();
    p = symmetrized(p);
    return true;
}

}  // namespace

Matrix solve_regularized_kyp(const FirstOrderSystem& fo, double epsilon) {
    if (!(epsilon > 0.0)) {
        throw ValidationError("solve_min_kyp", "regularization value must be positive");
    }
    const Eigen::Index q = fo.order();
    const Eigen::Index m = fo.m();
    const Eigen::Index big = 2 * q + m;

    // Extended pencil of the regularized Riccati
    //   A^T P + P A + (P B - C^T)(eps I)^{-1}(B^T P - C) = 0,
    // kept in product-free form so no 1/eps entry appears:
    //   lambda * diag(I, I, 0) - [[A, 0, B], [0, -A^T, C^T], [-C, B^T, -eps I]].
    Matrix mp = Matrix::Zero(big, big);
    mp.topLeftCorner(q, q) = fo.A;
    mp.block(0, 2 * q, q, m) = fo.B;
    mp.block(q, q, q, q) = -fo.A.transpose();
    mp.block(q, 2 * q, q, m) = fo.C.transpose();
    mp.block(2 * q, 0, m, q) = -fo.C;
    mp.block(2 * q, q, m, q) = fo.B.transpose();
    mp.block(2 * q, 2 * q, m, m) = -epsilon * Matrix::Identity(m, m);
    Matrix ep = Matrix::Zero(big, big);
    ep.topLeftCorner(2 * q, 2 * q).setIdentity();

    OrderedQz qz = ordered_stable_qz(mp, ep);

    // The para-Hermitian structure mirrors finite eigenvalues across the
    // imaginary axis; an eigenvalue sitting on the axis (beyond tolerance)
    // means the strict dichotomy needed for the stabilizing solution fails.
    for (const Complex& lambda : qz.eigenvalues) {
        if (std::abs(lambda.real()) <= 1e-10 * std::max(1.0, std::abs(lambda))) {
            std::ostringstream msg;
            msg << "pencil eigenvalue (" << lambda.real() << ", " << lambda.imag()
                << ") lies on the imaginary axis: no stabilizing solution at eps = " << epsilon;
            throw SolverError("solve_min_kyp", msg.str());
        }
    }
    if (qz.sdim != q) {
        std::ostringstream msg;
        msg << "stable deflating subspace has dimension " << qz.sdim << ", expected " << q
            << " (eps = " << epsilon << ")";
        throw SolverError("solve_min_kyp", msg.str());
    }

    const Matrix x1t = qz.vsr.leftCols(q).topRows(q).transpose();
    const Matrix x2t = qz.vsr.leftCols(q).middleRows(q, q).transpose();
    Eigen::FullPivLU<Matrix> lu(x1t);
    if (!lu.isInvertible()) {
        throw SolverError("solve_min_kyp", "deflating subspace is not a graph: X1 singular");
    }
    return symmetrized(lu.solve(x2t).transpose());
}

Matrix factorize(const Matrix& p, double rank_tol) {
    if (p.rows() != p.cols() || (p - p.transpose()).norm() > 1e-10 * std::max(1.0, p.norm())) {
        throw ValidationError("factorize", "input must be symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrized(p));
    if (es.info() != Eigen::Success) {
        throw SolverError("factorize", "symmetric eigendecomposition failed");
    }
    const Vector& lam = es.eigenvalues();  // ascending
    const double lam_max = std::max(lam(lam.size() - 1), 0.0);
    if (lam(0) < -rank_tol * std::max(1.0, lam_max)) {
        std::ostringstream msg;
        msg << "matrix is not positive semidefinite: lambda_min = " << lam(0);
        throw ValidationError("factorize", msg.str());
    }
    const double cut = rank_tol * lam_max;
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < lam.size(); ++i) {
        if (lam(i) > cut) ++rank;
    }
    Matrix l(rank, p.rows());
    Eigen::Index row = 0;
    for (Eigen::Index i = 0; i < lam.size(); ++i) {
        if (lam(i) > cut) {
            l.row(row++) = std::sqrt(lam(i)) * es.eigenvectors().col(i).transpose();
        }
    }
    return l;
}

KypSolution solve_min_kyp(const FirstOrderSystem& fo, const KypOptions& opts) {
    const Eigen::Index q = fo.order();
    const Eigen::Index m = fo.m();
    if (fo.B.rows() != q || fo.C.cols() != q || fo.C.rows() != m) {
        throw ValidationError("solve_min_kyp", "inconsistent realization dimensions");
    }
    if (opts.epsilon_schedule.empty()) {
        throw ValidationError("solve_min_kyp", "regularization schedule is empty");
    }
    check_pbh_preconditions(fo, opts.pbh_tol);

    KypSolution sol;
    sol.epsilon_schedule = opts.epsilon_schedule;

    // March the schedule. Iterates approach the minimal solution from below;
    // increments shrink like sqrt(eps), which is what the extrapolation
    // below removes.
    std::vector<Matrix> iterates;
    iterates.reserve(opts.epsilon_schedule.size());
    for (double eps : opts.epsilon_schedule) {
        Matrix p_eps = solve_regularized_kyp(fo, eps);
        KypPathPoint point;
        point.epsilon = eps;
        point.trace = p_eps.trace();
        if (!iterates.empty()) {
            const Matrix diff = p_eps - iterates.back();
            point.increment = diff.norm() / std::max(p_eps.norm(), 1e-300);
            const double lam_min = min_eig_sym(diff);
            sol.worst_monotonicity_violation = std::min(sol.worst_monotonicity_violation, lam_min);
            if (lam_min < -opts.path_tol * std::max(1.0, p_eps.norm())) {
                sol.path_monotone = false;
            }
        }
        sol.path.push_back(point);
        iterates.push_back(std::move(p_eps));
    }
    sol.residuals.minimality_gap = sol.path.back().increment;

    // Richardson extrapolation in s = sqrt(eps): the iterates follow a
    // Puiseux series P(s) = P_min - s R1 + s^2 R2 - ..., and geometric
    // schedules give well-conditioned Lagrange weights at s = 0.
    Matrix p;
    if (opts.extrapolate && iterates.size() > 1) {
        std::vector<double> s(iterates.size());
        for (std::size_t i = 0; i < iterates.size(); ++i) s[i] = std::sqrt(opts.epsilon_schedule[i]);
        p = Matrix::Zero(q, q);
        for (std::size_t i = 0; i < iterates.size(); ++i) {
            double w = 1.0;
            for (std::size_t j = 0; j < iterates.size(); ++j) {
                if (j != i) w *= s[j] / (s[j] - s[i]);
            }
            p += w * iterates[i];
        }
        p = symmetrized(p);
    } else {
        p = iterates.back();
    }

    if (opts.project_coupling) {
        sol.coupling_projected = project_coupling_exact(p, fo.B, fo.C.transpose());
    }

    // Clamp round-off negatives so P is exactly PSD, and extract the factor
    // from the same eigendecomposition.
    Eigen::SelfAdjointEigenSolver<Matrix> es(p);
    if (es.info() != Eigen::Success) {
        throw SolverError("solve_min_kyp", "eigendecomposition of the candidate certificate failed");
    }
    Vector lam = es.eigenvalues();
    if (lam(0) < 0.0) sol.clamped_eigenvalue = lam(0);
    lam = lam.cwiseMax(0.0);
    p = es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
    p = symmetrized(p);

    sol.P = p;
    sol.L = factorize(p, opts.rank_tol);
    sol.rank = sol.L.rows();

    const KypResidual res = kyp_residual(fo, sol.P);
    sol.residuals.lmi_max_eig = res.lmi_max_eig;
    sol.residuals.coupling_norm = res.coupling_norm;

    const double p_scale = std::max(spectral_norm(sol.P), 1e-300);
    const double b_scale = std::max(fo.B.norm(), 1e-300);
    const double upper = max_eig_sym(sol.P - Matrix::Identity(q, q));
    const bool certified = res.lmi_max_eig <= opts.lmi_tol * p_scale &&
                           res.coupling_norm <= opts.coupling_tol * b_scale &&
                           upper <= opts.upper_tol;
    if (!certified) {
        std::ostringstream msg;
        msg << "schedule exhausted without certification: lmi_max_eig = " << res.lmi_max_eig
            << " (tol " << opts.lmi_tol * p_scale << "), coupling_norm = " << res.coupling_norm
            << " (tol " << opts.coupling_tol * b_scale << "), lambda_max(P - I) = " << upper
            << " (tol " << opts.upper_tol << ")";
        throw KypConvergenceError("solve_min_kyp", msg.str(), sol.P, sol.residuals);
    }
    return sol;
}

}  // namespace soprbt
