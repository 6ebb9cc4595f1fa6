#include "dense.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <lapacke.h>

#include <cmath>

namespace soprbt {

double max_eig_sym(const Matrix& a) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrized(a), Eigen::EigenvaluesOnly);
    return es.eigenvalues().maxCoeff();
}

double min_eig_sym(const Matrix& a) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrized(a), Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

Vector eigvals_sym(const Matrix& a) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrized(a), Eigen::EigenvaluesOnly);
    return es.eigenvalues();
}

double spectral_norm(const Matrix& a) {
    if (a.size() == 0) return 0.0;
    return Eigen::JacobiSVD<Matrix>(a).singularValues()(0);
}

Matrix solve_lyapunov(const Matrix& a, const Matrix& q) {
    const auto n = a.rows();
    if (a.cols() != n || q.rows() != n || q.cols() != n)
        throw SolverError("lyapunov", "dimension mismatch");
    if (n == 0) return Matrix(0, 0);

    // A real, so A^T = A^H; with A = U T U^H the equation becomes
    //   T^H Y + Y T = -U^H Q U,  X = U Y U^H,
    // solvable column-by-column by forward substitution (T upper triangular).
    Eigen::ComplexSchur<ComplexMatrix> schur(a.cast<Complex>());
    if (schur.info() != Eigen::Success)
        throw SolverError("lyapunov", "complex Schur decomposition failed");
    const ComplexMatrix& t = schur.matrixT();
    const ComplexMatrix& u = schur.matrixU();

    ComplexMatrix qt = -(u.adjoint() * q.cast<Complex>() * u);
    ComplexMatrix y(n, n);
    const ComplexMatrix th = t.adjoint();  // lower triangular
    const double scale = t.norm() / std::sqrt(static_cast<double>(n));
    for (Eigen::Index k = 0; k < n; ++k) {
        ComplexVector rhs = qt.col(k);
        for (Eigen::Index j = 0; j < k; ++j) rhs -= y.col(j) * t(j, k);
        // (T^H + t_kk I) y_k = rhs, lower triangular solve.
        ComplexVector yk(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            Complex diag = th(i, i) + t(k, k);
            if (std::abs(diag) < 1e-14 * (scale + 1.0))
                throw SolverError("lyapunov",
                                  "singular Lyapunov operator (coefficient matrix has an "
                                  "eigenvalue pair summing to zero; it is not Hurwitz)");
            Complex s = rhs(i);
            for (Eigen::Index j = 0; j < i; ++j) s -= th(i, j) * yk(j);
            yk(i) = s / diag;
        }
        y.col(k) = yk;
    }
    Matrix x = (u * y * u.adjoint()).real();
    return symmetrized(x);
}

namespace {

lapack_logical select_stable_finite(const double* ar, const double* /*ai*/, const double* beta) {
    // Stable finite generalized eigenvalue: beta != 0 and Re(alpha/beta) < 0.
    // The product test is robust to the sign convention of beta.
    if (*beta == 0.0) return 0;
    return (*ar) * (*beta) < 0.0 ? 1 : 0;
}

}  // namespace

OrderedQz ordered_stable_qz(const Matrix& m, const Matrix& e) {
    const lapack_int n = static_cast<lapack_int>(m.rows());
    if (m.cols() != n || e.rows() != n || e.cols() != n)
        throw SolverError("ordered_qz", "pencil matrices must be square and of equal size");

    Matrix a = m;  // overwritten with the generalized Schur form
    Matrix b = e;
    std::vector<double> alphar(n), alphai(n), beta(n);
    Matrix vsl(n, n), vsr(n, n);
    lapack_int sdim = 0;

    lapack_int info = LAPACKE_dgges(LAPACK_COL_MAJOR, 'N', 'V', 'S', select_stable_finite, n,
                                    a.data(), n, b.data(), n, &sdim, alphar.data(), alphai.data(),
                                    beta.data(), vsl.data(), n, vsr.data(), n);
    if (info < 0)
        throw SolverError("ordered_qz", "illegal argument to dgges (" + std::to_string(-info) + ")");
    if (info > 0 && info <= n)
        throw SolverError("ordered_qz", "QZ iteration failed to converge");
    // info == n+2 means reordering produced a slightly perturbed pencil; the
    // subspace is still usable and downstream residual checks certify it.

    OrderedQz result;
    result.vsr = vsr;
    result.sdim = static_cast<int>(sdim);
    for (lapack_int i = 0; i < n; ++i) {
        if (beta[i] == 0.0) {
            ++result.infinite_count;
        } else {
            result.eigenvalues.emplace_back(alphar[i] / beta[i], alphai[i] / beta[i]);
        }
    }
    return result;
}

std::vector<double> logspace(double lo, double hi, int count) {
    if (count <= 0 || lo <= 0.0 || hi <= 0.0 || hi < lo)
        throw ValidationError("logspace", "need 0 < lo <= hi and count > 0");
    std::vector<double> pts(static_cast<size_t>(count));
    if (count == 1) {
        pts[0] = lo;
        return pts;
    }
    const double llo = std::log10(lo), lhi = std::log10(hi);
    for (int i = 0; i < count; ++i)
        pts[static_cast<size_t>(i)] = std::pow(10.0, llo + (lhi - llo) * i / (count - 1));
    return pts;
}

}  // namespace soprbt
