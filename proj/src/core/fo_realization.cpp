#include "fo_realization.hpp"

#include "dense.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace soprbt {

namespace {

Matrix lower_cholesky(const Matrix& a, const std::string& label) {
    Eigen::LLT<Matrix> llt(a);
    if (llt.info() != Eigen::Success) {
        throw ValidationError("lift", label + " has no Cholesky factorization (not positive definite)");
    }
    return llt.matrixL();
}

}  // namespace

LiftResult lift(const SecondOrderSystem& sys) {
    ensure_valid(sys);
    const Eigen::Index n = sys.n();
    const Eigen::Index m = sys.m();

    LiftResult out;
    out.H = lower_cholesky(sys.M, "mass matrix");
    out.G = lower_cholesky(sys.K, "stiffness matrix");

    const auto h = out.H.triangularView<Eigen::Lower>();
    // H^{-1} G, H^{-1} D H^{-T}, H^{-1} B via triangular solves.
    const Matrix hinv_g = h.solve(out.G);
    const Matrix hinv_d = h.solve(sys.D);
    const Matrix hinv_d_hinvt = h.solve(hinv_d.transpose()).transpose();
    const Matrix hinv_b = h.solve(sys.B);

    Matrix a = Matrix::Zero(2 * n, 2 * n);
    a.topRightCorner(n, n) = hinv_g.transpose();
    a.bottomLeftCorner(n, n) = -hinv_g;
    a.bottomRightCorner(n, n) = -symmetrized(hinv_d_hinvt);

    Matrix b = Matrix::Zero(2 * n, m);
    b.bottomRows(n) = hinv_b;

    out.fo.A = std::move(a);
    out.fo.B = b;
    out.fo.C = b.transpose();
    return out;
}

ComplexMatrix fo_transfer(const FirstOrderSystem& fo, Complex s) {
    const Eigen::Index q = fo.order();
    ComplexMatrix resolvent = s * ComplexMatrix::Identity(q, q) - fo.A.cast<Complex>();
    Eigen::PartialPivLU<ComplexMatrix> lu(resolvent);
    if (!(lu.rcond() > static_cast<double>(q) * std::numeric_limits<double>::epsilon())) {
        std::ostringstream msg;
        msg << "resolvent is singular at s = " << s.real();
        if (s.imag() >= 0.0) msg << " + " << s.imag() << "i";
        else msg << " - " << -s.imag() << "i";
        throw ValidationError("fo_transfer", msg.str());
    }
    return fo.C.cast<Complex>() * lu.solve(fo.B.cast<Complex>());
}

namespace {

// Geometric multiplicity of a finite zero mu: nullity of [A - mu I, B; C, 0].
int zero_geometric_multiplicity(const FirstOrderSystem& fo, Complex mu) {
    const Eigen::Index q = fo.order();
    const Eigen::Index m = fo.m();
    ComplexMatrix pencil = ComplexMatrix::Zero(q + m, q + m);
    pencil.topLeftCorner(q, q) = fo.A.cast<Complex>() - mu * ComplexMatrix::Identity(q, q);
    pencil.topRightCorner(q, m) = fo.B.cast<Complex>();
    pencil.bottomLeftCorner(m, q) = fo.C.cast<Complex>();

    Eigen::JacobiSVD<ComplexMatrix> svd(pencil);
    const auto& sv = svd.singularValues();
    const double rank_tol =
        sv(0) * static_cast<double>(q + m) * std::numeric_limits<double>::epsilon() * 1e3;
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
        if (sv(i) > rank_tol) ++rank;
    }
    return static_cast<int>(q + m - rank);
}

}  // namespace

ZeroResult system_zeros(const FirstOrderSystem& fo) {
    const Eigen::Index q = fo.order();
    const Eigen::Index m = fo.m();
    if (fo.B.rows() != q || fo.C.cols() != q || fo.C.rows() != m) {
        throw ValidationError("system_zeros", "inconsistent realization dimensions");
    }

    Matrix zp = Matrix::Zero(q + m, q + m);
    zp.topLeftCorner(q, q) = fo.A;
    zp.topRightCorner(q, m) = fo.B;
    zp.bottomLeftCorner(m, q) = fo.C;
    Matrix ep = Matrix::Zero(q + m, q + m);
    ep.topLeftCorner(q, q).setIdentity();

    Eigen::GeneralizedEigenSolver<Matrix> ges;
    ges.compute(zp, ep, /*computeEigenvectors=*/false);
    if (ges.info() != Eigen::Success) {
        throw SolverError("system_zeros", "generalized eigenvalue iteration failed to converge");
    }

    const double inf_cutoff = 1.0 / std::sqrt(std::numeric_limits<double>::epsilon());
    std::vector<Complex> finite;
    ZeroResult out;
    for (Eigen::Index i = 0; i < ges.alphas().size(); ++i) {
        const Complex alpha = ges.alphas()(i);
        const double beta = ges.betas()(i);
        if (beta == 0.0) {
            ++out.infinite_count;
            continue;
        }
        const Complex z = alpha / beta;
        if (std::abs(z) > inf_cutoff) {
            ++out.infinite_count;
        } else {
            finite.push_back(z);
        }
    }
    out.finite_count = static_cast<int>(finite.size());

    // Cluster repeated values, then rank-test each representative once.
    std::sort(finite.begin(), finite.end(), [](Complex a, Complex b) {
        if (a.real() != b.real()) return a.real() < b.real();
        return a.imag() < b.imag();
    });
    std::size_t i = 0;
    while (i < finite.size()) {
        std::size_t j = i + 1;
        const double tol = 1e-8 * std::max(1.0, std::abs(finite[i]));
        while (j < finite.size() && std::abs(finite[j] - finite[i]) <= tol) ++j;
        SystemZero zero;
        zero.value = finite[i];
        zero.algebraic_multiplicity = static_cast<int>(j - i);
        zero.geometric_multiplicity = zero_geometric_multiplicity(fo, zero.value);
        zero.semi_simple = zero.geometric_multiplicity >= zero.algebraic_multiplicity;
        out.zeros.push_back(zero);
        i = j;
    }
    return out;
}

KypResidual kyp_residual(const FirstOrderSystem& fo, const Matrix& p) {
    const Eigen::Index q = fo.order();
    const Eigen::Index m = fo.m();
    if (p.rows() != q || p.cols() != q) {
        throw ValidationError("kyp_residual", "certificate dimension does not match realization");
    }
    const Matrix coupling = p * fo.B - fo.C.transpose();
    Matrix w = Matrix::Zero(q + m, q + m);
    w.topLeftCorner(q, q) = fo.A.transpose() * p + p * fo.A;
    w.topRightCorner(q, m) = coupling;
    w.bottomLeftCorner(m, q) = coupling.transpose();

    KypResidual res;
    res.lmi_max_eig = max_eig_sym(symmetrized(w));
    res.coupling_norm = coupling.norm();
    return res;
}

MomentCoefficients moments_reconstruct(const Matrix& z, const Matrix& y, const Matrix& x) {
    const Eigen::Index q = z.rows();
    const Eigen::Index r = x.rows();
    if (z.cols() != q || y.rows() != q || y.cols() != r || x.cols() != q || q != 2 * r) {
        throw ValidationError("moments_reconstruct", "triple dimensions do not match a quadratic polynomial");
    }

    // A standard triple satisfies [X; X Z] invertible and [X; X Z] Y = [0; M^{-1}].
    Matrix stack(2 * r, q);
    stack.topRows(r) = x;
    stack.bottomRows(r) = x * z;
    Eigen::FullPivLU<Matrix> lu(stack);
    if (!lu.isInvertible()) {
        throw ValidationError("moments_reconstruct", "observability stack [X; XZ] is singular");
    }
    const double scale = std::max({x.norm(), y.norm(), 1.0});
    if ((x * y).norm() > 1e-8 * scale * scale) {
        throw ValidationError("moments_reconstruct", "X Y != 0: not a standard triple of a monic-free quadratic");
    }

    const Matrix gamma1 = x * z * y;
    const Matrix gamma2 = x * z * z * y;
    const Matrix gamma3 = x * z * z * z * y;

    Eigen::FullPivLU<Matrix> g1(gamma1);
    if (!g1.isInvertible()) {
        throw ValidationError("moments_reconstruct", "first moment X Z Y is singular");
    }

    MomentCoefficients out;
    out.M = g1.inverse();
    out.D = -out.M * gamma2 * out.M;
    out.K = -out.M * gamma3 * out.M + out.D * gamma1 * out.D;
    return out;
}

}  // namespace soprbt
