#include "so_model.hpp"

#include "dense.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace soprbt {

namespace {

double relative_asymmetry(const Matrix& x) {
    const double norm = x.norm();
    return (x - x.transpose()).norm() / std::max(1.0, norm);
}

}  // namespace

ValidationReport validate(const SecondOrderSystem& sys) {
    ValidationReport report;
    report.n = sys.M.rows();
    report.m = sys.B.cols();
    const auto n = report.n;

    report.dims_ok = n > 0 && sys.M.cols() == n && sys.D.rows() == n && sys.D.cols() == n &&
                     sys.K.rows() == n && sys.K.cols() == n && sys.B.rows() == n && report.m > 0 &&
                     report.m <= n;
    if (!report.dims_ok) {
        report.failures.push_back("inconsistent dimensions (need square n x n M, D, K and n x m B "
                                  "with 1 <= m <= n)");
        return report;
    }

    if (!(sys.M.allFinite() && sys.D.allFinite() && sys.K.allFinite() && sys.B.allFinite())) {
        report.failures.push_back("matrices contain non-finite entries");
        return report;
    }

    const double eps = std::numeric_limits<double>::epsilon();
    const double sym_tol = static_cast<double>(n) * eps * 100.0;
    report.sym_residual_M = relative_asymmetry(sys.M);
    report.sym_residual_D = relative_asymmetry(sys.D);
    report.sym_residual_K = relative_asymmetry(sys.K);
    report.symmetry_ok = report.sym_residual_M <= sym_tol && report.sym_residual_D <= sym_tol &&
                         report.sym_residual_K <= sym_tol;
    if (!report.symmetry_ok) report.failures.push_back("M, D, K must be symmetric");

    const Vector eig_M = eigvals_sym(sys.M);
    const Vector eig_D = eigvals_sym(sys.D);
    const Vector eig_K = eigvals_sym(sys.K);
    report.min_eig_M = eig_M.minCoeff();
    report.min_eig_D = eig_D.minCoeff();
    report.min_eig_K = eig_K.minCoeff();
    report.max_eig_M = eig_M.maxCoeff();
    report.max_eig_K = eig_K.maxCoeff();

    // Definiteness against the scale-aware threshold n * eps * lambda_max.
    const double tol_M = static_cast<double>(n) * eps * std::abs(report.max_eig_M);
    const double tol_K = static_cast<double>(n) * eps * std::abs(report.max_eig_K);
    const double tol_D = static_cast<double>(n) * eps * std::abs(eig_D.maxCoeff());
    report.M_positive_definite = report.min_eig_M > tol_M;
    report.K_positive_definite = report.min_eig_K > tol_K;
    report.D_positive_semidefinite = report.min_eig_D >= -tol_D;
    if (!report.M_positive_definite) report.failures.push_back("M is not positive definite");
    if (!report.K_positive_definite) report.failures.push_back("K is not positive definite");
    if (!report.D_positive_semidefinite)
        report.failures.push_back("D is not positive semidefinite");

    Eigen::JacobiSVD<Matrix> svd(sys.B);
    const Vector& sv = svd.singularValues();
    const double rank_tol =
        sv.size() > 0 ? sv(0) * static_cast<double>(std::max(sys.B.rows(), sys.B.cols())) * eps
                      : 0.0;
    report.rank_B = (sv.array() > rank_tol).count();
    report.B_full_rank = report.rank_B == report.m;
    if (!report.B_full_rank) report.failures.push_back("B does not have full column rank");

    report.passed = report.symmetry_ok && report.M_positive_definite &&
                    report.D_positive_semidefinite && report.K_positive_definite &&
                    report.B_full_rank;
    return report;
}

ValidationReport ensure_valid(const SecondOrderSystem& sys) {
    ValidationReport report = validate(sys);
    if (!report.passed) {
        std::string msg = "invalid second-order system:";
        for (const auto& f : report.failures) msg += " " + f + ";";
        throw ValidationError("validate", msg);
    }
    return report;
}

ComplexMatrix transfer_function(const SecondOrderSystem& sys, Complex s) {
    ComplexMatrix q = (s * s) * sys.M.cast<Complex>() + s * sys.D.cast<Complex>() +
                      sys.K.cast<Complex>();
    Eigen::PartialPivLU<ComplexMatrix> lu(q);
    const double rcond = lu.rcond();
    const double eps = std::numeric_limits<double>::epsilon();
    if (!(rcond > static_cast<double>(sys.n()) * eps)) {
        std::ostringstream msg;
        msg << "quadratic pencil s^2 M + s D + K is singular at s = " << s.real();
        if (s.imag() >= 0.0) msg << " + " << s.imag() << "i";
        else msg << " - " << -s.imag() << "i";
        throw ValidationError("transfer_function", msg.str());
    }
    ComplexMatrix x = lu.solve(sys.B.cast<Complex>());
    return s * (sys.B.transpose().cast<Complex>() * x);
}

OverdampingResult is_overdamped(const SecondOrderSystem& sys, double tol) {
    ensure_valid(sys);
    const double eps = std::numeric_limits<double>::epsilon();
    const double min_eig_D = min_eig_sym(sys.D);
    const double tol_D = static_cast<double>(sys.n()) * eps * std::abs(max_eig_sym(sys.D));
    if (min_eig_D <= tol_D)
        throw ValidationError("is_overdamped", "the overdamping test requires D positive definite");

    const double scale = sys.M.norm() + sys.D.norm() + sys.K.norm();
    if (tol < 0.0) tol = 1e-10 * scale;

    auto fval = [&sys](double mu) {
        return max_eig_sym(mu * mu * sys.M + mu * sys.D + sys.K);
    };

    // All pencil eigenvalues lie in (-lambda_max(M^{-1} D), 0), so the gap
    // point (if any) is bracketed by [-2 lambda_max(M^{-1} D), 0].
    Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> ges(symmetrized(sys.D), symmetrized(sys.M),
                                                         Eigen::EigenvaluesOnly);
    const double lam_md = ges.eigenvalues().maxCoeff();
    double lo = -2.0 * lam_md;
    double hi = 0.0;

    // lambda_max(mu^2 M + mu D + K) is convex in mu: golden-section search.
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = hi - gr * (hi - lo);
    double d = lo + gr * (hi - lo);
    double fc = fval(c), fd = fval(d);
    for (int it = 0; it < 200 && (d - c) > 1e-12 * std::max(1.0, std::abs(lo)); ++it) {
        if (fc < fd) {
            hi = d;
            d = c;
            fd = fc;
            c = hi - gr * (hi - lo);
            fc = fval(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + gr * (hi - lo);
            fd = fval(d);
        }
    }

    OverdampingResult result;
    result.witness_mu = fc < fd ? c : d;
    result.min_value = std::min(fc, fd);
    result.overdamped = result.min_value < -tol;
    return result;
}

std::optional<ComplexVector> overdamping_falsifier(const SecondOrderSystem& sys, int trials,
                                                   unsigned seed) {
    ensure_valid(sys);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const auto n = sys.n();

    for (int t = 0; t < trials; ++t) {
        ComplexVector v(n);
        for (Eigen::Index i = 0; i < n; ++i) v(i) = Complex(gauss(rng), gauss(rng));
        const double mv = (v.adjoint() * sys.M.cast<Complex>() * v)(0).real();
        const double dv = (v.adjoint() * sys.D.cast<Complex>() * v)(0).real();
        const double kv = (v.adjoint() * sys.K.cast<Complex>() * v)(0).real();
        if (dv * dv <= 4.0 * mv * kv) return v;
    }
    return std::nullopt;
}

SecondOrderSystem generate_triple_chain(int n_per_row, const TripleChainParams& params) {
    if (n_per_row < 1) throw ValidationError("generate_triple_chain", "n_per_row must be >= 1");
    for (double k : {params.k0, params.k1, params.k2, params.k3})
        if (!(k > 0.0))
            throw ValidationError("generate_triple_chain", "stiffness parameters must be positive");
    for (double m : {params.m0, params.m1, params.m2, params.m3})
        if (!(m > 0.0))
            throw ValidationError("generate_triple_chain", "mass parameters must be positive");
    if (!(params.alpha >= 0.0) || !(params.beta >= 0.0) || !(params.v >= 0.0))
        throw ValidationError("generate_triple_chain", "damping parameters must be nonnegative");
    const Eigen::Index n = static_cast<Eigen::Index>(n_per_row);
    const Eigen::Index total = 3 * n + 1;

    SecondOrderSystem sys;
    sys.M = Matrix::Zero(total, total);
    sys.K = Matrix::Zero(total, total);
    sys.B = Matrix::Ones(total, 1);

    const double row_k[3] = {params.k1, params.k2, params.k3};
    const double row_m[3] = {params.m1, params.m2, params.m3};
    for (int r = 0; r < 3; ++r) {
        const Eigen::Index off = static_cast<Eigen::Index>(r) * n;
        for (Eigen::Index i = 0; i < n; ++i) {
            sys.M(off + i, off + i) = row_m[r];
            sys.K(off + i, off + i) = 2.0 * row_k[r];
            if (i + 1 < n) {
                sys.K(off + i, off + i + 1) = -row_k[r];
                sys.K(off + i + 1, off + i) = -row_k[r];
            }
        }
        // Last mass of the row couples to the shared mass.
        sys.K(off + n - 1, total - 1) = -row_k[r];
        sys.K(total - 1, off + n - 1) = -row_k[r];
    }
    sys.M(total - 1, total - 1) = params.m0;
    sys.K(total - 1, total - 1) = params.k0 + params.k1 + params.k2 + params.k3;

    sys.D = params.alpha * sys.M + params.beta * sys.K;
    // Wall dampers on the first mass of each row.
    for (int r = 0; r < 3; ++r) {
        const Eigen::Index i = static_cast<Eigen::Index>(r) * n;
        sys.D(i, i) += params.v;
    }
    return sys;
}

}  // namespace soprbt
