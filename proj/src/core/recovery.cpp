#include "recovery.hpp"

#include "dense.hpp"
#include "fo_realization.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <sstream>
#include <utility>

namespace soprbt {

namespace {

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(3);
    os << std::scientific << v;
    return os.str();
}

// Reversed-row orthogonal factor U = J Q^T from a QR decomposition, so that
// U X stacks the zero rows of Q^T X = [R; 0] on top: U X = [0; flip(R)].
Matrix flipped_qt(const Matrix& x) {
    const Eigen::Index rows = x.rows();
    Eigen::HouseholderQR<Matrix> qr(x);
    Matrix qt = Matrix(qr.householderQ()).transpose();
    Matrix u(rows, rows);
    for (Eigen::Index i = 0; i < rows; ++i) u.row(i) = qt.row(rows - 1 - i);
    return u;
}

bool invertible(const Matrix& x) {
    if (x.rows() != x.cols()) return false;
    if (x.rows() == 0) return true;
    return Eigen::FullPivLU<Matrix>(x).isInvertible();
}

struct BlockOffsets {
    Eigen::Index m, ell, p, r;
    Eigen::Index o1() const { return 0; }
    Eigen::Index o2() const { return m; }
    Eigen::Index o3() const { return m + ell; }
    Eigen::Index o4() const { return r; }
    Eigen::Index o5() const { return r + p; }
    Eigen::Index o6() const { return r + p + ell; }
    Eigen::Index size(int b) const {
        switch (b) {
            case 1: case 6: return m;
            case 2: case 5: return ell;
            default: return p;
        }
    }
    Eigen::Index offset(int b) const {
        switch (b) {
            case 1: return o1();
            case 2: return o2();
            case 3: return o3();
            case 4: return o4();
            case 5: return o5();
            default: return o6();
        }
    }
};

}  // namespace

IdentifiedSystem identify_balanced_blocks(const Matrix& a, const Matrix& b, const Vector& sigma1,
                                          const RecoveryOptions& opts) {
    const Eigen::Index two_r = a.rows();
    if (a.cols() != two_r || two_r < 2 || two_r % 2 != 0) {
        throw ValidationError("identify_balanced_blocks",
                              "state matrix must be square of even order");
    }
    if (b.rows() != two_r || b.cols() < 1) {
        throw ValidationError("identify_balanced_blocks",
                              "input matrix must have one row per state");
    }
    if (sigma1.size() != two_r) {
        throw ValidationError("identify_balanced_blocks",
                              "characteristic-value vector must have one entry per state");
    }
    const Eigen::Index r = two_r / 2;
    const Eigen::Index m = b.cols();

    // The retained layout puts sigma descending on the first (negative) half
    // and ascending on the second, so the sigma = 1 groups are a prefix and a
    // suffix respectively.
    Eigen::Index ones_neg = 0;
    while (ones_neg < r && std::abs(sigma1(ones_neg) - 1.0) <= opts.tol_one) ++ones_neg;
    Eigen::Index ones_pos = 0;
    while (ones_pos < r && std::abs(sigma1(two_r - 1 - ones_pos) - 1.0) <= opts.tol_one) {
        ++ones_pos;
    }
    if (ones_neg != ones_pos) {
        std::ostringstream os;
        os << "sigma = 1 boundary sizes differ between signs (" << ones_neg << " vs " << ones_pos
           << ")";
        throw StructureError("identify_balanced_blocks", os.str());
    }
    if (ones_neg < m) {
        std::ostringstream os;
        os << "sigma = 1 boundary block (" << ones_neg << " states per sign) is smaller than the "
           << "input dimension " << m;
        throw StructureError("identify_balanced_blocks", os.str());
    }
    BalancedBlocks blocks;
    blocks.m = m;
    blocks.ell = ones_neg - m;
    blocks.p = r - ones_neg;
    const BlockOffsets bo{blocks.m, blocks.ell, blocks.p, r};
    const Eigen::Index nb = m + blocks.ell;

    Matrix aw = a;
    Matrix bw = b;
    Matrix q = Matrix::Identity(two_r, two_r);

    // Positive boundary: rotate the trailing boundary states so the input map
    // becomes [0; B6] with B6 invertible.
    {
        const Matrix u = flipped_qt(bw.bottomRows(nb));
        aw.bottomRows(nb) = u * aw.bottomRows(nb);
        aw.rightCols(nb) = aw.rightCols(nb) * u.transpose();
        bw.bottomRows(nb) = u * bw.bottomRows(nb);
        q.rightCols(nb) = q.rightCols(nb) * u.transpose();
    }
    if (!invertible(bw.bottomRows(m))) {
        throw StructureError("identify_balanced_blocks", "boundary input block is singular");
    }

    // Negative boundary: rotate the leading boundary states so the coupling
    // into the imaginary-zero block becomes [0; A25] with A25 invertible.
    if (blocks.ell > 0) {
        const Matrix slab = aw.block(0, bo.o5(), nb, blocks.ell);
        const Matrix u = flipped_qt(slab);
        aw.topRows(nb) = u * aw.topRows(nb);
        aw.leftCols(nb) = aw.leftCols(nb) * u.transpose();
        bw.topRows(nb) = u * bw.topRows(nb);
        q.leftCols(nb) = q.leftCols(nb) * u.transpose();
        if (!invertible(aw.block(bo.o2(), bo.o5(), blocks.ell, blocks.ell))) {
            throw StructureError("identify_balanced_blocks",
                                 "imaginary-zero coupling block is singular");
        }
    }

    // Signature-symmetry projection: S A S = A^T with S = diag(-I_r, I_r).
    Matrix sas = aw;
    sas.topRightCorner(r, r) *= -1.0;
    sas.bottomLeftCorner(r, r) *= -1.0;
    double residual = (sas - aw.transpose()).cwiseAbs().maxCoeff() * 0.5;
    aw = 0.5 * (aw + sas.transpose());

    // Required zero pattern of the balanced layout; everything outside the
    // listed blocks vanishes.
    static const bool nonzero[7][7] = {
        {false, false, false, false, false, false, false},
        {false, false, false, false, false, false, true},   // (1,6)
        {false, false, false, false, false, true, true},    // (2,5), (2,6)
        {false, false, false, true, true, false, true},     // (3,3), (3,4), (3,6)
        {false, false, false, true, true, false, true},     // (4,3), (4,4), (4,6)
        {false, false, true, false, false, false, false},   // (5,2)
        {false, true, true, true, true, false, true},       // (6,1..4), (6,6)
    };
    for (int bi = 1; bi <= 6; ++bi) {
        for (int bj = 1; bj <= 6; ++bj) {
            if (nonzero[bi][bj]) continue;
            auto blk = aw.block(bo.offset(bi), bo.offset(bj), bo.size(bi), bo.size(bj));
            if (blk.size() == 0) continue;
            residual = std::max(residual, blk.cwiseAbs().maxCoeff());
            blk.setZero();
        }
    }
    if (two_r > m) {
        auto btop = bw.topRows(two_r - m);
        residual = std::max(residual, btop.cwiseAbs().maxCoeff());
        btop.setZero();
    }

    const double scale = std::max(1.0, a.norm());
    if (residual > opts.pattern_tol * scale) {
        std::ostringstream os;
        os << "balanced zero pattern violated: worst off-pattern entry " << fmt(residual)
           << " exceeds " << fmt(opts.pattern_tol * scale);
        throw StructureError("identify_balanced_blocks", os.str());
    }
    if (!invertible(aw.block(bo.o1(), bo.o6(), m, m))) {
        throw StructureError("identify_balanced_blocks", "origin-zero coupling block is singular");
    }

    IdentifiedSystem out;
    out.A = std::move(aw);
    out.B = std::move(bw);
    out.blocks = blocks;
    out.pattern_residual = residual / scale;
    out.Q = std::move(q);
    return out;
}

ZeroDynamics zero_dynamics_block(const Matrix& a, const BalancedBlocks& blocks) {
    const BlockOffsets bo{blocks.m, blocks.ell, blocks.p, blocks.r()};
    if (a.rows() != 2 * blocks.r() || a.cols() != a.rows()) {
        throw ValidationError("zero_dynamics_block", "state matrix does not match the block sizes");
    }
    ZeroDynamics zd;
    const Eigen::Index p2 = 2 * blocks.p;
    zd.Az = a.block(bo.o3(), bo.o3(), p2, p2);
    zd.Bz = a.block(bo.o3(), bo.o6(), p2, blocks.m);
    zd.Cz = a.block(bo.o6(), bo.o3(), blocks.m, p2);
    zd.Dz = -a.block(bo.o6(), bo.o6(), blocks.m, blocks.m);
    return zd;
}

ZeroDynamicsCheck verify_zero_dynamics(const ZeroDynamics& zd, const FirstOrderSystem& reduced,
                                       const RecoveryOptions& opts) {
    ZeroDynamicsCheck out;
    const Eigen::Index p2 = zd.Az.rows();
    if (p2 == 0) return out;

    const ComplexVector eigs = zd.Az.eigenvalues();
    double max_re = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < p2; ++i) max_re = std::max(max_re, eigs(i).real());
    out.stability_margin = -max_re;
    const double stab_tol = 1e-10 * std::max(1.0, zd.Az.norm());
    if (!(out.stability_margin > stab_tol)) {
        std::ostringstream os;
        os << "zero-dynamics spectrum is not strictly stable: max Re = " << fmt(max_re);
        throw StructureError("verify_zero_dynamics", os.str());
    }

    if (!opts.check_zero_match) return out;

    // The zero-dynamics spectrum must reproduce the transmission zeros of the
    // reduced realization that lie in the open left half-plane.
    const ZeroResult zr = system_zeros(reduced);
    std::vector<Complex> stable;
    for (const SystemZero& z : zr.zeros) {
        if (z.value.real() < -1e-8 * std::max(1.0, std::abs(z.value))) {
            for (int i = 0; i < z.algebraic_multiplicity; ++i) stable.push_back(z.value);
        }
    }
    if (static_cast<Eigen::Index>(stable.size()) != p2) {
        std::ostringstream os;
        os << "stable transmission zero count " << stable.size()
           << " does not match the zero-dynamics order " << p2;
        throw StructureError("verify_zero_dynamics", os.str());
    }
    std::vector<bool> used(stable.size(), false);
    double worst = 0.0;
    for (Eigen::Index i = 0; i < p2; ++i) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t best_j = 0;
        for (std::size_t j = 0; j < stable.size(); ++j) {
            if (used[j]) continue;
            const double d = std::abs(stable[j] - eigs(i));
            if (d < best) {
                best = d;
                best_j = j;
            }
        }
        used[best_j] = true;
        worst = std::max(worst, best / std::max(1.0, std::abs(eigs(i))));
    }
    out.zero_match_residual = worst;
    if (worst > opts.zero_match_tol) {
        std::ostringstream os;
        os << "zero-dynamics spectrum deviates from the stable transmission zeros by "
           << fmt(worst);
        throw StructureError("verify_zero_dynamics", os.str());
    }
    return out;
}

double ComplexPairEigen::nu() const { return std::hypot(sigma, tau); }

SignTypedEigen sign_typed_diagonalize(const Matrix& s, const Matrix& a,
                                      const RecoveryOptions& opts) {
    const Eigen::Index n = a.rows();
    if (a.cols() != n || s.rows() != n || s.cols() != n) {
        throw ValidationError("sign_typed_diagonalize", "S and A must be square of equal order");
    }
    SignTypedEigen out;
    if (n == 0) {
        out.T = Matrix(0, 0);
        out.canon = Matrix(0, 0);
        out.signature = Vector(0);
        return out;
    }
    if ((s - s.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, s.norm())) {
        throw ValidationError("sign_typed_diagonalize", "S must be symmetric");
    }
    const Matrix sa = s * a;
    const double sym_scale = std::max(1.0, sa.norm());
    if ((sa - sa.transpose()).cwiseAbs().maxCoeff() > 1e-8 * sym_scale) {
        throw ValidationError("sign_typed_diagonalize", "pair is not structured: S A != A^T S");
    }

    Eigen::EigenSolver<Matrix> es(a);
    if (es.info() != Eigen::Success) {
        throw SolverError("sign_typed_diagonalize", "eigendecomposition failed");
    }
    {
        Eigen::JacobiSVD<ComplexMatrix> svd(es.eigenvectors());
        const double smin = svd.singularValues()(svd.singularValues().size() - 1);
        const double smax = svd.singularValues()(0);
        if (!(smin > 0.0) || smax / smin > opts.eig_cond_limit) {
            std::ostringstream os;
            os << "eigenvector basis condition "
               << (smin > 0.0 ? fmt(smax / smin) : std::string("inf"))
               << " exceeds the diagonalizability gate " << fmt(opts.eig_cond_limit);
            throw StructureError("sign_typed_diagonalize", os.str());
        }
    }

    std::vector<Eigen::Index> real_idx, pair_idx;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double im = es.eigenvalues()(i).imag();
        if (im == 0.0) {
            real_idx.push_back(i);
        } else if (im > 0.0) {
            pair_idx.push_back(i);
        }
    }
    std::sort(real_idx.begin(), real_idx.end(), [&](Eigen::Index x, Eigen::Index y) {
        return es.eigenvalues()(x).real() < es.eigenvalues()(y).real();
    });
    std::sort(pair_idx.begin(), pair_idx.end(), [&](Eigen::Index x, Eigen::Index y) {
        const Complex zx = es.eigenvalues()(x), zy = es.eigenvalues()(y);
        if (zx.real() != zy.real()) return zx.real() < zy.real();
        return zx.imag() < zy.imag();
    });
    if (static_cast<Eigen::Index>(real_idx.size() + 2 * pair_idx.size()) != n) {
        throw StructureError("sign_typed_diagonalize", "complex eigenvalues do not pair up");
    }

    Matrix t(n, n);
    Eigen::Index col = 0;

    // Real eigenvalues: per cluster, diagonalize the S-Gram of the
    // eigenvector basis so each vector carries |v^T S v| = 1 and a type.
    std::size_t i = 0;
    while (i < real_idx.size()) {
        std::size_t j = i + 1;
        const double vi = es.eigenvalues()(real_idx[i]).real();
        while (j < real_idx.size()) {
            const double vj = es.eigenvalues()(real_idx[j]).real();
            if (std::abs(vj - vi) > 1e-8 * std::max(1.0, std::max(std::abs(vi), std::abs(vj)))) {
                break;
            }
            ++j;
        }
        const Eigen::Index g = static_cast<Eigen::Index>(j - i);
        Matrix vc(n, g);
        double value_sum = 0.0;
        for (Eigen::Index c = 0; c < g; ++c) {
            const Eigen::Index idx = real_idx[i + static_cast<std::size_t>(c)];
            vc.col(c) = es.eigenvectors().col(idx).real();
            const double nrm = vc.col(c).norm();
            if (!(nrm > 0.0)) {
                throw StructureError("sign_typed_diagonalize", "zero eigenvector returned");
            }
            vc.col(c) /= nrm;
            value_sum += es.eigenvalues()(idx).real();
        }
        const double value = value_sum / static_cast<double>(g);
        const Matrix gram = symmetrized(vc.transpose() * s * vc);
        Eigen::SelfAdjointEigenSolver<Matrix> ges(gram);
        for (Eigen::Index c = 0; c < g; ++c) {
            const double lam = ges.eigenvalues()(c);
            if (std::abs(lam) <= opts.degenerate_tol) {
                std::ostringstream os;
                os << "degenerate sign characteristic at eigenvalue " << value
                   << " (Gram eigenvalue " << fmt(lam) << ")";
                throw StructureError("sign_typed_diagonalize", os.str());
            }
            t.col(col) = vc * ges.eigenvectors().col(c) / std::sqrt(std::abs(lam));
            out.reals.push_back(RealTypedEigen{value, lam > 0.0 ? 1 : -1});
            ++col;
        }
        i = j;
    }

    // Complex pairs: bilinear normalization w^T S w = 2i makes the real basis
    // [Re w, Im w] carry the Gram [[0, 1], [1, 0]]; the closed-form congruence
    // Theta then maps the rotation block to [[0, nu], [-nu, 2 sigma]] with
    // local signature (-1, +1).
    for (Eigen::Index idx : pair_idx) {
        const ComplexVector w0 = es.eigenvectors().col(idx);
        const Complex g = (w0.transpose() * s * w0)(0, 0);
        if (std::abs(g) <= opts.degenerate_tol) {
            std::ostringstream os;
            os << "degenerate bilinear pairing at eigenvalue " << es.eigenvalues()(idx);
            throw StructureError("sign_typed_diagonalize", os.str());
        }
        const Complex tscale = std::sqrt(Complex(0.0, 2.0) / g);
        const ComplexVector w = tscale * w0;
        const Vector u = w.real();
        const Vector v = w.imag();
        const double e11 = u.dot(s * u);
        const double e12 = u.dot(s * v);
        const double e22 = v.dot(s * v);
        if (std::abs(e11) > 1e-6 || std::abs(e22) > 1e-6 || std::abs(e12 - 1.0) > 1e-6) {
            throw StructureError("sign_typed_diagonalize",
                                 "complex-pair normalization failed to reach the unit Gram");
        }

        const double sigma = es.eigenvalues()(idx).real();
        const double tau = es.eigenvalues()(idx).imag();
        const double nu = std::hypot(sigma, tau);
        const double x1 = std::sqrt((nu - sigma) / (2.0 * tau));
        const double x2 = -1.0 / (2.0 * x1);
        const double y1 = -(sigma * x1 + tau * x2) / nu;
        const double y2 = (tau * x1 - sigma * x2) / nu;
        t.col(col) = x1 * u + x2 * v;
        t.col(col + 1) = y1 * u + y2 * v;
        out.pairs.push_back(ComplexPairEigen{sigma, tau});
        col += 2;
    }

    // Global validation: congruence to a signature matrix and the canonical
    // block pattern.
    const Matrix gram_full = t.transpose() * s * t;
    out.signature = Vector(n);
    double snap_res = 0.0;
    for (Eigen::Index d = 0; d < n; ++d) {
        out.signature(d) = gram_full(d, d) > 0.0 ? 1.0 : -1.0;
        for (Eigen::Index e = 0; e < n; ++e) {
            const double want = (d == e) ? out.signature(d) : 0.0;
            snap_res = std::max(snap_res, std::abs(gram_full(d, e) - want));
        }
    }
    if (snap_res > 1e-6) {
        std::ostringstream os;
        os << "sign normalization failed: T^T S T deviates from a signature matrix by "
           << fmt(snap_res);
        throw StructureError("sign_typed_diagonalize", os.str());
    }
    out.T = t;
    out.canon = t.partialPivLu().solve(a * t);
    return out;
}

ConditionCheck check_condition(std::vector<double> mu_minus, std::vector<double> mu_plus) {
    std::sort(mu_minus.begin(), mu_minus.end());
    std::sort(mu_plus.begin(), mu_plus.end());
    ConditionCheck out;
    out.ok = mu_minus.size() == mu_plus.size();
    if (out.ok) {
        for (std::size_t i = 0; i < mu_minus.size(); ++i) {
            if (!(mu_minus[i] < mu_plus[i])) {
                out.ok = false;
                break;
            }
        }
    }
    out.mu_minus = std::move(mu_minus);
    out.mu_plus = std::move(mu_plus);
    return out;
}

PaddingPlan pad_spectrum(const std::vector<double>& mu_minus, const std::vector<double>& mu_plus) {
    std::vector<double> minus = mu_minus, plus = mu_plus;
    std::sort(minus.begin(), minus.end());
    std::sort(plus.begin(), plus.end());
    for (double v : minus) {
        if (!(v < 0.0)) {
            throw ValidationError("pad_spectrum", "all zero-dynamics eigenvalues must be negative");
        }
    }
    for (double v : plus) {
        if (!(v < 0.0)) {
            throw ValidationError("pad_spectrum", "all zero-dynamics eigenvalues must be negative");
        }
    }

    double low = -1.0, high = -1.0;
    if (!minus.empty() || !plus.empty()) {
        low = std::numeric_limits<double>::infinity();
        high = -std::numeric_limits<double>::infinity();
        for (double v : minus) { low = std::min(low, v); high = std::max(high, v); }
        for (double v : plus) { low = std::min(low, v); high = std::max(high, v); }
    }

    const Eigen::Index km = static_cast<Eigen::Index>(minus.size());
    const Eigen::Index kp = static_cast<Eigen::Index>(plus.size());
    for (Eigen::Index q = std::max(km, kp);; ++q) {
        if (q > km + kp && q > 0) {
            throw SolverError("pad_spectrum", "padding search failed to terminate");
        }
        const Eigen::Index dm = q - km;
        const Eigen::Index dp = q - kp;
        PaddingPlan plan;
        for (Eigen::Index j = 0; j < dm; ++j) {
            plan.extra_minus.push_back(low * std::pow(2.0, static_cast<double>(dm - j)));
        }
        for (Eigen::Index j = 0; j < dp; ++j) {
            plan.extra_plus.push_back(high / std::pow(2.0, static_cast<double>(j + 1)));
        }
        std::vector<double> mm = plan.extra_minus;
        mm.insert(mm.end(), minus.begin(), minus.end());
        std::vector<double> pp = plus;
        pp.insert(pp.end(), plan.extra_plus.begin(), plan.extra_plus.end());
        bool ok = true;
        for (Eigen::Index idx = 0; idx < q; ++idx) {
            if (!(mm[static_cast<std::size_t>(idx)] < pp[static_cast<std::size_t>(idx)])) {
                ok = false;
                break;
            }
        }
        if (ok) return plan;
    }
}

Matrix debalance_pair(double mu_plus, double mu_minus) {
    if (!(mu_minus < mu_plus && mu_plus < 0.0)) {
        std::ostringstream os;
        os << "pair (" << mu_minus << ", " << mu_plus
           << ") violates the ordering mu- < mu+ < 0";
        throw StructureError("debalance_pair", os.str());
    }
    const double den = mu_minus - mu_plus;  // < 0
    const double a = std::sqrt(mu_minus / den);
    const double b = std::sqrt(mu_plus / den);
    Matrix t(2, 2);
    t << a, b, b, a;
    return t;
}

RecoveryResult recover_second_order(const ReducedStructured& red, const RecoveryOptions& opts) {
    const Eigen::Index r = red.r;
    const Eigen::Index m = red.Bred.cols();
    if (r < 1 || red.Ared.rows() != 2 * r || red.Ared.cols() != 2 * r ||
        red.Bred.rows() != 2 * r || red.Sigma1.size() != 2 * r) {
        throw ValidationError("recover_second_order", "reduced realization has inconsistent sizes");
    }

    RecoveryResult res;
    RecoveryReport& rep = res.report;

    IdentifiedSystem id = identify_balanced_blocks(red.Ared, red.Bred, red.Sigma1, opts);
    rep.blocks = id.blocks;
    rep.pattern_residual = id.pattern_residual;
    rep.transforms.push_back({"boundary-orthogonal",
                              "QR fixes of the sigma = 1 boundary blocks",
                              opts.store_transforms ? id.Q : Matrix()});
    rep.transforms.push_back(
        {"pattern-projection", "worst off-pattern entry " + fmt(id.pattern_residual), Matrix()});

    Matrix aw = std::move(id.A);
    Matrix bw = std::move(id.B);
    const Eigen::Index ell = id.blocks.ell;
    const Eigen::Index p = id.blocks.p;
    const BlockOffsets bo{m, ell, p, r};

    std::vector<double> plus_vals, minus_vals;  // zero-dynamics reals by type
    Eigen::Index c = 0;                         // complex pair count

    if (p > 0) {
        const ZeroDynamics zd = zero_dynamics_block(aw, id.blocks);
        const ZeroDynamicsCheck zc = verify_zero_dynamics(zd, red.fo(), opts);
        rep.stability_margin = zc.stability_margin;
        rep.zero_match_residual = zc.zero_match_residual;

        Matrix sp = Matrix::Identity(2 * p, 2 * p);
        sp.topLeftCorner(p, p) *= -1.0;
        const SignTypedEigen st = sign_typed_diagonalize(sp, zd.Az, opts);
        rep.complex_zeros = st.pairs;

        // Embed T on the zero-dynamics states (blocks 3 and 4 are adjacent).
        const Eigen::Index zo = bo.o3();
        const Eigen::Index zn = 2 * p;
        Eigen::PartialPivLU<Matrix> tlu(st.T);
        aw.middleRows(zo, zn) = tlu.solve(aw.middleRows(zo, zn));
        aw.middleCols(zo, zn) = aw.middleCols(zo, zn) * st.T;
        Matrix tglob;
        if (opts.store_transforms) {
            tglob = Matrix::Identity(2 * r, 2 * r);
            tglob.block(zo, zo, zn, zn) = st.T;
        }
        rep.transforms.push_back({"zero-dynamics-diagonalization",
                                  std::to_string(st.reals.size()) + " real, " +
                                      std::to_string(st.pairs.size()) + " complex pairs",
                                  std::move(tglob)});

        // Current signature over the zero-dynamics states.
        const Eigen::Index n_real = static_cast<Eigen::Index>(st.reals.size());
        c = static_cast<Eigen::Index>(st.pairs.size());

        // Positive-type zeros carry pole-pair sign -1 and belong to the
        // negative half; negative-type zeros to the positive half.
        std::vector<std::pair<double, Eigen::Index>> plus_states, minus_states;
        for (Eigen::Index j = 0; j < n_real; ++j) {
            const double value = st.reals[static_cast<std::size_t>(j)].value;
            if (st.reals[static_cast<std::size_t>(j)].type < 0) {
                plus_states.emplace_back(value, zo + j);
            } else {
                minus_states.emplace_back(value, zo + j);
            }
        }
        if (plus_states.size() != minus_states.size()) {
            throw StructureError("recover_second_order",
                                 "zero-dynamics sign types are unbalanced");
        }
        std::sort(plus_states.begin(), plus_states.end());
        std::sort(minus_states.begin(), minus_states.end());
        for (const auto& kv : plus_states) plus_vals.push_back(kv.first);
        for (const auto& kv : minus_states) minus_vals.push_back(kv.first);

        // Permute into the normal-form layout
        // [m, ell, pair-first, mu+ | mu-, pair-second, ell, m].
        std::vector<Eigen::Index> ord;
        ord.reserve(static_cast<std::size_t>(2 * r));
        for (Eigen::Index j = 0; j < bo.o3(); ++j) ord.push_back(j);
        for (Eigen::Index j = 0; j < c; ++j) ord.push_back(zo + n_real + 2 * j);
        for (const auto& kv : plus_states) ord.push_back(kv.second);
        for (const auto& kv : minus_states) ord.push_back(kv.second);
        for (Eigen::Index j = 0; j < c; ++j) ord.push_back(zo + n_real + 2 * j + 1);
        for (Eigen::Index j = bo.o5(); j < 2 * r; ++j) ord.push_back(j);

        aw = aw(ord, ord).eval();
        bw = bw(ord, Eigen::all).eval();
        Matrix pmat;
        if (opts.store_transforms) {
            pmat = Matrix::Zero(2 * r, 2 * r);
            for (Eigen::Index j = 0; j < 2 * r; ++j) pmat(ord[static_cast<std::size_t>(j)], j) = 1.0;
        }
        rep.transforms.push_back(
            {"normal-form-permutation", "zero types split across halves", std::move(pmat)});

        // Coupling rescale: state scalings t = sqrt(|a|/|b|) tighten the
        // magnitude symmetry between the two coupling directions; entries
        // below the activation threshold keep t = 1.
        const Eigen::Index k = static_cast<Eigen::Index>(plus_vals.size());
        const Eigen::Index tail_off = 2 * r - (m + ell);
        const double bnorm = std::max(1.0, bw.norm());
        std::vector<Eigen::Index> realpos;
        for (Eigen::Index j = 0; j < k; ++j) realpos.push_back(m + ell + c + j);  // mu+
        for (Eigen::Index j = 0; j < k; ++j) realpos.push_back(r + j);            // mu-
        Vector tdiag = Vector::Ones(2 * r);
        for (Eigen::Index sidx : realpos) {
            double bestprod = 0.0;
            Eigen::Index bestj = -1;
            for (Eigen::Index j = 0; j < m + ell; ++j) {
                const double prod =
                    std::abs(aw(sidx, tail_off + j)) * std::abs(aw(tail_off + j, sidx));
                if (prod > bestprod) {
                    bestprod = prod;
                    bestj = j;
                }
            }
            double tsc = 1.0;
            if (bestj >= 0 && bestprod > opts.coupling_tol * bnorm) {
                tsc = std::sqrt(std::abs(aw(sidx, tail_off + bestj)) /
                                std::abs(aw(tail_off + bestj, sidx)));
            }
            if (tsc != 1.0) {
                aw.row(sidx) /= tsc;
                aw.col(sidx) *= tsc;
                tdiag(sidx) = tsc;
                rep.max_rescale_deviation =
                    std::max(rep.max_rescale_deviation, std::abs(tsc - 1.0));
            }
        }
        rep.transforms.push_back({"coupling-rescale",
                                  "worst |t - 1| = " + fmt(rep.max_rescale_deviation),
                                  opts.store_transforms ? Matrix(tdiag.asDiagonal()) : Matrix()});
    }

    const ConditionCheck cond = check_condition(minus_vals, plus_vals);
    rep.condition_ok = cond.ok;
    rep.mu_minus = cond.mu_minus;
    rep.mu_plus = cond.mu_plus;

    Eigen::Index k = static_cast<Eigen::Index>(cond.mu_plus.size());
    Eigen::Index d = 0;
    std::vector<double> plus_all = cond.mu_plus, minus_all = cond.mu_minus;
    if (!cond.ok) {
        rep.padding = pad_spectrum(cond.mu_minus, cond.mu_plus);
        if (rep.padding.extra_minus.size() != rep.padding.extra_plus.size()) {
            throw StructureError("recover_second_order",
                                 "padding cannot keep the two halves square");
        }
        d = rep.padding.pairs_added();

        // Embed the padded states: new mu+ append to the negative half, new
        // mu- prepend to the positive half; all couplings stay zero so the
        // transfer function is unchanged.
        const Eigen::Index rf = r + d;
        const Eigen::Index plus_end = m + ell + c + k;  // insertion point, negative half
        Matrix a2 = Matrix::Zero(2 * rf, 2 * rf);
        Matrix b2 = Matrix::Zero(2 * rf, m);
        std::vector<Eigen::Index> map(static_cast<std::size_t>(2 * r));
        for (Eigen::Index j = 0; j < 2 * r; ++j) {
            Eigen::Index nj = j;
            if (j >= plus_end) nj += d;      // room for appended mu+
            if (j >= r) nj += d;             // room for prepended mu-
            map[static_cast<std::size_t>(j)] = nj;
        }
        for (Eigen::Index i2 = 0; i2 < 2 * r; ++i2) {
            for (Eigen::Index j2 = 0; j2 < 2 * r; ++j2) {
                a2(map[static_cast<std::size_t>(i2)], map[static_cast<std::size_t>(j2)]) =
                    aw(i2, j2);
            }
            b2.row(map[static_cast<std::size_t>(i2)]) = bw.row(i2);
        }
        for (Eigen::Index j = 0; j < d; ++j) {
            a2(plus_end + j, plus_end + j) = rep.padding.extra_plus[static_cast<std::size_t>(j)];
            a2(rf + j, rf + j) = rep.padding.extra_minus[static_cast<std::size_t>(j)];
        }
        aw = std::move(a2);
        bw = std::move(b2);
        plus_all.insert(plus_all.end(), rep.padding.extra_plus.begin(),
                        rep.padding.extra_plus.end());
        minus_all.insert(minus_all.begin(), rep.padding.extra_minus.begin(),
                         rep.padding.extra_minus.end());
        std::ostringstream os;
        os << d << " pair(s) added";
        rep.transforms.push_back({"padding", os.str(), Matrix()});
    }

    const Eigen::Index rf = r + d;
    const Eigen::Index q = k + d;

    // Debalance every (mu+, mu-) pair with one global block congruence.
    if (q > 0) {
        Matrix g = Matrix::Identity(2 * rf, 2 * rf);
        Matrix ginv = Matrix::Identity(2 * rf, 2 * rf);
        for (Eigen::Index j = 0; j < q; ++j) {
            const double mp = plus_all[static_cast<std::size_t>(j)];
            const double mn = minus_all[static_cast<std::size_t>(j)];
            const Matrix t = debalance_pair(mp, mn);
            const Eigen::Index ip = m + ell + c + j;  // mu+ state, negative half
            const Eigen::Index in = rf + j;           // mu- state, positive half
            g(ip, ip) = t(0, 0);
            g(ip, in) = t(0, 1);
            g(in, ip) = t(1, 0);
            g(in, in) = t(1, 1);
            ginv(ip, ip) = t(1, 1);
            ginv(ip, in) = -t(0, 1);
            ginv(in, ip) = -t(1, 0);
            ginv(in, in) = t(0, 0);
        }
        aw = ginv * aw * g;
        bw = ginv * bw;
        rep.transforms.push_back({"debalance", std::to_string(q) + " pair(s)",
                                  opts.store_transforms ? g : Matrix()});
    }

    // Assembly: the state order is already [positions | velocities], so the
    // realization must now read [[0, G^T], [-G, -D]] with B = [0; B2].
    const double anorm = std::max(1.0, aw.norm());
    double raw = 0.0;
    if (rf > 0) raw = aw.topLeftCorner(rf, rf).cwiseAbs().maxCoeff();
    const Matrix upper = aw.topRightCorner(rf, rf);
    const Matrix lower = aw.bottomLeftCorner(rf, rf);
    raw = std::max(raw, 0.5 * (upper.transpose() + lower).cwiseAbs().maxCoeff());
    const Matrix dblock = -aw.bottomRightCorner(rf, rf);
    raw = std::max(raw, 0.5 * (dblock - dblock.transpose()).cwiseAbs().maxCoeff());
    raw = std::max(raw, bw.topRows(rf).cwiseAbs().maxCoeff());
    rep.assembly_residual = raw / anorm;
    if (rep.assembly_residual > opts.assembly_tol) {
        std::ostringstream os;
        os << "second-order pattern not reached: relative residual "
           << fmt(rep.assembly_residual) << " exceeds " << fmt(opts.assembly_tol);
        throw StructureError("recover_second_order", os.str());
    }

    res.system.Gred = 0.5 * (upper.transpose() - lower);
    res.system.Dred = symmetrized(dblock);
    res.system.Bred = bw.bottomRows(rf);
    if (!invertible(res.system.Gred)) {
        throw StructureError("recover_second_order", "recovered stiffness factor is singular");
    }
    rep.transforms.push_back({"assembly", "read-off of (I, D, G G^T, B)", Matrix()});

    const Vector deig = eigvals_sym(res.system.Dred);
    const double dscale = std::max(1.0, deig.cwiseAbs().maxCoeff());
    for (Eigen::Index j = 0; j < deig.size(); ++j) {
        if (deig(j) < -1e-10 * dscale) ++rep.negative_damping_eigs;
    }
    rep.final_r = rf;
    return res;
}

OverdampedCheck overdamped_pipeline_check(const ReducedStructured& red,
                                          const ReducedSecondOrder& so,
                                          const RecoveryOptions& opts) {
    OverdampedCheck out;
    const Eigen::Index rf = so.order();
    SecondOrderSystem sys{Matrix::Identity(rf, rf), so.Dred, so.Kred(), so.Bred};
    // The overdamping test needs strictly positive definite damping; an
    // indefinite recovered D settles the question negatively right away.
    const Vector deig = eigvals_sym(so.Dred);
    const double dtol = static_cast<double>(rf) * std::numeric_limits<double>::epsilon() *
                        deig.cwiseAbs().maxCoeff();
    out.reduced_overdamped = deig.minCoeff() > dtol && is_overdamped(sys).overdamped;

    const SignTypedEigen st = sign_typed_diagonalize(red.sr(), red.Ared, opts);
    out.poles_real = st.pairs.empty();
    if (out.poles_real && !st.reals.empty()) {
        double max_pos = -std::numeric_limits<double>::infinity();
        double min_neg = std::numeric_limits<double>::infinity();
        for (const RealTypedEigen& re : st.reals) {
            if (re.type > 0) {
                max_pos = std::max(max_pos, re.value);
            } else {
                min_neg = std::min(min_neg, re.value);
            }
        }
        out.pole_gap = min_neg - max_pos;
        out.ordering_ok = std::isfinite(out.pole_gap) && out.pole_gap > 0.0;
    }
    return out;
}

}  // namespace soprbt
