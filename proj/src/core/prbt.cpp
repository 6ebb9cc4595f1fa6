#include "prbt.hpp"

#include "dense.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace soprbt {

namespace {

// Clusters consecutive sigma values (already sorted descending) into
// multiplicity groups. Relative tolerance with a small absolute floor tied
// to eigensolver round-off so that near-machine-zero twins still merge.
std::vector<SpectrumGroup> cluster_descending(const std::vector<double>& sigmas, double cluster_tol,
                                              double abs_scale) {
    std::vector<SpectrumGroup> groups;
    const double floor_tol = 100.0 * std::numeric_limits<double>::epsilon() * abs_scale;
    for (double s : sigmas) {
        if (!groups.empty()) {
            double rep = groups.back().sigma;
            double tol = std::max(cluster_tol * std::max(rep, s), floor_tol);
            if (std::abs(s - rep) <= tol) {
                groups.back().multiplicity += 1;
                continue;
            }
        }
        groups.push_back(SpectrumGroup{s, 1});
    }
    return groups;
}

std::vector<Eigen::Index> boundaries(const std::vector<SpectrumGroup>& groups) {
    std::vector<Eigen::Index> b;
    Eigen::Index acc = 0;
    for (const auto& g : groups) {
        acc += g.multiplicity;
        b.push_back(acc);
    }
    return b;
}

std::string join_indices(const std::vector<Eigen::Index>& v) {
    std::ostringstream os;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i > 0) os << ", ";
        os << v[i];
    }
    return os.str();
}

}  // namespace

SignedSpectrum signed_eigendecomposition(const Matrix& l, Eigen::Index n, double cluster_tol) {
    if (n < 1 || l.cols() != 2 * n) {
        throw ValidationError("signed_eigendecomposition",
                              "factor must have 2n columns for half-order n");
    }
    if (l.rows() < 1 || l.rows() > 2 * n) {
        throw ValidationError("signed_eigendecomposition",
                              "factor row count must lie in [1, 2n]");
    }

    // X = L S_n L^T with S_n = diag(-I_n, I_n).
    Matrix ls = l;
    ls.leftCols(n) *= -1.0;
    Matrix x = symmetrized(ls * l.transpose());

    Eigen::SelfAdjointEigenSolver<Matrix> es(x);
    if (es.info() != Eigen::Success) {
        throw SolverError("signed_eigendecomposition", "symmetric eigendecomposition failed");
    }

    SignedSpectrum spec;
    spec.n = n;
    spec.U = es.eigenvectors();
    spec.eigenvalues = es.eigenvalues();  // ascending

    const Eigen::Index rows = l.rows();
    const double absmax = spec.eigenvalues.cwiseAbs().maxCoeff();
    if (absmax > 1.0 + 1e-6) {
        throw ValidationError("signed_eigendecomposition",
                              "characteristic value exceeds 1: factor is not contractive");
    }
    const double zero_tol = 1e-10 * std::max(1.0, absmax);

    Eigen::Index neg = 0;
    while (neg < rows && spec.eigenvalues(neg) < -zero_tol) ++neg;
    Eigen::Index pos = 0;
    while (pos < rows && spec.eigenvalues(rows - 1 - pos) > zero_tol) ++pos;
    spec.neg_count = neg;
    spec.pos_count = pos;
    spec.zero_count = rows - neg - pos;

    std::vector<double> neg_sigmas(static_cast<std::size_t>(neg));
    for (Eigen::Index i = 0; i < neg; ++i) neg_sigmas[static_cast<std::size_t>(i)] = -spec.eigenvalues(i);
    std::vector<double> pos_sigmas(static_cast<std::size_t>(pos));
    for (Eigen::Index i = 0; i < pos; ++i) {
        pos_sigmas[static_cast<std::size_t>(i)] = spec.eigenvalues(rows - 1 - i);
    }

    spec.negatives = cluster_descending(neg_sigmas, cluster_tol, std::max(1.0, absmax));
    spec.positives = cluster_descending(pos_sigmas, cluster_tol, std::max(1.0, absmax));
    return spec;
}

TruncationPlan plan_truncation(const SignedSpectrum& spectrum, Eigen::Index target_r,
                               double cluster_tol, double tol_one) {
    (void)cluster_tol;  // grouping is fixed by the spectrum argument
    if (target_r < 1) {
        throw ValidationError("plan_truncation", "target order must be at least 1");
    }

    auto ones_count = [&](const std::vector<SpectrumGroup>& groups) {
        Eigen::Index c = 0;
        for (const auto& g : groups) {
            if (std::abs(g.sigma - 1.0) <= tol_one) c += g.multiplicity;
        }
        return c;
    };
    const Eigen::Index ones_neg = ones_count(spectrum.negatives);
    const Eigen::Index ones_pos = ones_count(spectrum.positives);
    if (ones_neg != ones_pos) {
        throw PlanningError("plan_truncation",
                            "sigma = 1 multiplicities differ between signs; "
                            "the factor does not come from a dual pair");
    }
    const Eigen::Index min_keep = std::max<Eigen::Index>(std::max(ones_neg, ones_pos), 1);
    const Eigen::Index max_keep = std::min(spectrum.neg_count, spectrum.pos_count);

    const auto bneg = boundaries(spectrum.negatives);
    const auto bpos = boundaries(spectrum.positives);
    std::vector<Eigen::Index> feasible;
    for (Eigen::Index f : bneg) {
        if (f < min_keep || f > max_keep) continue;
        if (std::find(bpos.begin(), bpos.end(), f) != bpos.end()) feasible.push_back(f);
    }
    if (feasible.empty()) {
        std::ostringstream os;
        os << "no retained order keeps every multiplicity group whole on both signs; "
           << "negative-side boundaries: [" << join_indices(bneg) << "], positive-side "
           << "boundaries: [" << join_indices(bpos) << "], required range [" << min_keep << ", "
           << max_keep << "]";
        throw PlanningError("plan_truncation", os.str());
    }
    if (target_r > max_keep) {
        std::ostringstream os;
        os << "requested order " << target_r << " exceeds the " << max_keep
           << " nonzero characteristic values available per sign; largest feasible order is "
           << feasible.back();
        throw PlanningError("plan_truncation", os.str());
    }

    // Nearest feasible count; ties resolved toward the larger (more accurate).
    Eigen::Index best = feasible.front();
    for (Eigen::Index f : feasible) {
        const Eigen::Index df = std::abs(f - target_r);
        const Eigen::Index db = std::abs(best - target_r);
        if (df < db || (df == db && f > best)) best = f;
    }

    TruncationPlan plan;
    plan.r = best;
    plan.feasible = feasible;
    const Eigen::Index rows = spectrum.eigenvalues.size();
    for (Eigen::Index i = 0; i < best; ++i) plan.kept_neg.push_back(i);
    for (Eigen::Index i = rows - best; i < rows; ++i) plan.kept_pos.push_back(i);
    for (Eigen::Index i = best; i < spectrum.neg_count; ++i) {
        plan.truncated_sum_neg += -spectrum.eigenvalues(i);
    }
    for (Eigen::Index i = best; i < spectrum.pos_count; ++i) {
        plan.truncated_sum_pos += spectrum.eigenvalues(rows - 1 - i);
    }
    plan.error_bound = 2.0 * (plan.truncated_sum_neg + plan.truncated_sum_pos);
    return plan;
}

ReducedStructured reduce(const FirstOrderSystem& fo, const Matrix& l, const TruncationPlan& plan,
                         double cluster_tol) {
    const Eigen::Index q = fo.order();
    if (q % 2 != 0) {
        throw ValidationError("reduce", "lifted realization must have even order");
    }
    const Eigen::Index n = q / 2;
    if (l.cols() != q) {
        throw ValidationError("reduce", "factor column count must match the realization order");
    }
    const SignedSpectrum spectrum = signed_eigendecomposition(l, n, cluster_tol);
    const Eigen::Index rows = l.rows();
    const Eigen::Index r = plan.r;
    if (r < 1 || static_cast<Eigen::Index>(plan.kept_neg.size()) != r ||
        static_cast<Eigen::Index>(plan.kept_pos.size()) != r) {
        throw ValidationError("reduce", "plan does not retain r states per sign");
    }

    Matrix u1(rows, 2 * r);
    Vector sigma1(2 * r);
    for (Eigen::Index i = 0; i < r; ++i) {
        const Eigen::Index c = plan.kept_neg[static_cast<std::size_t>(i)];
        if (c < 0 || c >= rows || spectrum.eigenvalues(c) >= 0.0) {
            throw ValidationError("reduce", "plan retains a non-negative column on the negative side");
        }
        u1.col(i) = spectrum.U.col(c);
        sigma1(i) = -spectrum.eigenvalues(c);
    }
    for (Eigen::Index i = 0; i < r; ++i) {
        const Eigen::Index c = plan.kept_pos[static_cast<std::size_t>(i)];
        if (c < 0 || c >= rows || spectrum.eigenvalues(c) <= 0.0) {
            throw ValidationError("reduce", "plan retains a non-positive column on the positive side");
        }
        u1.col(r + i) = spectrum.U.col(c);
        sigma1(r + i) = spectrum.eigenvalues(c);
    }

    // W^T = Sigma1^{-1/2} S_r U1^T L and V = S_n L^T U1 Sigma1^{-1/2}.
    Matrix wt = u1.transpose() * l;
    for (Eigen::Index i = 0; i < 2 * r; ++i) {
        const double scale = (i < r ? -1.0 : 1.0) / std::sqrt(sigma1(i));
        wt.row(i) *= scale;
    }
    Matrix v = l.transpose() * u1;
    v.topRows(n) *= -1.0;  // S_n
    for (Eigen::Index i = 0; i < 2 * r; ++i) v.col(i) /= std::sqrt(sigma1(i));

    const Matrix delta = wt * v;
    const double defect =
        (delta - Matrix::Identity(2 * r, 2 * r)).cwiseAbs().maxCoeff();
    if (defect > 1e-6) {
        std::ostringstream os;
        os << "bi-orthonormality breakdown: max |W^T V - I| = " << defect;
        throw SolverError("reduce", os.str());
    }
    // V <- V delta^{-1} restores W^T V = I to machine precision.
    v = delta.transpose().partialPivLu().solve(v.transpose()).transpose();

    ReducedStructured red;
    red.r = r;
    red.Sigma1 = sigma1;
    red.error_bound = plan.error_bound;
    red.Ared = wt * fo.A * v;
    red.Bred = wt * fo.B;
    red.Cred = fo.C * v;

    // Exact structural identities of the balanced truncation: signature
    // symmetry of A and a vanishing top block of B. Project onto them so
    // downstream structure detection starts from the exact pattern.
    const Matrix s_r = red.sr();
    red.Ared = 0.5 * (red.Ared + s_r * red.Ared.transpose() * s_r);
    red.Bred.topRows(r).setZero();
    return red;
}

}  // namespace soprbt
