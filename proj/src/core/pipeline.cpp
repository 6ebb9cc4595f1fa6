#include "pipeline.hpp"

#include "dense.hpp"
#include "fo_realization.hpp"
#include "mmio.hpp"

#include <json.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace soprbt {

namespace {

using nlohmann::json;

std::string fmt17(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

double sigma_max(const ComplexMatrix& g) {
    if (g.size() == 0) return 0.0;
    Eigen::JacobiSVD<ComplexMatrix> svd(g);
    return svd.singularValues()(0);
}

json matrix_json(const Matrix& a) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < a.cols(); ++j) row.push_back(a(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

json groups_json(const std::vector<SpectrumGroup>& groups) {
    json out = json::array();
    for (const auto& g : groups) out.push_back({{"sigma", g.sigma}, {"multiplicity", g.multiplicity}});
    return out;
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("save", "cannot open for writing: " + path);
    out << text;
    if (!out) throw IoError("save", "short write: " + path);
}

// Standard-triple moment reconstruction from the assembled factors alone:
// with Af = [[0, G^T], [-G, -D]], Y = [0; I] and X = [0, I] Af^{-1}
// the triple (X, Af, Y) realizes (s^2 I + s D + G G^T)^{-1}, so the
// reconstructed coefficients must reproduce (I, D, K) exactly.
double moments_check(const ReducedSecondOrder& so) {
    const Eigen::Index r = so.order();
    Matrix af = Matrix::Zero(2 * r, 2 * r);
    af.topRightCorner(r, r) = so.Gred.transpose();
    af.bottomLeftCorner(r, r) = -so.Gred;
    af.bottomRightCorner(r, r) = -so.Dred;

    Matrix y = Matrix::Zero(2 * r, r);
    y.bottomRows(r) = Matrix::Identity(r, r);
    // X = [0, I] Af^{-1}  <=>  X Af = [0, I]  <=>  Af^T X^T = [0; I]
    Matrix sel = Matrix::Zero(2 * r, r);
    sel.bottomRows(r) = Matrix::Identity(r, r);
    Matrix x = af.transpose().partialPivLu().solve(sel).transpose();

    MomentCoefficients mc = moments_reconstruct(af, y, x);
    const Matrix kred = so.Kred();
    double worst = (mc.M - Matrix::Identity(r, r)).norm();
    worst = std::max(worst, (mc.D - so.Dred).norm() / std::max(1.0, so.Dred.norm()));
    worst = std::max(worst, (mc.K - kred).norm() / std::max(1.0, kred.norm()));
    return worst;
}

VerificationSummary verify_result(const ReducedStructured& red, const ReducedSecondOrder& so,
                                  const RecoveryReport& rep) {
    VerificationSummary out;

    SecondOrderSystem rec;
    rec.M = Matrix::Identity(so.order(), so.order());
    rec.D = symmetrized(so.Dred);
    rec.K = so.Kred();
    rec.B = so.Bred;

    // The recovery moves the realization by the projections it reports
    // (relative to ||A||); near lightly damped resonances that perturbation
    // is amplified by the resolvent, so each frequency gets the first-order
    // allowance ||(sI-A)^{-1}B|| * ||C(sI-A)^{-1}|| * ||dA|| on top of the
    // round-off floor. Anything above that cannot be explained by the
    // reported projections and indicates a structural defect.
    const FirstOrderSystem fo = red.fo();
    const Eigen::Index q = fo.order();
    const double delta_a =
        (rep.pattern_residual + rep.assembly_residual + rep.max_rescale_deviation) *
        fo.A.norm();
    const ComplexMatrix eye = ComplexMatrix::Identity(q, q);
    double worst = 0.0;
    for (double w : logspace(1e-2, 1e2, 20)) {
        const Complex s(0.0, w);
        const Eigen::PartialPivLU<ComplexMatrix> lu(s * eye - fo.A.cast<Complex>());
        const Eigen::PartialPivLU<ComplexMatrix> lut(s * eye - fo.A.transpose().cast<Complex>());
        const ComplexMatrix x = lu.solve(fo.B.cast<Complex>());
        const ComplexMatrix z = lut.solve(fo.C.transpose().cast<Complex>());
        const ComplexMatrix g_fo = fo.C.cast<Complex>() * x;
        const ComplexMatrix g_so = transfer_function(rec, s);
        const double denom = std::max(g_fo.norm(), std::numeric_limits<double>::min());
        const double rel = (g_so - g_fo).norm() / denom;
        const double allowed = 1e-8 + 10.0 * x.norm() * z.norm() * delta_a / denom;
        if (rel > allowed)
            throw StructureError("verification",
                                 "recovered second-order transfer function deviates from the "
                                 "reduced realization: relative error " +
                                     fmt17(rel) + " at omega = " + fmt17(w) +
                                     " exceeds the sensitivity allowance " + fmt17(allowed));
        worst = std::max(worst, rel);
    }
    out.so_vs_fo_rel_err = worst;

    out.moments_agreement = moments_check(so);
    if (out.moments_agreement > 1e-8)
        throw StructureError("verification",
                             "moment reconstruction disagrees with the assembled "
                             "coefficients: residual " +
                                 fmt17(out.moments_agreement));

    out.min_eig_K = min_eig_sym(rec.K);
    out.sym_residual_D = 0.5 * (so.Dred - so.Dred.transpose()).norm();
    const Vector deig = eigvals_sym(rec.D);
    const double dscale = std::max(1.0, deig.cwiseAbs().maxCoeff());
    out.negative_damping_eigs =
        static_cast<int>((deig.array() < -1e-10 * dscale).count());
    return out;
}

}  // namespace

PipelineResult run_reduction(const SecondOrderSystem& sys, const PipelineConfig& cfg) {
    ensure_valid(sys);

    PipelineResult res;
    res.n = sys.n();
    res.m = sys.m();

    const LiftResult lifted = lift(sys);

    KypOptions kopts = cfg.kyp;
    kopts.path_tol = cfg.path_tol;
    kopts.rank_tol = cfg.rank_tol;
    const KypSolution kyp = solve_min_kyp(lifted.fo, kopts);
    res.kyp_residuals = kyp.residuals;
    res.kyp_path = kyp.path;
    res.kyp_path_monotone = kyp.path_monotone;

    res.spectrum = signed_eigendecomposition(kyp.L, sys.n(), cfg.cluster_tol);
    res.plan = plan_truncation(res.spectrum, cfg.target_r, cfg.cluster_tol, cfg.tol_one);
    res.reduced = reduce(lifted.fo, kyp.L, res.plan, cfg.cluster_tol);
    res.error_bound = res.plan.error_bound;

    RecoveryOptions ropts;
    ropts.tol_one = cfg.tol_one;
    ropts.assembly_tol = cfg.assembly_tol;
    ropts.eig_cond_limit = cfg.semi_simple_cond;
    ropts.store_transforms = cfg.emit_transforms;
    res.recovery = recover_second_order(res.reduced, ropts);

    res.verify = verify_result(res.reduced, res.recovery.system, res.recovery.report);
    return res;
}

AnalysisResult analyze_systems(const SecondOrderSystem& original, const SecondOrderSystem& reduced,
                               const FrequencyGrid& grid) {
    if (original.m() != reduced.m())
        throw ValidationError("analyze", "input counts differ between the two systems");
    if (!(grid.lo > 0.0) || !(grid.hi > grid.lo) || grid.count < 2)
        throw ValidationError("analyze", "frequency grid must satisfy 0 < lo < hi, count >= 2");

    AnalysisResult out;
    out.rows.reserve(static_cast<size_t>(grid.count));
    for (double w : logspace(grid.lo, grid.hi, grid.count)) {
        const Complex s(0.0, w);
        FrequencyRow row;
        row.omega = w;
        const ComplexMatrix g0 = transfer_function(original, s);
        const ComplexMatrix g1 = transfer_function(reduced, s);
        row.norm_orig = sigma_max(g0);
        row.norm_red = sigma_max(g1);
        row.abs_err = sigma_max(g0 - g1);
        row.rel_err = row.abs_err / std::max(row.norm_orig, std::numeric_limits<double>::min());
        out.max_abs_err = std::max(out.max_abs_err, row.abs_err);
        out.max_rel_err = std::max(out.max_rel_err, row.rel_err);
        out.rows.push_back(row);
    }
    return out;
}

std::string report_json(const PipelineResult& res, const PipelineConfig& cfg) {
    json j;
    j["schema_version"] = 1;
    j["dimensions"] = {{"n", res.n},
                       {"m", res.m},
                       {"lifted_order", 2 * res.n},
                       {"reduced_order", res.reduced.r},
                       {"final_r", res.recovery.report.final_r}};

    json path = json::array();
    for (const auto& p : res.kyp_path)
        path.push_back({{"epsilon", p.epsilon}, {"trace", p.trace}, {"increment", p.increment}});
    j["kyp"] = {{"lmi_max_eig", res.kyp_residuals.lmi_max_eig},
                {"coupling_norm", res.kyp_residuals.coupling_norm},
                {"minimality_gap", res.kyp_residuals.minimality_gap},
                {"path_monotone", res.kyp_path_monotone},
                {"path", std::move(path)}};

    j["spectrum"] = {{"negatives", groups_json(res.spectrum.negatives)},
                     {"positives", groups_json(res.spectrum.positives)},
                     {"neg_count", res.spectrum.neg_count},
                     {"zero_count", res.spectrum.zero_count},
                     {"pos_count", res.spectrum.pos_count}};

    json feasible = json::array();
    for (auto v : res.plan.feasible) feasible.push_back(v);
    j["plan"] = {{"target_r", cfg.target_r},
                 {"r", res.plan.r},
                 {"feasible", std::move(feasible)},
                 {"truncated_sum_neg", res.plan.truncated_sum_neg},
                 {"truncated_sum_pos", res.plan.truncated_sum_pos},
                 {"error_bound", res.plan.error_bound}};

    const RecoveryReport& rr = res.recovery.report;
    json pairs = json::array();
    for (const auto& z : rr.complex_zeros)
        pairs.push_back({{"sigma", z.sigma}, {"tau", z.tau}});
    j["recovery"] = {{"blocks", {{"m", rr.blocks.m}, {"ell", rr.blocks.ell}, {"p", rr.blocks.p}}},
                     {"condition_ok", rr.condition_ok},
                     {"mu_minus", rr.mu_minus},
                     {"mu_plus", rr.mu_plus},
                     {"complex_zeros", std::move(pairs)},
                     {"padding",
                      {{"pairs_added", rr.padding.pairs_added()},
                       {"extra_minus", rr.padding.extra_minus},
                       {"extra_plus", rr.padding.extra_plus}}},
                     {"final_r", rr.final_r},
                     {"pattern_residual", rr.pattern_residual},
                     {"assembly_residual", rr.assembly_residual},
                     {"stability_margin", rr.stability_margin},
                     {"zero_match_residual", rr.zero_match_residual},
                     {"max_rescale_deviation", rr.max_rescale_deviation},
                     {"negative_damping_eigs", rr.negative_damping_eigs}};

    j["verification"] = {{"so_vs_fo_rel_err", res.verify.so_vs_fo_rel_err},
                         {"moments_agreement", res.verify.moments_agreement},
                         {"min_eig_K", res.verify.min_eig_K},
                         {"sym_residual_D", res.verify.sym_residual_D},
                         {"negative_damping_eigs", res.verify.negative_damping_eigs}};

    j["error_bound"] = res.error_bound;

    if (cfg.emit_transforms) {
        json transforms = json::array();
        for (const auto& t : rr.transforms) {
            json entry = {{"kind", t.kind}, {"detail", t.detail}};
            if (t.t.size() > 0) entry["t"] = matrix_json(t.t);
            transforms.push_back(std::move(entry));
        }
        j["transforms"] = std::move(transforms);
    }
    return j.dump(2) + "\n";
}

std::string spectrum_csv(const SignedSpectrum& spectrum) {
    std::ostringstream out;
    out << "index,sign,sigma,multiplicity\n";
    int index = 0;
    for (const auto& g : spectrum.negatives)
        out << index++ << ",-1," << fmt17(g.sigma) << ',' << g.multiplicity << '\n';
    for (const auto& g : spectrum.positives)
        out << index++ << ",1," << fmt17(g.sigma) << ',' << g.multiplicity << '\n';
    return out.str();
}

std::string analysis_csv(const AnalysisResult& res) {
    std::ostringstream out;
    out << "omega,sigma_max_orig,sigma_max_reduced,abs_error,rel_error\n";
    for (const auto& row : res.rows)
        out << fmt17(row.omega) << ',' << fmt17(row.norm_orig) << ',' << fmt17(row.norm_red) << ','
            << fmt17(row.abs_err) << ',' << fmt17(row.rel_err) << '\n';
    return out.str();
}

std::string analysis_json(const AnalysisResult& res, const FrequencyGrid& grid, double bound) {
    json j;
    j["schema_version"] = 1;
    j["grid"] = {{"lo", grid.lo}, {"hi", grid.hi}, {"count", grid.count}};
    j["max_abs_error"] = res.max_abs_err;
    j["max_rel_error"] = res.max_rel_err;
    if (bound >= 0.0) j["error_bound"] = bound;
    return j.dump(2) + "\n";
}

void save_reduced(const std::string& dir, const PipelineResult& res, const PipelineConfig& cfg) {
    const ReducedSecondOrder& so = res.recovery.system;
    SecondOrderSystem out;
    out.M = Matrix::Identity(so.order(), so.order());
    out.D = symmetrized(so.Dred);
    out.K = so.Kred();
    out.B = so.Bred;

    json extra = {{"kind", "reduced"},
                  {"mass_identity", true},
                  {"error_bound", res.error_bound},
                  {"reduced_order", res.reduced.r},
                  {"final_r", res.recovery.report.final_r}};
    save_system(dir, out, extra.dump());

    const std::filesystem::path base(dir);
    write_matrix_market((base / "G.mtx").string(), so.Gred, false,
                        "stiffness factor: K = G * G^T");
    write_text_file((base / "report.json").string(), report_json(res, cfg));
    write_text_file((base / "spectrum.csv").string(), spectrum_csv(res.spectrum));
}

}  // namespace soprbt
