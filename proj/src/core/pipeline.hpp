#pragma once

#include "kyp.hpp"
#include "prbt.hpp"
#include "recovery.hpp"
#include "so_model.hpp"

#include <string>
#include <vector>

namespace soprbt {

// End-to-end configuration; field names mirror the CLI flags.
struct PipelineConfig {
    Eigen::Index target_r = 0;
    double cluster_tol = 1e-8;
    double tol_one = 1e-6;
    double rank_tol = 1e-12;
    double path_tol = 1e-7;
    double assembly_tol = 1e-8;
    double semi_simple_cond = 1e8;
    bool emit_transforms = false;
    KypOptions kyp;
};

// Residuals recomputed from the final matrices alone; the pipeline re-verifies
// its own output instead of trusting stage-internal bookkeeping.
struct VerificationSummary {
    double so_vs_fo_rel_err = 0.0;   // recovered second-order TF vs reduced first-order TF
    double moments_agreement = 0.0;  // standard-triple reconstruction vs (I, D, K)
    double min_eig_K = 0.0;
    double sym_residual_D = 0.0;
    int negative_damping_eigs = 0;
};

struct PipelineResult {
    Eigen::Index n = 0;
    Eigen::Index m = 0;
    KypResiduals kyp_residuals;
    std::vector<KypPathPoint> kyp_path;
    bool kyp_path_monotone = true;
    SignedSpectrum spectrum;
    TruncationPlan plan;
    ReducedStructured reduced;
    RecoveryResult recovery;
    VerificationSummary verify;
    double error_bound = 0.0;
};

// lift -> solve_min_kyp -> factorize -> signed_eigendecomposition ->
// plan_truncation -> reduce -> recover_second_order -> re-verification.
PipelineResult run_reduction(const SecondOrderSystem& sys, const PipelineConfig& cfg);

struct FrequencyGrid {
    double lo = 1e-2;
    double hi = 1e2;
    int count = 200;
};

struct FrequencyRow {
    double omega = 0.0;
    double norm_orig = 0.0;
    double norm_red = 0.0;
    double abs_err = 0.0;
    double rel_err = 0.0;
};

struct AnalysisResult {
    std::vector<FrequencyRow> rows;
    double max_abs_err = 0.0;
    double max_rel_err = 0.0;
};

AnalysisResult analyze_systems(const SecondOrderSystem& original, const SecondOrderSystem& reduced,
                               const FrequencyGrid& grid);

// Serialization (schema_version 1). All doubles use 17 significant digits.
std::string report_json(const PipelineResult& res, const PipelineConfig& cfg);
std::string spectrum_csv(const SignedSpectrum& spectrum);
std::string analysis_csv(const AnalysisResult& res);
std::string analysis_json(const AnalysisResult& res, const FrequencyGrid& grid, double bound);

// Writes M.mtx (identity marker), D.mtx, K.mtx, B.mtx, G.mtx, report.json and
// spectrum.csv into `dir`. The directory loads back with load_system().
void save_reduced(const std::string& dir, const PipelineResult& res, const PipelineConfig& cfg);

}  // namespace soprbt
