// soprbt — command line front end. Talks to the shared library exclusively
// through its C interface; every number it prints is recomputed from the
// saved artifacts rather than trusted from intermediate pipeline state.

#include "soprbt/soprbt.h"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>

namespace {

struct SystemDeleter {
    void operator()(soprbt_system* s) const { soprbt_system_free(s); }
};
struct ResultDeleter {
    void operator()(soprbt_result* r) const { soprbt_result_free(r); }
};
using SystemPtr = std::unique_ptr<soprbt_system, SystemDeleter>;
using ResultPtr = std::unique_ptr<soprbt_result, ResultDeleter>;

int report_failure(soprbt_status rc, const std::string& what) {
    std::fprintf(stderr, "error: %s: %s\n", what.c_str(), soprbt_last_error());
    return static_cast<int>(rc);
}

struct GridFlags {
    double lo = 1e-2;
    double hi = 1e2;
    std::int64_t count = 200;
};

void add_grid_flags(CLI::App* cmd, GridFlags& grid) {
    cmd->add_option("--freq-lo", grid.lo, "lower end of the frequency sweep [rad/s]")
        ->capture_default_str();
    cmd->add_option("--freq-hi", grid.hi, "upper end of the frequency sweep [rad/s]")
        ->capture_default_str();
    cmd->add_option("--freq-count", grid.count, "number of log-spaced sweep points")
        ->capture_default_str();
}

// Pulls the a-priori bound out of a report.json written by `reduce`;
// returns a negative value when unavailable.
double bound_from_report(const std::string& dir) {
    std::ifstream in(std::filesystem::path(dir) / "report.json");
    if (!in) return -1.0;
    try {
        nlohmann::json j = nlohmann::json::parse(in);
        if (j.contains("error_bound")) return j["error_bound"].get<double>();
    } catch (const nlohmann::json::exception&) {
    }
    return -1.0;
}

int cmd_generate(const std::string& out_dir, std::int64_t n_per_row) {
    soprbt_system* raw = nullptr;
    if (auto rc = soprbt_system_triple_chain(n_per_row, &raw))
        return report_failure(rc, "generate");
    SystemPtr sys(raw);
    if (auto rc = soprbt_system_save(sys.get(), out_dir.c_str()))
        return report_failure(rc, "save " + out_dir);

    std::int64_t n = 0, m = 0;
    soprbt_system_dims(sys.get(), &n, &m);
    std::printf("generated triple chain: n = %lld, m = %lld -> %s\n",
                static_cast<long long>(n), static_cast<long long>(m), out_dir.c_str());
    return 0;
}

int cmd_reduce(const std::string& in_dir, const std::string& out_dir, const soprbt_config& cfg,
               const GridFlags& grid, bool skip_check) {
    soprbt_system* raw_sys = nullptr;
    if (auto rc = soprbt_system_load(in_dir.c_str(), &raw_sys))
        return report_failure(rc, "load " + in_dir);
    SystemPtr sys(raw_sys);

    soprbt_result* raw_res = nullptr;
    if (auto rc = soprbt_reduce(sys.get(), &cfg, &raw_res)) return report_failure(rc, "reduce");
    ResultPtr res(raw_res);

    if (auto rc = soprbt_result_save(res.get(), out_dir.c_str()))
        return report_failure(rc, "save " + out_dir);

    std::int64_t n = 0, m = 0, reduced_r = 0, final_r = 0;
    double bound = 0.0;
    soprbt_system_dims(sys.get(), &n, &m);
    soprbt_result_dims(res.get(), &reduced_r, &final_r, nullptr);
    soprbt_result_error_bound(res.get(), &bound);
    std::printf("reduced n = %lld -> r = %lld (recovered order %lld), bound %.6e\n",
                static_cast<long long>(n), static_cast<long long>(reduced_r),
                static_cast<long long>(final_r), bound);

    if (!skip_check) {
        // Independent check: reload the written artifacts and sweep them
        // against the input system.
        soprbt_system* raw_red = nullptr;
        if (auto rc = soprbt_system_load(out_dir.c_str(), &raw_red))
            return report_failure(rc, "reload " + out_dir);
        SystemPtr red(raw_red);

        const auto csv = (std::filesystem::path(out_dir) / "analysis.csv").string();
        const auto json = (std::filesystem::path(out_dir) / "analysis.json").string();
        double max_abs = 0.0, max_rel = 0.0;
        if (auto rc = soprbt_analyze(sys.get(), red.get(), grid.lo, grid.hi, grid.count,
                                     csv.c_str(), json.c_str(), bound, &max_abs, &max_rel))
            return report_failure(rc, "analyze");
        std::printf("sweep over [%g, %g] rad/s (%lld points): max abs %.6e, max rel %.6e\n",
                    grid.lo, grid.hi, static_cast<long long>(grid.count), max_abs, max_rel);
    }
    std::printf("wrote %s\n", out_dir.c_str());
    return 0;
}

int cmd_analyze(const std::string& orig_dir, const std::string& red_dir, const GridFlags& grid,
                double bound, const std::string& out_csv, const std::string& out_json) {
    soprbt_system* raw_a = nullptr;
    if (auto rc = soprbt_system_load(orig_dir.c_str(), &raw_a))
        return report_failure(rc, "load " + orig_dir);
    SystemPtr a(raw_a);

    soprbt_system* raw_b = nullptr;
    if (auto rc = soprbt_system_load(red_dir.c_str(), &raw_b))
        return report_failure(rc, "load " + red_dir);
    SystemPtr b(raw_b);

    if (bound < 0.0) bound = bound_from_report(red_dir);

    double max_abs = 0.0, max_rel = 0.0;
    if (auto rc = soprbt_analyze(a.get(), b.get(), grid.lo, grid.hi, grid.count,
                                 out_csv.empty() ? nullptr : out_csv.c_str(),
                                 out_json.empty() ? nullptr : out_json.c_str(), bound, &max_abs,
                                 &max_rel))
        return report_failure(rc, "analyze");

    std::printf("max abs error %.6e, max rel error %.6e", max_abs, max_rel);
    if (bound >= 0.0) std::printf(", a-priori bound %.6e", bound);
    std::printf("\n");
    if (!out_csv.empty()) std::printf("wrote %s\n", out_csv.c_str());
    if (!out_json.empty()) std::printf("wrote %s\n", out_json.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{std::string("soprbt ") + soprbt_version() +
                 " — positive-real balanced truncation with second-order recovery"};
    app.require_subcommand(1);

    // generate
    std::string gen_out;
    std::int64_t n_per_row = 10;
    auto* gen = app.add_subcommand("generate", "write a triple-chain benchmark system");
    gen->add_option("--n-per-row", n_per_row, "masses per chain row")->capture_default_str();
    gen->add_option("-o,--out", gen_out, "output system directory")->required();

    // reduce
    std::string red_in, red_out;
    soprbt_config cfg;
    soprbt_config_default(&cfg);
    GridFlags red_grid;
    bool emit_transforms = false;
    bool skip_check = false;
    auto* red = app.add_subcommand("reduce", "reduce a system and recover second-order form");
    red->add_option("-i,--in", red_in, "input system directory")->required();
    red->add_option("-o,--out", red_out, "output directory for the reduced system")->required();
    red->add_option("-r,--target-r", cfg.target_r,
                    "requested reduced order (adjusted to the nearest feasible value)")
        ->required()
        ->check(CLI::PositiveNumber);
    red->add_option("--cluster-tol", cfg.cluster_tol, "characteristic-value clustering tolerance")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    red->add_option("--tol-one", cfg.tol_one, "sigma = 1 detection tolerance")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    red->add_option("--rank-tol", cfg.rank_tol, "certificate rank cut")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    red->add_option("--path-tol", cfg.path_tol, "regularization path monotonicity slack")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    red->add_option("--assembly-tol", cfg.assembly_tol, "second-order assembly residual bound")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    red->add_option("--semi-simple-cond", cfg.semi_simple_cond,
                    "eigenvector basis condition bound")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    red->add_flag("--emit-transforms", emit_transforms,
                  "record per-stage transform factors in report.json");
    red->add_flag("--no-check", skip_check, "skip the post-write frequency sweep");
    add_grid_flags(red, red_grid);

    // analyze
    std::string ana_orig, ana_red, ana_csv, ana_json;
    double ana_bound = -1.0;
    GridFlags ana_grid;
    auto* ana = app.add_subcommand("analyze", "frequency-sweep comparison of two systems");
    ana->add_option("--original", ana_orig, "original system directory")->required();
    ana->add_option("--reduced", ana_red, "reduced system directory")->required();
    ana->add_option("--out-csv", ana_csv, "per-frequency CSV output path");
    ana->add_option("--out-json", ana_json, "JSON summary output path");
    ana->add_option("--bound", ana_bound,
                    "a-priori error bound to echo (default: read from report.json)");
    add_grid_flags(ana, ana_grid);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    if (gen->parsed()) return cmd_generate(gen_out, n_per_row);
    if (red->parsed()) {
        cfg.emit_transforms = emit_transforms ? 1 : 0;
        return cmd_reduce(red_in, red_out, cfg, red_grid, skip_check);
    }
    if (ana->parsed()) return cmd_analyze(ana_orig, ana_red, ana_grid, ana_bound, ana_csv, ana_json);
    return 2;
}
