#include "soprbt/soprbt.h"

#include "core/dense.hpp"
#include "core/mmio.hpp"
#include "core/pipeline.hpp"

#include <cstring>
#include <fstream>
#include <memory>
#include <new>
#include <string>
#include <utility>

using namespace soprbt;

struct soprbt_system {
    SecondOrderSystem sys;
};

struct soprbt_result {
    PipelineResult res;
    PipelineConfig cfg;  // the configuration the result was produced with
};

namespace {

thread_local std::string g_last_error;

soprbt_status fail(soprbt_status code, const std::string& message) {
    g_last_error = message;
    return code;
}

template <typename Fn>
soprbt_status guarded(Fn&& fn) {
    try {
        fn();
        return SOPRBT_OK;
    } catch (const Error& e) {
        return fail(static_cast<soprbt_status>(static_cast<int>(e.code())), e.what());
    } catch (const std::bad_alloc&) {
        return fail(SOPRBT_ERR_SOLVER, "out of memory");
    } catch (const std::exception& e) {
        return fail(SOPRBT_ERR_SOLVER, std::string("internal error: ") + e.what());
    }
}

soprbt_status require(bool ok, const char* message) {
    return ok ? SOPRBT_OK : fail(SOPRBT_ERR_VALIDATION, message);
}

// Two-call matrix export: size query when buf == NULL, row-major copy
// (with dimension check) otherwise.
soprbt_status export_matrix(const Matrix& a, double* buf, int64_t* rows, int64_t* cols) {
    if (rows == nullptr || cols == nullptr)
        return fail(SOPRBT_ERR_VALIDATION, "rows/cols must not be NULL");
    if (buf == nullptr) {
        *rows = a.rows();
        *cols = a.cols();
        return SOPRBT_OK;
    }
    if (*rows != a.rows() || *cols != a.cols())
        return fail(SOPRBT_ERR_VALIDATION, "buffer dimensions do not match the matrix");
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        buf, a.rows(), a.cols()) = a;
    return SOPRBT_OK;
}

char* dup_string(const std::string& s) {
    char* out = new char[s.size() + 1];
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

PipelineConfig to_config(const soprbt_config& c) {
    PipelineConfig cfg;
    cfg.target_r = static_cast<Eigen::Index>(c.target_r);
    cfg.cluster_tol = c.cluster_tol;
    cfg.tol_one = c.tol_one;
    cfg.rank_tol = c.rank_tol;
    cfg.path_tol = c.path_tol;
    cfg.assembly_tol = c.assembly_tol;
    cfg.semi_simple_cond = c.semi_simple_cond;
    cfg.emit_transforms = c.emit_transforms != 0;
    return cfg;
}

}  // namespace

extern "C" {

const char* soprbt_version(void) { return "1.0.0"; }

const char* soprbt_last_error(void) { return g_last_error.c_str(); }

soprbt_status soprbt_system_create(int64_t n, int64_t m, const double* m_, const double* d_,
                                   const double* k_, const double* b_, soprbt_system** out) {
    if (auto rc = require(out && m_ && d_ && k_ && b_, "NULL argument")) return rc;
    if (auto rc = require(n > 0 && m > 0, "dimensions must be positive")) return rc;
    return guarded([&] {
        auto handle = std::make_unique<soprbt_system>();
        using RowMajorMap = Eigen::Map<
            const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
        handle->sys.M = RowMajorMap(m_, n, n);
        handle->sys.D = RowMajorMap(d_, n, n);
        handle->sys.K = RowMajorMap(k_, n, n);
        handle->sys.B = RowMajorMap(b_, n, m);
        *out = handle.release();
    });
}

soprbt_status soprbt_system_triple_chain(int64_t n_per_row, soprbt_system** out) {
    if (auto rc = require(out != nullptr, "NULL output handle")) return rc;
    if (auto rc = require(n_per_row > 0, "n_per_row must be positive")) return rc;
    return guarded([&] {
        auto handle = std::make_unique<soprbt_system>();
        handle->sys = generate_triple_chain(static_cast<int>(n_per_row));
        *out = handle.release();
    });
}

soprbt_status soprbt_system_load(const char* dir, soprbt_system** out) {
    if (auto rc = require(dir && out, "NULL argument")) return rc;
    return guarded([&] {
        auto handle = std::make_unique<soprbt_system>();
        handle->sys = load_system(dir);
        *out = handle.release();
    });
}

soprbt_status soprbt_system_save(const soprbt_system* sys, const char* dir) {
    if (auto rc = require(sys && dir, "NULL argument")) return rc;
    return guarded([&] { save_system(dir, sys->sys); });
}

soprbt_status soprbt_system_dims(const soprbt_system* sys, int64_t* n, int64_t* m) {
    if (auto rc = require(sys && n && m, "NULL argument")) return rc;
    *n = sys->sys.n();
    *m = sys->sys.m();
    return SOPRBT_OK;
}

soprbt_status soprbt_system_matrix(const soprbt_system* sys, char which, double* buf,
                                   int64_t* rows, int64_t* cols) {
    if (auto rc = require(sys != nullptr, "NULL system handle")) return rc;
    switch (which) {
        case 'M': return export_matrix(sys->sys.M, buf, rows, cols);
        case 'D': return export_matrix(sys->sys.D, buf, rows, cols);
        case 'K': return export_matrix(sys->sys.K, buf, rows, cols);
        case 'B': return export_matrix(sys->sys.B, buf, rows, cols);
        default: return fail(SOPRBT_ERR_VALIDATION, "matrix selector must be M, D, K or B");
    }
}

void soprbt_system_free(soprbt_system* sys) { delete sys; }

void soprbt_config_default(soprbt_config* cfg) {
    if (cfg == nullptr) return;
    const PipelineConfig d;
    cfg->target_r = d.target_r;
    cfg->cluster_tol = d.cluster_tol;
    cfg->tol_one = d.tol_one;
    cfg->rank_tol = d.rank_tol;
    cfg->path_tol = d.path_tol;
    cfg->assembly_tol = d.assembly_tol;
    cfg->semi_simple_cond = d.semi_simple_cond;
    cfg->emit_transforms = d.emit_transforms ? 1 : 0;
}

soprbt_status soprbt_reduce(const soprbt_system* sys, const soprbt_config* cfg,
                            soprbt_result** out) {
    if (auto rc = require(sys && cfg && out, "NULL argument")) return rc;
    return guarded([&] {
        auto handle = std::make_unique<soprbt_result>();
        handle->cfg = to_config(*cfg);
        handle->res = run_reduction(sys->sys, handle->cfg);
        *out = handle.release();
    });
}

soprbt_status soprbt_result_dims(const soprbt_result* res, int64_t* reduced_r, int64_t* final_r,
                                 int64_t* m) {
    if (auto rc = require(res != nullptr, "NULL result handle")) return rc;
    if (reduced_r != nullptr) *reduced_r = res->res.reduced.r;
    if (final_r != nullptr) *final_r = res->res.recovery.report.final_r;
    if (m != nullptr) *m = res->res.m;
    return SOPRBT_OK;
}

soprbt_status soprbt_result_error_bound(const soprbt_result* res, double* bound) {
    if (auto rc = require(res && bound, "NULL argument")) return rc;
    *bound = res->res.error_bound;
    return SOPRBT_OK;
}

soprbt_status soprbt_result_matrix(const soprbt_result* res, char which, double* buf,
                                   int64_t* rows, int64_t* cols) {
    if (auto rc = require(res != nullptr, "NULL result handle")) return rc;
    const ReducedSecondOrder& so = res->res.recovery.system;
    switch (which) {
        case 'D': return export_matrix(so.Dred, buf, rows, cols);
        case 'G': return export_matrix(so.Gred, buf, rows, cols);
        case 'K': return export_matrix(so.Kred(), buf, rows, cols);
        case 'B': return export_matrix(so.Bred, buf, rows, cols);
        default: return fail(SOPRBT_ERR_VALIDATION, "matrix selector must be D, G, K or B");
    }
}

soprbt_status soprbt_result_system(const soprbt_result* res, soprbt_system** out) {
    if (auto rc = require(res && out, "NULL argument")) return rc;
    return guarded([&] {
        const ReducedSecondOrder& so = res->res.recovery.system;
        auto handle = std::make_unique<soprbt_system>();
        handle->sys.M = Matrix::Identity(so.order(), so.order());
        handle->sys.D = symmetrized(so.Dred);
        handle->sys.K = so.Kred();
        handle->sys.B = so.Bred;
        *out = handle.release();
    });
}

soprbt_status soprbt_result_report_json(const soprbt_result* res, char** out) {
    if (auto rc = require(res && out, "NULL argument")) return rc;
    return guarded([&] { *out = dup_string(report_json(res->res, res->cfg)); });
}

soprbt_status soprbt_result_spectrum_csv(const soprbt_result* res, char** out) {
    if (auto rc = require(res && out, "NULL argument")) return rc;
    return guarded([&] { *out = dup_string(spectrum_csv(res->res.spectrum)); });
}

soprbt_status soprbt_result_save(const soprbt_result* res, const char* dir) {
    if (auto rc = require(res && dir, "NULL argument")) return rc;
    return guarded([&] { save_reduced(dir, res->res, res->cfg); });
}

void soprbt_result_free(soprbt_result* res) { delete res; }

void soprbt_string_free(char* s) { delete[] s; }

soprbt_status soprbt_analyze(const soprbt_system* original, const soprbt_system* reduced,
                             double lo, double hi, int64_t count, const char* csv_path,
                             const char* json_path, double error_bound, double* max_abs,
                             double* max_rel) {
    if (auto rc = require(original && reduced, "NULL system handle")) return rc;
    return guarded([&] {
        FrequencyGrid grid;
        grid.lo = lo;
        grid.hi = hi;
        grid.count = static_cast<int>(count);
        const AnalysisResult ana = analyze_systems(original->sys, reduced->sys, grid);
        if (csv_path != nullptr) {
            std::ofstream out(csv_path, std::ios::binary);
            if (!out) throw IoError("analyze", std::string("cannot open for writing: ") + csv_path);
            out << analysis_csv(ana);
            if (!out) throw IoError("analyze", std::string("short write: ") + csv_path);
        }
        if (json_path != nullptr) {
            std::ofstream out(json_path, std::ios::binary);
            if (!out)
                throw IoError("analyze", std::string("cannot open for writing: ") + json_path);
            out << analysis_json(ana, grid, error_bound);
            if (!out) throw IoError("analyze", std::string("short write: ") + json_path);
        }
        if (max_abs != nullptr) *max_abs = ana.max_abs_err;
        if (max_rel != nullptr) *max_rel = ana.max_rel_err;
    });
}

}  // extern "C"
