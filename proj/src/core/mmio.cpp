#include "mmio.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace soprbt {

namespace {

std::string format_value(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

}  // namespace

void write_matrix_market(const std::string& path, const Matrix& a, bool symmetric,
                         const std::string& comment) {
    if (symmetric && a.rows() != a.cols())
        throw IoError("write_matrix_market", "symmetric output requires a square matrix: " + path);

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("write_matrix_market", "cannot open for writing: " + path);

    out << "%%MatrixMarket matrix coordinate real "
        << (symmetric ? "symmetric" : "general") << "\n";
    if (!comment.empty()) out << "% " << comment << "\n";

    Eigen::Index nnz = 0;
    for (Eigen::Index j = 0; j < a.cols(); ++j)
        for (Eigen::Index i = symmetric ? j : 0; i < a.rows(); ++i)
            if (a(i, j) != 0.0) ++nnz;

    out << a.rows() << " " << a.cols() << " " << nnz << "\n";
    for (Eigen::Index j = 0; j < a.cols(); ++j)
        for (Eigen::Index i = symmetric ? j : 0; i < a.rows(); ++i)
            if (a(i, j) != 0.0)
                out << (i + 1) << " " << (j + 1) << " " << format_value(a(i, j)) << "\n";
    if (!out) throw IoError("write_matrix_market", "write failed: " + path);
}

Matrix read_matrix_market(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("read_matrix_market", "cannot open: " + path);

    std::string line;
    if (!std::getline(in, line)) throw IoError("read_matrix_market", "empty file: " + path);

    std::istringstream banner(line);
    std::string tag, object, format, field, symmetry;
    banner >> tag >> object >> format >> field >> symmetry;
    if (lower(tag) != "%%matrixmarket" || lower(object) != "matrix")
        throw IoError("read_matrix_market", "not a Matrix Market file: " + path);
    format = lower(format);
    field = lower(field);
    symmetry = lower(symmetry);
    if (field != "real" && field != "integer")
        throw IoError("read_matrix_market", "unsupported field type '" + field + "': " + path);
    if (symmetry != "general" && symmetry != "symmetric")
        throw IoError("read_matrix_market",
                      "unsupported symmetry qualifier '" + symmetry + "': " + path);

    // Skip comment lines.
    do {
        if (!std::getline(in, line))
            throw IoError("read_matrix_market", "missing size line: " + path);
    } while (!line.empty() && line[0] == '%');

    std::istringstream size_line(line);
    if (format == "coordinate") {
        Eigen::Index rows = 0, cols = 0, nnz = 0;
        size_line >> rows >> cols >> nnz;
        if (!size_line || rows <= 0 || cols <= 0 || nnz < 0)
            throw IoError("read_matrix_market", "bad size line: " + path);
        Matrix a = Matrix::Zero(rows, cols);
        for (Eigen::Index k = 0; k < nnz; ++k) {
            Eigen::Index i = 0, j = 0;
            double v = 0.0;
            if (!(in >> i >> j >> v))
                throw IoError("read_matrix_market", "truncated entry list: " + path);
            if (i < 1 || i > rows || j < 1 || j > cols)
                throw IoError("read_matrix_market", "entry index out of range: " + path);
            a(i - 1, j - 1) = v;
            if (symmetry == "symmetric") a(j - 1, i - 1) = v;
        }
        return a;
    }
    if (format == "array") {
        Eigen::Index rows = 0, cols = 0;
        size_line >> rows >> cols;
        if (!size_line || rows <= 0 || cols <= 0)
            throw IoError("read_matrix_market", "bad size line: " + path);
        Matrix a = Matrix::Zero(rows, cols);
        if (symmetry == "general") {
            for (Eigen::Index j = 0; j < cols; ++j)
                for (Eigen::Index i = 0; i < rows; ++i)
                    if (!(in >> a(i, j)))
                        throw IoError("read_matrix_market", "truncated array data: " + path);
        } else {
            for (Eigen::Index j = 0; j < cols; ++j)
                for (Eigen::Index i = j; i < rows; ++i) {
                    if (!(in >> a(i, j)))
                        throw IoError("read_matrix_market", "truncated array data: " + path);
                    a(j, i) = a(i, j);
                }
        }
        return a;
    }
    throw IoError("read_matrix_market", "unsupported format '" + format + "': " + path);
}

void save_system(const std::string& dir, const SecondOrderSystem& sys,
                 const std::string& extra_meta_json) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("save_system", "cannot create directory: " + dir);

    const std::filesystem::path base(dir);
    write_matrix_market((base / "M.mtx").string(), sys.M, true);
    write_matrix_market((base / "D.mtx").string(), sys.D, true);
    write_matrix_market((base / "K.mtx").string(), sys.K, true);
    write_matrix_market((base / "B.mtx").string(), sys.B, false);

    nlohmann::json meta;
    meta["format_version"] = 1;
    meta["n"] = sys.n();
    meta["m"] = sys.m();
    meta["files"] = {{"M", "M.mtx"}, {"D", "D.mtx"}, {"K", "K.mtx"}, {"B", "B.mtx"}};
    if (!extra_meta_json.empty()) {
        nlohmann::json extra = nlohmann::json::parse(extra_meta_json, nullptr, false);
        if (!extra.is_discarded()) meta["extra"] = extra;
    }
    std::ofstream out(base / "meta.json", std::ios::binary);
    if (!out) throw IoError("save_system", "cannot write meta.json in " + dir);
    out << meta.dump(2) << "\n";
}

SecondOrderSystem load_system(const std::string& dir) {
    const std::filesystem::path base(dir);
    if (!std::filesystem::is_directory(base))
        throw IoError("load_system", "not a directory: " + dir);

    SecondOrderSystem sys;
    sys.M = read_matrix_market((base / "M.mtx").string());
    sys.D = read_matrix_market((base / "D.mtx").string());
    sys.K = read_matrix_market((base / "K.mtx").string());
    sys.B = read_matrix_market((base / "B.mtx").string());
    return sys;
}

}  // namespace soprbt
