#pragma once

#include "so_model.hpp"
#include "types.hpp"

#include <string>

namespace soprbt {

// Matrix Market I/O. Symmetric matrices are written in coordinate format with
// the "symmetric" qualifier (lower triangle); general matrices use
// "general". Values are printed with 17 significant digits so that a
// write -> read -> write cycle is byte-identical.

void write_matrix_market(const std::string& path, const Matrix& a, bool symmetric,
                         const std::string& comment = "");

Matrix read_matrix_market(const std::string& path);

// A system directory holds M.mtx, D.mtx, K.mtx, B.mtx and meta.json.
void save_system(const std::string& dir, const SecondOrderSystem& sys,
                 const std::string& extra_meta_json = "");

SecondOrderSystem load_system(const std::string& dir);

}  // namespace soprbt
