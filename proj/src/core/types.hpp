#pragma once

#include <Eigen/Dense>

#include <complex>
#include <stdexcept>
#include <string>
#include <utility>

namespace soprbt {

using Matrix        = Eigen::MatrixXd;
using Vector        = Eigen::VectorXd;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using Complex       = std::complex<double>;

// Failure families. Each one maps to a stable status code at the C boundary
// and to the matching CLI exit code, so tests can assert on the class of a
// failure without parsing messages.
enum class StatusCode : int {
    ok         = 0,
    validation = 2,  // input system violates the model-class preconditions
    solver     = 3,  // KYP/Riccati machinery failed or could not be certified
    planning   = 4,  // truncation order infeasible under cluster/equalization rules
    structure  = 5,  // structure detection / second-order assembly failed
    io         = 6,  // file parsing or writing failed
};

class Error : public std::runtime_error {
public:
    Error(StatusCode code, std::string stage, const std::string& message)
        : std::runtime_error(stage + ": " + message), code_(code), stage_(std::move(stage)) {}

    StatusCode code() const { return code_; }
    const std::string& stage() const { return stage_; }

private:
    StatusCode code_;
    std::string stage_;
};

class ValidationError : public Error {
public:
    ValidationError(const std::string& stage, const std::string& message)
        : Error(StatusCode::validation, stage, message) {}
};

class SolverError : public Error {
public:
    SolverError(const std::string& stage, const std::string& message)
        : Error(StatusCode::solver, stage, message) {}
};

class PlanningError : public Error {
public:
    PlanningError(const std::string& stage, const std::string& message)
        : Error(StatusCode::planning, stage, message) {}
};

class StructureError : public Error {
public:
    StructureError(const std::string& stage, const std::string& message)
        : Error(StatusCode::structure, stage, message) {}
};

class IoError : public Error {
public:
    IoError(const std::string& stage, const std::string& message)
        : Error(StatusCode::io, stage, message) {}
};

}  // namespace soprbt
