#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mte {

// Every failure the library reports carries one of these kinds. The CLI maps
// each kind to a fixed exit code, so the numbering below is part of the
// command-line contract: append new kinds, never reorder.
enum class ErrorKind {
    InvalidArgument,
    NonDifferentiableKernel,
    SeparationDetected,
    RankDeficient,
    ConvergenceFailure,
    NoOverlap,
    EmptyAfterTrim,
    SingularResidualGram,
    DegenerateCurvature,
    InvalidBandwidth,
    InsufficientLocalMass,
    DensityUnderflow,
    NoRealSolution,
    NegativeRadicand,
    InvalidAlpha,
    NotSPD,
    TooManyFailures,
    MissingColumn,
    NonBinaryTreatment,
    EmptyData,
    IoError,
};

std::string_view error_name(ErrorKind kind) noexcept;

// Exit code used by the CLI: 10 + position in ErrorKind.
int exit_code(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }
    std::string_view name() const noexcept { return error_name(kind_); }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace mte
