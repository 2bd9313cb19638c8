#include "mte/error.hpp"

#include <array>

namespace mte {

namespace {
constexpr std::array<std::string_view, 21> kNames = {
    "InvalidArgument",       "NonDifferentiableKernel", "SeparationDetected", "RankDeficient",
    "ConvergenceFailure",    "NoOverlap",               "EmptyAfterTrim",     "SingularResidualGram",
    "DegenerateCurvature",   "InvalidBandwidth",        "InsufficientLocalMass", "DensityUnderflow",
    "NoRealSolution",        "NegativeRadicand",        "InvalidAlpha",       "NotSPD",
    "TooManyFailures",       "MissingColumn",           "NonBinaryTreatment", "EmptyData",
    "IoError",
};
}

std::string_view error_name(ErrorKind kind) noexcept {
    const auto i = static_cast<std::size_t>(kind);
    return i < kNames.size() ? kNames[i] : std::string_view{"Unknown"};
}

int exit_code(ErrorKind kind) noexcept { return 10 + static_cast<int>(kind); }

}  // namespace mte
