#pragma once

#include <iosfwd>

namespace mte {

/// Command-line entry point: `estimate`, `critval` and `simulate`.
///
/// Exit codes: 0 on success, 2 for usage errors, 10 + the ErrorKind index
/// for library errors (the error name is printed on stderr), 1 otherwise.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mte
