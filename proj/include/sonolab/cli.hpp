#pragma once

#include <ostream>

#include "sonolab/error.hpp"

namespace sonolab::cli {

/// 0 success, 1 I/O, 2 format/schema/key/config, 3 parameter.
int exit_code(ErrorKind kind);

/// Entry point of the `sonolab` tool, with injectable streams for tests.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace sonolab::cli
