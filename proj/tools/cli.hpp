// Copyright 2026 The sparsepose Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iostream>

namespace sparsepose::cli {

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;       // unreadable or malformed input, bad flags
inline constexpr int kExitValidation = 3;  // invalid parameters, dimension mismatch
inline constexpr int kExitInternal = 4;

// Entry point of the `sparsepose` tool. Subcommands: learn-dict, recover,
// synth, compare, theory. Results go to `out`, diagnostics to `err`;
// verbosity follows the SPARSEPOSE_LOG environment variable
// (error, warn, info, debug; default warn).
int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout,
            std::ostream& err = std::cerr);

}  // namespace sparsepose::cli
