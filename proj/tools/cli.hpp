// Copyright (C) 2026 bodylink contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <ostream>

namespace bodylink::cli {

/// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kValidationFailure = 1;  // also bad flags and unknown subcommands
inline constexpr int kIoFailure = 2;

/// Entry point of the `bodylink` tool; `out` receives results and `err`
/// diagnostics and usage text.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace bodylink::cli
