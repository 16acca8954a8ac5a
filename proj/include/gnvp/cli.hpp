// SPDX-FileCopyrightText: Copyright (c) 2026 The gnvp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gnvp::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

/// Runs one subcommand. args[0] is the program name. Errors are reported as a
/// single "gnvp: error: <kind>: <message>" line on `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gnvp::cli
