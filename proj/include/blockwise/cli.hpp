// Copyright 2026 The blockwise Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>

namespace blockwise::cli {

/// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kUsage = 1;
inline constexpr int kRuntime = 2;

/// `<int>`, `<int>^<int>` or `<int>e<int>`; rejects values above 2^63-1.
std::uint64_t parse_comp_literal(std::string_view text);

/// Runs one command. `args` excludes the program name.
int run(std::span<const std::string> args, std::ostream& out, std::ostream& err);

}  // namespace blockwise::cli
