// Copyright 2026 The AdvCat Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <memory>
#include <string>

#include "advcat/oracle.hpp"

namespace advcat {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitRuntime = 2;

/// Backend for "builtin:<model file>", "remote:<url>" or "truth:<rule>".
/// `window`, when given, receives the window length stored with a builtin
/// model (0 otherwise).
std::shared_ptr<const ModelBackend> open_oracle(const std::string& spec,
                                                std::size_t* window = nullptr);

/// Subcommands: synth, train, assess, report. Returns 0 on success, 1 on a
/// configuration error, 2 on a runtime failure.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace advcat
