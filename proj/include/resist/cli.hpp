#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

#include "resist/adversary.hpp"
#include "resist/io.hpp"

namespace resist::cli {

/// Stable exit codes.
inline constexpr int kExitPass = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitCheckFailed = 2;

/// One experiment: the adversary configuration plus run settings.
struct ExperimentConfig {
  AdversaryConfig adversary;
  std::string method = "fgm";
  std::uint64_t seed = 0;
  std::filesystem::path out_dir = "resist_out";
};

/// Parses and validates an experiment file (JSON object with p, nu, H, sigma,
/// q, T, n and optional method, seed, out).
ExperimentConfig parse_experiment(const Json& j);

/// Entry point shared by the executable and the tests.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace resist::cli
