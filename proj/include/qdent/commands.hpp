#pragma once

#include <cstdint>
#include <exception>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "qdent/config.hpp"

namespace qdent::cli {

enum ExitCode : int { kOk = 0, kConfigError = 2, kNumericalFailure = 3 };

struct CommandOptions {
  std::filesystem::path out_dir = ".";
  std::optional<std::uint64_t> seed;  ///< overrides tomography.seed
  std::optional<unsigned> threads;    ///< overrides threads
};

/// Config with the command-line overrides applied; this is what output headers record.
RunConfig resolve(RunConfig config, const CommandOptions& opts);

/// Deterministic 64-bit seed for item `index` of subsystem `stream`.
std::uint64_t derive_seed(std::uint64_t base, std::uint32_t stream, std::uint32_t index);

// Each command returns the files it wrote, in order.
std::vector<std::filesystem::path> cmd_evolve(const RunConfig& config, const std::filesystem::path& out_dir);
std::vector<std::filesystem::path> cmd_rabi(const RunConfig& config, const std::filesystem::path& out_dir);
std::vector<std::filesystem::path> cmd_ratio(const RunConfig& config, const std::filesystem::path& out_dir);
std::vector<std::filesystem::path> cmd_entangle(const RunConfig& config, const std::filesystem::path& out_dir);
std::vector<std::filesystem::path> cmd_fit_dephasing(const RunConfig& config, const std::filesystem::path& out_dir);

/// 2 for configuration and argument errors, 3 for everything else.
int exit_code_for(const std::exception& e);

}  // namespace qdent::cli
