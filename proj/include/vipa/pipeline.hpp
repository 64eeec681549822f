#pragma once

// Subcommands of the spectro tool. Each one validates the configuration before it
// writes anything, then emits its files into the output directory.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "vipa/config.hpp"

namespace vipa::cli {

enum ExitCode : int { ok = 0, config_invalid = 2, infeasible = 3, runtime_error = 4 };

/// SPECTRO_OUT if set, else the --out flag, else the config's output_dir.
std::filesystem::path resolve_output_dir(const RunConfig& cfg, const std::optional<std::filesystem::path>& out_flag);

/// File-name label of a detuning: +0MHz, +120MHz, -60MHz, +12.5MHz.
std::string detuning_label(double detuning_mhz);

struct DesignOptions {
  std::optional<double> fwhm_target_mhz;
};
struct SimulateOptions {
  std::optional<std::int64_t> pulses;
  unsigned workers{0};
  bool truth{false};  // also write the ground-truth sidecar
};
struct AnalyzeOptions {
  std::vector<std::filesystem::path> events;  // one per detuning, sorted-detuning order
  std::optional<std::int64_t> pulses;
};

// Each command returns its exit code; `log` receives the human-readable report.
int cmd_design(RunConfig cfg, const std::filesystem::path& out, const DesignOptions& opt, std::ostream& log);
int cmd_profile(const RunConfig& cfg, const std::filesystem::path& out, std::ostream& log);
int cmd_simulate(RunConfig cfg, const std::filesystem::path& out, const SimulateOptions& opt, std::ostream& log);
int cmd_analyze(RunConfig cfg, const std::filesystem::path& out, const AnalyzeOptions& opt, std::ostream& log);
int cmd_herald(const RunConfig& cfg, const std::filesystem::path& out, std::ostream& log);

/// Runs `body`, mapping library exceptions to exit codes and printing them to `err`.
int guarded(const std::function<int()>& body, std::ostream& err);

}  // namespace vipa::cli
