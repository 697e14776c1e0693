#pragma once

#include <string>

#include "tripend/config.hpp"

namespace tripend {

// Process exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;      // bad config/CLI input
inline constexpr int kExitInfeasible = 3;  // synthesis found no admissible level
inline constexpr int kExitNumerical = 4;   // numerical or regularity failure
inline constexpr int kExitNonFinite = 5;   // simulation left the finite range
inline constexpr int kExitUnstable = 6;    // analysis handed an unstable loop

// Each command validates the configuration, writes its artifacts under
// out_dir (created on demand) plus config_echo.txt, and reports one error
// line on stderr for nonzero exits.
int cmd_model(const RunConfig& cfg, const std::string& out_dir);
int cmd_synth(const RunConfig& cfg, const std::string& method, const std::string& out_dir);
int cmd_simulate(const RunConfig& cfg, const std::string& scenario,
                 const std::string& controller_path, const std::string& out_dir);
int cmd_analyze(const RunConfig& cfg, const std::string& controller_path,
                const std::string& out_dir);

// model + both syntheses + all four simulations + analysis of the hinf
// controller + summary.json.  Dependent stages are skipped after a failure;
// the first nonzero stage code is returned.
int cmd_reproduce(const RunConfig& cfg, const std::string& out_dir);

}  // namespace tripend
