#pragma once

#include <string>

#include "angularpu/trainer.hpp"

namespace angularpu::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNumeric = 4;
inline constexpr int kExitPartialSweep = 5;

/// Entry point shared by the executable and the tests.
int run_cli(int argc, const char* const* argv);

/// Flat JSON config -> TrainConfig. Missing required or unknown keys throw
/// InvalidSpec naming the key.
TrainConfig parse_train_config(const std::string& text);

SweepGrid parse_grid(const std::string& text);

/// Renders columns of a sweep CSV as a standalone SVG. Throws InvalidSpec for
/// an unknown column.
std::string render_sweep_svg(const std::string& csv, const std::string& x, const std::string& y);

}  // namespace angularpu::cli
