// SPDX-License-Identifier: Apache-2.0
//
// Experiment-runner entry points shared by the command-line binary and the
// test suites. Exit codes: 0 success, 2 configuration/usage error, 3 runtime
// error.
#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

#include "ggrpo/advantage.hpp"
#include "ggrpo/config.hpp"

namespace ggrpo {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitRuntimeError = 3;

// Parses the config, runs train or compare per its mode (optionally forced),
// and writes metrics.csv / summary.txt / per-figure CSVs into output_dir.
int run_experiment(const std::filesystem::path& config_path, std::ostream& diagnostics,
                   std::optional<ExperimentConfig::Mode> forced_mode = std::nullopt);

struct OneshotRequest {
  std::vector<double> rewards;
  Estimator estimator = Estimator::GGrpo;
  double epsilon = 1e-6;
  double ema_alpha = 0.9;
  std::optional<double> ema_sigma;  // primes the EMA state when present
};

// Prints one advantage per line in input order at full precision.
int advantage_oneshot(const OneshotRequest& request, std::ostream& out,
                      std::ostream& diagnostics);

}  // namespace ggrpo
