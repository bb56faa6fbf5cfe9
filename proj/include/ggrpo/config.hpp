// SPDX-License-Identifier: Apache-2.0
//
// Experiment configuration: a line-oriented key-value file with [trainer]
// and repeated [task] sections. Unknown keys and duplicate keys are hard
// errors; diagnostics carry the offending line number.
#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "ggrpo/simulator.hpp"

namespace ggrpo {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(int line, const std::string& message)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + message
                                    : message),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

struct ExperimentConfig {
  enum class Mode { Train, Compare };
  Mode mode = Mode::Train;
  std::filesystem::path output_dir;  // resolved against GGRPO_OUTPUT_DIR
  bool emit_plots_data = true;
  TrainerConfig trainer;
  std::vector<TaskSpec> tasks;
};

// Parses and validates; throws ConfigError with a line number on parse
// failures and line 0 on file-level problems (missing file, no tasks, ...).
ExperimentConfig parse_config_file(const std::filesystem::path& path);
ExperimentConfig parse_config_text(const std::string& text);

// Writes the fully-defaulted configuration in re-parseable form; the echo at
// the top of summary.txt reproduces the run when fed back to `run`.
void write_effective_config(std::ostream& out, const ExperimentConfig& config);

}  // namespace ggrpo
