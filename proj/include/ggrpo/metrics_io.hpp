// SPDX-License-Identifier: Apache-2.0
//
// Tabular serialization of training metrics: the fixed-schema metrics.csv,
// the per-figure data files, and the summary echo.
#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "ggrpo/config.hpp"
#include "ggrpo/simulator.hpp"

namespace ggrpo {

// %.17g so every double round-trips exactly; NaN serializes as "nan".
std::string format_double(double v);

// metrics.csv schema: one row per (step, task) plus one aggregate row per
// step with task_id "all"; the objective columns are filled on the aggregate
// row only.
extern const char* const kMetricsHeader;

void write_metrics_csv(std::ostream& out, const std::vector<StepMetrics>& metrics);
void write_length_dynamics_csv(std::ostream& out, const std::vector<StepMetrics>& metrics);
void write_entropy_dynamics_csv(std::ostream& out, const std::vector<StepMetrics>& metrics,
                                const std::vector<TaskSpec>& tasks);
void write_reward_curves_csv(std::ostream& out, const std::vector<StepMetrics>& metrics);

// summary.txt: the effective config (directly re-runnable) followed by
// result lines as comments.
void write_train_summary(std::ostream& out, const ExperimentConfig& config,
                         const TrainResult& result);
void write_compare_summary(std::ostream& out, const ExperimentConfig& config,
                           const ComparisonReport& report);

}  // namespace ggrpo
