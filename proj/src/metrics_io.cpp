// SPDX-License-Identifier: Apache-2.0

#include "ggrpo/metrics_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace ggrpo {
namespace {

std::string fmt(double v) { return format_double(v); }

void equity_lines(std::ostream& out, const std::vector<StepMetrics>& metrics) {
  double hi = 0.0;
  double median = 0.0;
  std::vector<double> ratios;
  for (const auto& sm : metrics) {
    if (sm.tasks.size() < 2) continue;
    double lo_v = 0.0, hi_v = 0.0;
    bool usable = true;
    bool first = true;
    for (const auto& tm : sm.tasks) {
      if (!tm.rewards_distinct || !std::isfinite(tm.adv_var) || tm.adv_var <= 0.0) {
        usable = false;
        break;
      }
      if (first) {
        lo_v = hi_v = tm.adv_var;
        first = false;
      } else {
        lo_v = std::min(lo_v, tm.adv_var);
        hi_v = std::max(hi_v, tm.adv_var);
      }
    }
    if (usable && lo_v > 0.0) ratios.push_back(hi_v / lo_v);
  }
  if (!ratios.empty()) {
    std::sort(ratios.begin(), ratios.end());
    median = ratios[ratios.size() / 2];
    hi = ratios.back();
  }
  out << "# equity ratio (hi/lo per-task advantage variance, distinct-reward steps): "
      << "median " << fmt(median) << ", max " << fmt(hi) << " over " << ratios.size()
      << " steps\n";
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

const char* const kMetricsHeader =
    "step,task_id,mean_reward,adv_mean,adv_var,w2,entropy,mean_length,"
    "filtered_groups,surrogate,total_loss,grad_norm";

void write_metrics_csv(std::ostream& out, const std::vector<StepMetrics>& metrics) {
  out << kMetricsHeader << "\n";
  for (const StepMetrics& sm : metrics) {
    for (const TaskStepMetrics& tm : sm.tasks) {
      out << sm.step << ',' << tm.task_id << ',' << fmt(tm.mean_reward) << ','
          << fmt(tm.adv_mean) << ',' << fmt(tm.adv_var) << ',' << fmt(tm.w2) << ','
          << fmt(tm.entropy) << ',' << fmt(tm.mean_length) << ',' << tm.filtered_groups
          << ",,,\n";
    }
    out << sm.step << ",all," << fmt(sm.mean_reward) << ',' << fmt(sm.adv_mean) << ','
        << fmt(sm.adv_var) << ',' << fmt(sm.w2) << ',' << fmt(sm.entropy) << ','
        << fmt(sm.mean_length) << ',' << sm.filtered_groups << ',' << fmt(sm.surrogate)
        << ',' << fmt(sm.total_loss) << ',' << fmt(sm.grad_norm) << "\n";
  }
}

void write_length_dynamics_csv(std::ostream& out, const std::vector<StepMetrics>& metrics) {
  out << "step,task_id,mean_length\n";
  for (const StepMetrics& sm : metrics)
    for (const TaskStepMetrics& tm : sm.tasks)
      out << sm.step << ',' << tm.task_id << ',' << fmt(tm.mean_length) << "\n";
}

void write_entropy_dynamics_csv(std::ostream& out, const std::vector<StepMetrics>& metrics,
                                const std::vector<TaskSpec>& tasks) {
  out << "step,task_id,entropy,h_min,h_max\n";
  for (const StepMetrics& sm : metrics)
    for (const TaskStepMetrics& tm : sm.tasks) {
      const TaskSpec* spec = nullptr;
      for (const TaskSpec& t : tasks)
        if (t.task_id == tm.task_id) spec = &t;
      out << sm.step << ',' << tm.task_id << ',' << fmt(tm.entropy) << ','
          << fmt(spec ? spec->entropy_bounds.h_min : 0.0) << ','
          << fmt(spec ? spec->entropy_bounds.h_max : 0.0) << "\n";
    }
}

void write_reward_curves_csv(std::ostream& out, const std::vector<StepMetrics>& metrics) {
  out << "step,task_id,mean_reward\n";
  for (const StepMetrics& sm : metrics) {
    for (const TaskStepMetrics& tm : sm.tasks)
      out << sm.step << ',' << tm.task_id << ',' << fmt(tm.mean_reward) << "\n";
    out << sm.step << ",all," << fmt(sm.mean_reward) << "\n";
  }
}

void write_train_summary(std::ostream& out, const ExperimentConfig& config,
                         const TrainResult& result) {
  out << "# effective configuration; this file re-runs as-is: ggrpo run summary.txt\n";
  write_effective_config(out, config);
  out << "\n# ---------------------------------------------------------------\n";
  out << "# results (" << result.metrics.size() << " steps)\n";
  if (result.metrics.empty()) return;

  const StepMetrics& last = result.metrics.back();
  out << "# final per-task mean reward / mean length / entropy:\n";
  for (const TaskStepMetrics& tm : last.tasks)
    out << "#   " << tm.task_id << ": " << fmt(tm.mean_reward) << " / "
        << fmt(tm.mean_length) << " / " << fmt(tm.entropy) << "\n";
  out << "# W2-to-normal endpoints (first -> last step):\n";
  for (std::size_t t = 0; t < last.tasks.size(); ++t)
    out << "#   " << last.tasks[t].task_id << ": "
        << fmt(result.metrics.front().tasks[t].w2) << " -> " << fmt(last.tasks[t].w2)
        << "\n";
  equity_lines(out, result.metrics);
  out << "# final EMA sigma per task:\n";
  for (const auto& [task, state] : result.ema_states)
    out << "#   " << task << ": " << fmt(state.sigma)
        << (state.initialized ? "" : " (uninitialized)") << "\n";
  out << "# final objective: surrogate " << fmt(last.surrogate) << ", total loss "
      << fmt(last.total_loss) << ", grad norm " << fmt(last.grad_norm) << "\n";
}

void write_compare_summary(std::ostream& out, const ExperimentConfig& config,
                           const ComparisonReport& report) {
  out << "# effective configuration; this file re-runs as-is: ggrpo run summary.txt\n";
  write_effective_config(out, config);
  out << "\n# ---------------------------------------------------------------\n";
  out << "# estimator comparison (identical seeds per run)\n";
  for (const EstimatorReport& entry : report.entries) {
    out << "# --- " << estimator_name(entry.estimator) << " ---\n";
    out << "#   final mean reward (trailing 20 steps):\n";
    for (const auto& [task, reward] : entry.final_mean_reward)
      out << "#     " << task << ": " << fmt(reward) << "\n";
    out << "#   equity ratio over distinct-reward steps: median "
        << fmt(entry.equity_ratio_median) << ", max " << fmt(entry.equity_ratio_max)
        << "\n";
    out << "#   W2 endpoints per task:\n";
    for (const auto& [task, endpoints] : entry.w2_endpoints)
      out << "#     " << task << ": " << fmt(endpoints.first) << " -> "
          << fmt(endpoints.second) << "\n";
    out << "#   max |advantage|: " << fmt(entry.max_abs_adv)
        << " with outliers, " << fmt(entry.max_abs_adv_no_outlier)
        << " without (delta " << fmt(entry.max_abs_adv - entry.max_abs_adv_no_outlier)
        << ")\n";
  }
}

}  // namespace ggrpo
