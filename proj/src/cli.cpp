// SPDX-License-Identifier: Apache-2.0

#include "ggrpo/cli.hpp"

#include <fstream>
#include <ostream>
#include <system_error>

#include "ggrpo/metrics_io.hpp"

namespace ggrpo {
namespace {

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);  // '\n' line endings everywhere
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  return out;
}

void run_train(const ExperimentConfig& config) {
  const TrainResult result = train(config.trainer, config.tasks);
  {
    auto out = open_output(config.output_dir / "metrics.csv");
    write_metrics_csv(out, result.metrics);
  }
  if (config.emit_plots_data) {
    {
      auto out = open_output(config.output_dir / "length_dynamics.csv");
      write_length_dynamics_csv(out, result.metrics);
    }
    {
      auto out = open_output(config.output_dir / "entropy_dynamics.csv");
      write_entropy_dynamics_csv(out, result.metrics, config.tasks);
    }
    {
      auto out = open_output(config.output_dir / "reward_curves.csv");
      write_reward_curves_csv(out, result.metrics);
    }
  }
  auto out = open_output(config.output_dir / "summary.txt");
  write_train_summary(out, config, result);
}

void run_compare(const ExperimentConfig& config) {
  const ComparisonReport report = compare_estimators(config.trainer, config.tasks);
  for (const EstimatorReport& entry : report.entries) {
    const std::string name(estimator_name(entry.estimator));
    {
      auto out = open_output(config.output_dir / ("metrics_" + name + ".csv"));
      write_metrics_csv(out, entry.metrics);
    }
    if (!entry.metrics_no_outlier.empty()) {
      auto out =
          open_output(config.output_dir / ("metrics_" + name + "_no_outlier.csv"));
      write_metrics_csv(out, entry.metrics_no_outlier);
    }
  }
  auto out = open_output(config.output_dir / "summary.txt");
  write_compare_summary(out, config, report);
}

}  // namespace

int run_experiment(const std::filesystem::path& config_path, std::ostream& diagnostics,
                   std::optional<ExperimentConfig::Mode> forced_mode) {
  ExperimentConfig config;
  try {
    config = parse_config_file(config_path);
  } catch (const ConfigError& e) {
    diagnostics << "config error: " << e.what() << "\n";
    return kExitConfigError;
  }
  if (forced_mode) config.mode = *forced_mode;

  try {
    std::error_code ec;
    std::filesystem::create_directories(config.output_dir, ec);
    if (ec || !std::filesystem::is_directory(config.output_dir))
      throw std::runtime_error("cannot create output directory '" +
                               config.output_dir.string() + "'");
    if (config.mode == ExperimentConfig::Mode::Train)
      run_train(config);
    else
      run_compare(config);
  } catch (const std::exception& e) {
    diagnostics << "error: " << e.what() << "\n";
    return kExitRuntimeError;
  }
  return kExitOk;
}

int advantage_oneshot(const OneshotRequest& request, std::ostream& out,
                      std::ostream& diagnostics) {
  if (request.rewards.size() < 2) {
    diagnostics << "advantage: need at least 2 rewards\n";
    return kExitConfigError;
  }
  std::vector<double> values;
  try {
    switch (request.estimator) {
      case Estimator::GGrpo:
        values = g_grpo_advantage(request.rewards);
        break;
      case Estimator::Grpo: {
        RolloutGroup group{"oneshot", "q", request.rewards, {}};
        values = grpo_advantage(group, request.epsilon).values;
        break;
      }
      case Estimator::DrGrpo: {
        RolloutGroup group{"oneshot", "q", request.rewards, {}};
        values = dr_grpo_advantage(group).values;
        break;
      }
      case Estimator::EmaGrpo: {
        RolloutGroup group{"oneshot", "q", request.rewards, {}};
        EmaState state{"oneshot", request.ema_sigma.value_or(0.0), request.ema_alpha,
                       request.ema_sigma.has_value()};
        values = ema_grpo_advantage(group, state, request.epsilon).first.values;
        break;
      }
    }
  } catch (const std::exception& e) {
    diagnostics << "advantage: " << e.what() << "\n";
    return kExitConfigError;
  }
  for (double v : values) out << format_double(v) << "\n";
  return kExitOk;
}

}  // namespace ggrpo
