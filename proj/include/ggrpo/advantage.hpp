// SPDX-License-Identifier: Apache-2.0
//
// Group-relative advantage estimators:
//   grpo     (R - mean) / (std + eps), within the prompt group
//   drgrpo   R - mean, no scale
//   emagrpo  (R - mean) / (task EMA of std + eps), stateful per task
//   ggrpo    rank -> uniform probability -> standard-normal quantile, with
//            tie classes averaged, i.e. the monotone 1D optimal-transport map
//            from the empirical reward distribution to N(0,1)
//
// Mean/std are population moments (divide by N). All estimators are pure;
// emagrpo passes its state in and out.
#pragma once

#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace ggrpo {

enum class Estimator { Grpo, DrGrpo, EmaGrpo, GGrpo };

std::string_view estimator_name(Estimator e);
// Parses "grpo" | "drgrpo" | "emagrpo" | "ggrpo"; throws std::invalid_argument.
Estimator parse_estimator(std::string_view name);

// One query's G sampled responses with scalar rewards and a task label.
struct RolloutGroup {
  std::string task_id;
  std::string query_id;
  std::vector<double> rewards;        // length G >= 2, finite
  std::vector<int> response_lengths;  // length G, positive
};

struct AdvantageVector {
  std::vector<double> values;
  Estimator estimator = Estimator::Grpo;
};

// Task-level EMA of the reward standard deviation (sigma_tau).
// The first observed group sets sigma directly; later groups decay into it.
struct EmaState {
  std::string task_id;
  double sigma = 0.0;
  double decay = 0.9;  // in [0,1)
  bool initialized = false;
};

AdvantageVector grpo_advantage(const RolloutGroup& group, double epsilon);
AdvantageVector dr_grpo_advantage(const RolloutGroup& group);
std::pair<AdvantageVector, EmaState> ema_grpo_advantage(const RolloutGroup& group,
                                                        EmaState state,
                                                        double epsilon);

// Rank-based Gaussian advantages over one task batch (N >= 2):
//   p_i = (rank_i - 0.5) / N,  A_i = Phi^-1(p_i),
// identical rewards receive the mean of their tie class's quantiles, and the
// outputs are scattered back to the input order. Zero-sum to rounding; for a
// balanced tie pattern the positive and negative halves are exact negations.
std::vector<double> g_grpo_advantage(std::span<const double> rewards);

struct BatchOptions {
  Estimator estimator = Estimator::GGrpo;
  // ggrpo only: pool all same-task rewards across the batch into one ranking
  // (the default); when false each group is ranked on its own.
  bool pool_per_task = true;
  double epsilon = 1e-6;
};

// Dispatches the selected estimator across a batch of groups. Output order
// and lengths mirror the input. emagrpo requires `ema`, keyed by task_id;
// missing entries are created with decay = ema_decay.
std::vector<AdvantageVector> advantage_batch(std::span<const RolloutGroup> groups,
                                             const BatchOptions& options,
                                             std::map<std::string, EmaState>* ema = nullptr,
                                             double ema_decay = 0.9);

}  // namespace ggrpo
