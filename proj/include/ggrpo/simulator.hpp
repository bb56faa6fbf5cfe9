// SPDX-License-Identifier: Apache-2.0
//
// Synthetic multi-task environments with contrasting reward topologies, the
// uniform-group dynamic filter, and a deterministic policy-gradient training
// loop comparing the four advantage estimators.
#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "ggrpo/advantage.hpp"
#include "ggrpo/policy.hpp"
#include "ggrpo/shaping.hpp"

namespace ggrpo {

enum class Topology { Binary, ContinuousIou, HeavyTail, BimodalSplit, ScaledContinuous };

std::string_view topology_name(Topology t);
Topology parse_topology(std::string_view name);

struct TaskSpec {
  std::string task_id;
  Topology topology = Topology::Binary;
  std::vector<int> target;       // hidden ground truth (content symbols)
  double reward_scale = 1.0;
  double outlier_prob = 0.0;     // < 0.5
  double outlier_magnitude = 10.0;
  LengthEnvelope envelope{1, 2, 6, 10};
  EntropyBounds entropy_bounds{0.15, 0.9, 0.01};
};

struct TrainerConfig {
  int group_size = 8;       // G
  int batch_groups = 16;
  int steps = 500;
  double learning_rate = 0.05;
  double clip_epsilon = 0.2;
  double ema_alpha = 0.9;
  double stability_epsilon = 1e-6;
  Estimator estimator = Estimator::GGrpo;
  bool dynamic_filter = true;
  std::uint64_t seed = 7;
  // Desk-scale policy geometry and loop plumbing.
  int max_len = 8;
  int vocab_size = 6;        // symbol vocab_size-1 is the end token
  int context_order = 1;
  int inner_steps = 1;       // gradient micro-steps per sampled batch
  bool pool_per_task = true; // ggrpo ranking scope
  double init_logit_noise = 0.0;  // stddev of seeded gaussian logit init
  CompositeRewardWeights reward_weights{1.0, 0.1, 0.1, 0.1};
};

void validate(const TrainerConfig& cfg, std::span<const TaskSpec> tasks);

struct TaskStepMetrics {
  std::string task_id;
  double mean_reward = 0.0;   // over all sampled rollouts, pre-filter
  double adv_mean = 0.0;      // over surviving advantages (NaN if none)
  double adv_var = 0.0;
  double adv_max_abs = 0.0;
  double w2 = 0.0;            // W2-to-normal of the task's advantages
  double entropy = 0.0;       // mean per-token policy entropy
  double mean_length = 0.0;
  int filtered_groups = 0;
  double ema_sigma = 0.0;     // current EMA state (emagrpo)
  bool rewards_distinct = false;  // pooled task rewards were all distinct
};

struct StepMetrics {
  int step = 0;
  std::vector<TaskStepMetrics> tasks;
  // Global aggregates over the whole batch.
  double mean_reward = 0.0;
  double adv_mean = 0.0;
  double adv_var = 0.0;
  double w2 = 0.0;
  double entropy = 0.0;
  double mean_length = 0.0;
  int filtered_groups = 0;
  double surrogate = 0.0;
  double total_loss = 0.0;
  double grad_norm = 0.0;
};

// Scores one rollout against the task's topology. Deterministic given the
// seed; the seed drives the outlier spike and the scaled-continuous draw.
// A trailing end_token (>= 0) is stripped before matching.
double score_rollout(const TaskSpec& task, const Rollout& rollout, std::uint64_t seed,
                     int end_token = -1);

// Drops every group whose rewards are all identical (zero within-group
// variance carries no relative signal). Returns survivors in order plus the
// number removed.
std::pair<std::vector<RolloutGroup>, int> dynamic_filter(std::span<const RolloutGroup> groups);

// True when the group has at least two distinct reward values.
bool group_has_signal(const RolloutGroup& group);

struct TrainResult {
  std::vector<StepMetrics> metrics;
  PolicyTable policy;
  std::map<std::string, EmaState> ema_states;
};

// Runs `steps` iterations of sample -> score -> filter -> advantages ->
// gradient ascent, round-robin over tasks. Fully deterministic for a fixed
// config.
TrainResult train(const TrainerConfig& cfg, std::span<const TaskSpec> tasks);

struct EstimatorReport {
  Estimator estimator = Estimator::Grpo;
  std::vector<StepMetrics> metrics;
  std::map<std::string, double> final_mean_reward;  // trailing-window mean
  std::map<std::string, std::pair<double, double>> w2_endpoints;  // first/last
  // hi/lo per-task advantage-variance ratio across distinct-reward steps.
  double equity_ratio_median = 0.0;
  double equity_ratio_max = 0.0;
  // Outlier sensitivity: max |advantage| seen, with and without injection.
  double max_abs_adv = 0.0;
  double max_abs_adv_no_outlier = 0.0;
  std::vector<StepMetrics> metrics_no_outlier;  // empty when nothing injected
};

struct ComparisonReport {
  std::vector<EstimatorReport> entries;  // grpo, drgrpo, emagrpo, ggrpo
};

// Runs train() once per estimator with identical seeds; when any task
// injects outliers, repeats each run with injection disabled.
ComparisonReport compare_estimators(const TrainerConfig& cfg, std::span<const TaskSpec> tasks);

}  // namespace ggrpo
