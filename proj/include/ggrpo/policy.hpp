// SPDX-License-Identifier: Apache-2.0
//
// A tiny tabular autoregressive categorical policy with the clipped
// importance-sampling surrogate objective and its analytic gradient. The
// tabular parameterization keeps gradients exact and finite-difference
// checkable at desk scale.
//
// Contexts are task-scoped: order 0 uses one context per task (bandit),
// order 1 uses a start slot plus one slot per previous symbol (bigram).
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ggrpo/advantage.hpp"
#include "ggrpo/shaping.hpp"

namespace ggrpo {

struct PolicyTable {
  int vocab_size = 2;
  int context_order = 1;  // 0 = bandit, 1 = bigram
  int num_tasks = 1;
  std::optional<int> end_token;     // sampling stops after emitting it
  std::vector<double> logits;       // num_contexts() * vocab_size

  static PolicyTable uniform(int vocab_size, int context_order, int num_tasks,
                             std::optional<int> end_token = std::nullopt);

  int contexts_per_task() const { return context_order == 0 ? 1 : vocab_size + 1; }
  int num_contexts() const { return num_tasks * contexts_per_task(); }
  // prev == -1 denotes the start of a response.
  int context_index(int task, int prev) const;
  std::span<const double> logits_row(int context) const;
};

void validate(const PolicyTable& policy);

// One sampled response: tokens, the sampling-time log-probabilities, and the
// scalar reward filled in by the scorer.
struct Rollout {
  std::string task_id;
  int task_index = 0;
  std::vector<int> tokens;
  std::vector<double> behavior_logprobs;
  double reward = 0.0;
};

struct ClipConfig {
  double epsilon = 0.2;  // in (0,1)
};

void validate(const ClipConfig& cfg);

// Autoregressive categorical sampling until the end token or max_len.
// Deterministic for a fixed seed.
Rollout sample_rollout(const PolicyTable& policy, int task_index,
                       const std::string& task_id, int max_len,
                       std::uint64_t seed);

// exp(logprob_theta(token_t | context) - behavior_logprobs[t]).
double token_ratio(const PolicyTable& policy, const Rollout& rollout,
                   std::size_t t);

// (1/G) sum_i (1/|y_i|) sum_t min(r*A_i, clip(r, 1-eps, 1+eps)*A_i);
// the objective to be maximized.
double clipped_surrogate(const PolicyTable& policy, std::span<const Rollout> rollouts,
                         const AdvantageVector& advantages, const ClipConfig& cfg);

// Analytic gradient of clipped_surrogate with respect to the logits. A token
// contributes A_i * r * d(log pi)/d(theta) when the min selects the unclipped
// branch (boundary included), and exactly zero otherwise.
std::vector<double> surrogate_gradient(const PolicyTable& policy,
                                       std::span<const Rollout> rollouts,
                                       const AdvantageVector& advantages,
                                       const ClipConfig& cfg);

// Mean over all tokens of the full categorical entropy at each visited
// context (nats), measured on the current policy.
double mean_token_entropy(const PolicyTable& policy, std::span<const Rollout> rollouts);

// d(mean_token_entropy)/d(logits); used for the entropy-band penalty.
std::vector<double> mean_token_entropy_gradient(const PolicyTable& policy,
                                                std::span<const Rollout> rollouts);

// -surrogate + sum_task lambda_ent * entropy_penalty(h_task); the quantity a
// trainer minimizes. Every task in h_per_task must have bounds.
double total_loss(double surrogate, const std::map<std::string, double>& h_per_task,
                  const std::map<std::string, EntropyBounds>& bounds_per_task);

}  // namespace ggrpo
