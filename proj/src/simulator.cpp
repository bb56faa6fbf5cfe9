// SPDX-License-Identifier: Apache-2.0

#include "ggrpo/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

#include "ggrpo/kernels.hpp"
#include "ggrpo/quantiles.hpp"

namespace ggrpo {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// splitmix64 finalizer; composes independent substreams from (seed, salt,
// step, group, index) without correlated low bits.
std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

std::uint64_t substream(std::uint64_t seed, std::uint64_t salt, std::uint64_t step,
                        std::uint64_t group, std::uint64_t index) {
  std::uint64_t s = mix64(seed ^ mix64(salt));
  s = mix64(s ^ step);
  s = mix64(s ^ group);
  return mix64(s ^ index);
}

constexpr std::uint64_t kSampleSalt = 0x5A4D504Cull;  // rollout sampling
constexpr std::uint64_t kScoreSalt = 0x53434F52ull;   // reward scoring
constexpr std::uint64_t kInitSalt = 0x494E4954ull;    // logit init noise

double uniform01(std::mt19937_64& rng) {
  return double(rng() >> 11) * 0x1.0p-53;
}

bool topology_uses_target(Topology t) {
  return t != Topology::ScaledContinuous;
}

bool topology_has_structure(Topology t) {
  return t == Topology::ContinuousIou || t == Topology::HeavyTail;
}

// Response content: the sampled tokens minus a trailing end token.
std::span<const int> content_tokens(const Rollout& r, int end_token) {
  std::span<const int> toks{r.tokens};
  if (end_token >= 0 && !toks.empty() && toks.back() == end_token)
    toks = toks.first(toks.size() - 1);
  return toks;
}

bool exact_match(std::span<const int> content, std::span<const int> target) {
  return std::equal(content.begin(), content.end(), target.begin(), target.end());
}

// Token multiset overlap |y n target| / |y u target|, the dense continuous
// stand-in for an overlap-style score in [0,1].
double multiset_iou(std::span<const int> content, std::span<const int> target) {
  std::map<int, int> counts;
  for (int t : content) ++counts[t];
  int inter = 0;
  for (int t : target) {
    auto it = counts.find(t);
    if (it != counts.end() && it->second > 0) {
      --it->second;
      ++inter;
    }
  }
  const int uni = int(content.size()) + int(target.size()) - inter;
  if (uni == 0) return 1.0;  // both empty
  return double(inter) / double(uni);
}

double mean_of(std::span<const double> v) {
  return v.empty() ? kNaN : kernels::sum(v) / double(v.size());
}

double variance_of(std::span<const double> v, double mean) {
  if (v.empty()) return kNaN;
  std::vector<double> centered(v.size());
  kernels::shift_scale(v, -mean, 1.0, centered);
  return kernels::sum_squares(centered) / double(v.size());
}

bool all_distinct(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return std::adjacent_find(v.begin(), v.end()) == v.end();
}

struct GroupData {
  int task_index = 0;
  RolloutGroup group;
  std::vector<Rollout> rollouts;
  bool kept = true;
  AdvantageVector advantages;
};

}  // namespace

std::string_view topology_name(Topology t) {
  switch (t) {
    case Topology::Binary: return "binary";
    case Topology::ContinuousIou: return "continuous-iou";
    case Topology::HeavyTail: return "heavy-tail";
    case Topology::BimodalSplit: return "bimodal-split";
    case Topology::ScaledContinuous: return "scaled-continuous";
  }
  return "unknown";
}

Topology parse_topology(std::string_view name) {
  if (name == "binary") return Topology::Binary;
  if (name == "continuous-iou") return Topology::ContinuousIou;
  if (name == "heavy-tail") return Topology::HeavyTail;
  if (name == "bimodal-split") return Topology::BimodalSplit;
  if (name == "scaled-continuous") return Topology::ScaledContinuous;
  throw std::invalid_argument("unknown topology: " + std::string(name));
}

void validate(const TrainerConfig& cfg, std::span<const TaskSpec> tasks) {
  if (cfg.group_size < 2) throw std::invalid_argument("trainer: group_size must be >= 2");
  if (cfg.batch_groups < 1) throw std::invalid_argument("trainer: batch_groups must be >= 1");
  if (cfg.steps < 0) throw std::invalid_argument("trainer: steps must be >= 0");
  if (!(cfg.learning_rate > 0.0)) throw std::invalid_argument("trainer: learning_rate must be > 0");
  if (!(cfg.clip_epsilon > 0.0 && cfg.clip_epsilon < 1.0))
    throw std::invalid_argument("trainer: clip_epsilon must lie in (0,1)");
  if (!(cfg.ema_alpha >= 0.0 && cfg.ema_alpha < 1.0))
    throw std::invalid_argument("trainer: ema_alpha must lie in [0,1)");
  if (!(cfg.stability_epsilon > 0.0))
    throw std::invalid_argument("trainer: stability_epsilon must be > 0");
  if (cfg.max_len < 1) throw std::invalid_argument("trainer: max_len must be >= 1");
  if (cfg.vocab_size < 2) throw std::invalid_argument("trainer: vocab_size must be >= 2");
  if (cfg.context_order != 0 && cfg.context_order != 1)
    throw std::invalid_argument("trainer: context_order must be 0 or 1");
  if (cfg.inner_steps < 1) throw std::invalid_argument("trainer: inner_steps must be >= 1");
  if (!(cfg.init_logit_noise >= 0.0))
    throw std::invalid_argument("trainer: init_logit_noise must be >= 0");
  validate(cfg.reward_weights);

  if (tasks.empty()) throw std::invalid_argument("trainer: at least one task is required");
  std::map<std::string, int> seen;
  for (const TaskSpec& task : tasks) {
    if (task.task_id.empty()) throw std::invalid_argument("task: id must be non-empty");
    if (task.task_id == "all")
      throw std::invalid_argument("task: id 'all' is reserved for batch aggregates");
    if (task.task_id.find_first_of(", \t") != std::string::npos)
      throw std::invalid_argument("task '" + task.task_id +
                                  "': id must not contain commas or spaces");
    if (++seen[task.task_id] > 1)
      throw std::invalid_argument("task '" + task.task_id + "': duplicate id");
    if (!(task.reward_scale > 0.0))
      throw std::invalid_argument("task '" + task.task_id + "': reward_scale must be > 0");
    if (!(task.outlier_prob >= 0.0 && task.outlier_prob < 0.5))
      throw std::invalid_argument("task '" + task.task_id + "': outlier_prob must lie in [0, 0.5)");
    if (!(task.outlier_magnitude > 0.0))
      throw std::invalid_argument("task '" + task.task_id + "': outlier_magnitude must be > 0");
    validate(task.envelope);
    validate(task.entropy_bounds);
    if (topology_uses_target(task.topology)) {
      if (task.target.empty())
        throw std::invalid_argument("task '" + task.task_id + "': target must be non-empty");
      for (int tok : task.target)
        if (tok < 0 || tok >= cfg.vocab_size - 1)
          throw std::invalid_argument("task '" + task.task_id +
                                      "': target symbols must be content tokens < vocab_size-1");
    }
  }
}

double score_rollout(const TaskSpec& task, const Rollout& rollout, std::uint64_t seed,
                     int end_token) {
  const auto content = content_tokens(rollout, end_token);
  std::mt19937_64 rng(seed);
  switch (task.topology) {
    case Topology::Binary:
      return exact_match(content, task.target) ? 1.0 : 0.0;
    case Topology::BimodalSplit:
      return exact_match(content, task.target) ? task.reward_scale : 0.0;
    case Topology::ContinuousIou:
      return multiset_iou(content, task.target);
    case Topology::HeavyTail: {
      double score = multiset_iou(content, task.target);
      if (uniform01(rng) < task.outlier_prob) score += task.outlier_magnitude;
      return score;
    }
    case Topology::ScaledContinuous:
      return uniform01(rng) * task.reward_scale;
  }
  return 0.0;
}

bool group_has_signal(const RolloutGroup& group) {
  for (std::size_t i = 1; i < group.rewards.size(); ++i)
    if (group.rewards[i] != group.rewards[0]) return true;
  return false;
}

std::pair<std::vector<RolloutGroup>, int> dynamic_filter(std::span<const RolloutGroup> groups) {
  std::vector<RolloutGroup> kept;
  kept.reserve(groups.size());
  int removed = 0;
  for (const RolloutGroup& g : groups) {
    if (group_has_signal(g))
      kept.push_back(g);
    else
      ++removed;
  }
  return {std::move(kept), removed};
}

TrainResult train(const TrainerConfig& cfg, std::span<const TaskSpec> tasks) {
  validate(cfg, tasks);
  const int num_tasks = int(tasks.size());
  const int end_token = cfg.vocab_size - 1;
  const ClipConfig clip{cfg.clip_epsilon};

  TrainResult result;
  result.policy = PolicyTable::uniform(cfg.vocab_size, cfg.context_order, num_tasks, end_token);
  if (cfg.init_logit_noise > 0.0) {
    std::mt19937_64 rng(mix64(cfg.seed ^ mix64(kInitSalt)));
    for (double& z : result.policy.logits) {
      // inverse-CDF gaussian keeps initialization on our own deterministic path
      double u = uniform01(rng);
      while (u <= 0.0) u = uniform01(rng);
      z = cfg.init_logit_noise * normal_quantile(u);
    }
  }
  for (const TaskSpec& task : tasks)
    result.ema_states.emplace(task.task_id,
                              EmaState{task.task_id, 0.0, cfg.ema_alpha, false});

  PolicyTable& policy = result.policy;
  const std::size_t param_count = policy.logits.size();

  for (int step = 0; step < cfg.steps; ++step) {
    // Snapshot the behavior policy; updates within the step leave it fixed.
    const PolicyTable theta_old = policy;

    // Sample and score batch_groups groups, round-robin across tasks.
    std::vector<GroupData> batch(std::size_t(cfg.batch_groups));
    for (int g = 0; g < cfg.batch_groups; ++g) {
      GroupData& data = batch[std::size_t(g)];
      data.task_index = g % num_tasks;
      const TaskSpec& task = tasks[std::size_t(data.task_index)];
      data.group.task_id = task.task_id;
      data.group.query_id = "s" + std::to_string(step) + "g" + std::to_string(g);
      for (int i = 0; i < cfg.group_size; ++i) {
        Rollout r = sample_rollout(theta_old, data.task_index, task.task_id, cfg.max_len,
                                   substream(cfg.seed, kSampleSalt, std::uint64_t(step),
                                             std::uint64_t(g), std::uint64_t(i)));
        const double accuracy =
            score_rollout(task, r, substream(cfg.seed, kScoreSalt, std::uint64_t(step),
                                             std::uint64_t(g), std::uint64_t(i)),
                          end_token);
        const bool format_ok = !r.tokens.empty() && r.tokens.back() == end_token;
        std::optional<bool> structure_ok;
        if (topology_has_structure(task.topology)) {
          const auto content = content_tokens(r, end_token);
          structure_ok = !content.empty() && !task.target.empty() &&
                         content.front() == task.target.front();
        }
        r.reward = composite_reward(accuracy, int(r.tokens.size()), format_ok,
                                    structure_ok, task.envelope, cfg.reward_weights);
        data.group.rewards.push_back(r.reward);
        data.group.response_lengths.push_back(int(r.tokens.size()));
        data.rollouts.push_back(std::move(r));
      }
    }

    // Dynamic filter: uniform-reward groups never reach an estimator.
    std::vector<int> filtered_per_task(std::size_t(num_tasks), 0);
    int surviving = 0;
    for (GroupData& data : batch) {
      data.kept = !cfg.dynamic_filter || group_has_signal(data.group);
      if (data.kept)
        ++surviving;
      else
        ++filtered_per_task[std::size_t(data.task_index)];
    }

    // Advantages over the surviving groups.
    {
      std::vector<RolloutGroup> kept_groups;
      std::vector<std::size_t> kept_index;
      for (std::size_t i = 0; i < batch.size(); ++i) {
        if (!batch[i].kept) continue;
        kept_groups.push_back(batch[i].group);
        kept_index.push_back(i);
      }
      if (!kept_groups.empty()) {
        BatchOptions options{cfg.estimator, cfg.pool_per_task, cfg.stability_epsilon};
        auto advantages =
            advantage_batch(kept_groups, options, &result.ema_states, cfg.ema_alpha);
        for (std::size_t k = 0; k < kept_index.size(); ++k)
          batch[kept_index[k]].advantages = std::move(advantages[k]);
      }
    }

    // Metric inputs evaluated at theta_old, before any update.
    const std::size_t task_count = std::size_t(num_tasks);
    std::vector<std::vector<Rollout>> rollouts_by_task(task_count);
    for (const GroupData& data : batch)
      for (const Rollout& r : data.rollouts)
        rollouts_by_task[std::size_t(data.task_index)].push_back(r);

    std::map<std::string, double> h_per_task;
    std::map<std::string, EntropyBounds> bounds_per_task;
    for (int t = 0; t < num_tasks; ++t) {
      h_per_task[tasks[std::size_t(t)].task_id] =
          mean_token_entropy(policy, rollouts_by_task[std::size_t(t)]);
      bounds_per_task[tasks[std::size_t(t)].task_id] = tasks[std::size_t(t)].entropy_bounds;
    }

    double surrogate = 0.0;
    if (surviving > 0) {
      for (const GroupData& data : batch)
        if (data.kept)
          surrogate += clipped_surrogate(policy, data.rollouts, data.advantages, clip);
      surrogate /= double(surviving);
    }
    const double loss = total_loss(surrogate, h_per_task, bounds_per_task);

    // Gradient micro-steps: ascend the surrogate, descend the band penalty.
    double grad_norm = 0.0;
    for (int inner = 0; inner < cfg.inner_steps; ++inner) {
      std::vector<double> grad(param_count, 0.0);
      if (surviving > 0) {
        for (const GroupData& data : batch) {
          if (!data.kept) continue;
          const auto g = surrogate_gradient(policy, data.rollouts, data.advantages, clip);
          kernels::axpy(1.0 / double(surviving), g, grad);
        }
      }
      for (int t = 0; t < num_tasks; ++t) {
        const TaskSpec& task = tasks[std::size_t(t)];
        const auto& task_rollouts = rollouts_by_task[std::size_t(t)];
        const double h = inner == 0 ? h_per_task[task.task_id]
                                    : mean_token_entropy(policy, task_rollouts);
        double slope = 0.0;
        if (h > task.entropy_bounds.h_max)
          slope = 1.0;
        else if (h < task.entropy_bounds.h_min)
          slope = -1.0;
        if (slope != 0.0 && task.entropy_bounds.lambda_ent > 0.0) {
          const auto eg = mean_token_entropy_gradient(policy, task_rollouts);
          kernels::axpy(-task.entropy_bounds.lambda_ent * slope, eg, grad);
        }
      }
      if (inner == 0) grad_norm = std::sqrt(kernels::sum_squares(grad));
      kernels::axpy(cfg.learning_rate, grad, policy.logits);
    }

    // Assemble metrics.
    StepMetrics sm;
    sm.step = step;
    sm.filtered_groups = cfg.batch_groups - surviving;
    sm.surrogate = surrogate;
    sm.total_loss = loss;
    sm.grad_norm = grad_norm;

    std::vector<double> all_rewards, all_advantages, all_lengths;
    for (int t = 0; t < num_tasks; ++t) {
      const TaskSpec& task = tasks[std::size_t(t)];
      TaskStepMetrics tm;
      tm.task_id = task.task_id;
      tm.filtered_groups = filtered_per_task[std::size_t(t)];
      tm.ema_sigma = result.ema_states.at(task.task_id).sigma;

      std::vector<double> rewards, advantages, lengths;
      std::vector<double> pooled_rewards;  // surviving groups only
      for (const GroupData& data : batch) {
        if (data.task_index != t) continue;
        for (const Rollout& r : data.rollouts) {
          rewards.push_back(r.reward);
          lengths.push_back(double(r.tokens.size()));
        }
        if (data.kept) {
          advantages.insert(advantages.end(), data.advantages.values.begin(),
                            data.advantages.values.end());
          pooled_rewards.insert(pooled_rewards.end(), data.group.rewards.begin(),
                                data.group.rewards.end());
        }
      }
      tm.mean_reward = mean_of(rewards);
      tm.mean_length = mean_of(lengths);
      tm.entropy = h_per_task[task.task_id];
      tm.adv_mean = mean_of(advantages);
      tm.adv_var = variance_of(advantages, tm.adv_mean);
      tm.adv_max_abs = 0.0;
      for (double a : advantages) tm.adv_max_abs = std::max(tm.adv_max_abs, std::fabs(a));
      tm.w2 = advantages.empty()
                  ? kNaN
                  : wasserstein2_to_normal(SortedSample::from_unsorted(advantages));
      tm.rewards_distinct = !pooled_rewards.empty() && all_distinct(pooled_rewards);

      all_rewards.insert(all_rewards.end(), rewards.begin(), rewards.end());
      all_advantages.insert(all_advantages.end(), advantages.begin(), advantages.end());
      all_lengths.insert(all_lengths.end(), lengths.begin(), lengths.end());
      sm.tasks.push_back(std::move(tm));
    }

    sm.mean_reward = mean_of(all_rewards);
    sm.mean_length = mean_of(all_lengths);
    sm.adv_mean = mean_of(all_advantages);
    sm.adv_var = variance_of(all_advantages, sm.adv_mean);
    sm.w2 = all_advantages.empty()
                ? kNaN
                : wasserstein2_to_normal(SortedSample::from_unsorted(all_advantages));
    {
      std::vector<Rollout> everything;
      for (const auto& per_task : rollouts_by_task)
        everything.insert(everything.end(), per_task.begin(), per_task.end());
      sm.entropy = mean_token_entropy(theta_old, everything);
    }
    result.metrics.push_back(std::move(sm));
  }
  return result;
}

namespace {

std::map<std::string, double> trailing_mean_rewards(const std::vector<StepMetrics>& metrics,
                                                    int window) {
  std::map<std::string, double> out;
  if (metrics.empty()) return out;
  const int n = int(metrics.size());
  const int lo = std::max(0, n - window);
  std::map<std::string, std::pair<double, int>> acc;
  for (int s = lo; s < n; ++s)
    for (const auto& tm : metrics[std::size_t(s)].tasks) {
      auto& slot = acc[tm.task_id];
      slot.first += tm.mean_reward;
      slot.second += 1;
    }
  for (const auto& [task, slot] : acc) out[task] = slot.first / double(slot.second);
  return out;
}

double max_abs_adv_of(const std::vector<StepMetrics>& metrics) {
  double m = 0.0;
  for (const auto& sm : metrics)
    for (const auto& tm : sm.tasks) m = std::max(m, tm.adv_max_abs);
  return m;
}

std::map<std::string, std::pair<double, double>> w2_endpoints_of(
    const std::vector<StepMetrics>& metrics) {
  std::map<std::string, std::pair<double, double>> out;
  std::map<std::string, bool> seen;
  for (const auto& sm : metrics)
    for (const auto& tm : sm.tasks) {
      if (std::isnan(tm.w2)) continue;
      if (!seen[tm.task_id]) {
        out[tm.task_id] = {tm.w2, tm.w2};
        seen[tm.task_id] = true;
      } else {
        out[tm.task_id].second = tm.w2;
      }
    }
  return out;
}

// hi/lo ratio of per-task advantage variances, per step, over steps where
// every task's pooled rewards were distinct and variances are usable.
std::vector<double> equity_ratios_of(const std::vector<StepMetrics>& metrics) {
  std::vector<double> ratios;
  for (const auto& sm : metrics) {
    if (sm.tasks.size() < 2) continue;
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    bool usable = true;
    for (const auto& tm : sm.tasks) {
      if (!tm.rewards_distinct || !std::isfinite(tm.adv_var) || tm.adv_var <= 0.0) {
        usable = false;
        break;
      }
      lo = std::min(lo, tm.adv_var);
      hi = std::max(hi, tm.adv_var);
    }
    if (usable) ratios.push_back(hi / lo);
  }
  return ratios;
}

}  // namespace

ComparisonReport compare_estimators(const TrainerConfig& cfg, std::span<const TaskSpec> tasks) {
  validate(cfg, tasks);
  bool any_outliers = false;
  for (const TaskSpec& task : tasks)
    if (task.topology == Topology::HeavyTail && task.outlier_prob > 0.0) any_outliers = true;

  ComparisonReport report;
  for (Estimator est : {Estimator::Grpo, Estimator::DrGrpo, Estimator::EmaGrpo,
                        Estimator::GGrpo}) {
    TrainerConfig run_cfg = cfg;
    run_cfg.estimator = est;

    EstimatorReport entry;
    entry.estimator = est;
    entry.metrics = train(run_cfg, tasks).metrics;
    entry.final_mean_reward = trailing_mean_rewards(entry.metrics, 20);
    entry.w2_endpoints = w2_endpoints_of(entry.metrics);
    entry.max_abs_adv = max_abs_adv_of(entry.metrics);

    auto ratios = equity_ratios_of(entry.metrics);
    if (!ratios.empty()) {
      std::sort(ratios.begin(), ratios.end());
      entry.equity_ratio_median = ratios[ratios.size() / 2];
      entry.equity_ratio_max = ratios.back();
    }

    if (any_outliers) {
      std::vector<TaskSpec> calm(tasks.begin(), tasks.end());
      for (TaskSpec& task : calm) task.outlier_prob = 0.0;
      entry.metrics_no_outlier = train(run_cfg, calm).metrics;
      entry.max_abs_adv_no_outlier = max_abs_adv_of(entry.metrics_no_outlier);
    } else {
      entry.max_abs_adv_no_outlier = entry.max_abs_adv;
    }
    report.entries.push_back(std::move(entry));
  }
  return report;
}

}  // namespace ggrpo
