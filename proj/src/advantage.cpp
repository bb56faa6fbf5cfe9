// SPDX-License-Identifier: Apache-2.0

#include "ggrpo/advantage.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "ggrpo/kernels.hpp"
#include "ggrpo/quantiles.hpp"

namespace ggrpo {
namespace {

void check_group(const RolloutGroup& group, const char* fn) {
  if (group.rewards.size() < 2)
    throw std::invalid_argument(std::string(fn) + ": group needs G >= 2 rewards");
  if (!group.response_lengths.empty() &&
      group.response_lengths.size() != group.rewards.size())
    throw std::invalid_argument(std::string(fn) + ": rewards/lengths size mismatch");
  for (double r : group.rewards)
    if (!std::isfinite(r)) throw std::domain_error(std::string(fn) + ": non-finite reward");
}

double group_mean(std::span<const double> rewards) {
  return kernels::sum(rewards) / double(rewards.size());
}

double group_std(std::span<const double> rewards, double mean) {
  std::vector<double> centered(rewards.size());
  kernels::shift_scale(rewards, -mean, 1.0, centered);
  return std::sqrt(kernels::sum_squares(centered) / double(centered.size()));
}

}  // namespace

std::string_view estimator_name(Estimator e) {
  switch (e) {
    case Estimator::Grpo: return "grpo";
    case Estimator::DrGrpo: return "drgrpo";
    case Estimator::EmaGrpo: return "emagrpo";
    case Estimator::GGrpo: return "ggrpo";
  }
  return "unknown";
}

Estimator parse_estimator(std::string_view name) {
  if (name == "grpo") return Estimator::Grpo;
  if (name == "drgrpo") return Estimator::DrGrpo;
  if (name == "emagrpo") return Estimator::EmaGrpo;
  if (name == "ggrpo") return Estimator::GGrpo;
  throw std::invalid_argument("unknown estimator: " + std::string(name));
}

AdvantageVector grpo_advantage(const RolloutGroup& group, double epsilon) {
  check_group(group, "grpo_advantage");
  const double mu = group_mean(group.rewards);
  const double sigma = group_std(group.rewards, mu);
  AdvantageVector out{std::vector<double>(group.rewards.size()), Estimator::Grpo};
  kernels::shift_scale(group.rewards, -mu, 1.0 / (sigma + epsilon), out.values);
  return out;
}

AdvantageVector dr_grpo_advantage(const RolloutGroup& group) {
  check_group(group, "dr_grpo_advantage");
  const double mu = group_mean(group.rewards);
  AdvantageVector out{std::vector<double>(group.rewards.size()), Estimator::DrGrpo};
  kernels::shift_scale(group.rewards, -mu, 1.0, out.values);
  return out;
}

std::pair<AdvantageVector, EmaState> ema_grpo_advantage(const RolloutGroup& group,
                                                        EmaState state,
                                                        double epsilon) {
  check_group(group, "ema_grpo_advantage");
  if (state.task_id != group.task_id)
    throw std::invalid_argument("ema_grpo_advantage: state/group task mismatch ('" +
                                state.task_id + "' vs '" + group.task_id + "')");
  const double mu = group_mean(group.rewards);
  const double sigma_g = group_std(group.rewards, mu);
  if (state.initialized) {
    state.sigma = state.decay * state.sigma + (1.0 - state.decay) * sigma_g;
  } else {
    state.sigma = sigma_g;  // first observation, no decay from an arbitrary prior
    state.initialized = true;
  }
  AdvantageVector out{std::vector<double>(group.rewards.size()), Estimator::EmaGrpo};
  kernels::shift_scale(group.rewards, -mu, 1.0 / (state.sigma + epsilon), out.values);
  return {std::move(out), std::move(state)};
}

std::vector<double> g_grpo_advantage(std::span<const double> rewards) {
  const std::size_t n = rewards.size();
  if (n < 2)
    throw std::invalid_argument("g_grpo_advantage: need N >= 2 rewards");
  for (double r : rewards)
    if (!std::isfinite(r)) throw std::domain_error("g_grpo_advantage: non-finite reward");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return rewards[a] < rewards[b]; });

  std::vector<double> quantiles(n);
  standard_normal_quantiles(quantiles);

  std::vector<double> out(n);
  std::size_t lo = 0;
  while (lo < n) {
    std::size_t hi = lo + 1;
    while (hi < n && rewards[order[hi]] == rewards[order[lo]]) ++hi;
    double value;
    if (hi - lo == 1) {
      value = quantiles[lo];
    } else {
      // Pair the tie block from both ends inward so that mirrored blocks sum
      // to exact negations of each other (q[n-1-i] == -q[i] by construction).
      double s = 0.0;
      std::size_t i = lo;
      std::size_t j = hi - 1;
      while (i < j) {
        s += quantiles[i] + quantiles[j];
        ++i;
        --j;
      }
      if (i == j) s += quantiles[i];
      value = s / double(hi - lo);
    }
    for (std::size_t k = lo; k < hi; ++k) out[order[k]] = value;
    lo = hi;
  }
  return out;
}

std::vector<AdvantageVector> advantage_batch(std::span<const RolloutGroup> groups,
                                             const BatchOptions& options,
                                             std::map<std::string, EmaState>* ema,
                                             double ema_decay) {
  if (groups.empty())
    throw std::invalid_argument("advantage_batch: empty batch");

  std::vector<AdvantageVector> out;
  out.reserve(groups.size());

  switch (options.estimator) {
    case Estimator::Grpo:
      for (const auto& g : groups) out.push_back(grpo_advantage(g, options.epsilon));
      return out;
    case Estimator::DrGrpo:
      for (const auto& g : groups) out.push_back(dr_grpo_advantage(g));
      return out;
    case Estimator::EmaGrpo: {
      if (ema == nullptr)
        throw std::invalid_argument("advantage_batch: emagrpo requires EMA states");
      for (const auto& g : groups) {
        auto it = ema->find(g.task_id);
        if (it == ema->end())
          it = ema->emplace(g.task_id, EmaState{g.task_id, 0.0, ema_decay, false}).first;
        auto [adv, next] = ema_grpo_advantage(g, it->second, options.epsilon);
        it->second = std::move(next);
        out.push_back(std::move(adv));
      }
      return out;
    }
    case Estimator::GGrpo:
      break;
  }

  if (!options.pool_per_task) {
    for (const auto& g : groups) {
      check_group(g, "advantage_batch");
      out.push_back({g_grpo_advantage(g.rewards), Estimator::GGrpo});
    }
    return out;
  }

  // Pool all rewards sharing a task_id into one ranking, then scatter the
  // advantages back into per-group vectors in input order.
  out.resize(groups.size());
  std::map<std::string, std::vector<std::size_t>> by_task;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    check_group(groups[i], "advantage_batch");
    by_task[groups[i].task_id].push_back(i);
  }
  for (const auto& [task, indices] : by_task) {
    std::vector<double> pooled;
    for (std::size_t gi : indices)
      pooled.insert(pooled.end(), groups[gi].rewards.begin(), groups[gi].rewards.end());
    const std::vector<double> adv = g_grpo_advantage(pooled);
    std::size_t cursor = 0;
    for (std::size_t gi : indices) {
      const std::size_t g_size = groups[gi].rewards.size();
      out[gi].estimator = Estimator::GGrpo;
      out[gi].values.assign(adv.begin() + cursor, adv.begin() + cursor + g_size);
      cursor += g_size;
    }
  }
  return out;
}

}  // namespace ggrpo
