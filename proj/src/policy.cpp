// SPDX-License-Identifier: Apache-2.0

#include "ggrpo/policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "ggrpo/kernels.hpp"

namespace ggrpo {
namespace {

double uniform01(std::mt19937_64& rng) {
  return double(rng() >> 11) * 0x1.0p-53;
}

// Lazily computed per-context softmax rows; a policy is immutable within one
// objective/gradient evaluation, so rows are shared across tokens.
class RowCache {
 public:
  explicit RowCache(const PolicyTable& policy)
      : policy_(policy),
        vocab_(std::size_t(policy.vocab_size)),
        probs_(policy.logits.size(), 0.0),
        lse_(std::size_t(policy.num_contexts()),
             std::numeric_limits<double>::quiet_NaN()) {}

  double lse(int ctx) {
    ensure(ctx);
    return lse_[std::size_t(ctx)];
  }
  std::span<const double> probs(int ctx) {
    ensure(ctx);
    return {probs_.data() + std::size_t(ctx) * vocab_, vocab_};
  }
  double logprob(int ctx, int token) {
    ensure(ctx);
    return policy_.logits[std::size_t(ctx) * vocab_ + std::size_t(token)] -
           lse_[std::size_t(ctx)];
  }

 private:
  void ensure(int ctx) {
    auto& slot = lse_[std::size_t(ctx)];
    if (!std::isnan(slot)) return;
    std::span<double> row{probs_.data() + std::size_t(ctx) * vocab_, vocab_};
    slot = kernels::softmax(policy_.logits_row(ctx), row);
  }

  const PolicyTable& policy_;
  std::size_t vocab_;
  std::vector<double> probs_;
  std::vector<double> lse_;
};

void check_rollout(const PolicyTable& policy, const Rollout& r, const char* fn) {
  if (r.tokens.empty() || r.tokens.size() != r.behavior_logprobs.size())
    throw std::invalid_argument(std::string(fn) + ": malformed rollout");
  if (r.task_index < 0 || r.task_index >= policy.num_tasks)
    throw std::invalid_argument(std::string(fn) + ": task index out of range");
  for (int tok : r.tokens)
    if (tok < 0 || tok >= policy.vocab_size)
      throw std::invalid_argument(std::string(fn) + ": token out of range");
}

// Walks a rollout's (context, token) pairs in order.
template <typename Fn>
void for_each_token(const PolicyTable& policy, const Rollout& r, Fn&& fn) {
  int prev = -1;
  for (std::size_t t = 0; t < r.tokens.size(); ++t) {
    const int ctx = policy.context_index(r.task_index, prev);
    fn(t, ctx, r.tokens[t]);
    prev = r.tokens[t];
  }
}

}  // namespace

PolicyTable PolicyTable::uniform(int vocab_size, int context_order, int num_tasks,
                                 std::optional<int> end_token) {
  PolicyTable p;
  p.vocab_size = vocab_size;
  p.context_order = context_order;
  p.num_tasks = num_tasks;
  p.end_token = end_token;
  validate(p);
  p.logits.assign(std::size_t(p.num_contexts()) * std::size_t(vocab_size), 0.0);
  return p;
}

int PolicyTable::context_index(int task, int prev) const {
  if (context_order == 0) return task;
  return task * contexts_per_task() + (prev + 1);
}

std::span<const double> PolicyTable::logits_row(int context) const {
  return {logits.data() + std::size_t(context) * std::size_t(vocab_size),
          std::size_t(vocab_size)};
}

void validate(const PolicyTable& policy) {
  if (policy.vocab_size < 2)
    throw std::invalid_argument("PolicyTable: vocab_size must be >= 2");
  if (policy.context_order != 0 && policy.context_order != 1)
    throw std::invalid_argument("PolicyTable: context_order must be 0 or 1");
  if (policy.num_tasks < 1)
    throw std::invalid_argument("PolicyTable: num_tasks must be >= 1");
  if (policy.end_token &&
      (*policy.end_token < 0 || *policy.end_token >= policy.vocab_size))
    throw std::invalid_argument("PolicyTable: end_token out of range");
  if (!policy.logits.empty() &&
      policy.logits.size() !=
          std::size_t(policy.num_contexts()) * std::size_t(policy.vocab_size))
    throw std::invalid_argument("PolicyTable: logits size mismatch");
  for (double z : policy.logits)
    if (!std::isfinite(z)) throw std::invalid_argument("PolicyTable: non-finite logit");
}

void validate(const ClipConfig& cfg) {
  if (!(cfg.epsilon > 0.0 && cfg.epsilon < 1.0))
    throw std::invalid_argument("ClipConfig: epsilon must lie in (0,1)");
}

Rollout sample_rollout(const PolicyTable& policy, int task_index,
                       const std::string& task_id, int max_len,
                       std::uint64_t seed) {
  if (max_len < 1) throw std::invalid_argument("sample_rollout: max_len must be >= 1");
  if (task_index < 0 || task_index >= policy.num_tasks)
    throw std::invalid_argument("sample_rollout: task index out of range");

  std::mt19937_64 rng(seed);
  RowCache cache(policy);
  Rollout out;
  out.task_id = task_id;
  out.task_index = task_index;

  int prev = -1;
  for (int t = 0; t < max_len; ++t) {
    const int ctx = policy.context_index(task_index, prev);
    const auto probs = cache.probs(ctx);
    const double u = uniform01(rng);
    int token = policy.vocab_size - 1;  // final bucket absorbs rounding
    double cumulative = 0.0;
    for (int k = 0; k < policy.vocab_size; ++k) {
      cumulative += probs[std::size_t(k)];
      if (u < cumulative) {
        token = k;
        break;
      }
    }
    out.tokens.push_back(token);
    out.behavior_logprobs.push_back(cache.logprob(ctx, token));
    if (policy.end_token && token == *policy.end_token) break;
    prev = token;
  }
  return out;
}

double token_ratio(const PolicyTable& policy, const Rollout& rollout, std::size_t t) {
  check_rollout(policy, rollout, "token_ratio");
  if (t >= rollout.tokens.size())
    throw std::invalid_argument("token_ratio: token index out of range");
  RowCache cache(policy);
  double ratio = 0.0;
  for_each_token(policy, rollout, [&](std::size_t i, int ctx, int tok) {
    if (i == t) ratio = std::exp(cache.logprob(ctx, tok) - rollout.behavior_logprobs[i]);
  });
  return ratio;
}

double clipped_surrogate(const PolicyTable& policy, std::span<const Rollout> rollouts,
                         const AdvantageVector& advantages, const ClipConfig& cfg) {
  validate(cfg);
  if (rollouts.size() != advantages.values.size())
    throw std::invalid_argument("clipped_surrogate: rollouts/advantages size mismatch");
  if (rollouts.empty())
    throw std::invalid_argument("clipped_surrogate: empty group");

  RowCache cache(policy);
  const double lo = 1.0 - cfg.epsilon;
  const double hi = 1.0 + cfg.epsilon;
  double total = 0.0;
  for (std::size_t i = 0; i < rollouts.size(); ++i) {
    check_rollout(policy, rollouts[i], "clipped_surrogate");
    const double adv = advantages.values[i];
    double acc = 0.0;
    for_each_token(policy, rollouts[i], [&](std::size_t t, int ctx, int tok) {
      const double r = std::exp(cache.logprob(ctx, tok) - rollouts[i].behavior_logprobs[t]);
      const double clipped = std::clamp(r, lo, hi);
      acc += std::min(r * adv, clipped * adv);
    });
    total += acc / double(rollouts[i].tokens.size());
  }
  return total / double(rollouts.size());
}

std::vector<double> surrogate_gradient(const PolicyTable& policy,
                                       std::span<const Rollout> rollouts,
                                       const AdvantageVector& advantages,
                                       const ClipConfig& cfg) {
  validate(cfg);
  if (rollouts.size() != advantages.values.size())
    throw std::invalid_argument("surrogate_gradient: rollouts/advantages size mismatch");
  if (rollouts.empty())
    throw std::invalid_argument("surrogate_gradient: empty group");

  RowCache cache(policy);
  const std::size_t vocab = std::size_t(policy.vocab_size);
  const double lo = 1.0 - cfg.epsilon;
  const double hi = 1.0 + cfg.epsilon;
  std::vector<double> grad(policy.logits.size(), 0.0);

  for (std::size_t i = 0; i < rollouts.size(); ++i) {
    check_rollout(policy, rollouts[i], "surrogate_gradient");
    const double adv = advantages.values[i];
    if (adv == 0.0) continue;
    const double scale = 1.0 / (double(rollouts.size()) * double(rollouts[i].tokens.size()));
    for_each_token(policy, rollouts[i], [&](std::size_t t, int ctx, int tok) {
      const double r = std::exp(cache.logprob(ctx, tok) - rollouts[i].behavior_logprobs[t]);
      // The unclipped branch is active where min() selects r*adv; at the
      // boundary both branches coincide and the unclipped gradient is used.
      const bool active = adv > 0.0 ? (r <= hi) : (r >= lo);
      if (!active) return;
      const double w = adv * r * scale;
      std::span<double> row{grad.data() + std::size_t(ctx) * vocab, vocab};
      kernels::axpy(-w, cache.probs(ctx), row);  // -w * softmax(ctx)
      row[std::size_t(tok)] += w;                // + w * one_hot(token)
    });
  }
  return grad;
}

double mean_token_entropy(const PolicyTable& policy, std::span<const Rollout> rollouts) {
  if (rollouts.empty())
    throw std::invalid_argument("mean_token_entropy: empty rollout set");
  RowCache cache(policy);
  std::vector<double> row_h(std::size_t(policy.num_contexts()),
                            std::numeric_limits<double>::quiet_NaN());
  double total = 0.0;
  std::size_t tokens = 0;
  for (const Rollout& r : rollouts) {
    check_rollout(policy, r, "mean_token_entropy");
    for_each_token(policy, r, [&](std::size_t, int ctx, int) {
      auto& h = row_h[std::size_t(ctx)];
      if (std::isnan(h)) h = kernels::row_entropy(policy.logits_row(ctx));
      total += h;
      ++tokens;
    });
  }
  return total / double(tokens);
}

std::vector<double> mean_token_entropy_gradient(const PolicyTable& policy,
                                                std::span<const Rollout> rollouts) {
  if (rollouts.empty())
    throw std::invalid_argument("mean_token_entropy_gradient: empty rollout set");
  RowCache cache(policy);
  const std::size_t vocab = std::size_t(policy.vocab_size);

  std::vector<std::size_t> visits(std::size_t(policy.num_contexts()), 0);
  std::size_t tokens = 0;
  for (const Rollout& r : rollouts) {
    check_rollout(policy, r, "mean_token_entropy_gradient");
    for_each_token(policy, r, [&](std::size_t, int ctx, int) {
      ++visits[std::size_t(ctx)];
      ++tokens;
    });
  }

  // dH/dz_k = -p_k (log p_k + H), weighted by the context's visit share.
  std::vector<double> grad(policy.logits.size(), 0.0);
  for (std::size_t ctx = 0; ctx < visits.size(); ++ctx) {
    if (visits[ctx] == 0) continue;
    const double weight = double(visits[ctx]) / double(tokens);
    const auto probs = cache.probs(int(ctx));
    const double lse = cache.lse(int(ctx));
    const double h = kernels::row_entropy(policy.logits_row(int(ctx)));
    const auto z = policy.logits_row(int(ctx));
    for (std::size_t k = 0; k < vocab; ++k) {
      const double log_p = z[k] - lse;
      grad[ctx * vocab + k] = -weight * probs[k] * (log_p + h);
    }
  }
  return grad;
}

double total_loss(double surrogate, const std::map<std::string, double>& h_per_task,
                  const std::map<std::string, EntropyBounds>& bounds_per_task) {
  double loss = -surrogate;
  for (const auto& [task, h] : h_per_task) {
    const auto it = bounds_per_task.find(task);
    if (it == bounds_per_task.end())
      throw std::invalid_argument("total_loss: no entropy bounds for task '" + task + "'");
    loss += it->second.lambda_ent * entropy_penalty(h, it->second);
  }
  return loss;
}

}  // namespace ggrpo
