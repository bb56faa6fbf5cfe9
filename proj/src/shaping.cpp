// SPDX-License-Identifier: Apache-2.0

#include "ggrpo/shaping.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ggrpo {

void validate(const LengthEnvelope& env) {
  if (!(0 < env.l_min && env.l_min < env.l_low && env.l_low <= env.l_high &&
        env.l_high < env.l_max))
    throw std::invalid_argument(
        "LengthEnvelope: need 0 < l_min < l_low <= l_high < l_max");
}

void validate(const EntropyBounds& bounds) {
  if (!(bounds.h_min >= 0.0 && bounds.h_min <= bounds.h_max))
    throw std::invalid_argument("EntropyBounds: need 0 <= h_min <= h_max");
  if (!(bounds.lambda_ent >= 0.0))
    throw std::invalid_argument("EntropyBounds: lambda_ent must be >= 0");
}

void validate(const CompositeRewardWeights& weights) {
  const double w[4] = {weights.accuracy_w, weights.length_w, weights.format_w,
                       weights.structure_w};
  for (double v : w)
    if (!(v >= 0.0) || !std::isfinite(v))
      throw std::invalid_argument("CompositeRewardWeights: weights must be >= 0");
  if (w[0] == 0.0 && w[1] == 0.0 && w[2] == 0.0 && w[3] == 0.0)
    throw std::invalid_argument(
        "CompositeRewardWeights: at least one weight must be positive");
}

LengthEnvelope reasoning_envelope() { return {400, 800, 2000, 4096}; }
LengthEnvelope vision_envelope() { return {10, 30, 200, 1024}; }
LengthEnvelope hybrid_envelope() { return {100, 300, 1200, 4096}; }
EntropyBounds reasoning_entropy_bounds() { return {0.15, 0.9, 0.01}; }
EntropyBounds vision_entropy_bounds() { return {0.05, 0.5, 0.01}; }

double length_reward(int length, const LengthEnvelope& env) {
  validate(env);
  if (length < env.l_min || length > env.l_max) return 0.0;
  if (length < env.l_low)
    return double(length - env.l_min) / double(env.l_low - env.l_min);
  if (length <= env.l_high) return 1.0;
  return double(env.l_max - length) / double(env.l_max - env.l_high);
}

double entropy_penalty(double h_task, const EntropyBounds& bounds) {
  validate(bounds);
  return std::max(0.0, h_task - bounds.h_max) + std::max(0.0, bounds.h_min - h_task);
}

double composite_reward(double accuracy, int length, bool format_ok,
                        std::optional<bool> structure_ok,
                        const LengthEnvelope& env,
                        const CompositeRewardWeights& weights) {
  validate(weights);
  double total = weights.accuracy_w * accuracy;
  total += weights.length_w * length_reward(length, env);
  total += weights.format_w * (format_ok ? 1.0 : 0.0);
  if (structure_ok.has_value())
    total += weights.structure_w * (*structure_ok ? 1.0 : 0.0);
  return total;
}

}  // namespace ggrpo
