// SPDX-License-Identifier: Apache-2.0
//
// Task-level reward shaping: trapezoidal length envelopes, entropy-band
// penalties, and composite reward assembly.
#pragma once

#include <optional>

namespace ggrpo {

// Four token-count thresholds defining the trapezoidal length reward:
// zero outside [l_min, l_max], one on [l_low, l_high], linear ramps between.
struct LengthEnvelope {
  int l_min = 0;
  int l_low = 0;
  int l_high = 0;
  int l_max = 0;
};

// Throws std::invalid_argument unless 0 < l_min < l_low <= l_high < l_max.
void validate(const LengthEnvelope& env);

// Exploration band in nats/token plus the penalty weight lambda_ent.
struct EntropyBounds {
  double h_min = 0.0;
  double h_max = 0.0;
  double lambda_ent = 0.0;
};

void validate(const EntropyBounds& bounds);

struct CompositeRewardWeights {
  double accuracy_w = 1.0;
  double length_w = 0.1;
  double format_w = 0.1;
  double structure_w = 0.1;
};

void validate(const CompositeRewardWeights& weights);

// Per-task-category defaults. Exact thresholds are configuration; these
// follow a 4096-token generation cap and the qualitative trend of long
// reasoning chains vs. concise vision-centric outputs.
LengthEnvelope reasoning_envelope();   // {400, 800, 2000, 4096}
LengthEnvelope vision_envelope();      // {10, 30, 200, 1024}
LengthEnvelope hybrid_envelope();      // {100, 300, 1200, 4096}
EntropyBounds reasoning_entropy_bounds();  // {0.15, 0.9}, lambda 0.01
EntropyBounds vision_entropy_bounds();     // {0.05, 0.5}, lambda 0.01

// Piecewise-linear trapezoid in [0,1]; exact at the four breakpoints.
double length_reward(int length, const LengthEnvelope& env);

// max(0, h - h_max) + max(0, h_min - h). The caller applies lambda_ent.
double entropy_penalty(double h_task, const EntropyBounds& bounds);

// Weighted sum of the reward families. structure_ok is optional: tasks
// without a structure requirement contribute zero for that term.
double composite_reward(double accuracy, int length, bool format_ok,
                        std::optional<bool> structure_ok,
                        const LengthEnvelope& env,
                        const CompositeRewardWeights& weights);

}  // namespace ggrpo
