#pragma once

#include <array>
#include <cstdint>

#include "dafd/nn/model.hpp"

namespace dafd::nn {

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEps = 1e-8;

/// Moment accumulators mirror the learnable tensors of ModelParams. Each
/// parameter group keeps its own step counter so that groups that sit out a
/// step (e.g. the domain head in source-only training) are not bias-corrected
/// as if they had moved.
struct AdamState {
  ModelParams m;
  ModelParams v;
  std::array<std::int64_t, 3> step{0, 0, 0};

  static AdamState zeros();

  friend bool operator==(const AdamState&, const AdamState&) = default;
};

/// One Adam step on the learnable tensors of `group`, applied to
/// grad + weight_decay * param. Throws NumericError (and leaves everything
/// untouched) when any gradient in the group is non-finite.
void adam_step(ModelParams& params, const ModelGrads& grads, AdamState& state, ParamGroup group, double lr,
               double weight_decay);

}  // namespace dafd::nn
