#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "dafd/nn/tensor.hpp"

namespace dafd::nn {

enum class Mode { kTrain, kEval };

inline constexpr double kBatchNormEps = 1e-5;
inline constexpr double kBatchNormMomentum = 0.1;

// ---- convolution: kernel K, stride 1, K-1 zeros of padding on each side ----

/// x [B, Cin, L], w [Cout, Cin, K], b [Cout] -> [B, Cout, L + K - 1].
Tensor conv1d_full(const Tensor& x, const Tensor& w, const Tensor& b);

struct ConvGrads {
  Tensor dx;
  Tensor dw;
  Tensor db;
};
ConvGrads conv1d_full_backward(const Tensor& x, const Tensor& w, const Tensor& dy);

// ---- batch normalization over (batch, length) per channel ----

struct BatchNormCache {
  Mode mode = Mode::kEval;
  Tensor x_hat;
  std::vector<double> inv_std;
  // Running statistics after this forward (unchanged in eval mode).
  std::vector<double> next_running_mean;
  std::vector<double> next_running_var;
};

/// Train mode normalizes with batch statistics (biased variance) and blends the
/// unbiased batch variance into the running variance with momentum 0.1. Eval
/// mode uses the running statistics.
Tensor batchnorm1d(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                   const Tensor& running_mean, const Tensor& running_var, Mode mode,
                   BatchNormCache* cache);

struct BatchNormGrads {
  Tensor dx;
  Tensor dgamma;
  Tensor dbeta;
};
/// Requires a train-mode cache.
BatchNormGrads batchnorm1d_backward(const BatchNormCache& cache, const Tensor& gamma, const Tensor& dy);

// ---- elementwise ----

Tensor relu(const Tensor& x);
/// Passes dy where x > 0; zero elsewhere (including x == 0).
Tensor relu_backward(const Tensor& x, const Tensor& dy);

// ---- pooling: kernel 2, stride 2, trailing odd element dropped ----

struct PoolResult {
  Tensor y;
  std::vector<std::uint8_t> argmax;  // 0 or 1 within each pair; ties pick 0
};
PoolResult maxpool2(const Tensor& x);
Tensor maxpool2_backward(const std::vector<std::size_t>& x_shape, const std::vector<std::uint8_t>& argmax,
                         const Tensor& dy);

// ---- fully connected: x [B, n], w [n, m], b [m] ----

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b);
struct LinearGrads {
  Tensor dx;
  Tensor dw;
  Tensor db;
};
LinearGrads linear_backward(const Tensor& x, const Tensor& w, const Tensor& dy);

// ---- inverted dropout ----

/// Train mode: each element survives with probability 1 - rate and is scaled
/// by 1 / (1 - rate); `mask` receives the per-element multiplier. Eval mode and
/// rate 0 are the identity (mask of ones, no random draws).
Tensor dropout(const Tensor& x, double rate, std::mt19937_64& rng, Mode mode, Tensor* mask);
Tensor dropout_backward(const Tensor& mask, const Tensor& dy);

// ---- gradient reversal ----

/// Identity.
Tensor grl(const Tensor& x);
/// dy -> -lambda * dy.
Tensor grl_backward(const Tensor& dy, double lambda);

// ---- softmax cross-entropy ----

struct SoftmaxCE {
  double loss = 0.0;  // mean over the batch
  Tensor grad;        // d loss / d logits
  Tensor probs;
};
/// logits [B, C], targets in [0, C). Empty batch gives zero loss.
SoftmaxCE softmax_ce(const Tensor& logits, const std::vector<int>& targets);

}  // namespace dafd::nn
