#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "dafd/nn/layers.hpp"
#include "dafd/nn/tensor.hpp"

namespace dafd::nn {

inline constexpr std::size_t kInputChannels = 3;
inline constexpr std::size_t kInputLength = 66;
inline constexpr std::size_t kChannels = 4;
inline constexpr std::size_t kKernel = 3;
inline constexpr std::size_t kBlocks = 3;
inline constexpr std::size_t kFeatureLength = 10;
inline constexpr std::size_t kFeatureDim = kChannels * kFeatureLength;  // 40
inline constexpr std::size_t kHidden = 50;
inline constexpr std::size_t kClasses = 2;

/// conv(k=3, full padding) -> batch norm -> ReLU -> max-pool(2).
struct ConvBlock {
  Tensor weight;  // [4, Cin, 3]
  Tensor bias;    // [4]
  Tensor gamma;
  Tensor beta;
  Tensor running_mean;
  Tensor running_var;

  friend bool operator==(const ConvBlock&, const ConvBlock&) = default;
};

/// linear 40x50 -> ReLU -> dropout -> linear 50x2.
struct Head {
  Tensor w1;  // [40, 50]
  Tensor b1;  // [50]
  Tensor w2;  // [50, 2]
  Tensor b2;  // [2]

  friend bool operator==(const Head&, const Head&) = default;
};

struct ModelParams {
  std::array<ConvBlock, kBlocks> extractor;
  Head fall_head;
  Head domain_head;

  /// Correct shapes, all zeros except running variance (1) and gamma (1).
  static ModelParams zeros();
  /// Weights uniform in +-sqrt(1 / fan_in), biases and beta 0, gamma 1,
  /// running mean 0, running variance 1.
  static ModelParams init(std::uint64_t seed);

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

/// Gradients share the parameter layout; running statistics stay zero.
using ModelGrads = ModelParams;

/// Every tensor zero, including gamma and running variance.
ModelGrads zero_grads();

enum class ParamGroup : int { kExtractor = 0, kFallHead = 1, kDomainHead = 2 };

struct ParamRef {
  std::string name;
  ParamGroup group;
  Tensor* tensor;
};
struct ConstParamRef {
  std::string name;
  ParamGroup group;
  const Tensor* tensor;
};

/// Learnable tensors in a fixed order.
std::vector<ParamRef> learnable(ModelParams& params);
std::vector<ConstParamRef> learnable(const ModelParams& params);
/// Learnable tensors plus batch-norm running statistics.
std::vector<ConstParamRef> all_tensors(const ModelParams& params);
std::vector<ParamRef> all_tensors(ModelParams& params);

struct BlockCache {
  Tensor input;
  Tensor conv;
  BatchNormCache bn;
  Tensor normed;
  Tensor activated;
  std::vector<std::uint8_t> argmax;
};

struct HeadCache {
  Tensor input;
  Tensor hidden;     // pre-activation
  Tensor activated;
  Tensor mask;       // dropout multiplier
  Tensor dropped;
};

struct ForwardCache {
  Mode mode = Mode::kEval;
  double lambda = 0.0;
  std::size_t batch = 0;
  std::array<BlockCache, kBlocks> blocks;
  Tensor features;  // [B, 40]
  HeadCache fall;
  HeadCache domain;
  Tensor fall_logits;
  Tensor domain_logits;
};

struct ForwardResult {
  Tensor features;       // [B, 40]
  Tensor fall_logits;    // [B, 2]
  Tensor domain_logits;  // [B, 2]
  ForwardCache cache;
};

/// Full network on input [B, 3, 66]. The domain head sees the features through
/// the gradient reversal layer; lambda is recorded for the backward pass only.
ForwardResult forward_pass(const ModelParams& params, const Tensor& batch, double lambda, Mode mode,
                           double dropout_rate, std::mt19937_64& rng);

/// Extractor only, eval mode (feature export, inference).
Tensor extract_features(const ModelParams& params, const Tensor& batch);

/// Copies the batch-norm running statistics produced by a train-mode forward.
void commit_running_stats(ModelParams& params, const ForwardCache& cache);

struct LossTargets {
  std::vector<int> fall;    // per row: 0 ADL, 1 Fall, -1 excluded from the fall loss
  std::vector<int> domain;  // per row: 0 source, 1 target; empty disables the domain loss
};

/// kIdentity replaces the reversal layer by a plain identity (verification only).
enum class DomainPath { kReversed, kIdentity };

struct BackwardResult {
  ModelGrads grads;
  double loss_fall = 0.0;
  double loss_domain = 0.0;
};

/// Gradients of loss_fall + loss_domain where the domain loss reaches the
/// extractor through the reversal layer (scaled by -lambda). Both losses are
/// means over their participating rows.
BackwardResult backward_pass(const ModelParams& params, const ForwardCache& cache,
                             const LossTargets& targets, DomainPath path = DomainPath::kReversed);

/// Losses only (same definitions as backward_pass).
std::pair<double, double> compute_losses(const ForwardCache& cache, const LossTargets& targets);

/// ReLU on/off bits and pool argmax choices: the piecewise-linear region of the
/// network for a given input and parameters.
std::vector<std::uint8_t> activation_pattern(const ForwardCache& cache);

/// Converts segment-like row-major [B, 3 * 66] buffers to [B, 3, 66].
Tensor make_batch(const std::vector<const std::vector<double>*>& rows);

}  // namespace dafd::nn
