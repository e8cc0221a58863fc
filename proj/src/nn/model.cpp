#include "dafd/nn/model.hpp"

#include <cmath>

#include "dafd/error.hpp"

namespace dafd::nn {
namespace {

std::size_t block_in_channels(std::size_t block) { return block == 0 ? kInputChannels : kChannels; }

Head zero_head() {
  return {Tensor({kFeatureDim, kHidden}), Tensor({kHidden}), Tensor({kHidden, kClasses}),
          Tensor({kClasses})};
}

void fill_uniform(Tensor& t, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-bound, bound);
  for (double& v : t.values) v = u(rng);
}

// Reshape [B, C, L] -> [B, C * L] (channel-major flatten).
Tensor flatten(const Tensor& x) {
  Tensor y({x.dim(0), x.dim(1) * x.dim(2)});
  y.values = x.values;
  return y;
}

Tensor unflatten(const Tensor& x, std::size_t channels, std::size_t len) {
  Tensor y({x.dim(0), channels, len});
  y.values = x.values;
  return y;
}

Tensor head_forward(const Head& h, const Tensor& in, double dropout_rate, Mode mode, std::mt19937_64& rng,
                    HeadCache* cache) {
  cache->input = in;
  cache->hidden = linear(in, h.w1, h.b1);
  cache->activated = relu(cache->hidden);
  cache->dropped = dropout(cache->activated, dropout_rate, rng, mode, &cache->mask);
  return linear(cache->dropped, h.w2, h.b2);
}

// Returns d loss / d head input and accumulates head parameter gradients.
Tensor head_backward(const Head& h, const HeadCache& cache, const Tensor& dlogits, Head* grads) {
  LinearGrads g2 = linear_backward(cache.dropped, h.w2, dlogits);
  const Tensor d_act = dropout_backward(cache.mask, g2.dx);
  const Tensor d_hidden = relu_backward(cache.hidden, d_act);
  LinearGrads g1 = linear_backward(cache.input, h.w1, d_hidden);
  grads->w1 = std::move(g1.dw);
  grads->b1 = std::move(g1.db);
  grads->w2 = std::move(g2.dw);
  grads->b2 = std::move(g2.db);
  return std::move(g1.dx);
}

struct PartialLoss {
  double loss = 0.0;
  Tensor dlogits;
};

// Mean cross-entropy over rows whose target is >= 0; gradient rows for
// excluded targets are zero.
PartialLoss masked_ce(const Tensor& logits, const std::vector<int>& targets) {
  PartialLoss out{0.0, Tensor(logits.shape)};
  std::vector<std::size_t> rows;
  std::vector<int> kept;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (targets[i] >= 0) {
      rows.push_back(i);
      kept.push_back(targets[i]);
    }
  }
  if (rows.empty()) return out;
  Tensor sub({rows.size(), logits.dim(1)});
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < logits.dim(1); ++c) sub.at(r, c) = logits.at(rows[r], c);
  }
  const SoftmaxCE ce = softmax_ce(sub, kept);
  out.loss = ce.loss;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < logits.dim(1); ++c) out.dlogits.at(rows[r], c) = ce.grad.at(r, c);
  }
  return out;
}

void check_targets(const ForwardCache& cache, const LossTargets& targets) {
  if (targets.fall.size() != cache.batch) {
    throw NumericError("backward_pass: fall targets do not match the batch size");
  }
  if (!targets.domain.empty() && targets.domain.size() != cache.batch) {
    throw NumericError("backward_pass: domain targets do not match the batch size");
  }
}

}  // namespace

ModelParams ModelParams::zeros() {
  ModelParams p;
  for (std::size_t b = 0; b < kBlocks; ++b) {
    ConvBlock& blk = p.extractor[b];
    blk.weight = Tensor({kChannels, block_in_channels(b), kKernel});
    blk.bias = Tensor({kChannels});
    blk.gamma = Tensor({kChannels}, 1.0);
    blk.beta = Tensor({kChannels});
    blk.running_mean = Tensor({kChannels});
    blk.running_var = Tensor({kChannels}, 1.0);
  }
  p.fall_head = zero_head();
  p.domain_head = zero_head();
  return p;
}

ModelGrads zero_grads() {
  ModelGrads g = ModelParams::zeros();
  for (const ParamRef& r : all_tensors(g)) std::fill(r.tensor->values.begin(), r.tensor->values.end(), 0.0);
  return g;
}

ModelParams ModelParams::init(std::uint64_t seed) {
  ModelParams p = zeros();
  std::mt19937_64 rng(seed);
  for (std::size_t b = 0; b < kBlocks; ++b) {
    fill_uniform(p.extractor[b].weight, std::sqrt(1.0 / static_cast<double>(block_in_channels(b) * kKernel)),
                 rng);
  }
  for (Head* h : {&p.fall_head, &p.domain_head}) {
    fill_uniform(h->w1, std::sqrt(1.0 / static_cast<double>(kFeatureDim)), rng);
    fill_uniform(h->w2, std::sqrt(1.0 / static_cast<double>(kHidden)), rng);
  }
  return p;
}

std::vector<ParamRef> learnable(ModelParams& params) {
  std::vector<ParamRef> refs;
  for (std::size_t b = 0; b < kBlocks; ++b) {
    const std::string prefix = "extractor." + std::to_string(b) + ".";
    ConvBlock& blk = params.extractor[b];
    refs.push_back({prefix + "weight", ParamGroup::kExtractor, &blk.weight});
    refs.push_back({prefix + "bias", ParamGroup::kExtractor, &blk.bias});
    refs.push_back({prefix + "gamma", ParamGroup::kExtractor, &blk.gamma});
    refs.push_back({prefix + "beta", ParamGroup::kExtractor, &blk.beta});
  }
  const auto add_head = [&](Head& h, const std::string& name, ParamGroup group) {
    refs.push_back({name + ".w1", group, &h.w1});
    refs.push_back({name + ".b1", group, &h.b1});
    refs.push_back({name + ".w2", group, &h.w2});
    refs.push_back({name + ".b2", group, &h.b2});
  };
  add_head(params.fall_head, "fall_head", ParamGroup::kFallHead);
  add_head(params.domain_head, "domain_head", ParamGroup::kDomainHead);
  return refs;
}

std::vector<ConstParamRef> learnable(const ModelParams& params) {
  std::vector<ConstParamRef> out;
  for (const ParamRef& r : learnable(const_cast<ModelParams&>(params))) {
    out.push_back({r.name, r.group, r.tensor});
  }
  return out;
}

std::vector<ParamRef> all_tensors(ModelParams& params) {
  std::vector<ParamRef> refs = learnable(params);
  for (std::size_t b = 0; b < kBlocks; ++b) {
    const std::string prefix = "extractor." + std::to_string(b) + ".";
    refs.push_back({prefix + "running_mean", ParamGroup::kExtractor, &params.extractor[b].running_mean});
    refs.push_back({prefix + "running_var", ParamGroup::kExtractor, &params.extractor[b].running_var});
  }
  return refs;
}

std::vector<ConstParamRef> all_tensors(const ModelParams& params) {
  std::vector<ConstParamRef> out;
  for (const ParamRef& r : all_tensors(const_cast<ModelParams&>(params))) {
    out.push_back({r.name, r.group, r.tensor});
  }
  return out;
}

ForwardResult forward_pass(const ModelParams& params, const Tensor& batch, double lambda, Mode mode,
                           double dropout_rate, std::mt19937_64& rng) {
  if (batch.rank() != 3 || batch.dim(1) != kInputChannels || batch.dim(2) != kInputLength ||
      batch.dim(0) == 0) {
    throw NumericError("forward_pass: expected input [B, 3, 66], got " + shape_string(batch.shape));
  }
  check_finite(batch, "forward_pass input");
  ForwardResult r;
  ForwardCache& c = r.cache;
  c.mode = mode;
  c.lambda = lambda;
  c.batch = batch.dim(0);

  Tensor x = batch;
  for (std::size_t b = 0; b < kBlocks; ++b) {
    const ConvBlock& blk = params.extractor[b];
    BlockCache& bc = c.blocks[b];
    bc.input = std::move(x);
    bc.conv = conv1d_full(bc.input, blk.weight, blk.bias);
    bc.normed = batchnorm1d(bc.conv, blk.gamma, blk.beta, blk.running_mean, blk.running_var, mode, &bc.bn);
    bc.activated = relu(bc.normed);
    PoolResult pooled = maxpool2(bc.activated);
    bc.argmax = std::move(pooled.argmax);
    x = std::move(pooled.y);
  }
  c.features = flatten(x);
  check_finite(c.features, "forward_pass features");

  c.fall_logits = head_forward(params.fall_head, c.features, dropout_rate, mode, rng, &c.fall);
  c.domain_logits = head_forward(params.domain_head, grl(c.features), dropout_rate, mode, rng, &c.domain);
  check_finite(c.fall_logits, "forward_pass fall logits");
  check_finite(c.domain_logits, "forward_pass domain logits");

  r.features = c.features;
  r.fall_logits = c.fall_logits;
  r.domain_logits = c.domain_logits;
  return r;
}

Tensor extract_features(const ModelParams& params, const Tensor& batch) {
  std::mt19937_64 unused(0);
  return forward_pass(params, batch, 0.0, Mode::kEval, 0.0, unused).features;
}

void commit_running_stats(ModelParams& params, const ForwardCache& cache) {
  if (cache.mode != Mode::kTrain) return;
  for (std::size_t b = 0; b < kBlocks; ++b) {
    params.extractor[b].running_mean.values = cache.blocks[b].bn.next_running_mean;
    params.extractor[b].running_var.values = cache.blocks[b].bn.next_running_var;
  }
}

std::pair<double, double> compute_losses(const ForwardCache& cache, const LossTargets& targets) {
  check_targets(cache, targets);
  const double fall = masked_ce(cache.fall_logits, targets.fall).loss;
  const double domain = targets.domain.empty() ? 0.0 : masked_ce(cache.domain_logits, targets.domain).loss;
  return {fall, domain};
}

BackwardResult backward_pass(const ModelParams& params, const ForwardCache& cache,
                             const LossTargets& targets, DomainPath path) {
  if (cache.mode != Mode::kTrain) throw NumericError("backward_pass: cache is not from a train-mode forward");
  check_targets(cache, targets);

  BackwardResult r;
  r.grads = zero_grads();

  const PartialLoss fall = masked_ce(cache.fall_logits, targets.fall);
  r.loss_fall = fall.loss;
  Tensor d_features = head_backward(params.fall_head, cache.fall, fall.dlogits, &r.grads.fall_head);

  if (!targets.domain.empty()) {
    const PartialLoss domain = masked_ce(cache.domain_logits, targets.domain);
    r.loss_domain = domain.loss;
    const Tensor d_domain_in = head_backward(params.domain_head, cache.domain, domain.dlogits, &r.grads.domain_head);
    const Tensor d_through =
        path == DomainPath::kReversed ? grl_backward(d_domain_in, cache.lambda) : d_domain_in;
    for (std::size_t i = 0; i < d_features.size(); ++i) d_features[i] += d_through[i];
  }

  Tensor dx = unflatten(d_features, kChannels, kFeatureLength);
  for (std::size_t bi = kBlocks; bi-- > 0;) {
    const ConvBlock& blk = params.extractor[bi];
    const BlockCache& bc = cache.blocks[bi];
    const Tensor d_act = maxpool2_backward(bc.activated.shape, bc.argmax, dx);
    const Tensor d_norm = relu_backward(bc.normed, d_act);
    BatchNormGrads bn = batchnorm1d_backward(bc.bn, blk.gamma, d_norm);
    ConvGrads conv = conv1d_full_backward(bc.input, blk.weight, bn.dx);
    ConvBlock& g = r.grads.extractor[bi];
    g.weight = std::move(conv.dw);
    g.bias = std::move(conv.db);
    g.gamma = std::move(bn.dgamma);
    g.beta = std::move(bn.dbeta);
    dx = std::move(conv.dx);
  }
  for (const ConstParamRef& ref : learnable(static_cast<const ModelParams&>(r.grads))) {
    check_finite(*ref.tensor, ref.name.c_str());
  }
  return r;
}

std::vector<std::uint8_t> activation_pattern(const ForwardCache& cache) {
  std::vector<std::uint8_t> bits;
  for (const BlockCache& bc : cache.blocks) {
    for (double v : bc.normed.values) bits.push_back(v > 0.0 ? 1 : 0);
    bits.insert(bits.end(), bc.argmax.begin(), bc.argmax.end());
  }
  for (const HeadCache* h : {&cache.fall, &cache.domain}) {
    for (double v : h->hidden.values) bits.push_back(v > 0.0 ? 1 : 0);
  }
  return bits;
}

Tensor make_batch(const std::vector<const std::vector<double>*>& rows) {
  Tensor t({rows.size(), kInputChannels, kInputLength});
  const std::size_t row_size = kInputChannels * kInputLength;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i]->size() != row_size) throw NumericError("make_batch: segment is not 3x66");
    std::copy(rows[i]->begin(), rows[i]->end(), t.values.begin() + static_cast<std::ptrdiff_t>(i * row_size));
  }
  return t;
}

}  // namespace dafd::nn
