#include "dafd/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace dafd::nn {
namespace {

struct Probe {
  double loss_fall = 0.0;
  double loss_domain = 0.0;
  std::vector<std::uint8_t> pattern;
};

Probe probe(const ModelParams& params, const Tensor& batch, const LossTargets& targets, double lambda) {
  std::mt19937_64 rng(0);
  const ForwardResult fwd = forward_pass(params, batch, lambda, Mode::kTrain, 0.0, rng);
  const auto [fall, domain] = compute_losses(fwd.cache, targets);
  return {fall, domain, activation_pattern(fwd.cache)};
}

}  // namespace

GradCheckResult grad_check(const ModelParams& params, const Tensor& batch, const LossTargets& targets,
                           double lambda, const GradCheckOptions& options) {
  std::mt19937_64 rng(0);
  const ForwardResult base = forward_pass(params, batch, lambda, Mode::kTrain, 0.0, rng);
  BackwardResult analytic = backward_pass(params, base.cache, targets);
  if (options.mutate) options.mutate(analytic.grads);
  const std::vector<std::uint8_t> base_pattern = activation_pattern(base.cache);

  GradCheckResult result;
  ModelParams work = params;
  const std::vector<ParamRef> refs = learnable(work);
  const std::vector<ConstParamRef> grads = learnable(static_cast<const ModelGrads&>(analytic.grads));
  for (std::size_t r = 0; r < refs.size(); ++r) {
    const double domain_weight = refs[r].group == ParamGroup::kExtractor ? -lambda : 1.0;
    Tensor& t = *refs[r].tensor;
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double saved = t[i];
      t[i] = saved + options.eps;
      const Probe plus = probe(work, batch, targets, lambda);
      t[i] = saved - options.eps;
      const Probe minus = probe(work, batch, targets, lambda);
      t[i] = saved;
      if (plus.pattern != base_pattern || minus.pattern != base_pattern) {
        ++result.skipped;
        continue;
      }
      const double f_plus = plus.loss_fall + domain_weight * plus.loss_domain;
      const double f_minus = minus.loss_fall + domain_weight * minus.loss_domain;
      const double numeric = (f_plus - f_minus) / (2.0 * options.eps);
      const double a = (*grads[r].tensor)[i];
      const double err = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), options.floor});
      ++result.checked;
      if (err > result.max_rel_error || result.worst_param.empty()) {
        if (err >= result.max_rel_error) {
          result.max_rel_error = err;
          result.worst_param = refs[r].name;
          result.worst_index = i;
          result.worst_analytic = a;
          result.worst_numeric = numeric;
        }
      }
    }
  }
  return result;
}

LossTargets default_check_targets(std::size_t batch) {
  LossTargets t;
  for (std::size_t i = 0; i < batch; ++i) {
    t.fall.push_back(static_cast<int>(i % 2));
    t.domain.push_back(i < batch / 2 ? 0 : 1);
  }
  return t;
}

}  // namespace dafd::nn
