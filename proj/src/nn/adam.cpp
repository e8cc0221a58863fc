#include "dafd/nn/adam.hpp"

#include <algorithm>
#include <cmath>

#include "dafd/error.hpp"

namespace dafd::nn {

AdamState AdamState::zeros() {
  AdamState s;
  s.m = zero_grads();
  s.v = zero_grads();
  return s;
}

void adam_step(ModelParams& params, const ModelGrads& grads, AdamState& state, ParamGroup group, double lr,
               double weight_decay) {
  const std::vector<ParamRef> p = learnable(params);
  const std::vector<ConstParamRef> g = learnable(grads);
  const std::vector<ParamRef> m = learnable(state.m);
  const std::vector<ParamRef> v = learnable(state.v);

  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i].group != group) continue;
    if (!g[i].tensor->same_shape(*p[i].tensor)) {
      throw NumericError("adam_step: gradient shape mismatch for " + p[i].name);
    }
    for (double x : g[i].tensor->values) {
      if (!std::isfinite(x)) throw NumericError("adam_step: non-finite gradient in " + p[i].name);
    }
  }

  std::int64_t& t = state.step[static_cast<std::size_t>(group)];
  ++t;
  const double c1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(t));
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i].group != group) continue;
    std::vector<double>& w = p[i].tensor->values;
    const std::vector<double>& dw = g[i].tensor->values;
    std::vector<double>& mi = m[i].tensor->values;
    std::vector<double>& vi = v[i].tensor->values;
    for (std::size_t k = 0; k < w.size(); ++k) {
      const double grad = dw[k] + weight_decay * w[k];
      mi[k] = kAdamBeta1 * mi[k] + (1.0 - kAdamBeta1) * grad;
      vi[k] = kAdamBeta2 * vi[k] + (1.0 - kAdamBeta2) * grad * grad;
      const double m_hat = mi[k] / c1;
      const double v_hat = vi[k] / c2;
      w[k] -= lr * m_hat / (std::sqrt(v_hat) + kAdamEps);
    }
  }
}

}  // namespace dafd::nn
